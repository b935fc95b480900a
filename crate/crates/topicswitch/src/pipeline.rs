//! End-to-end study: parse, pair, embed, index, label, summarise, regress
//! and evaluate classifiers on a date split.
//!
//! Per-call work runs in parallel; every result is sorted by
//! `(symbol, date)` before anything is aggregated or written, so outputs are
//! byte-identical across runs with the same inputs and configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use topicswitch_core::analytics::{
    box_by_category, summarize_by_category, yearly_trend, AnalyticsError, BoxSummary, CategorySummary, YearlyTrendPoint,
};
use topicswitch_core::market::{label_call, MarketError};
use topicswitch_core::models::{
    evaluate_accuracy, sgd_train, Dataset, ModelError, ModelKind, Standardizer, TrainConfig,
};
use topicswitch_core::regression::{fit_by_sector, SectorFits};
use topicswitch_core::transcript::{segment_and_pair, PairingError, Roster};
use topicswitch_core::tsi::{score_call, CallMeta, TsiError, Weighting};
use topicswitch_core::{CallIndexRecord, Date, EarningsCall, EmbeddingVector, LabelSpec, LabeledCall, PriceSeries};

use crate::config::{FeatureSet, RunConfig};
use crate::embed::{EmbedError, Embedder};
use crate::formats::{parse_transcript, MalformedInput, TranscriptFormat};
use crate::prices::{load_price_dir, PriceError};
use crate::records::{
    write_csv, write_json, write_jsonl, AccuracyRow, BoxRow, IndexRow, LabeledRow, RecordError, RegressionRow,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Price(#[from] PriceError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no usable calls: all {total} input files were excluded")]
    NoUsableCalls { total: usize },
    #[error("empty split: {train} training and {test} test calls")]
    EmptySplit { train: usize, test: usize },
    #[error("no benchmark embedding for {symbol} on {date}")]
    MissingBenchmark { symbol: String, date: Date },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Why an input was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExclusionReason {
    MalformedInput,
    NoTurns,
    NoPairsFound,
    AllPairsSkipped,
    DuplicateCall,
    MissingPrices,
    InsufficientWindow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    /// File name for transcript exclusions, `SYMBOL@DATE` for label exclusions.
    pub item: String,
    pub reason: ExclusionReason,
    pub detail: String,
}

/// Counts for one stage. `kept + excluded.len() == total`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub total: usize,
    pub kept: usize,
    pub excluded_by_reason: BTreeMap<ExclusionReason, usize>,
    pub excluded: Vec<Exclusion>,
}

impl StageManifest {
    fn new(total: usize, kept: usize, mut excluded: Vec<Exclusion>) -> Self {
        excluded.sort_by(|a, b| a.item.cmp(&b.item));
        let mut by_reason = BTreeMap::new();
        for e in &excluded {
            *by_reason.entry(e.reason).or_insert(0) += 1;
        }
        Self {
            total,
            kept,
            excluded_by_reason: by_reason,
            excluded,
        }
    }
}

/// A transcript file and its parse outcome.
#[derive(Debug, Clone)]
pub struct CorpusFile {
    pub name: String,
    pub parsed: Result<EarningsCall, MalformedInput>,
}

/// Reads every `.txt` and `.json` file in `dir`, in file-name order.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusFile>, PipelineError> {
    let mut paths: Vec<(PathBuf, TranscriptFormat)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if let Some(format) = TranscriptFormat::from_path(&path).filter(|_| path.is_file()) {
            paths.push((path, format));
        }
    }
    paths.sort();
    paths
        .par_iter()
        .map(|(path, format)| {
            let raw = fs::read(path).map_err(io_err(path))?;
            Ok(CorpusFile {
                name: path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                parsed: parse_transcript(&raw, *format),
            })
        })
        .collect()
}

/// A scored call together with its paired transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedCall {
    pub call: EarningsCall,
    pub record: CallIndexRecord,
}

/// A kept call, or the reason it was excluded and a detail message.
pub type IndexOutcome = Result<IndexedCall, (ExclusionReason, String)>;

/// Pairs, embeds and scores one call. The outer error is a backend failure;
/// the inner one means the call is excluded.
pub fn index_call(
    call: EarningsCall,
    embedder: &dyn Embedder,
    weighting: Weighting,
) -> Result<IndexOutcome, EmbedError> {
    let call = match segment_and_pair(call, &Roster::new()) {
        Ok(c) => c,
        Err(e @ PairingError::NoTurns) => return Ok(Err((ExclusionReason::NoTurns, e.to_string()))),
        Err(e @ PairingError::NoPairsFound) => return Ok(Err((ExclusionReason::NoPairsFound, e.to_string()))),
    };
    let texts: Vec<&str> = call
        .qa_pairs
        .iter()
        .flat_map(|p| [p.question_text.as_str(), p.answer_text.as_str()])
        .collect();
    let vectors = embedder.embed(&texts)?;
    let items = call
        .qa_pairs
        .iter()
        .zip(vectors.chunks(2))
        .map(|(p, qa)| (p, &qa[0], &qa[1]));
    match score_call(items, CallMeta::from(&call), weighting) {
        Ok(record) => Ok(Ok(IndexedCall { call, record })),
        Err(e @ TsiError::AllPairsSkipped) => Ok(Err((ExclusionReason::AllPairsSkipped, e.to_string()))),
        Err(TsiError::DimensionMismatch(a, b)) => Err(EmbedError::InconsistentDimension(a, b)),
        Err(e) => unreachable!("paired call cannot fail with {e}"),
    }
}

#[derive(Debug, Clone)]
pub struct IndexRun {
    /// Sorted by `(symbol, date)`.
    pub calls: Vec<IndexedCall>,
    pub manifest: StageManifest,
}

impl IndexRun {
    pub fn records(&self) -> Vec<CallIndexRecord> {
        self.calls.iter().map(|c| c.record.clone()).collect()
    }
}

/// Indexes a parsed corpus. Fails only on backend errors or when nothing
/// survives.
pub fn index_corpus(
    files: Vec<CorpusFile>,
    embedder: &dyn Embedder,
    weighting: Weighting,
) -> Result<IndexRun, PipelineError> {
    let total = files.len();
    let outcomes: Vec<(String, IndexOutcome)> = files
        .into_par_iter()
        .map(|f| {
            let outcome = match f.parsed {
                Ok(call) => index_call(call, embedder, weighting)?,
                Err(e) => Err((ExclusionReason::MalformedInput, e.to_string())),
            };
            Ok((f.name, outcome))
        })
        .collect::<Result<_, EmbedError>>()?;

    let mut excluded = Vec::new();
    let mut by_key: BTreeMap<(String, Date), (String, IndexedCall)> = BTreeMap::new();
    for (name, outcome) in outcomes {
        match outcome {
            Ok(c) => {
                let key = (c.record.company_symbol.clone(), c.record.call_date);
                if let Some((first, _)) = by_key.get(&key) {
                    excluded.push(Exclusion {
                        item: name,
                        reason: ExclusionReason::DuplicateCall,
                        detail: format!("same symbol and date as {first}"),
                    });
                } else {
                    by_key.insert(key, (name, c));
                }
            }
            Err((reason, detail)) => excluded.push(Exclusion {
                item: name,
                reason,
                detail,
            }),
        }
    }
    if by_key.is_empty() {
        return Err(PipelineError::NoUsableCalls { total });
    }
    let calls: Vec<IndexedCall> = by_key.into_values().map(|(_, c)| c).collect();
    log::info!(
        "indexed {} of {} transcripts ({} excluded)",
        calls.len(),
        total,
        excluded.len()
    );
    Ok(IndexRun {
        manifest: StageManifest::new(total, calls.len(), excluded),
        calls,
    })
}

pub fn run_index(config: &RunConfig, embedder: &dyn Embedder) -> Result<IndexRun, PipelineError> {
    index_corpus(load_corpus(&config.transcript_dir)?, embedder, config.weighting)
}

/// Joins records with their price windows. Calls without prices or without
/// trading days on both sides are excluded.
pub fn label_records(
    records: &[CallIndexRecord],
    prices: &BTreeMap<String, PriceSeries>,
    spec: &LabelSpec,
) -> (Vec<LabeledCall>, StageManifest) {
    let mut labeled = Vec::new();
    let mut excluded = Vec::new();
    for r in records {
        let item = format!("{}@{}", r.company_symbol, r.call_date);
        let Some(series) = prices.get(&r.company_symbol.to_ascii_uppercase()) else {
            excluded.push(Exclusion {
                item,
                reason: ExclusionReason::MissingPrices,
                detail: format!("no price file for {}", r.company_symbol),
            });
            continue;
        };
        match label_call(r.clone(), series, spec) {
            Ok(c) => labeled.push(c),
            Err(e @ MarketError::InsufficientWindow(_)) => excluded.push(Exclusion {
                item,
                reason: ExclusionReason::InsufficientWindow,
                detail: e.to_string(),
            }),
            Err(e) => unreachable!("validated series cannot fail with {e}"),
        }
    }
    labeled.sort_by(|a, b| sort_key(&a.record).cmp(&sort_key(&b.record)));
    let manifest = StageManifest::new(records.len(), labeled.len(), excluded);
    (labeled, manifest)
}

fn sort_key(r: &CallIndexRecord) -> (&str, Date) {
    (&r.company_symbol, r.call_date)
}

/// Plot-ready descriptive statistics for the index and the price changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsReport {
    pub index_summary: Vec<CategorySummary>,
    pub index_boxes: Vec<BoxSummary>,
    pub index_trend: Vec<YearlyTrendPoint>,
    pub change_summary: Vec<CategorySummary>,
    pub change_boxes: Vec<BoxSummary>,
    pub change_trend: Vec<YearlyTrendPoint>,
}

pub fn run_analytics(labeled: &[LabeledCall]) -> Result<AnalyticsReport, AnalyticsError> {
    let index = || labeled.iter().map(|c| (c.record.sector, c.record.index));
    let change = || labeled.iter().map(|c| (c.record.sector, c.relative_change));
    let dated = |f: fn(&LabeledCall) -> f64| labeled.iter().map(|c| (c.record.call_date, f(c))).collect::<Vec<_>>();
    Ok(AnalyticsReport {
        index_summary: summarize_by_category(index())?,
        index_boxes: box_by_category(index())?,
        index_trend: yearly_trend(&dated(|c| c.record.index))?,
        change_summary: summarize_by_category(change())?,
        change_boxes: box_by_category(change())?,
        change_trend: yearly_trend(&dated(|c| c.relative_change))?,
    })
}

/// Whole-discussion embedding of each call: the mean of its discussion
/// turns' embeddings. Keyed by `(symbol, date)`.
pub fn benchmark_features(
    calls: &[EarningsCall],
    embedder: &dyn Embedder,
) -> Result<BTreeMap<(String, Date), EmbeddingVector>, EmbedError> {
    calls
        .par_iter()
        .filter_map(|call| {
            let texts: Vec<&str> = call.discussion_turns().map(|t| t.text.as_str()).collect();
            if texts.is_empty() {
                return None;
            }
            let key = (call.company_symbol.clone(), call.call_date);
            Some(
                embedder
                    .embed(&texts)
                    .map(|v| (key, EmbeddingVector::mean_of(&v).expect("non-empty"))),
            )
        })
        .collect()
}

fn feature_row(
    call: &LabeledCall,
    set: FeatureSet,
    benchmark: &BTreeMap<(String, Date), EmbeddingVector>,
) -> Result<Vec<f64>, PipelineError> {
    let mut row = Vec::new();
    if set.needs_benchmark() {
        let key = (call.record.company_symbol.clone(), call.record.call_date);
        let v = benchmark.get(&key).ok_or_else(|| PipelineError::MissingBenchmark {
            symbol: key.0.clone(),
            date: key.1,
        })?;
        row.extend_from_slice(v.values());
    }
    if set != FeatureSet::Benchmark {
        row.push(call.record.index);
    }
    Ok(row)
}

/// Builds the standardised train and test sets for one feature set. The
/// standardiser is fitted on the training rows only.
pub fn split_datasets(
    labeled: &[LabeledCall],
    set: FeatureSet,
    benchmark: &BTreeMap<(String, Date), EmbeddingVector>,
    split_date: Date,
) -> Result<(Dataset, Dataset), PipelineError> {
    let mut train = (Vec::new(), Vec::new());
    let mut test = (Vec::new(), Vec::new());
    for c in labeled {
        let side = if c.record.call_date < split_date {
            &mut train
        } else {
            &mut test
        };
        side.0.push(feature_row(c, set, benchmark)?);
        side.1.push(c.label);
    }
    if train.0.is_empty() || test.0.is_empty() {
        return Err(PipelineError::EmptySplit {
            train: train.0.len(),
            test: test.0.len(),
        });
    }
    let train = Dataset::from_rows(&train.0, train.1)?;
    let test = Dataset::from_rows(&test.0, test.1)?;
    let scaler = Standardizer::fit(&train);
    Ok((scaler.transform(&train)?, scaler.transform(&test)?))
}

/// Trains every model on each feature set and reports test accuracy.
pub fn evaluate(
    labeled: &[LabeledCall],
    feature_sets: &[FeatureSet],
    benchmark: &BTreeMap<(String, Date), EmbeddingVector>,
    split_date: Date,
    train: &TrainConfig,
) -> Result<Vec<AccuracyRow>, PipelineError> {
    let mut sets = feature_sets.to_vec();
    sets.sort();
    sets.dedup();
    sets.par_iter()
        .map(|&set| {
            let (train_set, test_set) = split_datasets(labeled, set, benchmark, split_date)?;
            let acc = ModelKind::ALL
                .par_iter()
                .map(|&kind| {
                    let trained = sgd_train(kind, &train_set, train)?;
                    evaluate_accuracy(&trained.model, &test_set)
                })
                .collect::<Result<Vec<f64>, ModelError>>()?;
            log::info!(
                "{}: svm {:.3}, logistic {:.3}, nn {:.3}",
                set.label(),
                acc[0],
                acc[1],
                acc[2]
            );
            Ok(AccuracyRow {
                feature_set: set.label().to_string(),
                svm: acc[0],
                logistic: acc[1],
                nn: acc[2],
            })
        })
        .collect()
}

/// Everything a study produces.
#[derive(Debug, Clone)]
pub struct StudyReport {
    pub config: RunConfig,
    pub backend: String,
    pub index: IndexRun,
    pub labeled: Vec<LabeledCall>,
    pub label_manifest: StageManifest,
    pub analytics: AnalyticsReport,
    pub regression: SectorFits,
    pub accuracy: Vec<AccuracyRow>,
}

/// Runs every stage on already indexed calls and loaded prices.
pub fn study_from_index(
    config: &RunConfig,
    embedder: &dyn Embedder,
    index: IndexRun,
    prices: &BTreeMap<String, PriceSeries>,
) -> Result<StudyReport, PipelineError> {
    let (labeled, label_manifest) = label_records(&index.records(), prices, &config.label_spec);
    if labeled.is_empty() {
        return Err(PipelineError::EmptySplit { train: 0, test: 0 });
    }
    let analytics = run_analytics(&labeled)?;
    let regression = fit_by_sector(&labeled);
    let benchmark = if config.feature_sets.iter().any(|s| s.needs_benchmark()) {
        let calls: Vec<EarningsCall> = index.calls.iter().map(|c| c.call.clone()).collect();
        benchmark_features(&calls, embedder)?
    } else {
        BTreeMap::new()
    };
    let accuracy = evaluate(
        &labeled,
        &config.feature_sets,
        &benchmark,
        config.split_date,
        &config.train,
    )?;
    Ok(StudyReport {
        config: config.clone(),
        backend: embedder.describe(),
        index,
        labeled,
        label_manifest,
        analytics,
        regression,
        accuracy,
    })
}

pub fn run_study(config: &RunConfig, embedder: &dyn Embedder) -> Result<StudyReport, PipelineError> {
    let index = run_index(config, embedder)?;
    let prices = load_price_dir(&config.price_dir)?;
    study_from_index(config, embedder, index, &prices)
}

/// File names inside the output directory.
pub mod files {
    pub const INDEX_CSV: &str = "index.csv";
    pub const INDEX_JSONL: &str = "index.jsonl";
    pub const INDEX_MANIFEST: &str = "index_manifest.json";
    pub const LABELED_CSV: &str = "labeled.csv";
    pub const LABEL_MANIFEST: &str = "label_manifest.json";
    pub const INDEX_SUMMARY: &str = "index_summary.csv";
    pub const INDEX_BOXES: &str = "index_boxes.csv";
    pub const INDEX_TREND: &str = "index_trend.csv";
    pub const CHANGE_SUMMARY: &str = "change_summary.csv";
    pub const CHANGE_BOXES: &str = "change_boxes.csv";
    pub const CHANGE_TREND: &str = "change_trend.csv";
    pub const REGRESSION_CSV: &str = "regression.csv";
    pub const ACCURACY_CSV: &str = "accuracy.csv";
    pub const RUN_CONFIG: &str = "run_config.json";
}

#[derive(Serialize)]
struct IndexManifestFile<'a> {
    backend: &'a str,
    #[serde(flatten)]
    manifest: &'a StageManifest,
}

pub fn write_index(dir: &Path, run: &IndexRun, backend: &str) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows: Vec<IndexRow> = run.calls.iter().map(|c| IndexRow::from(&c.record)).collect();
    write_csv(&dir.join(files::INDEX_CSV), &rows)?;
    write_jsonl(&dir.join(files::INDEX_JSONL), &rows)?;
    write_json(
        &dir.join(files::INDEX_MANIFEST),
        &IndexManifestFile {
            backend,
            manifest: &run.manifest,
        },
    )?;
    Ok(())
}

pub fn write_labeled(dir: &Path, labeled: &[LabeledCall], manifest: &StageManifest) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows: Vec<LabeledRow> = labeled.iter().map(LabeledRow::from).collect();
    write_csv(&dir.join(files::LABELED_CSV), &rows)?;
    write_json(&dir.join(files::LABEL_MANIFEST), manifest)?;
    Ok(())
}

pub fn write_analytics(dir: &Path, report: &AnalyticsReport) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let boxes = |b: &[BoxSummary]| b.iter().map(BoxRow::from).collect::<Vec<_>>();
    write_csv(&dir.join(files::INDEX_SUMMARY), &report.index_summary)?;
    write_csv(&dir.join(files::INDEX_BOXES), &boxes(&report.index_boxes))?;
    write_csv(&dir.join(files::INDEX_TREND), &report.index_trend)?;
    write_csv(&dir.join(files::CHANGE_SUMMARY), &report.change_summary)?;
    write_csv(&dir.join(files::CHANGE_BOXES), &boxes(&report.change_boxes))?;
    write_csv(&dir.join(files::CHANGE_TREND), &report.change_trend)?;
    Ok(())
}

pub fn write_regression(dir: &Path, fits: &SectorFits) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows: Vec<RegressionRow> = fits.results.iter().map(RegressionRow::from).collect();
    write_csv(&dir.join(files::REGRESSION_CSV), &rows)?;
    for s in &fits.skipped {
        log::warn!("regression group {} skipped (n = {}): {}", s.group, s.n, s.reason);
    }
    Ok(())
}

pub fn write_accuracy(dir: &Path, rows: &[AccuracyRow]) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_csv(&dir.join(files::ACCURACY_CSV), rows)?;
    Ok(())
}

/// Writes the full report bundle into `dir`.
pub fn write_study(dir: &Path, report: &StudyReport) -> Result<(), PipelineError> {
    write_index(dir, &report.index, &report.backend)?;
    write_labeled(dir, &report.labeled, &report.label_manifest)?;
    write_analytics(dir, &report.analytics)?;
    write_regression(dir, &report.regression)?;
    write_accuracy(dir, &report.accuracy)?;
    write_json(&dir.join(files::RUN_CONFIG), &report.config)?;
    Ok(())
}
