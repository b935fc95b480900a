use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use topicswitch::config::{RunConfig, Settings};
use topicswitch::core::transcript::{segment_and_pair, Roster};
use topicswitch::core::{EarningsCall, PriceSeries};
use topicswitch::embed::{BuiltinEmbedder, Embedder};
use topicswitch::formats::{parse_transcript, to_json_turns, to_plain, TranscriptFormat};
use topicswitch::pipeline::{self, files, IndexRun, StageManifest};
use topicswitch::prices::load_price_dir;
use topicswitch::records::write_json;
use topicswitch::synth::{self, SynthConfig};

/// Topic-switching index for earnings-call Q&A: how far management answers
/// drift from the analyst questions they respond to.
#[derive(Debug, Parser)]
#[command(name = "topicswitch", version)]
struct Cli {
    /// TOML file of default settings; command-line flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse transcript files and print them with their question-answer pairs
    Parse {
        /// Transcript files
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Input format; inferred from the extension when omitted
        #[arg(long)]
        format: Option<TranscriptFormat>,
        /// What to print for each file
        #[arg(long, value_enum, default_value_t = Emit::Pairs)]
        emit: Emit,
    },
    /// Compute the index for every call in the transcript directory
    Index(Stage),
    /// Index calls and label them from the price files
    Label(Stage),
    /// Index, label and write descriptive statistics
    Analytics(Stage),
    /// Index, label and regress price change on the index, overall and by sector
    Regress(Stage),
    /// Index, label and report classifier accuracy on the date split
    Evaluate(Stage),
    /// Run every stage and write the full report bundle
    Study(Stage),
    /// Write a synthetic corpus with a planted index-return relationship
    Synth {
        /// Destination; receives transcripts/, prices/ and planted.csv
        #[arg(long)]
        out: PathBuf,
        /// Number of companies
        #[arg(long)]
        n_symbols: Option<usize>,
        /// First calendar year of calls
        #[arg(long)]
        first_year: Option<i32>,
        /// Last calendar year of calls (inclusive)
        #[arg(long)]
        last_year: Option<i32>,
        /// Return per unit of index
        #[arg(long, allow_hyphen_values = true)]
        slope: Option<f64>,
        /// Standard deviation of the return noise
        #[arg(long)]
        noise_sd: Option<f64>,
        /// Seed for the generated text, indices and returns
        #[arg(long)]
        synth_seed: Option<u64>,
        #[command(flatten)]
        settings: Settings,
    },
}

#[derive(Debug, clap::Args)]
struct Stage {
    #[command(flatten)]
    settings: Settings,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Emit {
    /// The parsed call with its pairs, as one JSON line
    Pairs,
    /// Normalised JSON turns
    Json,
    /// Normalised plain text
    Plain,
}

fn resolve(settings: Settings, config: Option<&Path>) -> Result<RunConfig> {
    let file = match config {
        Some(path) => Settings::from_toml_file(path)?,
        None => Settings::default(),
    };
    Ok(settings.or(file).resolve()?)
}

fn report_manifest(stage: &str, m: &StageManifest) {
    log::info!("{stage}: kept {} of {}", m.kept, m.total);
    for e in &m.excluded {
        log::warn!("{stage}: excluded {} ({:?}): {}", e.item, e.reason, e.detail);
    }
}

struct Indexed {
    config: RunConfig,
    embedder: Box<dyn Embedder>,
    run: IndexRun,
}

fn index_stage(stage: Stage, config: Option<&Path>) -> Result<Indexed> {
    let config = resolve(stage.settings, config)?;
    let embedder = config.backend.build()?;
    log::info!("embedding with {}", embedder.describe());
    let run = pipeline::run_index(&config, embedder.as_ref())
        .with_context(|| format!("indexing {}", config.transcript_dir.display()))?;
    report_manifest("index", &run.manifest);
    pipeline::write_index(&config.output_dir, &run, &embedder.describe())?;
    write_json(&config.output_dir.join(files::RUN_CONFIG), &config)?;
    Ok(Indexed { config, embedder, run })
}

fn load_prices(config: &RunConfig) -> Result<BTreeMap<String, PriceSeries>> {
    load_price_dir(&config.price_dir).with_context(|| format!("loading prices from {}", config.price_dir.display()))
}

fn label_stage(stage: Stage, config: Option<&Path>) -> Result<(Indexed, Vec<topicswitch::core::LabeledCall>)> {
    let indexed = index_stage(stage, config)?;
    let prices = load_prices(&indexed.config)?;
    let (labeled, manifest) = pipeline::label_records(&indexed.run.records(), &prices, &indexed.config.label_spec);
    report_manifest("label", &manifest);
    pipeline::write_labeled(&indexed.config.output_dir, &labeled, &manifest)?;
    if labeled.is_empty() {
        bail!("no call could be labelled; see {}", files::LABEL_MANIFEST);
    }
    Ok((indexed, labeled))
}

fn parse_files(paths: &[PathBuf], format: Option<TranscriptFormat>, emit: Emit) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for path in paths {
        let format = match format.or_else(|| TranscriptFormat::from_path(path)) {
            Some(f) => f,
            None => bail!("{}: cannot infer the format; pass --format", path.display()),
        };
        let raw = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let call = parse_transcript(&raw, format).with_context(|| path.display().to_string())?;
        match emit {
            Emit::Pairs => {
                let call: EarningsCall =
                    segment_and_pair(call, &Roster::new()).with_context(|| path.display().to_string())?;
                writeln!(out, "{}", serde_json::to_string(&call)?)?;
            }
            Emit::Json => writeln!(out, "{}", to_json_turns(&call))?,
            Emit::Plain => write!(out, "{}", to_plain(&call))?,
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Parse { files, format, emit } => parse_files(&files, format, emit)?,
        Command::Index(stage) => {
            let indexed = index_stage(stage, config)?;
            println!(
                "indexed {} of {} calls",
                indexed.run.manifest.kept, indexed.run.manifest.total
            );
        }
        Command::Label(stage) => {
            let (_, labeled) = label_stage(stage, config)?;
            println!("labelled {} calls", labeled.len());
        }
        Command::Analytics(stage) => {
            let (indexed, labeled) = label_stage(stage, config)?;
            let report = pipeline::run_analytics(&labeled)?;
            pipeline::write_analytics(&indexed.config.output_dir, &report)?;
            for s in &report.index_summary {
                println!(
                    "{:<28} n={:<5} mean={:.4} std={:.4}",
                    s.category, s.count, s.mean, s.std_dev
                );
            }
        }
        Command::Regress(stage) => {
            let (indexed, labeled) = label_stage(stage, config)?;
            let fits = topicswitch::core::regression::fit_by_sector(&labeled);
            pipeline::write_regression(&indexed.config.output_dir, &fits)?;
            for r in &fits.results {
                println!(
                    "{:<28} coef={:+.5} se={:.5} t={:+.2} n={}",
                    r.group, r.coefficient, r.std_error, r.t_value, r.n
                );
            }
        }
        Command::Evaluate(stage) => {
            let (indexed, labeled) = label_stage(stage, config)?;
            let calls: Vec<EarningsCall> = indexed.run.calls.iter().map(|c| c.call.clone()).collect();
            let benchmark = if indexed.config.feature_sets.iter().any(|s| s.needs_benchmark()) {
                pipeline::benchmark_features(&calls, indexed.embedder.as_ref())?
            } else {
                BTreeMap::new()
            };
            let c = &indexed.config;
            let rows = pipeline::evaluate(&labeled, &c.feature_sets, &benchmark, c.split_date, &c.train)?;
            pipeline::write_accuracy(&c.output_dir, &rows)?;
            print_accuracy(&rows);
        }
        Command::Study(stage) => {
            let config = resolve(stage.settings, config)?;
            let embedder = config.backend.build()?;
            log::info!("embedding with {}", embedder.describe());
            let report = pipeline::run_study(&config, embedder.as_ref())?;
            report_manifest("index", &report.index.manifest);
            report_manifest("label", &report.label_manifest);
            pipeline::write_study(&config.output_dir, &report)?;
            print_accuracy(&report.accuracy);
            println!("outputs written to {}", config.output_dir.display());
        }
        Command::Synth {
            out,
            n_symbols,
            first_year,
            last_year,
            slope,
            noise_sd,
            synth_seed,
            settings,
        } => {
            let d = SynthConfig::default();
            let cfg = SynthConfig {
                n_symbols: n_symbols.unwrap_or(d.n_symbols),
                first_year: first_year.unwrap_or(d.first_year),
                last_year: last_year.unwrap_or(d.last_year),
                slope: slope.unwrap_or(d.slope),
                noise_sd: noise_sd.unwrap_or(d.noise_sd),
                seed: synth_seed.unwrap_or(d.seed),
                ..d
            };
            let run = resolve(settings, config)?;
            let encoder = match run.backend {
                topicswitch::embed::BackendConfig::Builtin(enc) => enc,
                _ => bail!("synth computes planted values with the builtin encoder; use --backend builtin"),
            };
            let embedder = BuiltinEmbedder::new(encoder)?;
            let corpus = synth::generate(&cfg, &embedder)?;
            synth::write_corpus(&corpus, &out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "wrote {} calls for {} symbols to {} (median planted change {:.6})",
                corpus.calls.len(),
                corpus.prices.len(),
                out.display(),
                corpus.median_change()
            );
        }
    }
    Ok(())
}

fn print_accuracy(rows: &[topicswitch::records::AccuracyRow]) {
    println!("{:<40} {:>8} {:>8} {:>8}", "features", "svm", "logistic", "nn");
    for r in rows {
        println!("{:<40} {:>8.4} {:>8.4} {:>8.4}", r.feature_set, r.svm, r.logistic, r.nn);
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Many errors already spell out their cause; only add chain
            // entries that say something new.
            let mut message = e.to_string();
            for cause in e.chain().skip(1) {
                let cause = cause.to_string();
                if !message.contains(&cause) {
                    message = format!("{message}: {cause}");
                }
            }
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
