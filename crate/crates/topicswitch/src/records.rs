//! Row layouts for the CSV and JSON-lines files the pipeline reads and writes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use topicswitch_core::analytics::{BoxSummary, CategorySummary, YearlyTrendPoint};
use topicswitch_core::regression::RegressionResult;
use topicswitch_core::{CallIndexRecord, Date, LabeledCall, Sector};

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// One call's index: `symbol,date,sector,index,n_pairs_scored,n_pairs_skipped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub symbol: String,
    pub date: Date,
    pub sector: Sector,
    pub index: f64,
    pub n_pairs_scored: usize,
    pub n_pairs_skipped: usize,
}

impl From<&CallIndexRecord> for IndexRow {
    fn from(r: &CallIndexRecord) -> Self {
        Self {
            symbol: r.company_symbol.clone(),
            date: r.call_date,
            sector: r.sector,
            index: r.index,
            n_pairs_scored: r.n_pairs_scored,
            n_pairs_skipped: r.n_pairs_skipped,
        }
    }
}

impl From<IndexRow> for CallIndexRecord {
    fn from(r: IndexRow) -> Self {
        Self {
            company_symbol: r.symbol,
            call_date: r.date,
            sector: r.sector,
            index: r.index,
            n_pairs_scored: r.n_pairs_scored,
            n_pairs_skipped: r.n_pairs_skipped,
        }
    }
}

/// An index row joined with its price window and label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub symbol: String,
    pub date: Date,
    pub sector: Sector,
    pub index: f64,
    pub n_pairs_scored: usize,
    pub n_pairs_skipped: usize,
    pub prev_price: f64,
    pub next_price: f64,
    pub relative_change: f64,
    pub label: i8,
}

impl From<&LabeledCall> for LabeledRow {
    fn from(c: &LabeledCall) -> Self {
        let r = IndexRow::from(&c.record);
        Self {
            symbol: r.symbol,
            date: r.date,
            sector: r.sector,
            index: r.index,
            n_pairs_scored: r.n_pairs_scored,
            n_pairs_skipped: r.n_pairs_skipped,
            prev_price: c.prev_price,
            next_price: c.next_price,
            relative_change: c.relative_change,
            label: c.label,
        }
    }
}

impl From<LabeledRow> for LabeledCall {
    fn from(r: LabeledRow) -> Self {
        Self {
            record: CallIndexRecord {
                company_symbol: r.symbol,
                call_date: r.date,
                sector: r.sector,
                index: r.index,
                n_pairs_scored: r.n_pairs_scored,
                n_pairs_skipped: r.n_pairs_skipped,
            },
            prev_price: r.prev_price,
            next_price: r.next_price,
            relative_change: r.relative_change,
            label: r.label,
        }
    }
}

/// `category,mean,std_dev,minimum,maximum,count,std_dev_defined`.
pub type SummaryRow = CategorySummary;

/// `year,mean,median,count`.
pub type TrendRow = YearlyTrendPoint;

/// Box summary with outliers joined by `;`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRow {
    pub category: Sector,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: String,
}

impl From<&BoxSummary> for BoxRow {
    fn from(b: &BoxSummary) -> Self {
        Self {
            category: b.category,
            q1: b.q1,
            median: b.median,
            q3: b.q3,
            lower_whisker: b.lower_whisker,
            upper_whisker: b.upper_whisker,
            outliers: b.outliers.iter().map(f64::to_string).collect::<Vec<_>>().join(";"),
        }
    }
}

/// `sector,coefficient,std_error,t_value,n`; `sector` is `Overall` for the
/// pooled fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub sector: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub n: usize,
}

impl From<&RegressionResult> for RegressionRow {
    fn from(r: &RegressionResult) -> Self {
        Self {
            sector: r.group.to_string(),
            coefficient: r.coefficient,
            std_error: r.std_error,
            t_value: r.t_value,
            n: r.n,
        }
    }
}

/// Test accuracy per model for one feature set: `feature_set,svm,logistic,nn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub feature_set: String,
    pub svm: f64,
    pub logistic: f64,
    pub nn: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), RecordError> {
    let csv_err = |source| RecordError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| RecordError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, RecordError> {
    let csv_err = |source| RecordError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err)
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), RecordError> {
    let io_err = |source| RecordError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for row in rows {
        serde_json::to_writer(&mut w, row).map_err(|source| RecordError::Json {
            path: path.display().to_string(),
            source,
        })?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RecordError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| RecordError::Json {
        path: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| RecordError::Io {
        path: path.display().to_string(),
        source,
    })
}
