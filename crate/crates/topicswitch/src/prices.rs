//! Daily price files.
//!
//! One CSV file per company, named `<SYMBOL>.csv`, with a header row that
//! contains at least `date` and `high` columns (case-insensitive; other
//! columns are ignored). Dates are ISO-8601. Rows may appear in any order.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use topicswitch_core::market::{MarketError, PricePoint};
use topicswitch_core::{Date, PriceSeries};

#[derive(Debug, thiserror::Error)]
pub enum PriceError {
    #[error("malformed price file at line {line}: {message}")]
    MalformedInput { line: u64, message: String },
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn malformed(line: u64, message: impl Into<String>) -> PriceError {
    PriceError::MalformedInput {
        line,
        message: message.into(),
    }
}

/// Parses one price CSV into a sorted, validated series.
pub fn load_prices(raw: &[u8], company_symbol: &str) -> Result<PriceSeries, PriceError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(raw);
    let headers = reader.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(date_col), Some(high_col)) = (column("date"), column("high")) else {
        return Err(malformed(1, "header must contain `date` and `high` columns"));
    };

    let mut points = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let date = Date::parse_from_str(field(date_col), "%Y-%m-%d")
            .map_err(|e| malformed(line, format!("invalid date `{}`: {e}", field(date_col))))?;
        let high: f64 = field(high_col)
            .parse()
            .map_err(|_| malformed(line, format!("invalid price `{}`", field(high_col))))?;
        points.push(PricePoint { date, high });
    }
    Ok(PriceSeries::from_unsorted(company_symbol, points)?)
}

/// Loads every `*.csv` file in `dir`, keyed by upper-cased file stem.
pub fn load_price_dir(dir: &Path) -> Result<BTreeMap<String, PriceSeries>, PriceError> {
    let io_err = |source| PriceError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let is_csv = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()).filter(|_| is_csv) else {
            continue;
        };
        let symbol = stem.to_ascii_uppercase();
        let raw = fs::read(&path).map_err(|source| PriceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let series = load_prices(&raw, &symbol).map_err(|e| match e {
            PriceError::MalformedInput { line, message } => malformed(line, format!("{}: {message}", path.display())),
            other => other,
        })?;
        out.insert(symbol, series);
    }
    Ok(out)
}

/// Writes a series in the same layout [`load_prices`] reads.
pub fn write_prices<W: Write>(series: &PriceSeries, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "high"])?;
    for p in series.points() {
        w.write_record([p.date.format("%Y-%m-%d").to_string(), p.high.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
