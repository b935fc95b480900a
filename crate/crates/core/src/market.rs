//! Price series, event-window alignment and up/down labels.
//!
//! "The day before" and "the day after" a call are the nearest trading days
//! strictly before and strictly after the call date, so calls on weekends
//! and holidays align naturally.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::tsi::CallIndexRecord;
use crate::Date;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarketError {
    #[error("price on {0} is not a positive finite number")]
    NonPositivePrice(Date),
    #[error("date {0} appears more than once")]
    DuplicateDate(Date),
    #[error("dates are not strictly increasing at {0}")]
    Unsorted(Date),
    #[error("no trading day on both sides of {0}")]
    InsufficientWindow(Date),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: Date,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    company_symbol: String,
    points: Vec<PricePoint>,
}

impl PriceSeries {
    /// Validates an already sorted series.
    pub fn new(company_symbol: impl Into<String>, points: Vec<PricePoint>) -> Result<Self, MarketError> {
        for p in &points {
            if !(p.high.is_finite() && p.high > 0.0) {
                return Err(MarketError::NonPositivePrice(p.date));
            }
        }
        for w in points.windows(2) {
            if w[0].date == w[1].date {
                return Err(MarketError::DuplicateDate(w[1].date));
            }
            if w[0].date > w[1].date {
                return Err(MarketError::Unsorted(w[1].date));
            }
        }
        Ok(Self {
            company_symbol: company_symbol.into(),
            points,
        })
    }

    /// Sorts by date, then validates.
    pub fn from_unsorted(company_symbol: impl Into<String>, mut points: Vec<PricePoint>) -> Result<Self, MarketError> {
        points.sort_by_key(|a| a.date);
        Self::new(company_symbol, points)
    }

    pub fn company_symbol(&self) -> &str {
        &self.company_symbol
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Prices on the last trading day before and the first trading day after
/// `call_date`.
pub fn align_window(series: &PriceSeries, call_date: Date) -> Result<(f64, f64), MarketError> {
    let points = series.points();
    let first_not_before = points.partition_point(|p| p.date < call_date);
    let first_after = points.partition_point(|p| p.date <= call_date);
    if first_not_before == 0 || first_after == points.len() {
        return Err(MarketError::InsufficientWindow(call_date));
    }
    Ok((points[first_not_before - 1].high, points[first_after].high))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    /// +1 when the next price is at least the previous price.
    Absolute,
    /// +1 when the relative change is at least `tau`.
    Relative,
}

/// Which movement is reported as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositiveClass {
    #[default]
    Up,
    /// Flips every label, so +1 marks a change below the threshold.
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub kind: LabelKind,
    /// Threshold on the relative change. Ignored for `Absolute`.
    pub tau: f64,
    #[serde(default)]
    pub positive_class: PositiveClass,
}

impl LabelSpec {
    pub fn absolute() -> Self {
        Self {
            kind: LabelKind::Absolute,
            tau: 0.0,
            positive_class: PositiveClass::Up,
        }
    }

    pub fn relative(tau: f64) -> Self {
        Self {
            kind: LabelKind::Relative,
            tau,
            positive_class: PositiveClass::Up,
        }
    }
}

impl Default for LabelSpec {
    fn default() -> Self {
        Self::absolute()
    }
}

pub fn relative_change(prev: f64, next: f64) -> f64 {
    (next - prev) / prev
}

/// Binary movement label in `{-1, +1}`. Equality at the threshold is +1.
pub fn label(prev: f64, next: f64, spec: &LabelSpec) -> i8 {
    let up = match spec.kind {
        LabelKind::Absolute => next >= prev,
        LabelKind::Relative => relative_change(prev, next) >= spec.tau,
    };
    match (up, spec.positive_class) {
        (true, PositiveClass::Up) | (false, PositiveClass::Down) => 1,
        _ => -1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCall {
    pub record: CallIndexRecord,
    pub prev_price: f64,
    pub next_price: f64,
    pub relative_change: f64,
    pub label: i8,
}

pub fn label_call(record: CallIndexRecord, series: &PriceSeries, spec: &LabelSpec) -> Result<LabeledCall, MarketError> {
    let (prev, next) = align_window(series, record.call_date)?;
    Ok(LabeledCall {
        record,
        prev_price: prev,
        next_price: next,
        relative_change: relative_change(prev, next),
        label: label(prev, next, spec),
    })
}
