//! Descriptive statistics for index values and price changes.
//!
//! Quartiles use linear interpolation between order statistics at position
//! `(n − 1)·p` (the "type 7" rule), so the median of an even-sized sample is
//! the mean of the two middle values. Inputs are sorted before any
//! summation, which makes every summary independent of input order.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::sector::Sector;
use crate::tsi::CallIndexRecord;
use crate::Date;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("no values to summarise")]
    EmptyInput,
    #[error("input contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategorySummary {
    pub category: Sector,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 when `count == 1`.
    pub std_dev: f64,
    pub minimum: f64,
    pub maximum: f64,
    pub count: usize,
    /// False when `count == 1` and `std_dev` is a placeholder.
    pub std_dev_defined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub category: Sector,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    pub outliers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearlyTrendPoint {
    pub year: i32,
    pub mean: f64,
    pub median: f64,
    pub count: usize,
}

fn sorted_finite(values: &[f64]) -> Result<Vec<f64>, AnalyticsError> {
    if values.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Type-7 quantile of an ascending, non-empty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let hi = libm::ceil(h) as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Result<f64, AnalyticsError> {
    sorted_finite(values).map(|v| quantile_sorted(&v, 0.5))
}

/// Summary of one category's values.
pub fn summarize_values(category: Sector, values: &[f64]) -> Result<CategorySummary, AnalyticsError> {
    let v = sorted_finite(values)?;
    let n = v.len();
    let mean = math::mean(&v);
    let (std_dev, std_dev_defined) = if n > 1 {
        let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
        (math::sqrt(ss / (n - 1) as f64), true)
    } else {
        (0.0, false)
    };
    Ok(CategorySummary {
        category,
        mean,
        std_dev,
        minimum: v[0],
        maximum: v[n - 1],
        count: n,
        std_dev_defined,
    })
}

fn group_by_sector<I: IntoIterator<Item = (Sector, f64)>>(items: I) -> BTreeMap<Sector, Vec<f64>> {
    let mut groups: BTreeMap<Sector, Vec<f64>> = BTreeMap::new();
    for (s, v) in items {
        groups.entry(s).or_default().push(v);
    }
    groups
}

/// One summary per category present, in sector order.
pub fn summarize_by_category<I>(items: I) -> Result<Vec<CategorySummary>, AnalyticsError>
where
    I: IntoIterator<Item = (Sector, f64)>,
{
    let groups = group_by_sector(items);
    if groups.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    groups.iter().map(|(s, v)| summarize_values(*s, v)).collect()
}

/// Index statistics per sector.
pub fn summarize_categories(records: &[CallIndexRecord]) -> Result<Vec<CategorySummary>, AnalyticsError> {
    summarize_by_category(records.iter().map(|r| (r.sector, r.index)))
}

/// Quartiles, 1.5·IQR whiskers and outliers.
pub fn box_summary(values: &[f64], category: Sector) -> Result<BoxSummary, AnalyticsError> {
    let v = sorted_finite(values)?;
    let q1 = quantile_sorted(&v, 0.25);
    let median = quantile_sorted(&v, 0.5);
    let q3 = quantile_sorted(&v, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = |x: &&f64| **x >= lo_fence && **x <= hi_fence;
    // The median always lies inside the fences, so both finds succeed.
    let lower_whisker = *v.iter().find(inside).unwrap_or(&median);
    let upper_whisker = *v.iter().rev().find(inside).unwrap_or(&median);
    let outliers = v.iter().copied().filter(|x| *x < lo_fence || *x > hi_fence).collect();
    Ok(BoxSummary {
        category,
        q1,
        median,
        q3,
        lower_whisker,
        upper_whisker,
        outliers,
    })
}

/// Box summaries per category present, in sector order.
pub fn box_by_category<I>(items: I) -> Result<Vec<BoxSummary>, AnalyticsError>
where
    I: IntoIterator<Item = (Sector, f64)>,
{
    let groups = group_by_sector(items);
    if groups.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    groups.iter().map(|(s, v)| box_summary(v, *s)).collect()
}

/// Mean and median per calendar year, years ascending.
pub fn yearly_trend(records: &[(Date, f64)]) -> Result<Vec<YearlyTrendPoint>, AnalyticsError> {
    if records.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    let mut years: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for (d, v) in records {
        years.entry(d.year()).or_default().push(*v);
    }
    years
        .into_iter()
        .map(|(year, values)| {
            let v = sorted_finite(&values)?;
            Ok(YearlyTrendPoint {
                year,
                mean: math::mean(&v),
                median: quantile_sorted(&v, 0.5),
                count: v.len(),
            })
        })
        .collect()
}
