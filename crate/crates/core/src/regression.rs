//! Simple least-squares regression of relative price change on the index,
//! overall and per sector.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::market::LabeledCall;
use crate::math;
use crate::sector::Sector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum RegressionError {
    #[error("x and y have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("regressor is constant")]
    DegenerateRegressor,
    #[error("input contains a non-finite value")]
    NonFinite,
}

/// Which slice of the data a fit covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    Sector(Sector),
    Overall,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Sector(s) => s.fmt(f),
            Group::Overall => f.write_str("Overall"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub group: Group,
    pub coefficient: f64,
    pub intercept: f64,
    /// Classical (homoskedastic) standard error of the slope.
    pub std_error: f64,
    pub t_value: f64,
    pub n: usize,
}

/// Ordinary least squares of `y` on `x` with an intercept.
///
/// A perfect fit has zero residual variance, so its standard error is 0 and
/// the t-value is infinite.
pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<RegressionResult, RegressionError> {
    if x.len() != y.len() {
        return Err(RegressionError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(RegressionError::TooFewPoints(n));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(RegressionError::NonFinite);
    }
    let x_bar = math::mean(x);
    let y_bar = math::mean(y);
    let sxx: f64 = x.iter().map(|xi| (xi - x_bar) * (xi - x_bar)).sum();
    if sxx == 0.0 {
        return Err(RegressionError::DegenerateRegressor);
    }
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - x_bar) * (yi - y_bar)).sum();
    let coefficient = sxy / sxx;
    let intercept = y_bar - coefficient * x_bar;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let r = yi - (intercept + coefficient * xi);
            r * r
        })
        .sum();
    let sigma2 = sse / (n - 2) as f64;
    let std_error = math::sqrt(sigma2 / sxx);
    Ok(RegressionResult {
        group: Group::Overall,
        coefficient,
        intercept,
        std_error,
        t_value: coefficient / std_error,
        n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedGroup {
    pub group: Group,
    pub n: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SectorFits {
    /// Sector rows in sector order, then the pooled `Overall` row.
    pub results: Vec<RegressionResult>,
    pub skipped: Vec<SkippedGroup>,
}

/// Regresses relative change on the index for each sector present and for
/// all records pooled. Groups that cannot be fitted are listed as skipped.
pub fn fit_by_sector(records: &[LabeledCall]) -> SectorFits {
    let mut by_sector: BTreeMap<Sector, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut all_x = Vec::with_capacity(records.len());
    let mut all_y = Vec::with_capacity(records.len());
    for r in records {
        let (xs, ys) = by_sector.entry(r.record.sector).or_default();
        xs.push(r.record.index);
        ys.push(r.relative_change);
        all_x.push(r.record.index);
        all_y.push(r.relative_change);
    }
    let mut fits = SectorFits::default();
    let groups = by_sector
        .iter()
        .map(|(s, (x, y))| (Group::Sector(*s), x.as_slice(), y.as_slice()))
        .chain(core::iter::once((Group::Overall, all_x.as_slice(), all_y.as_slice())));
    for (group, x, y) in groups {
        match ols_fit(x, y) {
            Ok(mut r) => {
                r.group = group;
                fits.results.push(r);
            }
            Err(e) => fits.skipped.push(SkippedGroup {
                group,
                n: x.len(),
                reason: e.to_string(),
            }),
        }
    }
    fits
}
