//! Log-log least squares fits of error quantiles against one grid axis.

use serde::{Deserialize, Serialize};

use super::{GridPoint, TrialReport};
use crate::error::{Error, Result};
use crate::json::real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    N,
    D,
    LogInvDelta,
}

impl Axis {
    fn value(self, p: &GridPoint) -> f64 {
        match self {
            Axis::N => p.n as f64,
            Axis::D => p.d as f64,
            Axis::LogInvDelta => (1.0 / p.delta).ln(),
        }
    }

    /// Bit patterns of the grid fields that must stay fixed along this axis.
    fn others(self, p: &GridPoint) -> [u64; 5] {
        let mut out = [p.n as f64, p.d as f64, p.alpha, p.delta, p.eta].map(f64::to_bits);
        out[match self {
            Axis::N => 0,
            Axis::D => 1,
            Axis::LogInvDelta => 3,
        }] = 0;
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub axis: Axis,
    #[serde(with = "real")]
    pub fitted_exponent: f64,
    #[serde(with = "real")]
    pub stderr: f64,
    pub grid: Vec<GridPoint>,
}

pub const MIN_FIT_POINTS: usize = 4;

/// Slope of `ln(quantile)` on `ln(axis value)` with its standard error.
pub fn fit_exponent(reports: &[TrialReport], axis: Axis) -> Result<ScalingFit> {
    if reports.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateGrid(format!(
            "need at least {MIN_FIT_POINTS} grid points, got {}",
            reports.len()
        )));
    }
    let fixed = axis.others(&reports[0].point);
    if reports.iter().any(|r| axis.others(&r.point) != fixed) {
        return Err(Error::DegenerateGrid(format!("grid varies along more than the {axis:?} axis")));
    }
    let mut xs = Vec::with_capacity(reports.len());
    let mut ys = Vec::with_capacity(reports.len());
    for r in reports {
        let a = axis.value(&r.point);
        if !(a > 0.0) || !(r.quantile > 0.0 && r.quantile.is_finite()) {
            return Err(Error::DegenerateGrid(format!(
                "axis value {a} and quantile {} must be positive and finite",
                r.quantile
            )));
        }
        xs.push(a.ln());
        ys.push(r.quantile.ln());
    }
    let mut distinct = xs.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateGrid(format!("need {MIN_FIT_POINTS} distinct axis values")));
    }
    let (slope, stderr) = ols(&xs, &ys);
    Ok(ScalingFit { axis, fitted_exponent: slope, stderr, grid: reports.iter().map(|r| r.point).collect() })
}

fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - ybar - slope * (x - xbar)).powi(2)).sum();
    (slope, (sse / (m - 2.0) / sxx).sqrt())
}
