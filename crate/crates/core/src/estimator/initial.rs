//! Crude initial estimate and the pruning step around it.

use crate::config::EstimatorConfig;
use crate::error::{Error, Result};
use crate::linalg;
use crate::points::Sample;

/// Number of points (the center included) a candidate ball must hold: `ceil(0.6 n)`.
pub fn coverage_count(n: usize) -> usize {
    (3 * n).div_ceil(5)
}

/// For every data point, the smallest radius around it containing
/// `ceil(0.6 n)` points of the sample.
pub fn coverage_radii(sample: &Sample) -> Vec<f64> {
    let pts = &sample.points;
    let n = pts.len();
    let q = coverage_count(n).max(1);
    let mut dists = vec![0.0; n];
    (0..n)
        .map(|i| {
            let xi = pts.row(i);
            for (j, dj) in dists.iter_mut().enumerate() {
                *dj = linalg::dist(xi, pts.row(j));
            }
            *dists.select_nth_unstable_by(q - 1, f64::total_cmp).1
        })
        .collect()
}

/// The data point whose `ceil(0.6 n)`-coverage radius is smallest, lowest
/// index on ties.
pub fn initial_mean_estimate(sample: &Sample) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::EmptySample("initial estimate needs at least one point".into()));
    }
    let radii = coverage_radii(sample);
    let mut best = 0;
    for (i, &r) in radii.iter().enumerate() {
        if r < radii[best] {
            best = i;
        }
    }
    Ok(sample.points.row(best).to_vec())
}

/// Keeps the points within the prune radius of `x_dagger`, in input order.
/// `n` in the radius is the size of `sample`.
pub fn prune(sample: &Sample, x_dagger: &[f64], cfg: &EstimatorConfig) -> Result<Sample> {
    if x_dagger.len() != sample.dim() {
        return Err(Error::InvalidSample(format!(
            "center has dimension {} but the sample has dimension {}",
            x_dagger.len(),
            sample.dim()
        )));
    }
    let tau = cfg.prune_radius(sample.len(), sample.dim(), sample.alpha());
    Ok(sample.with_points(sample.points.select(|p| linalg::dist(p, x_dagger) <= tau)))
}
