//! The mean estimator: crude center, pruning, bucketing, then descent driven
//! by the testing program.

mod buckets;
mod descent;
mod initial;

pub use buckets::{bucket_means, bucket_sizes, BucketSet};
pub use descent::{
    direction_at_radius, estimate_distance, estimate_gradient, gradient_descent, DescentTrace, SEARCH_TOLERANCE,
};
pub use initial::{coverage_count, coverage_radii, initial_mean_estimate, prune};

use crate::config::EstimatorConfig;
use crate::error::{Error, Result};
use crate::linalg;
use crate::points::{Estimate, Sample};

/// Runs the full pipeline and also returns the descent trace.
///
/// The first `floor(n/2)` points give the initial estimate `x_dagger`; the rest
/// are pruned around it and bucketed. Descent runs in coordinates centered at
/// `x_dagger`.
pub fn estimate_mean_with_trace(sample: &Sample, cfg: &EstimatorConfig) -> Result<(Estimate, DescentTrace)> {
    cfg.validate()?;
    let n = sample.len();
    if n < 4 {
        return Err(Error::InvalidSample(format!("mean estimation needs n >= 4, got {n}")));
    }
    let d = sample.dim();
    let half = n / 2;
    let first = sample.with_points(sample.points.slice(0, half));
    let second = sample.with_points(sample.points.slice(half, n));
    let x_dagger = initial_mean_estimate(&first)?;
    let kept = prune(&second, &x_dagger, cfg)?;
    if kept.is_empty() {
        let tau = cfg.prune_radius(second.len(), d, sample.alpha());
        return Err(Error::EmptyAfterPrune { tau });
    }
    let buckets = bucket_means(&kept, cfg)?;
    let centered = buckets.means.translated(&linalg::scale(&x_dagger, -1.0));
    let t_max = cfg.iteration_count(n, d);
    let (offset, mut trace) = gradient_descent(&centered, &vec![0.0; d], t_max, cfg)?;
    for x in &mut trace.iterates {
        *x = linalg::add(x, &x_dagger);
    }
    let estimate = Estimate {
        mean: linalg::add(&offset, &x_dagger),
        initial_point: x_dagger,
        pruned_count: second.len() - kept.len(),
        bucket_count: buckets.k(),
        iterations_used: t_max,
        final_distance_estimate: trace.distance_estimates[trace.best_index],
    };
    Ok((estimate, trace))
}

pub fn estimate_mean(sample: &Sample, cfg: &EstimatorConfig) -> Result<Estimate> {
    estimate_mean_with_trace(sample, cfg).map(|(e, _)| e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::Points;
    use crate::rng::{gaussian, make_rng};

    fn gaussian_sample(n: usize, d: usize, mean: &[f64], seed: u64) -> Sample {
        let mut rng = make_rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|j| mean[j] + gaussian(&mut rng)).collect()).collect();
        Sample::from_rows(&rows, 1.0).unwrap()
    }

    #[test]
    fn identical_points_are_returned() {
        let s = Sample::new(Points::repeat(&[0.25, -7.0, 3.5], 40), 0.5).unwrap();
        let cfg = EstimatorConfig::desk(0.1, 40, 3).unwrap();
        let est = estimate_mean(&s, &cfg).unwrap();
        assert_eq!(est.mean, vec![0.25, -7.0, 3.5]);
        assert_eq!(est.pruned_count, 0);
        assert_eq!(est.final_distance_estimate, 0.0);
    }

    #[test]
    fn too_small_sample() {
        let s = Sample::new(Points::repeat(&[1.0], 3), 1.0).unwrap();
        let cfg = EstimatorConfig::desk(0.1, 4, 1).unwrap();
        assert!(matches!(estimate_mean(&s, &cfg), Err(Error::InvalidSample(_))));
    }

    #[test]
    fn empty_after_prune_is_reported() {
        // First half clusters at the origin, second half is far away.
        let mut rows = vec![vec![0.0, 0.0]; 10];
        rows.extend(vec![vec![1e6, 0.0]; 10]);
        let s = Sample::from_rows(&rows, 1.0).unwrap();
        let cfg = EstimatorConfig::desk(0.1, 20, 2).unwrap();
        assert!(matches!(estimate_mean(&s, &cfg), Err(Error::EmptyAfterPrune { .. })));
    }

    #[test]
    fn gaussian_accuracy_against_sample_mean() {
        let (n, d) = (2000, 4);
        let mu = [1.0, -2.0, 0.5, 3.0];
        let cfg = EstimatorConfig::desk(0.05, n, d).unwrap();
        for seed in 0..3 {
            let s = gaussian_sample(n, d, &mu, seed);
            let est = estimate_mean(&s, &cfg).unwrap();
            let err = linalg::dist(&est.mean, &mu);
            let base = linalg::dist(&s.points.mean(), &mu) + (d as f64 / n as f64).sqrt();
            assert!(err <= 5.0 * base, "seed {seed}: {err} vs {base}");
            assert_eq!(est.bucket_count, cfg.bucket_count(n - n / 2 - est.pruned_count));
        }
    }

    #[test]
    fn deterministic_and_nearly_translation_equivariant() {
        let (n, d) = (400, 3);
        let cfg = EstimatorConfig::desk(0.1, n, d).unwrap();
        let s = gaussian_sample(n, d, &[0.0; 3], 7);
        let a = estimate_mean(&s, &cfg).unwrap();
        assert_eq!(a, estimate_mean(&s, &cfg).unwrap());
        let c = [100.0, -50.0, 3.0];
        let shifted = s.with_points(s.points.translated(&c));
        let b = estimate_mean(&shifted, &cfg).unwrap();
        let back = linalg::sub(&b.mean, &c);
        assert!(linalg::dist(&back, &a.mean) <= 1e-6, "{back:?} vs {:?}", a.mean);
    }

    #[test]
    fn trace_is_in_original_coordinates() {
        let (n, d) = (200, 2);
        let cfg = EstimatorConfig::desk(0.1, n, d).unwrap();
        let s = gaussian_sample(n, d, &[5.0, 5.0], 3);
        let (est, trace) = estimate_mean_with_trace(&s, &cfg).unwrap();
        assert_eq!(trace.iterates[0], est.initial_point);
        assert_eq!(trace.iterates[trace.best_index], est.mean);
        assert_eq!(trace.iterates.len(), est.iterations_used + 1);
    }
}
