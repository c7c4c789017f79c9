//! The estimators the harness can run, including the reference baselines.

use serde::{Deserialize, Serialize};

use crate::config::{EstimatorConfig, Profile};
use crate::error::Result;
use crate::estimator::{bucket_means, estimate_mean};
use crate::linalg;
use crate::points::{Points, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// The full pruning, bucketing and descent pipeline.
    Paper,
    SampleMean,
    /// Per-coordinate median of the bucket means.
    CoordinateMedianOfMeans,
    /// Geometric median (Weiszfeld) of the bucket means.
    GeometricMedianOfMeans,
    /// Always answers the origin. Useful as an "any estimator" control.
    Zero,
}

impl EstimatorKind {
    pub const BUILT_IN: [EstimatorKind; 4] = [
        EstimatorKind::Paper,
        EstimatorKind::SampleMean,
        EstimatorKind::CoordinateMedianOfMeans,
        EstimatorKind::GeometricMedianOfMeans,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Paper => "paper",
            EstimatorKind::SampleMean => "sample_mean",
            EstimatorKind::CoordinateMedianOfMeans => "coordinate_median_of_means",
            EstimatorKind::GeometricMedianOfMeans => "geometric_median_of_means",
            EstimatorKind::Zero => "zero",
        }
    }

    /// Baselines bucket the whole sample with the same `k` rule as the pipeline.
    pub fn estimate(self, sample: &Sample, cfg: &EstimatorConfig) -> Result<Vec<f64>> {
        match self {
            EstimatorKind::Paper => Ok(estimate_mean(sample, cfg)?.mean),
            EstimatorKind::SampleMean => Ok(sample.points.mean()),
            EstimatorKind::CoordinateMedianOfMeans => Ok(coordinate_median(&bucket_means(sample, cfg)?.means)),
            EstimatorKind::GeometricMedianOfMeans => Ok(geometric_median(&bucket_means(sample, cfg)?.means)),
            EstimatorKind::Zero => Ok(vec![0.0; sample.dim()]),
        }
    }
}

/// Estimator configuration for one grid point.
pub fn config_for(profile: Profile, delta: f64, n: usize, d: usize) -> Result<EstimatorConfig> {
    match profile {
        Profile::Desk => EstimatorConfig::desk(delta, n, d),
        Profile::Paper => EstimatorConfig::paper(delta),
    }
}

/// Median of each coordinate; the mean of the two middle values for even counts.
pub fn coordinate_median(points: &Points) -> Vec<f64> {
    let n = points.len();
    (0..points.dim())
        .map(|j| {
            let mut col: Vec<f64> = points.rows().map(|r| r[j]).collect();
            col.sort_by(f64::total_cmp);
            if n % 2 == 1 {
                col[n / 2]
            } else {
                0.5 * (col[n / 2 - 1] + col[n / 2])
            }
        })
        .collect()
}

const WEISZFELD_ITERATIONS: usize = 1000;
const WEISZFELD_TOLERANCE: f64 = 1e-10;

/// Weiszfeld iteration from the coordinate median. A point of the input that
/// the iterate lands on is returned if it is itself optimal.
pub fn geometric_median(points: &Points) -> Vec<f64> {
    let mut y = coordinate_median(points);
    let scale = points.rows().map(|r| linalg::dist(r, &y)).fold(0.0, f64::max).max(1.0);
    for _ in 0..WEISZFELD_ITERATIONS {
        let mut num = vec![0.0; points.dim()];
        let mut den = 0.0;
        let mut pull = vec![0.0; points.dim()];
        let mut at_point = 0usize;
        for r in points.rows() {
            let dist = linalg::dist(r, &y);
            if dist <= 1e-14 * scale {
                at_point += 1;
                continue;
            }
            for ((nj, pj), (rj, yj)) in num.iter_mut().zip(pull.iter_mut()).zip(r.iter().zip(&y)) {
                *nj += rj / dist;
                *pj += (rj - yj) / dist;
            }
            den += 1.0 / dist;
        }
        if den == 0.0 {
            break;
        }
        // Optimality at a data point: the pull of the others is at most its multiplicity.
        if at_point > 0 && linalg::norm(&pull) <= at_point as f64 {
            break;
        }
        let next: Vec<f64> = num.iter().map(|v| v / den).collect();
        let step = linalg::dist(&next, &y);
        y = next;
        if step <= WEISZFELD_TOLERANCE * scale {
            break;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_median_even_and_odd() {
        let p = Points::from_rows(&[[1.0, 5.0], [3.0, -1.0], [2.0, 0.0]]).unwrap();
        assert_eq!(coordinate_median(&p), vec![2.0, 0.0]);
        let q = Points::from_rows(&[[1.0], [4.0], [2.0], [10.0]]).unwrap();
        assert_eq!(coordinate_median(&q), vec![3.0]);
    }

    #[test]
    fn geometric_median_of_a_square_is_its_center() {
        let p = Points::from_rows(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]]).unwrap();
        let m = geometric_median(&p);
        assert!(linalg::dist(&m, &[1.0, 1.0]) < 1e-8);
    }

    #[test]
    fn geometric_median_resists_an_outlier() {
        let p = Points::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1e6, 1e6]]).unwrap();
        let m = geometric_median(&p);
        assert!(linalg::norm(&m) < 2.0, "{m:?}");
        // Three points at a triangle's vertex with weight: the vertex is optimal.
        let t = Points::from_rows(&[[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(geometric_median(&t), vec![0.0, 0.0]);
    }

    #[test]
    fn every_estimator_is_exact_on_a_point_mass() {
        let s = Sample::new(Points::repeat(&[1.5, -0.5], 40), 1.0).unwrap();
        let cfg = EstimatorConfig::desk(0.1, 40, 2).unwrap();
        for kind in EstimatorKind::BUILT_IN {
            assert_eq!(kind.estimate(&s, &cfg).unwrap(), vec![1.5, -0.5], "{}", kind.name());
        }
    }
}
