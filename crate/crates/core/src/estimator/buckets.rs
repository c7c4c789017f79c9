//! Splitting a sample into contiguous buckets and averaging each.

use serde::Serialize;

use crate::config::EstimatorConfig;
use crate::error::{Error, Result};
use crate::points::{Points, Sample};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketSet {
    #[serde(skip)]
    pub means: Points,
    pub bucket_sizes: Vec<usize>,
    pub source_count: usize,
}

impl BucketSet {
    pub fn k(&self) -> usize {
        self.bucket_sizes.len()
    }
}

/// Sizes of `k` contiguous buckets over `m` points: `floor(m/k)` each, plus
/// one extra for the first `m mod k`.
pub fn bucket_sizes(m: usize, k: usize) -> Vec<usize> {
    let (base, extra) = (m / k, m % k);
    (0..k).map(|i| base + usize::from(i < extra)).collect()
}

pub fn bucket_means(sample: &Sample, cfg: &EstimatorConfig) -> Result<BucketSet> {
    if sample.is_empty() {
        return Err(Error::EmptySample("cannot form buckets from an empty sample".into()));
    }
    let m = sample.len();
    let k = cfg.bucket_count(m);
    let sizes = bucket_sizes(m, k);
    let mut means = Points::new(sample.dim());
    let mut start = 0;
    for &s in &sizes {
        means.push(&sample.points.slice(start, start + s).mean());
        start += s;
    }
    Ok(BucketSet { means, bucket_sizes: sizes, source_count: m })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_with_k(k: f64) -> EstimatorConfig {
        // delta = 1/e makes ln(1/delta) = 1, so the bucket constant is k.
        EstimatorConfig { bucket_constant: k, ..EstimatorConfig::paper((-1.0f64).exp()).unwrap() }
    }

    #[test]
    fn remainder_goes_to_first_buckets() {
        assert_eq!(bucket_sizes(10, 3), vec![4, 3, 3]);
        assert_eq!(bucket_sizes(9, 3), vec![3, 3, 3]);
        assert_eq!(bucket_sizes(11, 4), vec![3, 3, 3, 2]);
    }

    #[test]
    fn constant_points() {
        let s = Sample::new(Points::repeat(&[2.0, -1.0], 8), 1.0).unwrap();
        let b = bucket_means(&s, &cfg_with_k(4.0)).unwrap();
        assert_eq!(b.k(), 4);
        assert!(b.means.rows().all(|z| z == [2.0, -1.0]));
        assert_eq!(b.source_count, 8);
    }

    #[test]
    fn scalar_halves() {
        let rows: Vec<Vec<f64>> = (1..=6).map(|v| vec![v as f64]).collect();
        let s = Sample::from_rows(&rows, 1.0).unwrap();
        let b = bucket_means(&s, &cfg_with_k(2.0)).unwrap();
        assert_eq!(b.means.to_rows(), vec![vec![2.0], vec![5.0]]);
    }

    #[test]
    fn clamped_to_half_the_points() {
        let rows: Vec<Vec<f64>> = (0..7).map(|v| vec![v as f64]).collect();
        let s = Sample::from_rows(&rows, 1.0).unwrap();
        let b = bucket_means(&s, &cfg_with_k(4000.0)).unwrap();
        assert_eq!(b.bucket_sizes, vec![3, 2, 2]);
        let one = Sample::from_rows(&[vec![1.0]], 1.0).unwrap();
        assert_eq!(bucket_means(&one, &cfg_with_k(50.0)).unwrap().bucket_sizes, vec![1]);
    }
}
