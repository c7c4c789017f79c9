//! Row-major point storage shared by samples and bucket means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered list of `len` points in `dim` dimensions, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize) -> Self {
        Points { dim, data: Vec::new() }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| Error::EmptySample("no rows".into()))?;
        if dim == 0 {
            return Err(Error::InvalidSample("points must have dimension >= 1".into()));
        }
        let mut data = Vec::with_capacity(dim * rows.len());
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::InvalidSample(format!(
                    "row {i} has dimension {} but row 0 has {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Points { dim, data })
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::InvalidSample(format!(
                "flat buffer of length {} is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        Ok(Points { dim, data })
    }

    /// `n` copies of `p`.
    pub fn repeat(p: &[f64], n: usize) -> Self {
        Points { dim: p.len(), data: p.repeat(n) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn push(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.dim, "dimension mismatch");
        self.data.extend_from_slice(p);
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// Contiguous rows `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Points {
        Points { dim: self.dim, data: self.data[start * self.dim..end * self.dim].to_vec() }
    }

    pub fn select(&self, keep: impl Fn(&[f64]) -> bool) -> Points {
        let mut out = Points::new(self.dim);
        for r in self.rows().filter(|r| keep(r)) {
            out.push(r);
        }
        out
    }

    pub fn translated(&self, c: &[f64]) -> Points {
        assert_eq!(c.len(), self.dim);
        let mut out = self.clone();
        for row in out.data.chunks_exact_mut(self.dim) {
            for (a, b) in row.iter_mut().zip(c) {
                *a += b;
            }
        }
        out
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }
}

/// A data sample together with the weak-moment exponent it is assumed to satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub points: Points,
    alpha: f64,
}

impl Sample {
    pub fn new(points: Points, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidSample(format!("alpha = {alpha} is outside [0, 1]")));
        }
        if points.dim() == 0 {
            return Err(Error::InvalidSample("dimension must be >= 1".into()));
        }
        if points.as_flat().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample("non-finite coordinate".into()));
        }
        Ok(Sample { points, alpha })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], alpha: f64) -> Result<Self> {
        Sample::new(Points::from_rows(rows)?, alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn with_points(&self, points: Points) -> Sample {
        Sample { points, alpha: self.alpha }
    }
}

/// Output of the full estimation pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: Vec<f64>,
    pub initial_point: Vec<f64>,
    pub pruned_count: usize,
    pub bucket_count: usize,
    pub iterations_used: usize,
    pub final_distance_estimate: f64,
}
