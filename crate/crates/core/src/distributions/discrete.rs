//! Finitely supported distributions on R^d.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::points::Points;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    atoms: Vec<Vec<f64>>,
    probabilities: Vec<f64>,
}

impl DiscreteDistribution {
    /// Probabilities must be nonnegative and sum to 1 within 1e-12.
    pub fn new(atoms: Vec<Vec<f64>>, probabilities: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != probabilities.len() {
            return Err(Error::Domain(format!(
                "need matching nonempty atoms and probabilities ({} vs {})",
                atoms.len(),
                probabilities.len()
            )));
        }
        let d = atoms[0].len();
        if d == 0 || atoms.iter().any(|a| a.len() != d) {
            return Err(Error::Domain("atoms must share a positive dimension".into()));
        }
        if atoms.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("atoms must be finite".into()));
        }
        if probabilities.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Domain("probabilities must be nonnegative".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(DiscreteDistribution { atoms, probabilities })
    }

    pub fn point_mass(p: &[f64]) -> Result<Self> {
        Self::new(vec![p.to_vec()], vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim()];
        for (a, &p) in self.atoms.iter().zip(&self.probabilities) {
            for (mi, ai) in m.iter_mut().zip(a) {
                *mi += p * ai;
            }
        }
        m
    }

    /// `E |<v, X - mu>|^p` as a finite sum.
    pub fn centered_moment(&self, v: &[f64], p: f64) -> f64 {
        let c = linalg::dot(v, &self.mean());
        self.atoms
            .iter()
            .zip(&self.probabilities)
            .map(|(a, &w)| w * (linalg::dot(v, a) - c).abs().powf(p))
            .sum()
    }

    /// `E ||X - mu||^p` as a finite sum.
    pub fn centered_norm_moment(&self, p: f64) -> f64 {
        let mu = self.mean();
        self.atoms
            .iter()
            .zip(&self.probabilities)
            .map(|(a, &w)| w * linalg::dist(a, &mu).powf(p))
            .sum()
    }

    /// Total variation distance; atoms are identified only when exactly equal.
    pub fn tv_distance(&self, other: &DiscreteDistribution) -> f64 {
        let mut support: Vec<&Vec<f64>> = Vec::new();
        for a in self.atoms.iter().chain(&other.atoms) {
            if !support.contains(&a) {
                support.push(a);
            }
        }
        0.5 * support.iter().map(|a| (self.mass_at(a) - other.mass_at(a)).abs()).sum::<f64>()
    }

    fn mass_at(&self, x: &[f64]) -> f64 {
        self.atoms.iter().zip(&self.probabilities).filter(|(a, _)| a.as_slice() == x).map(|(_, p)| p).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Points {
        let index = WeightedIndex::new(&self.probabilities).expect("probabilities validated at construction");
        let mut out = Points::new(self.dim());
        for _ in 0..n {
            out.push(&self.atoms[index.sample(rng)]);
        }
        out
    }
}
