//! Hard-instance constructions: the sparse spike family, the two-point
//! corruption pair and a one-dimensional confidence surrogate.

use serde::Serialize;

use super::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::linalg;

/// Length of every spike of the sparse family.
pub fn spike_magnitude(n: usize, d: usize, alpha: f64) -> f64 {
    let (n, d) = (n as f64, d as f64);
    n.powf(1.0 / (1.0 + alpha)) * d.powf(-(1.0 - alpha) / (2.0 * (1.0 + alpha)))
}

/// Closed-form mean entry on the spiked coordinates.
pub fn spike_mean_entry(n: usize, d: usize, alpha: f64) -> f64 {
    let (n, d) = (n as f64, d as f64);
    n.powf(-alpha / (1.0 + alpha)) * d.powf(-(1.0 - alpha) / (2.0 * (1.0 + alpha))) / 4.0
}

/// Mass `1 - d/(8n)` at the origin and `1/(4n)` on a spike along `e_i` for
/// every `i` in `s` (0-based, `|s| = d/2`).
pub fn lower_bound_family(d: usize, s: &[usize], n: usize, alpha: f64) -> Result<DiscreteDistribution> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::Domain(format!("d must be positive and even, got {d}")));
    }
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside [0, 1]")));
    }
    let mut sorted = s.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != d / 2 || s.len() != d / 2 || sorted.iter().any(|&i| i >= d) {
        return Err(Error::Domain(format!("S must hold d/2 = {} distinct coordinates below {d}", d / 2)));
    }
    if d > 8 * n {
        return Err(Error::MassOverflow { d, n });
    }
    let m = spike_magnitude(n, d, alpha);
    let spike_mass = 1.0 / (4.0 * n as f64);
    let mut atoms = vec![vec![0.0; d]];
    let mut probs = vec![1.0 - d as f64 / (8.0 * n as f64)];
    for &i in s {
        atoms.push(linalg::scale(&linalg::unit(d, i), m));
        probs.push(spike_mass);
    }
    DiscreteDistribution::new(atoms, probs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionPair {
    pub first: DiscreteDistribution,
    pub second: DiscreteDistribution,
    pub first_mean: f64,
    pub second_mean: f64,
}

impl DistributionPair {
    pub fn tv_distance(&self) -> f64 {
        self.first.tv_distance(&self.second)
    }

    pub fn mean_gap(&self) -> f64 {
        (self.first_mean - self.second_mean).abs()
    }
}

fn one_dim_pair(spike_mass: f64, position: f64) -> Result<DistributionPair> {
    let first = DiscreteDistribution::point_mass(&[0.0])?;
    let second = DiscreteDistribution::new(vec![vec![0.0], vec![position]], vec![1.0 - spike_mass, spike_mass])?;
    let second_mean = second.mean()[0];
    Ok(DistributionPair { first, second, first_mean: 0.0, second_mean })
}

/// A point mass at 0 and its contamination that moves `eta/4` of the mass to
/// `(1/eta)^(1/(1+alpha))`. `alpha = 1` is accepted as the continuous limit.
pub fn corruption_pair(eta: f64, alpha: f64) -> Result<DistributionPair> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("eta must lie in (0, 1), got {eta}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    one_dim_pair(eta / 4.0, (1.0 / eta).powf(1.0 / (1.0 + alpha)))
}

/// Surrogate for the one-dimensional confidence lower bound: mass
/// `p = ln(2/delta)/n` at `s * (1/p)^(1/(1+alpha))`, the rest at 0, paired with
/// the point mass at 0. The scale `s <= 1` is the largest that keeps the
/// centered `(1+alpha)`-moment at most 1, so the mean gap is `s * p^(alpha/(1+alpha))`.
pub fn confidence_surrogate(n: usize, delta: f64, alpha: f64) -> Result<DistributionPair> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} is outside [0, 1]")));
    }
    let p = (2.0 / delta).ln() / n as f64;
    if !(p < 1.0) {
        return Err(Error::Domain(format!("ln(2/delta)/n = {p} must be below 1")));
    }
    // Centered moment of the unscaled pair is (1-p) * ((1-p)^alpha + p^alpha).
    let moment = (1.0 - p) * ((1.0 - p).powf(alpha) + p.powf(alpha));
    let s = moment.powf(-1.0 / (1.0 + alpha)).min(1.0);
    one_dim_pair(p, s * (1.0 / p).powf(1.0 / (1.0 + alpha)))
}
