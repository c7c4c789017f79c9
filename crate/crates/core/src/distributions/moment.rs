//! Search for the worst direction of the `(1 + alpha)` weak moment.

use rand::Rng;
use serde::Serialize;

use super::DiscreteDistribution;
use crate::linalg;
use crate::rng::gaussian;

/// Distributions whose moment along a fixed direction can be evaluated
/// without sampling.
pub trait DirectionalMoment {
    fn dim(&self) -> usize;
    /// `E |<v, X - mu>|^(1+alpha)`.
    fn directional_moment(&self, v: &[f64], alpha: f64) -> f64;
}

impl DirectionalMoment for DiscreteDistribution {
    fn dim(&self) -> usize {
        DiscreteDistribution::dim(self)
    }

    fn directional_moment(&self, v: &[f64], alpha: f64) -> f64 {
        self.centered_moment(v, 1.0 + alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakMomentCheck {
    /// Attained at `direction`, so a lower bound on the supremum.
    pub value: f64,
    pub direction: Vec<f64>,
}

const SWEEPS: usize = 50;

/// Best of `trials` random unit directions, refined by coordinate ascent with
/// step halving.
pub fn check_weak_moment<D, R>(dist: &D, alpha: f64, trials: usize, rng: &mut R) -> WeakMomentCheck
where
    D: DirectionalMoment + ?Sized,
    R: Rng + ?Sized,
{
    let d = dist.dim();
    let eval = |v: &[f64]| dist.directional_moment(v, alpha);
    let mut best = linalg::unit(d, 0);
    let mut best_value = eval(&best);
    for _ in 0..trials.max(1) {
        let g: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        if let Some(v) = linalg::normalized(&g) {
            let value = eval(&v);
            if value > best_value {
                best_value = value;
                best = v;
            }
        }
    }
    let mut step = 0.5;
    for _ in 0..SWEEPS {
        let mut improved = false;
        for j in 0..d {
            for sign in [1.0, -1.0] {
                let mut cand = best.clone();
                cand[j] += sign * step;
                let Some(cand) = linalg::normalized(&cand) else { continue };
                let value = eval(&cand);
                if value > best_value {
                    best_value = value;
                    best = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    WeakMomentCheck { value: best_value, direction: best }
}
