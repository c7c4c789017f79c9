//! Adversarial replacement of a fraction of the sample.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::points::Sample;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adversary {
    /// Moves the chosen points onto the target.
    ReplaceWithPoint,
    /// Reflects the chosen points through the target: `X -> 2 t - X`.
    MirrorAboutEstimate,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionModel {
    pub eta: f64,
    pub adversary: Adversary,
}

impl CorruptionModel {
    pub fn new(eta: f64, adversary: Adversary) -> Result<Self> {
        if !(0.0..1.0).contains(&eta) {
            return Err(Error::Domain(format!("eta must lie in [0, 1), got {eta}")));
        }
        Ok(CorruptionModel { eta, adversary })
    }
}

/// `ceil(eta * n)`, ignoring rounding noise just above an integer.
pub fn corruption_count(eta: f64, n: usize) -> usize {
    (linalg::ceil_near(eta * n as f64).max(0.0) as usize).min(n)
}

pub fn corrupt<R: Rng + ?Sized>(sample: &Sample, model: &CorruptionModel, target: &[f64], rng: &mut R) -> Result<Sample> {
    if target.len() != sample.dim() {
        return Err(Error::InvalidSample(format!(
            "target has dimension {} but the sample has dimension {}",
            target.len(),
            sample.dim()
        )));
    }
    let count = corruption_count(model.eta, sample.len());
    if count == 0 || model.adversary == Adversary::None {
        return Ok(sample.clone());
    }
    let mut points = sample.points.clone();
    for i in rng::subset(sample.len(), count, rng) {
        let row = points.row_mut(i);
        for (x, t) in row.iter_mut().zip(target) {
            *x = match model.adversary {
                Adversary::ReplaceWithPoint => *t,
                Adversary::MirrorAboutEstimate => 2.0 * t - *x,
                Adversary::None => *x,
            };
        }
    }
    Sample::new(points, sample.alpha())
}
