//! Test distributions, hard-instance constructions, the corruption model and
//! an empirical weak-moment certifier.

mod continuous;
mod corruption;
mod discrete;
mod families;
mod moment;

pub use continuous::{gaussian_abs_moment, student_t_abs_moment, Gaussian, StudentT, SymmetricPareto};
pub use corruption::{corrupt, corruption_count, Adversary, CorruptionModel};
pub use discrete::DiscreteDistribution;
pub use families::{
    confidence_surrogate, corruption_pair, lower_bound_family, spike_magnitude, spike_mean_entry, DistributionPair,
};
pub use moment::{check_weak_moment, DirectionalMoment, WeakMomentCheck};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::{Points, Sample};

/// A distribution that can be sampled, together with the weak-moment
/// exponent it is certified for.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Distribution {
    Discrete { dist: DiscreteDistribution, alpha: f64 },
    StudentT(StudentT),
    Pareto(SymmetricPareto),
    Gaussian(Gaussian),
}

impl Distribution {
    pub fn dim(&self) -> usize {
        match self {
            Distribution::Discrete { dist, .. } => dist.dim(),
            Distribution::StudentT(t) => t.d,
            Distribution::Pareto(p) => p.d,
            Distribution::Gaussian(g) => g.d,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Distribution::Discrete { alpha, .. } => *alpha,
            Distribution::StudentT(t) => t.alpha,
            Distribution::Pareto(p) => p.alpha,
            Distribution::Gaussian(g) => g.alpha,
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            Distribution::Discrete { dist, .. } => dist.mean(),
            _ => vec![0.0; self.dim()],
        }
    }

    pub fn sample_points<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Points {
        match self {
            Distribution::Discrete { dist, .. } => dist.sample(n, rng),
            Distribution::StudentT(t) => t.sample(n, rng),
            Distribution::Pareto(p) => p.sample(n, rng),
            Distribution::Gaussian(g) => g.sample(n, rng),
        }
    }
}

impl DirectionalMoment for Distribution {
    fn dim(&self) -> usize {
        Distribution::dim(self)
    }

    /// Exact for the discrete, Student-t and Gaussian families; an upper bound
    /// for the Pareto product.
    fn directional_moment(&self, v: &[f64], alpha: f64) -> f64 {
        match self {
            Distribution::Discrete { dist, .. } => dist.centered_moment(v, 1.0 + alpha),
            Distribution::StudentT(t) => t.directional_moment(v, 1.0 + alpha),
            Distribution::Pareto(p) => p.directional_moment(v, 1.0 + alpha),
            Distribution::Gaussian(g) => g.directional_moment(v, 1.0 + alpha),
        }
    }
}

/// `n` independent draws.
pub fn sample_iid<R: Rng + ?Sized>(dist: &Distribution, n: usize, rng: &mut R) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    Sample::new(dist.sample_points(n, rng), dist.alpha())
}

/// Serialized description of a distribution, as read from configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Discrete {
        atoms: Vec<Vec<f64>>,
        probs: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    StudentT {
        nu: f64,
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    Pareto {
        shape: f64,
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    Gaussian {
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    /// The sparse spike family; `n` defaults to the sample size and `subset`
    /// to the first `d/2` coordinates.
    LowerBound {
        d: usize,
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subset: Option<Vec<usize>>,
    },
}

impl DistributionSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("distribution spec: {e}")))
    }

    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::Discrete { atoms, .. } => atoms.first().map_or(0, Vec::len),
            DistributionSpec::StudentT { d, .. }
            | DistributionSpec::Pareto { d, .. }
            | DistributionSpec::Gaussian { d, .. }
            | DistributionSpec::LowerBound { d, .. } => *d,
        }
    }

    /// Builds the distribution as specified; `n` is the intended sample size.
    pub fn build(&self, n: usize) -> Result<Distribution> {
        match self {
            DistributionSpec::Discrete { atoms, probs, alpha } => Ok(Distribution::Discrete {
                dist: DiscreteDistribution::new(atoms.clone(), probs.clone())?,
                alpha: alpha.unwrap_or(1.0),
            }),
            DistributionSpec::StudentT { nu, d, alpha } => {
                Ok(Distribution::StudentT(StudentT::new(*nu, *d, alpha.unwrap_or(StudentT::default_alpha(*nu)))?))
            }
            DistributionSpec::Pareto { shape, d, alpha } => Ok(Distribution::Pareto(SymmetricPareto::new(
                *shape,
                *d,
                alpha.unwrap_or(SymmetricPareto::default_alpha(*shape)),
            )?)),
            DistributionSpec::Gaussian { d, alpha } => Ok(Distribution::Gaussian(Gaussian::new(*d, alpha.unwrap_or(1.0))?)),
            DistributionSpec::LowerBound { d, alpha, n: fixed_n, subset } => {
                let s = subset.clone().unwrap_or_else(|| (0..d / 2).collect());
                Ok(Distribution::Discrete { dist: lower_bound_family(*d, &s, fixed_n.unwrap_or(n), *alpha)?, alpha: *alpha })
            }
        }
    }

    /// The same family at another dimension and exponent. Discrete specs keep
    /// their atoms, so `d` must match.
    pub fn at(&self, d: usize, alpha: f64) -> Result<Self> {
        let mut out = self.clone();
        match &mut out {
            DistributionSpec::Discrete { atoms, alpha: a, .. } => {
                if atoms.first().map_or(0, Vec::len) != d {
                    return Err(Error::Domain(format!("discrete spec has dimension {} but {d} was requested", self.dim())));
                }
                *a = Some(alpha);
            }
            DistributionSpec::StudentT { d: dd, alpha: a, .. }
            | DistributionSpec::Pareto { d: dd, alpha: a, .. }
            | DistributionSpec::Gaussian { d: dd, alpha: a } => {
                *dd = d;
                *a = Some(alpha);
            }
            DistributionSpec::LowerBound { d: dd, alpha: a, subset, .. } => {
                if *dd != d {
                    *subset = None;
                }
                *dd = d;
                *a = alpha;
            }
        }
        Ok(out)
    }
}
