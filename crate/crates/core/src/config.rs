//! Estimator and solver configuration with paper-faithful and desk-scale profiles.
//!
//! Both profiles evaluate the same formulas; they differ only in the constant
//! factors. The formula identifiers are recorded in [`Formulas`] so that this
//! can be checked mechanically.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Paper,
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub primal_tolerance: f64,
    pub dual_tolerance: f64,
    /// Absolute slack on the optimal value, in units of `k`.
    pub value_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 20_000,
            primal_tolerance: 1e-6,
            dual_tolerance: 1e-6,
            value_tolerance: 1e-3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("solver.max_iterations must be positive".into()));
        }
        for (name, v) in [
            ("primal_tolerance", self.primal_tolerance),
            ("dual_tolerance", self.dual_tolerance),
            ("value_tolerance", self.value_tolerance),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("solver.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Symbolic identifiers of the formulas each profile evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Formulas {
    pub bucket_count: &'static str,
    pub prune_radius: &'static str,
    pub iteration_count: &'static str,
    pub step: &'static str,
}

pub const FORMULAS: Formulas = Formulas {
    bucket_count: "k = clamp(ceil(c_k * ln(1/delta)), 1, floor(m/2))",
    prune_radius: "tau = c_p * max(n^(1/(1+a)) * d^(-(1-a)/(2(1+a))), sqrt(d))",
    iteration_count: "T = min(cap, ceil(c_T * ln(d*n)))",
    step: "x <- x + s * dist * g",
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub profile: Profile,
    pub delta: f64,
    pub bucket_constant: f64,
    pub prune_constant: f64,
    pub sdp_threshold_high: f64,
    pub sdp_threshold_low: f64,
    pub step_factor: f64,
    pub iteration_constant: f64,
    pub iteration_cap: usize,
    pub solver: SolverConfig,
    pub seed: u64,
    #[serde(skip)]
    pub formulas: Formulas,
}

pub const PAPER_BUCKET_CONSTANT: f64 = 4000.0;
pub const PAPER_PRUNE_CONSTANT: f64 = 100.0;
pub const PAPER_ITERATION_CONSTANT: f64 = 1e6;
pub const DESK_BUCKET_CONSTANT: f64 = 10.0;
pub const DESK_PRUNE_CONSTANT: f64 = 3.0;
pub const DESK_ITERATION_CAP: usize = 60;

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("delta must lie in (0, 1), got {delta}")))
    }
}

impl EstimatorConfig {
    /// Constants exactly as analysed; the iteration count is not capped.
    pub fn paper(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(EstimatorConfig {
            profile: Profile::Paper,
            delta,
            bucket_constant: PAPER_BUCKET_CONSTANT,
            prune_constant: PAPER_PRUNE_CONSTANT,
            sdp_threshold_high: 0.9,
            sdp_threshold_low: 0.05,
            step_factor: 1.0 / 20.0,
            iteration_constant: PAPER_ITERATION_CONSTANT,
            iteration_cap: usize::MAX,
            solver: SolverConfig::default(),
            seed: 0,
            formulas: FORMULAS,
        })
    }

    /// Desk-scale constants. The bucket constant is lowered further when needed
    /// so that `k <= n/4`, leaving at least two points per bucket after the
    /// sample is halved.
    pub fn desk(delta: f64, n: usize, d: usize) -> Result<Self> {
        check_delta(delta)?;
        if n < 2 || d < 1 {
            return Err(Error::InvalidConfig(format!("desk profile needs n >= 2 and d >= 1 (n = {n}, d = {d})")));
        }
        let log_inv = (1.0 / delta).ln();
        let quarter = (n / 4).max(1) as f64;
        let mut bucket_constant = DESK_BUCKET_CONSTANT;
        if (bucket_constant * log_inv).ceil() > quarter {
            bucket_constant = quarter / log_inv;
        }
        Ok(EstimatorConfig {
            profile: Profile::Desk,
            bucket_constant,
            prune_constant: DESK_PRUNE_CONSTANT,
            iteration_cap: DESK_ITERATION_CAP,
            ..Self::paper(delta)?
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(self.bucket_constant > 0.0) || !(self.prune_constant > 0.0) {
            return Err(Error::InvalidConfig("bucket_constant and prune_constant must be positive".into()));
        }
        if !(0.0 < self.sdp_threshold_low
            && self.sdp_threshold_low < self.sdp_threshold_high
            && self.sdp_threshold_high < 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "thresholds must satisfy 0 < low < high < 1 (low = {}, high = {})",
                self.sdp_threshold_low, self.sdp_threshold_high
            )));
        }
        if self.sdp_threshold_high <= self.solver.value_tolerance {
            return Err(Error::InvalidConfig(format!(
                "sdp_threshold_high ({}) must exceed solver.value_tolerance ({})",
                self.sdp_threshold_high, self.solver.value_tolerance
            )));
        }
        if !(self.step_factor > 0.0) {
            return Err(Error::InvalidConfig("step_factor must be positive".into()));
        }
        if self.iteration_cap == 0 {
            return Err(Error::InvalidConfig("iteration_cap must be positive".into()));
        }
        self.solver.validate()
    }

    /// `ceil(c_k * ln(1/delta))` before clamping.
    pub fn raw_bucket_count(&self) -> usize {
        ((self.bucket_constant * (1.0 / self.delta).ln()).ceil() as usize).max(1)
    }

    /// Bucket count for `m` surviving points, clamped to `[1, floor(m/2)]`.
    pub fn bucket_count(&self, m: usize) -> usize {
        self.raw_bucket_count().clamp(1, (m / 2).max(1))
    }

    pub fn prune_radius(&self, n: usize, d: usize, alpha: f64) -> f64 {
        let n = n as f64;
        let d = d as f64;
        let heavy = n.powf(1.0 / (1.0 + alpha)) * d.powf(-(1.0 - alpha) / (2.0 * (1.0 + alpha)));
        self.prune_constant * heavy.max(d.sqrt())
    }

    /// Under `Profile::Paper` the bucket count must not be clamped: the
    /// `floor(m/2)` clamp would silently change the analysed constant. `n` is
    /// the full sample size; `m` is the size of the pruned half, at most
    /// `n - floor(n/2)`. The desk profile accepts the clamp.
    pub fn check_bucket_clamp(&self, n: usize) -> Result<()> {
        let m = n - n / 2;
        let k = self.raw_bucket_count();
        if self.profile == Profile::Paper && k > m / 2 {
            return Err(Error::InvalidConfig(format!(
                "paper profile: k = ceil(bucket_constant * ln(1/delta)) = {k} exceeds the clamp \
                 floor(m/2) = {} for the second half of size m = {m}; the clamp k <= floor(m/2) \
                 would alter the analysed bucket constant (need n >= {}, or use the desk profile)",
                m / 2,
                4 * k
            )));
        }
        Ok(())
    }

    pub fn iteration_count(&self, n: usize, d: usize) -> usize {
        let t = (self.iteration_constant * ((d * n) as f64).ln()).ceil();
        let t = if t.is_finite() && t >= 1.0 { t as usize } else { 1 };
        t.min(self.iteration_cap).max(1)
    }
}

/// Shorthand for [`EstimatorConfig::desk`].
pub fn desk_profile(delta: f64, n: usize, d: usize) -> Result<EstimatorConfig> {
    EstimatorConfig::desk(delta, n, d)
}
