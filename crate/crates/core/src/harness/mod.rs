//! Monte Carlo experiments: error quantiles over trial grids, exponent fits,
//! the minimax failure experiment and the numerical verification suites.

mod estimators;
mod fit;
mod output;
pub mod verify;

pub use estimators::{config_for, coordinate_median, geometric_median, EstimatorKind};
pub use fit::{fit_exponent, Axis, ScalingFit};
pub use output::{reports_csv, reports_json, BenchmarkSummary};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EstimatorConfig, Profile};
use crate::distributions::{corrupt, lower_bound_family, sample_iid, Adversary, CorruptionModel, Distribution, DistributionSpec};
use crate::error::{Error, Result};
use crate::json::real;
use crate::linalg;
use crate::rng::{self, make_rng, split_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub delta: f64,
    #[serde(default)]
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessOptions {
    pub profile: Profile,
    /// Overrides the profile's iteration cap when set.
    pub iteration_cap: Option<usize>,
    /// Record per-trial wall time. Off by default because timings are not reproducible.
    pub timing: bool,
    pub adversary: Adversary,
    /// Corrupted points are placed relative to `mu + corruption_offset * e_1`.
    pub corruption_offset: f64,
    /// Radius for the failure frequency; defaults to `(1/24) (d/n)^(alpha/(1+alpha))`.
    pub failure_radius: Option<f64>,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        HarnessOptions {
            profile: Profile::Desk,
            iteration_cap: None,
            timing: false,
            adversary: Adversary::ReplaceWithPoint,
            corruption_offset: 10.0,
            failure_radius: None,
        }
    }
}

impl HarnessOptions {
    pub fn config(&self, point: &GridPoint) -> Result<EstimatorConfig> {
        let mut cfg = config_for(self.profile, point.delta, point.n, point.d)?;
        if let Some(cap) = self.iteration_cap {
            cfg.iteration_cap = cap;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `(1/24) (d/n)^(alpha/(1+alpha))`.
pub fn minimax_radius(n: usize, d: usize, alpha: f64) -> f64 {
    (d as f64 / n as f64).powf(alpha / (1.0 + alpha)) / 24.0
}

/// Order statistic at the 1-based index `ceil((1 - delta) * trials)`.
pub fn error_quantile(errors: &[f64], delta: f64) -> f64 {
    if errors.is_empty() {
        return f64::NAN;
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = (linalg::ceil_near((1.0 - delta) * errors.len() as f64) as usize).clamp(1, errors.len());
    sorted[idx - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub estimator: EstimatorKind,
    pub distribution: String,
    pub point: GridPoint,
    pub trials: usize,
    /// `||x_hat - mu||` per trial; estimator failures are recorded as infinity.
    #[serde(skip)]
    pub errors: Vec<f64>,
    #[serde(skip)]
    pub failure_messages: Vec<Option<String>>,
    #[serde(skip)]
    pub wall_times: Option<Vec<f64>>,
    #[serde(with = "real")]
    pub quantile: f64,
    #[serde(with = "real")]
    pub failure_radius: f64,
    #[serde(with = "real")]
    pub failure_frequency: f64,
    pub estimator_failures: usize,
    #[serde(serialize_with = "opt_real")]
    pub mean_wall_time: Option<f64>,
}

fn opt_real<S: serde::Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => real::serialize(v, s),
        None => s.serialize_none(),
    }
}

impl TrialReport {
    fn new(
        estimator: EstimatorKind,
        distribution: String,
        point: GridPoint,
        outcomes: Vec<(std::result::Result<f64, String>, f64)>,
        radius: f64,
        timing: bool,
    ) -> Self {
        let trials = outcomes.len();
        let errors: Vec<f64> = outcomes.iter().map(|(o, _)| *o.as_ref().unwrap_or(&f64::INFINITY)).collect();
        let failure_messages: Vec<Option<String>> = outcomes.iter().map(|(o, _)| o.as_ref().err().cloned()).collect();
        let wall_times = timing.then(|| outcomes.iter().map(|(_, t)| *t).collect::<Vec<f64>>());
        let failures = errors.iter().filter(|&&e| e >= radius).count();
        TrialReport {
            estimator,
            distribution,
            point,
            trials,
            quantile: error_quantile(&errors, point.delta),
            failure_radius: radius,
            failure_frequency: failures as f64 / trials as f64,
            estimator_failures: failure_messages.iter().filter(|m| m.is_some()).count(),
            mean_wall_time: wall_times.as_ref().map(|w| w.iter().sum::<f64>() / trials as f64),
            errors,
            failure_messages,
            wall_times,
        }
    }
}

fn spec_label(spec: &DistributionSpec) -> String {
    match spec {
        DistributionSpec::Discrete { .. } => "discrete".into(),
        DistributionSpec::StudentT { nu, .. } => format!("student_t(nu={nu})"),
        DistributionSpec::Pareto { shape, .. } => format!("pareto(shape={shape})"),
        DistributionSpec::Gaussian { .. } => "gaussian".into(),
        DistributionSpec::LowerBound { .. } => "lower_bound".into(),
    }
}

fn one_trial(
    estimator: EstimatorKind,
    dist: &Distribution,
    point: &GridPoint,
    cfg: &EstimatorConfig,
    opts: &HarnessOptions,
    seed: u64,
) -> (std::result::Result<f64, String>, f64) {
    let start = opts.timing.then(Instant::now);
    let mut rng = make_rng(seed);
    let mu = dist.mean();
    let mut run = || -> Result<f64> {
        let mut sample = sample_iid(dist, point.n, &mut rng)?;
        if point.eta > 0.0 {
            let model = CorruptionModel::new(point.eta, opts.adversary)?;
            let mut target = mu.clone();
            target[0] += opts.corruption_offset;
            sample = corrupt(&sample, &model, &target, &mut rng)?;
        }
        let est = estimator.estimate(&sample, cfg)?;
        Ok(linalg::dist(&est, &mu))
    };
    let outcome = run().map_err(|e| e.to_string());
    (outcome, start.map_or(0.0, |s| s.elapsed().as_secs_f64()))
}

/// Runs `trials` independent trials at every grid point. Trial `t` of grid
/// point `g` uses the seed `split_seed(split_seed(seed, g), t)`, so results do
/// not depend on the worker count.
pub fn run_grid(
    estimator: EstimatorKind,
    spec: &DistributionSpec,
    grid: &[GridPoint],
    trials: usize,
    seed: u64,
    opts: &HarnessOptions,
) -> Result<Vec<TrialReport>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    grid.iter()
        .enumerate()
        .map(|(g, point)| {
            let dist = spec.at(point.d, point.alpha)?.build(point.n)?;
            let cfg = opts.config(point)?;
            let radius = opts.failure_radius.unwrap_or_else(|| minimax_radius(point.n, point.d, point.alpha));
            let point_seed = split_seed(seed, g as u64);
            let outcomes: Vec<_> = (0..trials)
                .into_par_iter()
                .map(|t| one_trial(estimator, &dist, point, &cfg, opts, split_seed(point_seed, t as u64)))
                .collect();
            Ok(TrialReport::new(estimator, spec_label(spec), *point, outcomes, radius, opts.timing))
        })
        .collect()
}

/// Fraction of trials whose error reaches `(1/24) (d/n)^(alpha/(1+alpha))` when
/// each trial draws a fresh hidden half `S` of the coordinates and `n` points
/// from the spike family. Estimator failures count as misses.
pub fn minimax_failure_experiment(
    n: usize,
    d: usize,
    alpha: f64,
    trials: usize,
    estimator: EstimatorKind,
    seed: u64,
    opts: &HarnessOptions,
) -> Result<f64> {
    Ok(minimax_trials(n, d, alpha, trials, estimator, seed, opts)?.failure_frequency)
}

/// The same experiment, returning the full report.
pub fn minimax_trials(
    n: usize,
    d: usize,
    alpha: f64,
    trials: usize,
    estimator: EstimatorKind,
    seed: u64,
    opts: &HarnessOptions,
) -> Result<TrialReport> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    // Surface construction errors (odd d, d > 8n) before spawning trials.
    lower_bound_family(d, &(0..d / 2).collect::<Vec<_>>(), n, alpha)?;
    let point = GridPoint { n, d, alpha, delta: 0.1, eta: 0.0 };
    let cfg = opts.config(&point)?;
    let radius = minimax_radius(n, d, alpha);
    let outcomes: Vec<_> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = split_seed(seed, t as u64);
            let s = rng::subset(d, d / 2, &mut make_rng(split_seed(trial_seed, u64::MAX)));
            match lower_bound_family(d, &s, n, alpha) {
                Ok(dist) => one_trial(estimator, &Distribution::Discrete { dist, alpha }, &point, &cfg, opts, trial_seed),
                Err(e) => (Err(e.to_string()), 0.0),
            }
        })
        .collect();
    Ok(TrialReport::new(estimator, "lower_bound(random S)".into(), point, outcomes, radius, opts.timing))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(n: usize, d: usize) -> GridPoint {
        GridPoint { n, d, alpha: 1.0, delta: 0.1, eta: 0.0 }
    }

    #[test]
    fn quantile_order_statistic() {
        let e: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(error_quantile(&e, 0.1), 9.0);
        assert_eq!(error_quantile(&e, 0.5), 5.0);
        assert_eq!(error_quantile(&e, 0.01), 10.0);
        let big: Vec<f64> = (1..=200).map(f64::from).collect();
        assert_eq!(error_quantile(&big, 0.1), 180.0);
        assert_eq!(error_quantile(&[3.0, f64::INFINITY], 0.4), f64::INFINITY);
    }

    #[test]
    fn point_mass_gives_zero_error() {
        let spec = DistributionSpec::Discrete { atoms: vec![vec![2.0, 1.0]], probs: vec![1.0], alpha: None };
        for kind in EstimatorKind::BUILT_IN {
            let r = run_grid(kind, &spec, &[point(40, 2)], 1, 5, &HarnessOptions::default()).unwrap();
            assert_eq!(r[0].errors, vec![0.0], "{}", kind.name());
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let spec = DistributionSpec::StudentT { nu: 3.0, d: 2, alpha: None };
        let grid = [GridPoint { n: 100, d: 2, alpha: 0.5, delta: 0.1, eta: 0.1 }];
        let opts = HarnessOptions::default();
        let a = run_grid(EstimatorKind::GeometricMedianOfMeans, &spec, &grid, 8, 9, &opts).unwrap();
        let b = run_grid(EstimatorKind::GeometricMedianOfMeans, &spec, &grid, 8, 9, &opts).unwrap();
        assert_eq!(a, b);
        let c = run_grid(EstimatorKind::GeometricMedianOfMeans, &spec, &grid, 8, 10, &opts).unwrap();
        assert_ne!(a[0].errors, c[0].errors);
    }

    #[test]
    fn sample_mean_matches_gaussian_rate() {
        let spec = DistributionSpec::Gaussian { d: 2, alpha: None };
        let grid = [point(500, 2)];
        let r = run_grid(EstimatorKind::SampleMean, &spec, &grid, 100, 1, &HarnessOptions::default()).unwrap();
        let rate = (2.0f64 / 500.0).sqrt() + (2.0 * 10f64.ln() / 500.0).sqrt();
        assert!(r[0].quantile <= 2.0 * rate && r[0].quantile >= rate / 2.0, "{} vs {rate}", r[0].quantile);
    }

    #[test]
    fn zero_trials_rejected() {
        let spec = DistributionSpec::Gaussian { d: 1, alpha: None };
        assert!(run_grid(EstimatorKind::SampleMean, &spec, &[point(10, 1)], 0, 0, &HarnessOptions::default()).is_err());
    }

    #[test]
    fn failures_count_as_infinite() {
        // Half the points at 0, half far away: the pipeline prunes everything.
        let spec = DistributionSpec::Discrete { atoms: vec![vec![0.0], vec![1e9]], probs: vec![0.5, 0.5], alpha: None };
        let r = run_grid(EstimatorKind::Paper, &spec, &[point(4, 1)], 20, 3, &HarnessOptions::default()).unwrap();
        assert!(r[0].estimator_failures > 0);
        assert!(r[0].errors.iter().any(|e| e.is_infinite()));
    }

    #[test]
    fn minimax_radius_formula() {
        assert!((minimax_radius(200, 2, 0.5) - (0.01f64).powf(1.0 / 3.0) / 24.0).abs() < 1e-15);
    }

    #[test]
    fn zero_estimator_fails_often_on_the_spike_family() {
        let f = minimax_failure_experiment(200, 16, 0.5, 400, EstimatorKind::Zero, 1, &HarnessOptions::default()).unwrap();
        assert!(f >= 0.25 - 0.07, "{f}");
        assert!(minimax_failure_experiment(1, 16, 0.5, 4, EstimatorKind::Zero, 1, &HarnessOptions::default()).is_err());
    }
}
