//! The subcommands and their configuration schemas.
//!
//! Every table rejects unknown keys. Relative paths inside a configuration
//! file are resolved against the directory holding that file.
//!
//! `estimate`:
//!
//! ```toml
//! input = "data.csv"
//! alpha = 0.5
//! delta = 0.1
//! profile = "desk"
//! trace = false
//! [estimator]        # optional constant overrides
//! iteration_cap = 60
//! [solver]
//! max_iterations = 20000
//! ```
//!
//! `generate`:
//!
//! ```toml
//! n = 1000
//! seed = 7
//! [distribution]
//! type = "student_t"
//! nu = 2.5
//! d = 4
//! [corruption]       # optional
//! eta = 0.05
//! adversary = "replace_with_point"
//! ```
//!
//! `benchmark`:
//!
//! ```toml
//! estimator = "paper"
//! trials = 200
//! seed = 1
//! fit_axis = "n"
//! [distribution]
//! type = "student_t"
//! nu = 1.6
//! d = 4
//! [grid]             # cartesian product, n varies fastest
//! n = [500, 1000, 2000, 4000, 8000]
//! d = [4]
//! alpha = [0.5]
//! delta = [0.1]
//! [options]
//! profile = "desk"
//! [minimax]          # optional
//! n = 200
//! d = 16
//! alpha = 0.5
//! trials = 400
//! ```
//!
//! `verify` takes the fields of [`VerifyConfig`]; the file is optional.
//!
//! `solve-mt` takes either an instance JSON `{"r", "x", "Z"}` directly (a
//! `.json` path) or a TOML file with `instance = "path.json"` and an optional
//! `[solver]` table.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::files::{read_dataset, read_text, sibling, write_atomic, write_dataset};
use super::{Cli, CliError, EXIT_CHECKS_FAILED, EXIT_IO};
use crate::config::{EstimatorConfig, Profile, SolverConfig};
use crate::distributions::{corrupt, sample_iid, Adversary, CorruptionModel, DistributionSpec};
use crate::estimator::{bucket_means, estimate_mean_with_trace, prune, DescentTrace};
use crate::harness::verify::{run_suites, Check, VerifyConfig};
use crate::harness::{
    config_for, fit_exponent, minimax_trials, reports_csv, reports_json, run_grid, Axis, BenchmarkSummary,
    EstimatorKind, GridPoint, HarnessOptions,
};
use crate::json::{self, real, real_vec};
use crate::points::Sample;
use crate::rng::make_rng;
use crate::sdp::{self, instance_from_json, SdpDump, SdpSolution, TestingProgramInstance};

fn config_path(cli: &Cli) -> Result<&Path, CliError> {
    cli.config.as_deref().ok_or_else(|| CliError::config("--config is required for this command"))
}

fn read_input(path: &Path) -> Result<String, CliError> {
    read_text(path).map_err(CliError::input)
}

fn parse_toml<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = read_input(path)?;
    toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn resolve(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        return p.to_path_buf();
    }
    config.parent().map_or_else(|| p.to_path_buf(), |dir| dir.join(p))
}

/// Writes to `--out`, or to stdout when it is absent.
fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => write_atomic(path, text.as_bytes()).map_err(CliError::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EstimatorOverrides {
    bucket_constant: Option<f64>,
    prune_constant: Option<f64>,
    sdp_threshold_high: Option<f64>,
    sdp_threshold_low: Option<f64>,
    step_factor: Option<f64>,
    iteration_constant: Option<f64>,
    iteration_cap: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateFile {
    input: PathBuf,
    alpha: f64,
    #[serde(default = "default_delta")]
    delta: f64,
    profile: Option<Profile>,
    #[serde(default)]
    trace: bool,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    estimator: EstimatorOverrides,
    #[serde(default)]
    solver: SolverConfig,
}

fn default_delta() -> f64 {
    0.1
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    #[serde(with = "real_vec")]
    estimate: &'a [f64],
    #[serde(with = "real_vec")]
    initial_point: &'a [f64],
    pruned_count: usize,
    bucket_count: usize,
    iterations_used: usize,
    #[serde(with = "real")]
    final_distance_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<&'a DescentTrace>,
}

fn estimator_config(file: &EstimateFile, profile: Profile, n: usize, d: usize, seed: u64) -> Result<EstimatorConfig, CliError> {
    let mut cfg = config_for(profile, file.delta, n, d)?;
    let o = &file.estimator;
    if let Some(v) = o.bucket_constant {
        cfg.bucket_constant = v;
    }
    if let Some(v) = o.prune_constant {
        cfg.prune_constant = v;
    }
    if let Some(v) = o.sdp_threshold_high {
        cfg.sdp_threshold_high = v;
    }
    if let Some(v) = o.sdp_threshold_low {
        cfg.sdp_threshold_low = v;
    }
    if let Some(v) = o.step_factor {
        cfg.step_factor = v;
    }
    if let Some(v) = o.iteration_constant {
        cfg.iteration_constant = v;
    }
    if let Some(v) = o.iteration_cap {
        cfg.iteration_cap = v;
    }
    cfg.solver = file.solver;
    cfg.seed = seed;
    cfg.validate()?;
    cfg.check_bucket_clamp(n)?;
    Ok(cfg)
}

/// The testing program at the returned estimate and its estimated distance,
/// over the same bucket means the pipeline used.
fn final_instance(sample: &Sample, mean: &[f64], x_dagger: &[f64], r: f64, cfg: &EstimatorConfig) -> crate::Result<TestingProgramInstance> {
    let n = sample.len();
    let second = sample.with_points(sample.points.slice(n / 2, n));
    let kept = prune(&second, x_dagger, cfg)?;
    let buckets = bucket_means(&kept, cfg)?;
    TestingProgramInstance::new(mean.to_vec(), r, buckets.means)
}

pub fn estimate(cli: &Cli) -> Result<i32, CliError> {
    let path = config_path(cli)?;
    let file: EstimateFile = parse_toml(path)?;
    let dump_path = match (&cli.out, cli.dump_sdp) {
        (Some(out), true) => Some(sibling(out, "sdp.json")),
        (None, true) => return Err(CliError::config("--dump-sdp needs --out")),
        _ => None,
    };
    let points = read_dataset(&read_input(&resolve(path, &file.input))?).map_err(CliError::input)?;
    let sample = Sample::new(points, file.alpha).map_err(|e| CliError::config(e.to_string()))?;
    let profile = cli.profile.map(Profile::from).or(file.profile).unwrap_or(Profile::Desk);
    let seed = cli.seed.unwrap_or(file.seed);
    let cfg = estimator_config(&file, profile, sample.len(), sample.dim(), seed)?;
    let (est, trace) = estimate_mean_with_trace(&sample, &cfg)?;
    let dump = match dump_path {
        Some(p) => {
            let inst = final_instance(&sample, &est.mean, &est.initial_point, est.final_distance_estimate, &cfg)?;
            let sol = sdp::solve_mt(&inst, &cfg.solver)?;
            Some((p, SdpDump::new(&inst, &sol).to_json()))
        }
        None => None,
    };
    let out = EstimateOutput {
        estimate: &est.mean,
        initial_point: &est.initial_point,
        pruned_count: est.pruned_count,
        bucket_count: est.bucket_count,
        iterations_used: est.iterations_used,
        final_distance_estimate: est.final_distance_estimate,
        trace: file.trace.then_some(&trace),
    };
    emit(cli, &json::to_string(&out))?;
    if let Some((p, text)) = dump {
        write_atomic(&p, text.as_bytes())?;
    }
    Ok(0)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorruptionSection {
    eta: f64,
    #[serde(default = "default_adversary")]
    adversary: Adversary,
    /// Defaults to the mean shifted by 10 along the first axis.
    target: Option<Vec<f64>>,
}

fn default_adversary() -> Adversary {
    Adversary::ReplaceWithPoint
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateFile {
    n: usize,
    #[serde(default)]
    seed: u64,
    distribution: DistributionSpec,
    corruption: Option<CorruptionSection>,
}

pub fn generate(cli: &Cli) -> Result<i32, CliError> {
    let file: GenerateFile = parse_toml(config_path(cli)?)?;
    let dist = file.distribution.build(file.n)?;
    let mut rng = make_rng(cli.seed.unwrap_or(file.seed));
    let mut sample = sample_iid(&dist, file.n, &mut rng)?;
    if let Some(c) = &file.corruption {
        let model = CorruptionModel::new(c.eta, c.adversary)?;
        let target = c.target.clone().unwrap_or_else(|| {
            let mut t = dist.mean();
            t[0] += 10.0;
            t
        });
        if target.len() != dist.dim() {
            return Err(CliError::config(format!(
                "corruption.target has dimension {} but the distribution has dimension {}",
                target.len(),
                dist.dim()
            )));
        }
        sample = corrupt(&sample, &model, &target, &mut rng)?;
    }
    emit(cli, &write_dataset(&sample.points)?)?;
    Ok(0)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    n: Vec<usize>,
    d: Vec<usize>,
    alpha: Vec<f64>,
    #[serde(default = "default_deltas")]
    delta: Vec<f64>,
    #[serde(default = "default_etas")]
    eta: Vec<f64>,
}

fn default_deltas() -> Vec<f64> {
    vec![0.1]
}

fn default_etas() -> Vec<f64> {
    vec![0.0]
}

impl GridSection {
    fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &d in &self.d {
            for &alpha in &self.alpha {
                for &delta in &self.delta {
                    for &eta in &self.eta {
                        for &n in &self.n {
                            out.push(GridPoint { n, d, alpha, delta, eta });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MinimaxSection {
    n: usize,
    d: usize,
    alpha: f64,
    trials: usize,
    estimator: Option<EstimatorKind>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchmarkFile {
    #[serde(default = "default_estimator")]
    estimator: EstimatorKind,
    trials: usize,
    #[serde(default)]
    seed: u64,
    fit_axis: Option<Axis>,
    distribution: DistributionSpec,
    grid: GridSection,
    #[serde(default)]
    options: HarnessOptions,
    minimax: Option<MinimaxSection>,
}

fn default_estimator() -> EstimatorKind {
    EstimatorKind::Paper
}

/// Writes `<out>.csv` with one row per trial and `<out>.json` with the
/// per-grid-point summaries, the optional fit and the optional minimax block.
pub fn benchmark(cli: &Cli) -> Result<i32, CliError> {
    let file: BenchmarkFile = parse_toml(config_path(cli)?)?;
    let out = cli.out.as_deref().ok_or_else(|| CliError::config("benchmark needs --out"))?;
    if file.trials == 0 {
        return Err(CliError::config("trials must be at least 1"));
    }
    let grid = file.grid.points();
    if grid.is_empty() {
        return Err(CliError::config("grid is empty"));
    }
    let mut opts = file.options.clone();
    if let Some(p) = cli.profile {
        opts.profile = p.into();
    }
    let seed = cli.seed.unwrap_or(file.seed);
    let reports = run_grid(file.estimator, &file.distribution, &grid, file.trials, seed, &opts)?;
    let fit = file.fit_axis.map(|axis| fit_exponent(&reports, axis)).transpose()?;
    let minimax = file
        .minimax
        .as_ref()
        .map(|m| {
            let est = m.estimator.unwrap_or(file.estimator);
            minimax_trials(m.n, m.d, m.alpha, m.trials, est, seed, &opts)
        })
        .transpose()?;
    let csv = reports_csv(&reports)?;
    let summary =
        reports_json(&BenchmarkSummary { seed, reports: &reports, fit: fit.as_ref(), minimax: minimax.as_ref() });
    write_atomic(&sibling(out, "csv"), csv.as_bytes())?;
    write_atomic(&sibling(out, "json"), summary.as_bytes())?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    seed: u64,
    all_pass: bool,
    checks: &'a [Check],
}

fn verify_table(checks: &[Check]) -> String {
    let mut s = format!("{:<6} {:<26} {:<54} {:>14} {:<7} {:>14}\n", "result", "suite", "check", "measured", "rel", "bound");
    for c in checks {
        let suite = serde_json::to_string(&c.suite).unwrap_or_default();
        s.push_str(&format!(
            "{:<6} {:<26} {:<54} {:>14.6e} {:<7} {:>14.6e}\n",
            if c.pass { "PASS" } else { "FAIL" },
            suite.trim_matches('"'),
            c.name,
            c.measured,
            c.relation,
            c.bound
        ));
    }
    s
}

/// Prints the pass/fail table to stdout and writes the JSON report to `--out`.
/// Exits 1 when any check fails.
pub fn verify(cli: &Cli) -> Result<i32, CliError> {
    let mut cfg: VerifyConfig = match &cli.config {
        Some(p) => parse_toml(p)?,
        None => VerifyConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let checks = run_suites(&cfg)?;
    let all_pass = checks.iter().all(|c| c.pass);
    if let Some(out) = &cli.out {
        let doc = VerifyOutput { seed: cfg.seed, all_pass, checks: &checks };
        write_atomic(out, json::to_string(&doc).as_bytes())?;
    }
    print!("{}", verify_table(&checks));
    Ok(if all_pass { 0 } else { EXIT_CHECKS_FAILED })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveFile {
    instance: PathBuf,
    #[serde(default)]
    solver: SolverConfig,
}

#[derive(Serialize)]
struct SolveOutput {
    #[serde(flatten)]
    dump: SdpDump,
    #[serde(with = "real")]
    upper_bound: f64,
    #[serde(with = "real")]
    primal_residual: f64,
    #[serde(with = "real")]
    dual_residual: f64,
    iterations: usize,
}

impl SolveOutput {
    fn new(inst: &TestingProgramInstance, sol: &SdpSolution) -> Self {
        SolveOutput {
            dump: SdpDump::new(inst, sol),
            upper_bound: sol.upper_bound,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            iterations: sol.iterations,
        }
    }
}

pub fn solve_mt(cli: &Cli) -> Result<i32, CliError> {
    let path = config_path(cli)?;
    let (instance_path, solver) = if path.extension().is_some_and(|e| e == "json") {
        (path.to_path_buf(), SolverConfig::default())
    } else {
        let file: SolveFile = parse_toml(path)?;
        (resolve(path, &file.instance), file.solver)
    };
    solver.validate()?;
    let inst = instance_from_json(&read_input(&instance_path)?).map_err(|e| match e {
        crate::Error::Parse(m) => CliError { code: EXIT_IO, kind: "input", message: m },
        other => other.into(),
    })?;
    let sol = sdp::solve_mt(&inst, &solver)?;
    emit(cli, &json::to_string(&SolveOutput::new(&inst, &sol)))?;
    Ok(0)
}
