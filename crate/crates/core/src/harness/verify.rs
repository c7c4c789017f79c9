//! Numerical checks of the structural facts the estimator relies on. Each
//! suite returns measured values next to the bound they must respect.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::distributions::{
    check_weak_moment, corruption_pair, lower_bound_family, sample_iid, spike_mean_entry, Distribution, StudentT,
};
use crate::error::Result;
use crate::json::real;
use crate::linalg;
use crate::points::Points;
use crate::rng::{gaussian, make_rng, split_seed, uniform};
use crate::sdp::{mt_value_curve, solve_mt, solve_mte_bruteforce, TestingProgramInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// `E||X||^(1+a) <= (pi/2) d^((1+a)/2)`.
    LengthMoment,
    /// `E|X_1 + .. + X_n|^(1+a) <= 2n`.
    SumMoment,
    /// `max_x g(x+h) - g(x) = 2^(1-a) h^a` for `g(x) = sgn(x)|x|^a`.
    Increment,
    /// `E|N(0,1)| = sqrt(2/pi)`.
    GaussianMoment,
    /// Replacing one bucket mean moves the MT value by at most 1.
    BoundedDifference,
    /// MT value is nonincreasing in the radius.
    Monotonicity,
    /// MT is at least the exhaustive count.
    Relaxation,
    /// Removing a set of mass `delta <= 1/2` moves the mean by at most `2 delta^(a/(1+a))`.
    MeanShift,
    /// `E||X||^2 1{||X|| <= tau} <= (pi/2) d^((1+a)/2) tau^(1-a)`.
    TruncatedSecondMoment,
    /// The spike family has weak moment at most 1/2.
    LowerBoundCertificate,
    /// Total variation, mean gap and moments of the contamination pair.
    CorruptionPair,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::LengthMoment,
        Suite::SumMoment,
        Suite::Increment,
        Suite::GaussianMoment,
        Suite::BoundedDifference,
        Suite::Monotonicity,
        Suite::Relaxation,
        Suite::MeanShift,
        Suite::TruncatedSecondMoment,
        Suite::LowerBoundCertificate,
        Suite::CorruptionPair,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub suites: Vec<Suite>,
    pub seed: u64,
    pub moment_draws: usize,
    pub student_nu: f64,
    pub student_alpha: f64,
    pub student_d: usize,
    pub sum_sizes: Vec<usize>,
    pub increment_alphas: Vec<f64>,
    pub increment_steps: Vec<f64>,
    pub increment_grid: usize,
    pub gaussian_draws: usize,
    pub sdp_instances: usize,
    pub relaxation_instances: usize,
    pub monotonicity_instances: usize,
    pub monotonicity_radii: usize,
    pub solver: SolverConfig,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            suites: Suite::ALL.to_vec(),
            seed: 0,
            moment_draws: 100_000,
            student_nu: 4.0,
            student_alpha: 0.5,
            student_d: 4,
            sum_sizes: vec![10, 100],
            increment_alphas: vec![0.25, 0.5, 1.0],
            increment_steps: vec![0.1, 1.0, 10.0],
            increment_grid: 10_000,
            gaussian_draws: 1_000_000,
            sdp_instances: 50,
            relaxation_instances: 200,
            monotonicity_instances: 20,
            monotonicity_radii: 10,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    #[serde(with = "real")]
    pub measured: f64,
    #[serde(with = "real")]
    pub bound: f64,
    /// `"<="`, `">="` or `"within"` (for the last, `bound` is the allowed deviation).
    pub relation: &'static str,
    pub pass: bool,
}

impl Check {
    fn le(suite: Suite, name: String, measured: f64, bound: f64) -> Self {
        Check { suite, name, measured, bound, relation: "<=", pass: measured <= bound }
    }

    fn ge(suite: Suite, name: String, measured: f64, bound: f64) -> Self {
        Check { suite, name, measured, bound, relation: ">=", pass: measured >= bound }
    }

    fn within(suite: Suite, name: String, deviation: f64, tolerance: f64) -> Self {
        Check { suite, name, measured: deviation, bound: tolerance, relation: "within", pass: deviation <= tolerance }
    }
}

/// Runs the selected suites in order; each suite uses its own seed stream.
pub fn run_suites(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (i, &suite) in cfg.suites.iter().enumerate() {
        let seed = split_seed(cfg.seed, i as u64);
        out.extend(run_suite(suite, cfg, seed)?);
    }
    Ok(out)
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig, seed: u64) -> Result<Vec<Check>> {
    match suite {
        Suite::LengthMoment => length_moment(cfg, seed),
        Suite::SumMoment => sum_moment(cfg, seed),
        Suite::Increment => Ok(increment(cfg)),
        Suite::GaussianMoment => Ok(gaussian_moment(cfg, seed)),
        Suite::BoundedDifference => bounded_difference(cfg, seed),
        Suite::Monotonicity => monotonicity(cfg, seed),
        Suite::Relaxation => relaxation(cfg, seed),
        Suite::MeanShift => mean_shift(),
        Suite::TruncatedSecondMoment => truncated_second_moment(cfg, seed),
        Suite::LowerBoundCertificate => lower_bound_certificate(seed),
        Suite::CorruptionPair => corruption_pair_clauses(),
    }
}

fn length_bound(d: usize, alpha: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 * (d as f64).powf((1.0 + alpha) / 2.0)
}

fn mc_norm_moment(dist: &Distribution, draws: usize, seed: u64) -> Result<f64> {
    let p = 1.0 + dist.alpha();
    let mu = dist.mean();
    let s = sample_iid(dist, draws, &mut make_rng(seed))?;
    Ok(s.points.rows().map(|r| linalg::dist(r, &mu).powf(p)).sum::<f64>() / draws as f64)
}

fn length_moment(cfg: &VerifyConfig, seed: u64) -> Result<Vec<Check>> {
    let t = Distribution::StudentT(StudentT::new(cfg.student_nu, cfg.student_d, cfg.student_alpha)?);
    let (n, d, alpha) = (100, 16, 0.5);
    let spikes = Distribution::Discrete { dist: lower_bound_family(d, &(0..d / 2).collect::<Vec<_>>(), n, alpha)?, alpha };
    let mut out = Vec::new();
    for (label, dist, s) in [("student_t", &t, 0), ("lower_bound", &spikes, 1)] {
        let measured = mc_norm_moment(dist, cfg.moment_draws, split_seed(seed, s))?;
        out.push(Check::le(
            Suite::LengthMoment,
            format!("{label} d={} alpha={}", dist.dim(), dist.alpha()),
            measured,
            1.02 * length_bound(dist.dim(), dist.alpha()),
        ));
    }
    Ok(out)
}

/// Scalar mean-zero laws with `E|X|^(1+alpha) = 1`.
fn scalar_draw<R: Rng + ?Sized>(family: usize, alpha: f64, t: &StudentT, rng: &mut R) -> f64 {
    match family {
        0 => t.sample(1, rng).row(0)[0],
        _ => {
            // Symmetric spike: +-eta^(-1/(1+alpha)) with probability eta/2 each.
            let eta: f64 = 0.05;
            let u = uniform(rng);
            let m = eta.powf(-1.0 / (1.0 + alpha));
            if u < eta / 2.0 {
                m
            } else if u < eta {
                -m
            } else {
                0.0
            }
        }
    }
}

fn sum_moment(cfg: &VerifyConfig, seed: u64) -> Result<Vec<Check>> {
    let alpha = cfg.student_alpha;
    let t = StudentT::new(cfg.student_nu, 1, alpha)?;
    let mut out = Vec::new();
    for (fi, label) in ["student_t", "symmetric_spike"].iter().enumerate() {
        for &n in &cfg.sum_sizes {
            let mut rng = make_rng(split_seed(seed, (fi * 1000 + n) as u64));
            let draws = cfg.moment_draws.max(1);
            let total: f64 = (0..draws)
                .map(|_| (0..n).map(|_| scalar_draw(fi, alpha, &t, &mut rng)).sum::<f64>().abs().powf(1.0 + alpha))
                .sum();
            out.push(Check::le(
                Suite::SumMoment,
                format!("{label} n={n} draws={draws}"),
                total / draws as f64,
                2.0 * n as f64 * 1.05,
            ));
        }
    }
    Ok(out)
}

fn increment(cfg: &VerifyConfig) -> Vec<Check> {
    let g = |x: f64, a: f64| x.signum() * x.abs().powf(a);
    let m = cfg.increment_grid.max(2);
    let mut out = Vec::new();
    for &a in &cfg.increment_alphas {
        for &h in &cfg.increment_steps {
            // Grid over [-2h, h) that contains -h/2 exactly.
            let step = 3.0 * h / m as f64;
            let best = (0..m)
                .map(|j| -h / 2.0 + (j as f64 - (m / 2) as f64) * step)
                .map(|x| g(x + h, a) - g(x, a))
                .fold(f64::NEG_INFINITY, f64::max);
            let closed = 2f64.powf(1.0 - a) * h.powf(a);
            out.push(Check::within(Suite::Increment, format!("alpha={a} h={h}"), (best - closed).abs(), 1e-6));
        }
    }
    out
}

fn gaussian_moment(cfg: &VerifyConfig, seed: u64) -> Vec<Check> {
    let mut rng = make_rng(seed);
    let mean = (0..cfg.gaussian_draws).map(|_| gaussian(&mut rng).abs()).sum::<f64>() / cfg.gaussian_draws as f64;
    let exact = (2.0 / std::f64::consts::PI).sqrt();
    vec![Check::within(Suite::GaussianMoment, format!("draws={}", cfg.gaussian_draws), (mean - exact).abs(), 0.003)]
}

fn random_instance<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> Result<TestingProgramInstance> {
    let rows: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| 2.0 * gaussian(rng)).collect()).collect();
    let x: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
    let r = 0.2 + 2.0 * gaussian(rng).abs();
    TestingProgramInstance::new(x, r, Points::from_rows(&rows)?)
}

fn bounded_difference(cfg: &VerifyConfig, seed: u64) -> Result<Vec<Check>> {
    let (k, d) = (20, 5);
    let mut rng = make_rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.sdp_instances {
        let inst = random_instance(k, d, &mut rng)?;
        let mut z = inst.bucket_means.clone();
        let i = rng.random_range(0..k);
        let fresh: Vec<f64> = (0..d).map(|_| 4.0 * gaussian(&mut rng)).collect();
        z.row_mut(i).copy_from_slice(&fresh);
        let other = TestingProgramInstance::new(inst.x.clone(), inst.r, z)?;
        let a = solve_mt(&inst, &cfg.solver)?.value;
        let b = solve_mt(&other, &cfg.solver)?.value;
        worst = worst.max((a - b).abs());
    }
    Ok(vec![Check::le(
        Suite::BoundedDifference,
        format!("k={k} d={d} pairs={}", cfg.sdp_instances),
        worst,
        1.0 + 2.0 * cfg.solver.value_tolerance * k as f64,
    )])
}

fn monotonicity(cfg: &VerifyConfig, seed: u64) -> Result<Vec<Check>> {
    let mut rng = make_rng(seed);
    let mut worst = f64::NEG_INFINITY;
    let m = cfg.monotonicity_radii.max(2);
    for _ in 0..cfg.monotonicity_instances {
        let k = rng.random_range(4..=20);
        let d = rng.random_range(1..=5);
        let inst = random_instance(k, d, &mut rng)?;
        let radii: Vec<f64> = (0..m).map(|j| 0.1 + 4.0 * j as f64 / (m - 1) as f64).collect();
        let values = mt_value_curve(&inst.x, &inst.bucket_means, &radii, &cfg.solver)?;
        let slack = 2.0 * cfg.solver.value_tolerance * k as f64;
        for w in values.windows(2) {
            worst = worst.max(w[1] - w[0] - slack);
        }
    }
    Ok(vec![Check::le(
        Suite::Monotonicity,
        format!("largest rise minus 2*tol*k, instances={} radii={m}", cfg.monotonicity_instances),
        worst,
        0.0,
    )])
}

fn relaxation(cfg: &VerifyConfig, seed: u64) -> Result<Vec<Check>> {
    let mut rng = make_rng(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..cfg.relaxation_instances {
        let k = rng.random_range(1..=8);
        let d = rng.random_range(1..=4);
        let inst = random_instance(k, d, &mut rng)?;
        let mt = solve_mt(&inst, &cfg.solver)?.value;
        let mte = solve_mte_bruteforce(&inst)?.value as f64;
        worst = worst.min(mt - mte + cfg.solver.value_tolerance * k as f64);
    }
    Ok(vec![Check::ge(
        Suite::Relaxation,
        format!("MT - MTE + tol*k over {} instances", cfg.relaxation_instances),
        worst,
        0.0,
    )])
}

fn spike_grid() -> Vec<(f64, usize, usize)> {
    let mut g = Vec::new();
    for alpha in [0.5, 1.0] {
        for n in [100, 400] {
            for d in [4, 16] {
                g.push((alpha, n, d));
            }
        }
    }
    g
}

fn mean_shift() -> Result<Vec<Check>> {
    // Centered spike family, A = the spikes: conditioning on A^c leaves the
    // point -mu_S, so the shift is exactly |mu_S|.
    let mut out = Vec::new();
    for (alpha, n, d) in spike_grid() {
        let delta = d as f64 / (8.0 * n as f64);
        let shift = spike_mean_entry(n, d, alpha) * ((d / 2) as f64).sqrt();
        out.push(Check::le(
            Suite::MeanShift,
            format!("alpha={alpha} n={n} d={d}"),
            shift,
            2.0 * delta.powf(alpha / (1.0 + alpha)),
        ));
    }
    Ok(out)
}

fn truncated_second_moment(cfg: &VerifyConfig, seed: u64) -> Result<Vec<Check>> {
    let (d, alpha) = (cfg.student_d, cfg.student_alpha);
    let t = Distribution::StudentT(StudentT::new(cfg.student_nu, d, alpha)?);
    let s = sample_iid(&t, cfg.moment_draws, &mut make_rng(seed))?;
    let norms: Vec<f64> = s.points.rows().map(linalg::norm).collect();
    Ok([0.5, 2.0, 8.0]
        .iter()
        .map(|&tau| {
            let m = norms.iter().filter(|&&r| r <= tau).map(|r| r * r).sum::<f64>() / norms.len() as f64;
            Check::le(
                Suite::TruncatedSecondMoment,
                format!("student_t tau={tau}"),
                m,
                length_bound(d, alpha) * f64::powf(tau, 1.0 - alpha),
            )
        })
        .collect())
}

fn lower_bound_certificate(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (i, (alpha, n, d)) in spike_grid().into_iter().enumerate() {
        let dist = lower_bound_family(d, &(0..d / 2).collect::<Vec<_>>(), n, alpha)?;
        let check = check_weak_moment(&dist, alpha, 500, &mut make_rng(split_seed(seed, i as u64)));
        out.push(Check::le(
            Suite::LowerBoundCertificate,
            format!("alpha={alpha} n={n} d={d}"),
            check.value,
            0.5 + 1e-6,
        ));
    }
    Ok(out)
}

fn corruption_pair_clauses() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for eta in [0.01, 0.04, 0.16] {
        for alpha in [0.3, 0.5, 0.9] {
            let pair = corruption_pair(eta, alpha)?;
            let tag = format!("eta={eta} alpha={alpha}");
            out.push(Check::le(Suite::CorruptionPair, format!("{tag} tv"), pair.tv_distance(), eta / 4.0 + 1e-12));
            out.push(Check::ge(
                Suite::CorruptionPair,
                format!("{tag} mean gap"),
                pair.mean_gap(),
                0.25 * eta.powf(alpha / (1.0 + alpha)) - 1e-12,
            ));
            for (which, dist) in [("first", &pair.first), ("second", &pair.second)] {
                out.push(Check::le(
                    Suite::CorruptionPair,
                    format!("{tag} {which} moment"),
                    dist.centered_norm_moment(1.0 + alpha),
                    1.0 + 1e-12,
                ));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig {
            moment_draws: 20_000,
            gaussian_draws: 200_000,
            sdp_instances: 5,
            relaxation_instances: 10,
            monotonicity_instances: 3,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn increment_closed_form() {
        let checks = increment(&VerifyConfig::default());
        assert_eq!(checks.len(), 9);
        assert!(checks.iter().all(|c| c.pass), "{checks:?}");
    }

    #[test]
    fn all_suites_pass_at_small_size() {
        let checks = run_suites(&small()).unwrap();
        let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        for suite in Suite::ALL {
            assert!(checks.iter().any(|c| c.suite == suite));
        }
    }

    #[test]
    fn suites_are_deterministic() {
        let cfg = VerifyConfig { suites: vec![Suite::LengthMoment, Suite::Relaxation], ..small() };
        assert_eq!(run_suites(&cfg).unwrap(), run_suites(&cfg).unwrap());
    }
}
