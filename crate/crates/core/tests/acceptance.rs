//! Acceptance criteria 1-13. Runs without the libtest harness so that every
//! criterion prints one line, pass or fail, and the process exits nonzero if
//! any criterion fails.

use std::fs;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use weakmean::config::EstimatorConfig;
use weakmean::distributions::{
    check_weak_moment, corruption_pair, gaussian_abs_moment, lower_bound_family, sample_iid, Distribution,
    DistributionSpec, StudentT,
};
use weakmean::estimator::{estimate_distance, estimate_gradient, gradient_descent, initial_mean_estimate};
use weakmean::harness::verify::{run_suite, Suite, VerifyConfig};
use weakmean::harness::{fit_exponent, minimax_failure_experiment, run_grid, Axis, EstimatorKind, GridPoint, HarnessOptions};
use weakmean::linalg;
use weakmean::points::Points;
use weakmean::rng::{gaussian, make_rng, split_seed, uniform, Stream};
use weakmean::sdp::{mt_value_curve, solve_mt, solve_mte_bruteforce, TestingProgramInstance};
use weakmean::SolverConfig;

const TOL: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Rows around the origin, a few of them pushed out along a shared direction
/// so that the exhaustive count is usually neither 0 nor k.
fn random_instance(k: usize, d: usize, rng: &mut Stream) -> TestingProgramInstance {
    let u = linalg::normalized(&(0..d).map(|_| gaussian(rng)).collect::<Vec<_>>()).unwrap_or(linalg::unit(d, 0));
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let push = if uniform(rng) < 0.4 { 1.0 + 3.0 * uniform(rng) } else { 0.0 };
            (0..d).map(|j| 0.8 * gaussian(rng) + push * u[j]).collect()
        })
        .collect();
    let x: Vec<f64> = (0..d).map(|_| 0.3 * gaussian(rng)).collect();
    let r = 0.1 + 2.5 * uniform(rng);
    TestingProgramInstance::new(x, r, Points::from_rows(&rows).unwrap()).unwrap()
}

fn relaxation_soundness() -> Outcome {
    let solver = SolverConfig::default();
    let mut rng = make_rng(101);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let k = rng.random_range(1..=8);
        let d = rng.random_range(1..=4);
        let inst = random_instance(k, d, &mut rng);
        let mt = solve_mt(&inst, &solver).unwrap().value;
        let mte = solve_mte_bruteforce(&inst).unwrap().value as f64;
        worst = worst.min(mt - (mte - TOL * k as f64));
    }
    outcome(worst >= 0.0, format!("min over 200 instances of MT - (MTE - 1e-3 k) = {worst:.3e}"))
}

fn bounded_differences() -> Outcome {
    let solver = SolverConfig::default();
    let (k, d) = (20, 5);
    let mut rng = make_rng(202);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let inst = random_instance(k, d, &mut rng);
        let mut z = inst.bucket_means.clone();
        let i = rng.random_range(0..k);
        for v in z.row_mut(i) {
            *v = 5.0 * gaussian(&mut rng);
        }
        let other = TestingProgramInstance::new(inst.x.clone(), inst.r, z).unwrap();
        let a = solve_mt(&inst, &solver).unwrap().value;
        let b = solve_mt(&other, &solver).unwrap().value;
        worst = worst.max((a - b).abs());
    }
    let bound = 1.0 + 2.0 * TOL * k as f64;
    outcome(worst <= bound, format!("max |m - m'| over 50 pairs = {worst:.6} (bound {bound})"))
}

fn monotonicity() -> Outcome {
    let solver = SolverConfig::default();
    let mut rng = make_rng(303);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let k = rng.random_range(5..=24);
        let d = rng.random_range(1..=5);
        let inst = random_instance(k, d, &mut rng);
        let radii: Vec<f64> = (0..10).map(|j| 0.05 * 1.6f64.powi(j)).collect();
        let values = mt_value_curve(&inst.x, &inst.bucket_means, &radii, &solver).unwrap();
        for w in values.windows(2) {
            worst = worst.max(w[1] - w[0] - 2.0 * TOL * k as f64);
        }
    }
    outcome(worst <= 0.0, format!("largest rise beyond 2e-3 k slack over 20 curves = {worst:.3e}"))
}

struct Fixture {
    z: Points,
    center: Vec<f64>,
    r_star: f64,
    start: Vec<f64>,
}

/// Smallest radius where the MT value at `center` is at most `0.05 k`.
fn r_star(z: &Points, center: &[f64], cfg: &EstimatorConfig) -> f64 {
    let k = z.len() as f64;
    let value = |r: f64| {
        let inst = TestingProgramInstance::new(center.to_vec(), r, z.clone()).unwrap();
        solve_mt(&inst, &cfg.solver).unwrap().value
    };
    let top = z.rows().map(|zi| linalg::dist(zi, center)).fold(0.0, f64::max);
    // sum_i min(1, |w_i|^2/r^2) <= 0.05 k once r >= top * sqrt(20).
    let (mut lo, mut hi) = (0.0, top * 20f64.sqrt() * 1.01);
    while hi - lo > 1e-4 * hi {
        let mid = 0.5 * (lo + hi);
        if value(mid) <= cfg.sdp_threshold_low * k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Bucket means with heterogeneous spread around a known center, some with a
/// single far outlier, and a start point at 20 to 60 times `r*` away.
fn fixtures(cfg: &EstimatorConfig) -> Vec<Fixture> {
    (0..20)
        .map(|f| {
            let mut rng = make_rng(split_seed(404, f));
            let k = 30 + 10 * (f as usize % 3);
            let d = 2 + f as usize % 4;
            let center: Vec<f64> = (0..d).map(|_| 10.0 * gaussian(&mut rng)).collect();
            let mut rows: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    let s = (2.0 * uniform(&mut rng) - 1.0).exp();
                    center.iter().map(|c| c + s * gaussian(&mut rng)).collect()
                })
                .collect();
            if f % 2 == 1 {
                rows[0] = center.iter().map(|c| c + 200.0 * gaussian(&mut rng)).collect();
            }
            let z = Points::from_rows(&rows).unwrap();
            let r_star = r_star(&z, &center, cfg);
            let u = linalg::normalized(&(0..d).map(|_| gaussian(&mut rng)).collect::<Vec<_>>()).unwrap();
            let dist = r_star * (20.0 + 40.0 * uniform(&mut rng));
            let start = linalg::add(&center, &linalg::scale(&u, dist));
            Fixture { z, center, r_star, start }
        })
        .collect()
}

fn distance_sandwich(fx: &[Fixture], cfg: &EstimatorConfig) -> Outcome {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for f in fx {
        let ratio = estimate_distance(&f.z, &f.start, cfg).unwrap() / linalg::dist(&f.start, &f.center);
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    let pass = lo >= 0.95 * (1.0 - 1e-2) && hi <= 1.25 * (1.0 + 1e-2);
    outcome(pass, format!("d'/|x - mu~| over 20 fixtures in [{lo:.4}, {hi:.4}] (allowed [0.9405, 1.2625])"))
}

fn gradient_correlation(fx: &[Fixture], cfg: &EstimatorConfig) -> Outcome {
    let mut worst = f64::INFINITY;
    for f in fx {
        let g = estimate_gradient(&f.z, &f.start, cfg).unwrap();
        let delta = linalg::normalized(&linalg::sub(&f.center, &f.start)).unwrap();
        worst = worst.min(linalg::dot(&g, &delta));
    }
    let bound = 1.0 / 15.0 - 1e-3;
    outcome(worst >= bound, format!("min <g, Delta> over 20 fixtures = {worst:.4} (bound {bound:.4})"))
}

fn descent_guarantee(fx: &[Fixture], cfg: &EstimatorConfig) -> Outcome {
    let mut worst: f64 = 0.0;
    for f in fx {
        let (x, _) = gradient_descent(&f.z, &f.start, cfg.iteration_cap, cfg).unwrap();
        let eps = 1e-3 * linalg::dist(&f.start, &f.center);
        worst = worst.max(linalg::dist(&x, &f.center) / (30.0 * f.r_star + eps));
    }
    outcome(
        worst <= 1.0,
        format!("max |x* - mu~| / (30 r* + eps) over 20 fixtures, T = {} : {worst:.4}", cfg.iteration_cap),
    )
}

fn initial_estimate() -> Outcome {
    let (n, d) = (200, 4);
    let dist = Distribution::StudentT(StudentT::new(2.5, d, StudentT::default_alpha(2.5)).unwrap());
    let radius = 24.0 * (d as f64).sqrt();
    let mut hits = 0;
    for t in 0..200 {
        let s = sample_iid(&dist, n, &mut make_rng(split_seed(707, t))).unwrap();
        let x = initial_mean_estimate(&s).unwrap();
        if linalg::norm(&x) <= radius {
            hits += 1;
        }
    }
    let freq = hits as f64 / 200.0;
    outcome(freq >= 0.95, format!("success frequency within 24 sqrt(d) over 200 trials = {freq:.3}"))
}

fn lower_bound_certificate() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in [0.5, 1.0] {
        for n in [100, 400] {
            for d in [4, 16] {
                let s: Vec<usize> = (0..d / 2).collect();
                let dist = lower_bound_family(d, &s, n, alpha).unwrap();
                let c = check_weak_moment(&dist, alpha, 500, &mut make_rng(808 + n as u64 + d as u64));
                worst = worst.max(c.value);
            }
        }
    }
    outcome(worst <= 0.5 + 1e-6, format!("largest certified weak moment over 8 cells = {worst:.9}"))
}

fn minimax_failure() -> Outcome {
    let freq = minimax_failure_experiment(200, 16, 0.5, 400, EstimatorKind::Paper, 909, &HarnessOptions::default())
        .unwrap();
    outcome(freq >= 0.25 - 0.07, format!("failure frequency at (1/24)(d/n)^(a/(1+a)), 400 trials = {freq:.4}"))
}

fn scaling_exponent() -> Outcome {
    let spec = DistributionSpec::StudentT { nu: 1.6, d: 4, alpha: Some(0.5) };
    let dist = spec.build(0).unwrap();
    let moment = check_weak_moment(&dist, 0.5, 200, &mut make_rng(1010)).value;
    let grid: Vec<GridPoint> =
        [500, 1000, 2000, 4000, 8000].iter().map(|&n| GridPoint { n, d: 4, alpha: 0.5, delta: 0.1, eta: 0.0 }).collect();
    let reports = run_grid(EstimatorKind::Paper, &spec, &grid, 200, 1010, &HarnessOptions::default()).unwrap();
    let fit = fit_exponent(&reports, Axis::N).unwrap();
    let failures: usize = reports.iter().map(|r| r.estimator_failures).sum();
    let e = fit.fitted_exponent;
    outcome(
        (-0.48..=-0.20).contains(&e) && moment <= 1.0 + 1e-9,
        format!("fitted exponent {e:.4} (stderr {:.4}), weak moment {moment:.6}, estimator failures {failures}", fit.stderr),
    )
}

fn corruption_pair_clauses() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for eta in [0.01, 0.04, 0.16] {
        for alpha in [0.3, 0.5, 0.9] {
            let pair = corruption_pair(eta, alpha).unwrap();
            let q = 1.0 + alpha;
            let (p, a) = (eta / 4.0, eta.powf(-1.0 / q));
            let m = p * a;
            let moment2 = (1.0 - p) * m.powf(q) + p * (a - m).powf(q);
            let gap = 0.25 * eta.powf(alpha / q);
            worst = worst
                .max((pair.tv_distance() - p).abs())
                .max((pair.mean_gap() - gap).abs())
                .max((pair.second.centered_norm_moment(q) - moment2).abs())
                .max(pair.first.centered_norm_moment(q));
            pass &= pair.tv_distance() <= eta / 4.0 + 1e-12 && pair.mean_gap() >= gap - 1e-12 && moment2 <= 1.0;
        }
    }
    outcome(pass && worst <= 1e-12, format!("9 cells, largest deviation from closed forms = {worst:.2e}"))
}

fn structural_oracles() -> Outcome {
    let cfg = VerifyConfig {
        student_nu: 4.0,
        student_alpha: 0.5,
        student_d: 4,
        moment_draws: 100_000,
        sum_sizes: vec![10, 100],
        increment_alphas: vec![0.25, 0.5, 1.0],
        increment_steps: vec![0.1, 1.0, 10.0],
        increment_grid: 10_000,
        gaussian_draws: 1_000_000,
        ..VerifyConfig::default()
    };
    let mut checks = Vec::new();
    for (i, suite) in [Suite::LengthMoment, Suite::SumMoment, Suite::Increment, Suite::GaussianMoment].into_iter().enumerate() {
        checks.extend(run_suite(suite, &cfg, split_seed(1212, i as u64)).unwrap());
    }
    // The closed form the Gaussian check compares against.
    let gauss = (gaussian_abs_moment(1.0) - (2.0 / std::f64::consts::PI).sqrt()).abs();
    let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
    outcome(
        failed.is_empty() && gauss < 1e-12,
        format!("{} checks, failed: {failed:?}", checks.len()),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = "estimator = \"paper\"\ntrials = 8\nseed = 13\n\
                  [distribution]\ntype = \"student_t\"\nnu = 1.6\nd = 3\nalpha = 0.5\n\
                  [grid]\nn = [200, 400]\nd = [3]\nalpha = [0.5]\n";
    fs::write(dir.path().join("b.toml"), config).unwrap();
    for out in ["one", "two"] {
        let status = Command::new(env!("CARGO_BIN_EXE_weakmean"))
            .current_dir(dir.path())
            .args(["benchmark", "--config", "b.toml", "--out", out])
            .status()
            .unwrap();
        if !status.success() {
            return outcome(false, format!("benchmark exited with {status}"));
        }
    }
    let same = ["csv", "json"]
        .iter()
        .all(|ext| fs::read(dir.path().join(format!("one.{ext}"))).unwrap() == fs::read(dir.path().join(format!("two.{ext}"))).unwrap());
    outcome(same, "two benchmark runs with one config and seed, CSV and JSON byte-identical".into())
}

fn main() {
    let cfg = EstimatorConfig::desk(0.1, 10_000, 4).unwrap();
    let start = Instant::now();
    let fx = fixtures(&cfg);
    let fixture_time = start.elapsed().as_secs_f64();

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("relaxation soundness", Box::new(relaxation_soundness)),
        ("bounded differences", Box::new(bounded_differences)),
        ("monotonicity", Box::new(monotonicity)),
        ("distance sandwich", Box::new(|| distance_sandwich(&fx, &cfg))),
        ("gradient correlation", Box::new(|| gradient_correlation(&fx, &cfg))),
        ("descent guarantee", Box::new(|| descent_guarantee(&fx, &cfg))),
        ("initial estimate", Box::new(initial_estimate)),
        ("lower-bound certificate", Box::new(lower_bound_certificate)),
        ("minimax failure", Box::new(minimax_failure)),
        ("scaling exponent", Box::new(scaling_exponent)),
        ("corruption pair", Box::new(corruption_pair_clauses)),
        ("structural moment oracles", Box::new(structural_oracles)),
        ("determinism", Box::new(determinism)),
    ];
    println!("acceptance: fixtures for criteria 4-6 built in {fixture_time:.1}s");
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "criterion {:>2} {} {name}: {} ({secs:.1}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
