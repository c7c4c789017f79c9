//! Distance and direction estimates from the testing program, and the
//! descent loop built on them.

use serde::Serialize;

use crate::config::EstimatorConfig;
use crate::error::{Error, Result};
use crate::json::{real_rows, real_vec};
use crate::linalg;
use crate::points::Points;
use crate::sdp::{decide_mt, solve_mt, Decision, TestingProgramInstance};

/// Relative width at which the radius search stops.
pub const SEARCH_TOLERANCE: f64 = 1e-2;
const POWER_TOLERANCE: f64 = 1e-8;
const POWER_ITERATIONS: usize = 10_000;
const MAX_HALVINGS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentTrace {
    #[serde(with = "real_rows")]
    pub iterates: Vec<Vec<f64>>,
    #[serde(with = "real_vec")]
    pub distance_estimates: Vec<f64>,
    pub best_index: usize,
}

fn check_dims(z: &Points, x: &[f64]) -> Result<()> {
    if z.is_empty() {
        return Err(Error::InvalidSample("need at least one bucket mean".into()));
    }
    if x.len() != z.dim() {
        return Err(Error::InvalidSample(format!(
            "point has dimension {} but bucket means have dimension {}",
            x.len(),
            z.dim()
        )));
    }
    Ok(())
}

/// MT value required at an accepted radius.
fn threshold(k: usize, cfg: &EstimatorConfig) -> f64 {
    (cfg.sdp_threshold_high - cfg.solver.value_tolerance) * k as f64
}

/// Largest `r` with `sum_i min(1, |w_i|^2 / r^2) >= theta`. The sum bounds the
/// MT value from above, so no larger radius can qualify.
fn radius_upper_bound(norms: &[f64], theta: f64) -> f64 {
    let top = norms.iter().copied().fold(0.0, f64::max);
    let bound = |r: f64| norms.iter().map(|&a| (a * a / (r * r)).min(1.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, top * (norms.len() as f64 / theta).sqrt() * (1.0 + 1e-12));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if bound(mid) >= theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Largest `r` certified by an integral solution along a few candidate
/// directions: the `ceil(theta)`-th largest projection.
fn radius_lower_bound(offsets: &[Vec<f64>], theta: f64) -> f64 {
    let need = (theta.ceil() as usize).max(1);
    let k = offsets.len();
    if need > k {
        return 0.0;
    }
    let mut dirs: Vec<Vec<f64>> = offsets.iter().filter_map(|w| linalg::normalized(w)).collect();
    let d = offsets[0].len();
    let mut sum = vec![0.0; d];
    for w in offsets {
        sum = linalg::add(&sum, w);
    }
    dirs.extend(linalg::normalized(&sum));
    let mut best: f64 = 0.0;
    let mut proj = vec![0.0; k];
    for v in &dirs {
        for (p, w) in proj.iter_mut().zip(offsets) {
            *p = linalg::dot(v, w);
        }
        proj.sort_by(|a, b| b.total_cmp(a));
        best = best.max(proj[need - 1]);
    }
    best
}

fn qualifies(z: &Points, x: &[f64], r: f64, theta: f64, cfg: &EstimatorConfig) -> Result<bool> {
    let inst = TestingProgramInstance::new(x.to_vec(), r, z.clone())?;
    Ok(decide_mt(&inst, &cfg.solver, theta)? == Decision::Above)
}

/// Largest radius (to relative precision [`SEARCH_TOLERANCE`]) at which the
/// MT value reaches `(sdp_threshold_high - value_tolerance) * k`; 0 if none.
///
/// The search is a bisection between radii bracketing the answer: below, the
/// best integral direction among the offsets and their sum; above, the
/// per-row bound `X_{b,b} <= |Z_i - x|^2 / r^2`. The lower endpoint is returned.
pub fn estimate_distance(z: &Points, x: &[f64], cfg: &EstimatorConfig) -> Result<f64> {
    check_dims(z, x)?;
    let theta = threshold(z.len(), cfg);
    let offsets: Vec<Vec<f64>> = z.rows().map(|zi| linalg::sub(zi, x)).collect();
    let norms: Vec<f64> = offsets.iter().map(|w| linalg::norm(w)).collect();
    let nonzero = norms.iter().filter(|&&a| a > 0.0).count();
    // Rows with Z_i = x force X_{b,b} = 0 for every r > 0.
    if (nonzero as f64) < theta {
        return Ok(0.0);
    }
    let mut hi = radius_upper_bound(&norms, theta);
    let mut lo = radius_lower_bound(&offsets, theta).min(hi);
    if lo <= 0.0 {
        let mut r = hi;
        let mut found = false;
        for _ in 0..MAX_HALVINGS {
            r *= 0.5;
            if r == 0.0 {
                break;
            }
            if qualifies(z, x, r, theta, cfg)? {
                found = true;
                break;
            }
            hi = r;
        }
        if !found {
            return Ok(0.0);
        }
        lo = r;
    }
    while hi > lo * (1.0 + SEARCH_TOLERANCE) {
        let mid = 0.5 * (lo + hi);
        if qualifies(z, x, mid, theta, cfg)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Top eigenvector of the v-block of MT at radius `r`, signed so that most
/// offsets have positive projection (ties keep the sign).
pub fn direction_at_radius(z: &Points, x: &[f64], r: f64, cfg: &EstimatorConfig) -> Result<Vec<f64>> {
    check_dims(z, x)?;
    let inst = TestingProgramInstance::new(x.to_vec(), r, z.clone())?;
    let sol = solve_mt(&inst, &cfg.solver)?;
    let (_, y) = linalg::top_eigenvector(&sol.v_block, POWER_TOLERANCE, POWER_ITERATIONS);
    let mut plus = 0usize;
    let mut minus = 0usize;
    for zi in z.rows() {
        let p = linalg::dot(&linalg::sub(zi, x), &y);
        if p > 0.0 {
            plus += 1;
        } else if p < 0.0 {
            minus += 1;
        }
    }
    Ok(if minus > plus { linalg::scale(&y, -1.0) } else { y })
}

/// Unit direction from `x` towards the bulk of the bucket means.
pub fn estimate_gradient(z: &Points, x: &[f64], cfg: &EstimatorConfig) -> Result<Vec<f64>> {
    let r = estimate_distance(z, x, cfg)?;
    direction_at_radius(z, x, r, cfg)
}

/// Runs `x <- x + step * d(x) * g(x)` for `t = 0..=T` and returns the iterate
/// with the smallest distance estimate (earliest on ties).
///
/// The direction at the final iterate is never used and is not computed.
/// Once an iterate repeats exactly, every later one equals it and the rest of
/// the trace is filled in without further solves.
pub fn gradient_descent(
    z: &Points,
    x_dagger: &[f64],
    t_max: usize,
    cfg: &EstimatorConfig,
) -> Result<(Vec<f64>, DescentTrace)> {
    check_dims(z, x_dagger)?;
    if t_max == 0 {
        return Err(Error::InvalidConfig("gradient descent needs T >= 1".into()));
    }
    let mut x = x_dagger.to_vec();
    let mut iterates = Vec::with_capacity(t_max + 1);
    let mut distances = Vec::with_capacity(t_max + 1);
    let mut best = 0;
    for t in 0..=t_max {
        let dt = estimate_distance(z, &x, cfg)?;
        iterates.push(x.clone());
        distances.push(dt);
        if dt < distances[best] {
            best = t;
        }
        if t == t_max {
            break;
        }
        let next = if dt > 0.0 {
            let g = direction_at_radius(z, &x, dt, cfg)?;
            linalg::add(&x, &linalg::scale(&g, cfg.step_factor * dt))
        } else {
            x.clone()
        };
        if next == x {
            for _ in (t + 1)..=t_max {
                iterates.push(x.clone());
                distances.push(dt);
            }
            break;
        }
        x = next;
    }
    let out = iterates[best].clone();
    Ok((out, DescentTrace { iterates, distance_estimates: distances, best_index: best }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian, make_rng};

    fn cfg() -> EstimatorConfig {
        EstimatorConfig::desk(0.1, 1000, 3).unwrap()
    }

    /// Exact supremum for colinear offsets of length `len`: the MT value is
    /// `k len^2 / r^2` for `r >= len`.
    fn colinear_sup(len: f64, cfg: &EstimatorConfig) -> f64 {
        len / (cfg.sdp_threshold_high - cfg.solver.value_tolerance).sqrt()
    }

    #[test]
    fn distance_is_zero_at_the_points() {
        let z = Points::repeat(&[1.0, 2.0, 3.0], 10);
        assert_eq!(estimate_distance(&z, &[1.0, 2.0, 3.0], &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn distance_to_a_spike() {
        let c = cfg();
        for len in [0.01, 1.0, 37.0] {
            let z = Points::repeat(&[len, 0.0, 0.0], 12);
            let d = estimate_distance(&z, &[0.0; 3], &c).unwrap();
            let sup = colinear_sup(len, &c);
            assert!(d <= sup * (1.0 + 1e-9) && d >= sup * (1.0 - SEARCH_TOLERANCE), "{d} vs {sup}");
            assert!(d >= len * (1.0 - 1e-2));
        }
    }

    #[test]
    fn radius_brackets_hold() {
        let mut rng = make_rng(2);
        let c = cfg();
        for _ in 0..5 {
            let rows: Vec<Vec<f64>> = (0..15).map(|_| (0..3).map(|_| 1.0 + gaussian(&mut rng)).collect()).collect();
            let z = Points::from_rows(&rows).unwrap();
            let theta = threshold(15, &c);
            let offsets = z.to_rows();
            let norms: Vec<f64> = offsets.iter().map(|w| linalg::norm(w)).collect();
            let lo = radius_lower_bound(&offsets, theta);
            let hi = radius_upper_bound(&norms, theta);
            assert!(lo <= hi);
            if lo > 0.0 {
                assert!(qualifies(&z, &[0.0; 3], lo, theta, &c).unwrap());
            }
            assert!(!qualifies(&z, &[0.0; 3], hi * 1.001, theta, &c).unwrap());
        }
    }

    #[test]
    fn too_few_distinct_rows_give_zero() {
        let mut rows = vec![vec![0.0, 0.0]; 5];
        rows.push(vec![3.0, 0.0]);
        let z = Points::from_rows(&rows).unwrap();
        assert_eq!(estimate_distance(&z, &[0.0, 0.0], &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn gradient_points_at_spike() {
        let z = Points::repeat(&[0.0, 4.0, 0.0], 9);
        let g = estimate_gradient(&z, &[0.0; 3], &cfg()).unwrap();
        assert!(g[1] >= 0.99, "{g:?}");
        assert!((linalg::norm(&g) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_sign_tie_keeps_positive() {
        // Mirror-symmetric under e_1 <-> -e_1 with x on the mirror plane.
        let rows = vec![vec![2.0, 0.0], vec![-2.0, 0.0], vec![2.0, 0.0], vec![-2.0, 0.0]];
        let z = Points::from_rows(&rows).unwrap();
        let c = cfg();
        let y = {
            let inst = TestingProgramInstance::new(vec![0.0, 0.0], 1.0, z.clone()).unwrap();
            let sol = solve_mt(&inst, &c.solver).unwrap();
            linalg::top_eigenvector(&sol.v_block, POWER_TOLERANCE, POWER_ITERATIONS).1
        };
        let g = direction_at_radius(&z, &[0.0, 0.0], 1.0, &c).unwrap();
        assert_eq!(g, y);
        assert_eq!(g, direction_at_radius(&z, &[0.0, 0.0], 1.0, &c).unwrap());
    }

    #[test]
    fn gradient_sign_follows_majority() {
        let rows = vec![vec![-2.0, 0.0], vec![-2.0, 0.1], vec![-2.0, -0.1], vec![3.0, 0.0]];
        let z = Points::from_rows(&rows).unwrap();
        let g = direction_at_radius(&z, &[0.0, 0.0], 1.0, &cfg()).unwrap();
        assert!(g[0] < 0.0);
    }

    #[test]
    fn descent_contracts_towards_a_point_mass() {
        let c = cfg();
        let z = Points::repeat(&[0.0, 0.0, 0.0], 10);
        let start = [10.0, 0.0, 0.0];
        // Each step removes step * d(x) with d(x) in [sup (1 - 1e-2), sup], sup = |x| / sqrt(0.899).
        let fast = 1.0 - c.step_factor * colinear_sup(1.0, &c);
        let slow = 1.0 - c.step_factor * colinear_sup(1.0, &c) * (1.0 - SEARCH_TOLERANCE);
        let (x, trace) = gradient_descent(&z, &start, 60, &c).unwrap();
        let err = linalg::norm(&x);
        assert!(err <= 10.0 * slow.powi(60) * 1.001 && err >= 10.0 * fast.powi(60) * 0.999, "{err}");
        assert!(err > 0.1);
        assert_eq!(trace.iterates.len(), 61);
        let (x, _) = gradient_descent(&z, &start, 90, &c).unwrap();
        assert!(linalg::norm(&x) <= 0.1);
    }

    #[test]
    fn one_step_compares_two_points() {
        let c = cfg();
        let z = Points::repeat(&[0.0, 0.0], 6);
        let (x, trace) = gradient_descent(&z, &[3.0, 4.0], 1, &c).unwrap();
        assert_eq!(trace.iterates.len(), 2);
        assert_eq!(trace.best_index, 1);
        assert_eq!(x, trace.iterates[1]);
        assert!(gradient_descent(&z, &[3.0, 4.0], 0, &c).is_err());
    }

    #[test]
    fn single_bucket_terminates() {
        let z = Points::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let (x, trace) = gradient_descent(&z, &[5.0, 5.0], 20, &cfg()).unwrap();
        assert_eq!(trace.iterates.len(), 21);
        assert!(linalg::dist(&x, &[1.0, -1.0]) < linalg::dist(&[5.0, 5.0], &[1.0, -1.0]));
    }

    #[test]
    fn best_iterate_has_smallest_estimate() {
        let mut rng = make_rng(4);
        let rows: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| gaussian(&mut rng)).collect()).collect();
        let z = Points::from_rows(&rows).unwrap();
        let (x, trace) = gradient_descent(&z, &[6.0, -3.0, 2.0], 15, &cfg()).unwrap();
        let best = trace.distance_estimates[trace.best_index];
        assert!(trace.distance_estimates.iter().all(|&d| best <= d));
        assert_eq!(x, trace.iterates[trace.best_index]);
        assert_eq!(trace.iterates.len(), trace.distance_estimates.len());
    }

    #[test]
    fn stationary_start_fills_the_trace() {
        let z = Points::repeat(&[1.0, 1.0], 8);
        let (x, trace) = gradient_descent(&z, &[1.0, 1.0], 5, &cfg()).unwrap();
        assert_eq!(x, vec![1.0, 1.0]);
        assert_eq!(trace.distance_estimates, vec![0.0; 6]);
        assert_eq!(trace.best_index, 0);
    }
}
