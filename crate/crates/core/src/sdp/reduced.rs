//! MT with the bucket rows maximized out in closed form.
//!
//! Write the moment matrix as the Gram matrix of vectors `u_0, u_{b_i}, u_{v_j}`
//! and put `m = X_{0,v}`, `P = X_{v,v}`, `w_i = Z_i - x`, `c_i = <m, w_i>` and
//! `p_i = w_i^T P w_i`. For fixed `(m, P)` the largest admissible `X_{b_i,b_i}` is
//!
//! ```text
//! 1                                         if c_i >= r
//! 1 - (r - c_i)^2 / (p_i - 2 r c_i + r^2)   otherwise
//! ```
//!
//! attained by `u_{b_i} = t u_0 + sqrt(t - t^2) e_i` with `e_i` the unit part
//! of `sum_j w_ij u_{v_j}` orthogonal to `u_0`. Hence MT is the maximum of
//!
//! ```text
//! F(Y) = sum_i phi(a_i^T Y e_0, a_i^T Y a_i),   phi(s, q) = 1 - max(s, 0)^2 / q,
//! ```
//!
//! with `a_i = (r, -w_i)`, over `Y = [[1, m^T], [m, P]] >= 0`, `tr P = 1`.
//! `phi` is concave, so this is a small convex program. It is solved by a
//! log-det barrier path with damped Newton steps. Every iterate is strictly
//! feasible, and the tangent plane of `F` at the iterate gives a rigorous
//! upper bound: the linear maximization over the feasible set has a closed
//! form dual up to a one-dimensional convex search.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use super::{check_instance, Decision, SdpSolution, TestingProgramInstance};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg;

const SHRINK: f64 = 0.2;
const CENTERED: f64 = 0.05;
const ARMIJO: f64 = 0.25;
const MAX_HALVINGS: usize = 60;
/// Fraction of `value_tolerance * k` allowed between value and upper bound.
const GAP_FRACTION: f64 = 0.25;

/// Matrix entries `(row, col, coefficient)` of one coordinate direction.
type Basis = Vec<(usize, usize, f64)>;

struct Problem {
    n: usize,
    k: usize,
    /// `a_i = (r, -w_i) / scale`, row-major `k x n`. Rows that vanish are dropped
    /// (they contribute the constant 1).
    a: Vec<f64>,
    active: usize,
    /// Contribution of the dropped rows.
    constant: f64,
    basis: Vec<Basis>,
    /// Per active row, coordinates of the gradients of `s` and `q`.
    js: Vec<f64>,
    jq: Vec<f64>,
    /// Unscaled offsets and radius, for the moment matrix.
    w: Vec<Vec<f64>>,
    r: f64,
}

impl Problem {
    fn new(inst: &TestingProgramInstance) -> Self {
        let d = inst.d();
        let n = d + 1;
        let w = inst.offsets();
        let scale = w.iter().map(|o| linalg::norm(o)).fold(inst.r, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let mut a = Vec::new();
        let mut constant = 0.0;
        for wi in &w {
            if inst.r == 0.0 && wi.iter().all(|&v| v == 0.0) {
                constant += 1.0;
                continue;
            }
            a.push(inst.r / scale);
            a.extend(wi.iter().map(|v| -v / scale));
        }
        let active = a.len() / n;

        let mut basis: Vec<Basis> = Vec::new();
        for p in 0..n {
            for q in (p + 1)..n {
                basis.push(vec![(p, q, 1.0), (q, p, 1.0)]);
            }
        }
        for j in 1..d {
            basis.push(vec![(j, j, 1.0), (d, d, -1.0)]);
        }

        let nb = basis.len();
        let mut js = vec![0.0; active * nb];
        let mut jq = vec![0.0; active * nb];
        for i in 0..active {
            let ai = &a[i * n..(i + 1) * n];
            for (c, e) in basis.iter().enumerate() {
                let mut s = 0.0;
                let mut q = 0.0;
                for &(x, y, coef) in e {
                    // sym(a e_0^T) and a a^T.
                    let sx = 0.5 * (if y == 0 { ai[x] } else { 0.0 } + if x == 0 { ai[y] } else { 0.0 });
                    s += coef * sx;
                    q += coef * ai[x] * ai[y];
                }
                js[i * nb + c] = s;
                jq[i * nb + c] = q;
            }
        }
        Problem { n, k: inst.k(), a, active, constant, basis, js, jq, w, r: inst.r }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    fn start(&self) -> DMatrix<f64> {
        let d = self.n - 1;
        let mut y = DMatrix::zeros(self.n, self.n);
        y[(0, 0)] = 1.0;
        for j in 1..self.n {
            y[(j, j)] = 1.0 / d as f64;
        }
        y
    }

    /// `(s_i, q_i)` for every active row.
    fn moments(&self, y: &DMatrix<f64>) -> Vec<(f64, f64)> {
        (0..self.active)
            .map(|i| {
                let ai = self.row(i);
                let ya = y * DVector::from_column_slice(ai);
                (ya[0], linalg::dot(ai, ya.as_slice()))
            })
            .collect()
    }

    fn objective(&self, mom: &[(f64, f64)]) -> f64 {
        self.constant + mom.iter().map(|&(s, q)| phi(s, q)).sum::<f64>()
    }

    /// `grad F` as a symmetric matrix.
    fn gradient_matrix(&self, mom: &[(f64, f64)]) -> DMatrix<f64> {
        let n = self.n;
        let mut g = DMatrix::zeros(n, n);
        for (i, &(s, q)) in mom.iter().enumerate() {
            let (ds, dq) = phi_grad(s, q);
            let ai = self.row(i);
            for x in 0..n {
                g[(x, 0)] += 0.5 * ds * ai[x];
                g[(0, x)] += 0.5 * ds * ai[x];
                for y in 0..n {
                    g[(x, y)] += dq * ai[x] * ai[y];
                }
            }
        }
        g
    }

    fn along(&self, dir: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (e, &z) in self.basis.iter().zip(dir) {
            for &(x, y, c) in e {
                m[(x, y)] += c * z;
            }
        }
        m
    }

    /// Newton direction for `F + mu log det Y`; returns `(direction, decrement^2)`.
    fn newton(&self, s_inv: &DMatrix<f64>, mom: &[(f64, f64)], mu: f64) -> Option<(Vec<f64>, f64)> {
        let nb = self.basis.len();
        let mut grad_m = self.gradient_matrix(mom);
        grad_m += s_inv * mu;
        let grad: Vec<f64> = self
            .basis
            .iter()
            .map(|e| e.iter().map(|&(x, y, c)| c * grad_m[(x, y)]).sum())
            .collect();

        // Negated Hessian: mu tr(S E_a S E_b) - sum_i J_i^T H_i J_i.
        let mut h = DMatrix::zeros(nb, nb);
        for (ia, ea) in self.basis.iter().enumerate() {
            for (ib, eb) in self.basis.iter().enumerate().skip(ia) {
                let mut t = 0.0;
                for &(x, yy, c) in ea {
                    for &(u, v, c2) in eb {
                        t += c * c2 * s_inv[(v, x)] * s_inv[(yy, u)];
                    }
                }
                h[(ia, ib)] = mu * t;
            }
        }
        for (i, &(s, q)) in mom.iter().enumerate() {
            let (hss, hsq, hqq) = phi_hess(s, q);
            if hss == 0.0 && hsq == 0.0 && hqq == 0.0 {
                continue;
            }
            let js = &self.js[i * nb..(i + 1) * nb];
            let jq = &self.jq[i * nb..(i + 1) * nb];
            for a in 0..nb {
                let ra = hss * js[a] + hsq * jq[a];
                let qa = hsq * js[a] + hqq * jq[a];
                if ra == 0.0 && qa == 0.0 {
                    continue;
                }
                for b in a..nb {
                    h[(a, b)] -= ra * js[b] + qa * jq[b];
                }
            }
        }
        for a in 0..nb {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        let chol = Cholesky::new(h)?;
        let g = DVector::from_vec(grad);
        let dir = chol.solve(&g);
        let dec = g.dot(&dir);
        Some((dir.as_slice().to_vec(), dec.max(0.0)))
    }

    /// Rigorous upper bound on the optimum from the tangent plane at `y`.
    fn upper_bound(&self, y: &DMatrix<f64>, mom: &[(f64, f64)]) -> f64 {
        let n = self.n;
        let d = n - 1;
        let g = self.gradient_matrix(mom);
        let linear_at_y = g.dot(y);
        let gp = g.view((1, 1), (d, d)).into_owned();
        let gv: Vec<f64> = (1..n).map(|j| g[(j, 0)]).collect();
        let eig = SymmetricEigen::new(gp);
        let lam: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let gam: Vec<f64> = (0..d)
            .map(|j| {
                let c: f64 = (0..d).map(|l| eig.eigenvectors[(l, j)] * gv[l]).sum();
                c * c
            })
            .collect();
        let top = lam.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = gam.iter().sum();
        let h = |t: f64| -> f64 {
            g[(0, 0)]
                + t
                + lam
                    .iter()
                    .zip(&gam)
                    .filter(|(_, &c)| c > 0.0)
                    .map(|(&l, &c)| c / (t - l))
                    .sum::<f64>()
        };
        let best = if total <= 0.0 {
            g[(0, 0)] + top
        } else {
            let slope = |t: f64| 1.0 - lam.iter().zip(&gam).map(|(&l, &c)| c / ((t - l) * (t - l))).sum::<f64>();
            let (mut lo, mut hi) = (top, top + total.sqrt());
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if slope(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            h(hi)
        };
        self.objective(mom) + best - linear_at_y
    }

    /// Moment matrix realizing `F(y)`.
    fn moment_matrix(&self, y: &DMatrix<f64>, mom: &[(f64, f64)]) -> (DMatrix<f64>, f64) {
        let n = self.n;
        let d = n - 1;
        let k = self.k;
        let l = match Cholesky::new(y.clone()) {
            Some(c) => c.unpack(),
            None => DMatrix::zeros(n, n),
        };
        let y0: Vec<f64> = l.row(0).iter().copied().collect();
        let mut u = DMatrix::zeros(1 + k + d, n);
        u.row_mut(0).copy_from(&l.row(0));
        for j in 0..d {
            u.row_mut(1 + k + j).copy_from(&l.row(1 + j));
        }
        let mut active = 0;
        let mut violation = 0.0;
        for (i, wi) in self.w.iter().enumerate() {
            let t = if self.r == 0.0 && wi.iter().all(|&v| v == 0.0) {
                1.0
            } else {
                let (s, q) = mom[active];
                active += 1;
                phi(s, q).clamp(0.0, 1.0)
            };
            // B_i = sum_j w_ij y_j.
            let mut bvec = vec![0.0; n];
            for (j, &wj) in wi.iter().enumerate() {
                for c in 0..n {
                    bvec[c] += wj * l[(1 + j, c)];
                }
            }
            let cb = linalg::dot(&bvec, &y0);
            let perp: Vec<f64> = bvec.iter().zip(&y0).map(|(b, y)| b - cb * y).collect();
            let sn = linalg::norm(&perp);
            let side = (t - t * t).max(0.0).sqrt();
            for c in 0..n {
                let e = if sn > 0.0 { perp[c] / sn } else { 0.0 };
                u[(1 + i, c)] = t * y0[c] + side * e;
            }
            let ub: Vec<f64> = u.row(1 + i).iter().copied().collect();
            let slack = linalg::dot(&ub, &bvec) - self.r * linalg::dot(&ub, &ub);
            let scale = linalg::norm(wi).max(self.r).max(1.0);
            violation += ((-slack).max(0.0) / scale).powi(2);
        }
        let mut x = &u * u.transpose();
        super::symmetrize(&mut x);
        let mut res = (x[(0, 0)] - 1.0).powi(2);
        let tr: f64 = (0..d).map(|j| x[(1 + k + j, 1 + k + j)]).sum();
        res += (tr - 1.0).powi(2);
        for i in 0..k {
            res += (x[(0, 1 + i)] - x[(1 + i, 1 + i)]).powi(2);
        }
        (x, (res + violation).sqrt())
    }
}

fn phi(s: f64, q: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if q <= 0.0 {
        0.0
    } else {
        (1.0 - s * s / q).max(0.0)
    }
}

fn phi_grad(s: f64, q: f64) -> (f64, f64) {
    if s <= 0.0 || q <= 0.0 {
        (0.0, 0.0)
    } else {
        (-2.0 * s / q, s * s / (q * q))
    }
}

fn phi_hess(s: f64, q: f64) -> (f64, f64, f64) {
    if s <= 0.0 || q <= 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        (-2.0 / q, 2.0 * s / (q * q), -2.0 * s * s / (q * q * q))
    }
}

enum Stop {
    Converged,
    Decided(Decision),
}

struct Outcome {
    y: DMatrix<f64>,
    mom: Vec<(f64, f64)>,
    value: f64,
    upper: f64,
    steps: usize,
    stop: Option<Stop>,
}

/// `F(y) + mu log det y`, or `None` outside the cone.
fn barrier_value(pb: &Problem, y: &DMatrix<f64>, mu: f64) -> Option<f64> {
    let chol = Cholesky::new(y.clone())?;
    let logdet: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Some(pb.objective(&pb.moments(y)) + mu * logdet)
}

fn run(pb: &Problem, cfg: &SolverConfig, threshold: Option<f64>) -> Outcome {
    let target = GAP_FRACTION * cfg.value_tolerance * pb.k as f64;
    let mut y = pb.start();
    let mut mom = pb.moments(&y);
    let mut value = pb.objective(&mom);
    let mut upper = f64::INFINITY;
    if pb.basis.is_empty() || pb.active == 0 {
        return Outcome { y, mom, value, upper: value, steps: 0, stop: Some(Stop::Converged) };
    }
    let mut mu = pb.k as f64 / pb.n as f64;
    let floor = 1e-13 * pb.k as f64;
    let mut steps = 0;
    while steps < cfg.max_iterations {
        let s_inv = match Cholesky::new(y.clone()) {
            Some(c) => c.inverse(),
            None => break,
        };
        let Some((dir, dec)) = pb.newton(&s_inv, &mom, mu) else { break };
        steps += 1;
        let phi0 = match barrier_value(pb, &y, mu) {
            Some(v) => v,
            None => break,
        };
        let delta = pb.along(&dir);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..MAX_HALVINGS {
            let cand = &y + &delta * t;
            if let Some(v) = barrier_value(pb, &cand, mu) {
                if v >= phi0 + ARMIJO * t * dec {
                    y = cand;
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        mom = pb.moments(&y);
        value = pb.objective(&mom);
        upper = upper.min(pb.upper_bound(&y, &mom));
        if let Some(theta) = threshold {
            if value >= theta {
                return Outcome { y, mom, value, upper, steps, stop: Some(Stop::Decided(Decision::Above)) };
            }
            if upper < theta {
                return Outcome { y, mom, value, upper, steps, stop: Some(Stop::Decided(Decision::Below)) };
            }
        }
        if upper - value <= target {
            let stop = match threshold {
                Some(theta) => Stop::Decided(if value >= theta { Decision::Above } else { Decision::Below }),
                None => Stop::Converged,
            };
            return Outcome { y, mom, value, upper, steps, stop: Some(stop) };
        }
        if !moved || dec <= CENTERED * mu {
            if mu <= floor {
                break;
            }
            mu *= SHRINK;
        }
    }
    Outcome { y, mom, value, upper, steps, stop: None }
}

fn finish(pb: &Problem, out: &Outcome) -> SdpSolution {
    let (x, primal) = pb.moment_matrix(&out.y, &out.mom);
    let mut sol = SdpSolution::from_moment_matrix(pb.k, pb.n - 1, x, primal, out.upper - out.value, out.upper, out.steps);
    sol.value = out.value;
    sol
}

fn non_convergence(out: &Outcome, primal: f64) -> Error {
    Error::NonConvergence {
        iterations: out.steps,
        primal_residual: primal,
        dual_residual: out.upper - out.value,
        gap: out.upper - out.value,
    }
}

/// Solves MT to within `value_tolerance * k` of the optimum.
pub fn solve_mt(inst: &TestingProgramInstance, cfg: &SolverConfig) -> Result<SdpSolution> {
    check_instance(inst, cfg)?;
    let pb = Problem::new(inst);
    let out = run(&pb, cfg, None);
    let sol = finish(&pb, &out);
    match out.stop {
        Some(_) => Ok(sol),
        None => Err(non_convergence(&out, sol.primal_residual)),
    }
}

/// Decides whether the MT optimum reaches `threshold`.
///
/// Stops at the first iterate whose value reaches the threshold or whose upper
/// bound falls below it. When neither happens before the value is pinned down
/// to the usual tolerance, the value decides.
pub fn decide_mt(inst: &TestingProgramInstance, cfg: &SolverConfig, threshold: f64) -> Result<Decision> {
    check_instance(inst, cfg)?;
    let pb = Problem::new(inst);
    let out = run(&pb, cfg, Some(threshold));
    match out.stop {
        Some(Stop::Decided(dec)) => Ok(dec),
        _ => Err(non_convergence(&out, f64::NAN)),
    }
}
