//! Operator-splitting solver for MT.
//!
//! The iterate alternates between the affine set cut out by the equality
//! constraints (inequalities carry nonnegative slacks) and the PSD cone:
//!
//! ```text
//! (X, s) = Proj_aff(Y - U + C/rho, t - W)
//! Y      = Proj_psd(X~ + U),  t = max(s~ + W, 0)     (X~, s~ over-relaxed)
//! U     += X~ - Y,            W += s~ - t
//! ```
//!
//! The Gram matrix of the equality rows is block diagonal with 2x2 blocks
//! (one per bucket) so the affine projection is closed form. The multiplier
//! of the affine projection, scaled by `rho`, is a dual iterate; it yields a
//! rigorous upper bound on the optimum via `tr(X) <= k + 2`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_instance, symmetrize, SdpSolution, TestingProgramInstance};
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg;

const OVER_RELAXATION: f64 = 1.6;
const CHECK_EVERY: usize = 10;
const ADAPT_EVERY: usize = 50;

struct State {
    y: DMatrix<f64>,
    u: DMatrix<f64>,
    t: Vec<f64>,
    w: Vec<f64>,
    rho: f64,
}

struct Structure {
    k: usize,
    d: usize,
    n: usize,
    /// Offsets `(Z_i - x) / scale`, row-major `k x d`.
    w: Vec<f64>,
    /// `r / scale`.
    r: f64,
    /// Inverses of the per-bucket 2x2 Gram blocks, `[a, b, b, c]`.
    blocks: Vec<[f64; 3]>,
}

impl Structure {
    fn new(inst: &TestingProgramInstance) -> Self {
        let k = inst.k();
        let d = inst.d();
        let offsets = inst.offsets();
        let max_norm = offsets.iter().map(|o| linalg::norm(o)).fold(0.0, f64::max);
        let scale = if max_norm > 0.0 { max_norm } else { 1.0 };
        let r = inst.r / scale;
        let w: Vec<f64> = offsets.iter().flat_map(|o| o.iter().map(|v| v / scale)).collect();
        let blocks = (0..k)
            .map(|i| {
                let wn2: f64 = w[i * d..(i + 1) * d].iter().map(|v| v * v).sum();
                let (a, b, c) = (1.5, r, 0.5 * wn2 + r * r + 1.0);
                let det = a * c - b * b;
                [c / det, -b / det, a / det]
            })
            .collect();
        Structure { k, d, n: 1 + k + d, w, r, blocks }
    }

    fn b(&self, i: usize) -> usize {
        1 + i
    }

    fn v(&self, j: usize) -> usize {
        1 + self.k + j
    }

    fn wrow(&self, i: usize) -> &[f64] {
        &self.w[i * self.d..(i + 1) * self.d]
    }

    fn cold_start(&self) -> State {
        let mut y = DMatrix::zeros(self.n, self.n);
        y[(0, 0)] = 1.0;
        for j in 0..self.d {
            let v = self.v(j);
            y[(v, v)] = 1.0 / self.d as f64;
        }
        State {
            y,
            u: DMatrix::zeros(self.n, self.n),
            t: vec![0.0; self.k],
            w: vec![0.0; self.k],
            rho: 1.0,
        }
    }

    /// Projects `(p, q)` onto the affine set in place and returns the multiplier.
    ///
    /// Multiplier layout: `[row_11, eq_1..eq_k, trace, ineq_1..ineq_k]`.
    fn project_affine(&self, p: &mut DMatrix<f64>, q: &mut [f64]) -> Vec<f64> {
        let (k, d) = (self.k, self.d);
        let mut lam = vec![0.0; 2 * k + 2];
        lam[0] = p[(0, 0)] - 1.0;
        let trace: f64 = (0..d).map(|j| p[(self.v(j), self.v(j))]).sum();
        lam[k + 1] = (trace - 1.0) / d as f64;
        for i in 0..k {
            let b = self.b(i);
            let eq = 0.5 * (p[(0, b)] + p[(b, 0)]) - p[(b, b)];
            let wi = self.wrow(i);
            let mut ineq = -self.r * p[(b, b)] - q[i];
            for (j, wj) in wi.iter().enumerate() {
                let v = self.v(j);
                ineq += wj * 0.5 * (p[(b, v)] + p[(v, b)]);
            }
            let [ia, ib, ic] = self.blocks[i];
            lam[1 + i] = ia * eq + ib * ineq;
            lam[k + 2 + i] = ib * eq + ic * ineq;
        }
        self.apply_adjoint(p, &lam, -1.0);
        for i in 0..k {
            q[i] += lam[k + 2 + i];
        }
        lam
    }

    /// `m += sign * A^*(lam)` (the slack part is handled by the caller).
    fn apply_adjoint(&self, m: &mut DMatrix<f64>, lam: &[f64], sign: f64) {
        let k = self.k;
        m[(0, 0)] += sign * lam[0];
        for j in 0..self.d {
            let v = self.v(j);
            m[(v, v)] += sign * lam[k + 1];
        }
        for i in 0..k {
            let b = self.b(i);
            let le = lam[1 + i];
            let li = lam[k + 2 + i];
            m[(0, b)] += sign * 0.5 * le;
            m[(b, 0)] += sign * 0.5 * le;
            m[(b, b)] -= sign * (le + self.r * li);
            for (j, wj) in self.wrow(i).iter().enumerate() {
                let v = self.v(j);
                m[(b, v)] += sign * 0.5 * li * wj;
                m[(v, b)] += sign * 0.5 * li * wj;
            }
        }
    }

    /// Dual bound: `b^T y + (k + 2) * max(0, -lambda_min(A^* y - C))` with the
    /// inequality multipliers clipped to be nonpositive.
    fn upper_bound(&self, y: &[f64]) -> f64 {
        let k = self.k;
        let mut y = y.to_vec();
        for v in &mut y[k + 2..] {
            *v = v.min(0.0);
        }
        let mut m = DMatrix::zeros(self.n, self.n);
        self.apply_adjoint(&mut m, &y, 1.0);
        for i in 0..k {
            let b = self.b(i);
            m[(0, b)] -= 0.5;
            m[(b, 0)] -= 0.5;
        }
        let lmin = m.symmetric_eigenvalues().min();
        y[0] + y[k + 1] + (k as f64 + 2.0) * (-lmin).max(0.0)
    }

    fn value(&self, y: &DMatrix<f64>) -> f64 {
        (0..self.k).map(|i| y[(0, self.b(i))]).sum()
    }
}

fn project_psd(m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let positive = eig.eigenvalues.iter().filter(|&&l| l > 0.0).count();
    let mut out;
    if positive * 2 <= n {
        out = DMatrix::zeros(n, n);
        for (c, &l) in eig.eigenvalues.iter().enumerate() {
            if l > 0.0 {
                let v = eig.eigenvectors.column(c);
                out.ger(l, &v, &v, 1.0);
            }
        }
    } else {
        out = eig.recompose();
        for (c, &l) in eig.eigenvalues.iter().enumerate() {
            if l < 0.0 {
                let v = eig.eigenvectors.column(c);
                out.ger(-l, &v, &v, 1.0);
            }
        }
    }
    symmetrize(&mut out);
    out
}

struct Outcome {
    state: State,
    primal: f64,
    dual: f64,
    upper: f64,
    iterations: usize,
    converged: bool,
}

fn run(st: &Structure, cfg: &SolverConfig) -> Outcome {
    let mut state = st.cold_start();
    let kf = st.k.max(1) as f64;
    let value_slack = cfg.value_tolerance * kf;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut upper = f64::INFINITY;
    let mut lam_rho = vec![0.0; 2 * st.k + 2];

    for iter in 1..=cfg.max_iterations {
        let rho = state.rho;
        // X-update: affine projection of the shifted point.
        let mut x = &state.y - &state.u;
        for i in 0..st.k {
            let b = st.b(i);
            x[(0, b)] += 0.5 / rho;
            x[(b, 0)] += 0.5 / rho;
        }
        let mut s: Vec<f64> = state.t.iter().zip(&state.w).map(|(t, w)| t - w).collect();
        let lam = st.project_affine(&mut x, &mut s);
        for (dst, l) in lam_rho.iter_mut().zip(&lam) {
            *dst = rho * l;
        }

        // Over-relaxation, then the cone step.
        let a = OVER_RELAXATION;
        let xr = &x * a + &state.y * (1.0 - a);
        let sr: Vec<f64> = s.iter().zip(&state.t).map(|(s, t)| a * s + (1.0 - a) * t).collect();
        let y_old = std::mem::replace(&mut state.y, DMatrix::zeros(0, 0));
        state.y = project_psd(&xr + &state.u);
        let t_old = state.t.clone();
        for i in 0..st.k {
            state.t[i] = (sr[i] + state.w[i]).max(0.0);
        }
        state.u += &xr - &state.y;
        symmetrize(&mut state.u);
        for i in 0..st.k {
            state.w[i] += sr[i] - state.t[i];
        }

        let slack_p: f64 = s.iter().zip(&state.t).map(|(a, b)| (a - b) * (a - b)).sum();
        primal = ((&x - &state.y).norm_squared() + slack_p).sqrt();
        let slack_d: f64 = state.t.iter().zip(&t_old).map(|(a, b)| (a - b) * (a - b)).sum();
        dual = rho * ((&state.y - &y_old).norm_squared() + slack_d).sqrt();

        if iter % CHECK_EVERY == 0 && primal <= cfg.primal_tolerance {
            let value = st.value(&state.y);
            upper = upper.min(st.upper_bound(&lam_rho));
            if upper - value <= value_slack {
                return Outcome { state, primal, dual, upper, iterations: iter, converged: true };
            }
        }

        if iter % ADAPT_EVERY == 0 {
            if primal > 10.0 * dual {
                state.rho *= 2.0;
                state.u /= 2.0;
                state.w.iter_mut().for_each(|v| *v /= 2.0);
            } else if dual > 10.0 * primal {
                state.rho /= 2.0;
                state.u *= 2.0;
                state.w.iter_mut().for_each(|v| *v *= 2.0);
            }
        }
    }
    Outcome { state, primal, dual, upper, iterations: cfg.max_iterations, converged: false }
}

/// Solves MT by operator splitting on the full moment matrix.
///
/// Much slower than [`solve_mt`](super::solve_mt); kept as an independent
/// reference on small instances.
pub fn solve_mt_dense(inst: &TestingProgramInstance, cfg: &SolverConfig) -> Result<SdpSolution> {
    check_instance(inst, cfg)?;
    let st = Structure::new(inst);
    let out = run(&st, cfg);
    let sol = SdpSolution::from_moment_matrix(
        st.k,
        st.d,
        out.state.y.clone(),
        out.primal,
        out.dual,
        out.upper,
        out.iterations,
    );
    if out.converged {
        Ok(sol)
    } else {
        Err(Error::NonConvergence {
            iterations: out.iterations,
            primal_residual: out.primal,
            dual_residual: out.dual,
            gap: out.upper - sol.value,
        })
    }
}
