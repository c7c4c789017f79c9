//! Exhaustive solver for the combinatorial testing problem MTE.
//!
//! For a support pattern `S`, some unit `v` satisfies `<v, Z_i - x> >= r` for
//! all `i` in `S` iff the minimum-norm point of that polyhedron has norm at
//! most one (for `r > 0`). The minimum-norm point is computed by Dykstra's
//! cyclic projection onto the half-spaces, which is coordinate ascent on the
//! dual `max_{l >= 0} r*sum(l) - |W^T l|^2 / 2`; the dual value certifies
//! infeasibility early. Undecided patterns with `|S| <= 8` fall back to an
//! exact active-set enumeration.

use nalgebra::DMatrix;

use super::TestingProgramInstance;
use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm};

pub const ENUMERATION_LIMIT: usize = 16;
const MAX_SWEEPS: usize = 100_000;
const QP_TOL: f64 = 1e-9;
const ACTIVE_SET_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct MteSolution {
    pub value: usize,
    pub b: Vec<bool>,
    /// A unit direction certifying the returned pattern.
    pub v: Vec<f64>,
}

enum Feasibility {
    Feasible(Vec<f64>),
    Infeasible,
}

/// Largest number of bucket means that can simultaneously lie `r` beyond `x`
/// along one unit direction.
pub fn solve_mte_bruteforce(inst: &TestingProgramInstance) -> Result<MteSolution> {
    inst.validate()?;
    let k = inst.k();
    if k > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard { k, limit: ENUMERATION_LIMIT });
    }
    let d = inst.d();
    let offsets = inst.offsets();

    // Sizes are tried in decreasing order: subsets of feasible patterns are feasible.
    let mut masks: Vec<u32> = (0..(1u32 << k)).collect();
    masks.sort_by_key(|m| (std::cmp::Reverse(m.count_ones()), *m));
    for mask in masks {
        let rows: Vec<&[f64]> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| offsets[i].as_slice()).collect();
        let verdict = if inst.r > 0.0 {
            min_norm_feasibility(&rows, inst.r, d)?
        } else {
            cone_feasibility(&rows, d)
        };
        if let Feasibility::Feasible(v) = verdict {
            let b = (0..k).map(|i| mask >> i & 1 == 1).collect();
            let v = linalg::normalized(&v).unwrap_or_else(|| linalg::unit(d, 0));
            return Ok(MteSolution { value: mask.count_ones() as usize, b, v });
        }
    }
    unreachable!("the empty pattern is always feasible")
}

fn project_halfspace(y: &[f64], w: &[f64], r: f64) -> Vec<f64> {
    let slack = dot(w, y) - r;
    if slack >= 0.0 {
        return y.to_vec();
    }
    let ww = dot(w, w);
    y.iter().zip(w).map(|(a, b)| a - slack * b / ww).collect()
}

fn min_norm_feasibility(rows: &[&[f64]], r: f64, d: usize) -> Result<Feasibility> {
    if rows.is_empty() {
        return Ok(Feasibility::Feasible(linalg::unit(d, 0)));
    }
    if rows.iter().any(|w| norm(w) == 0.0) {
        return Ok(Feasibility::Infeasible);
    }
    let m = rows.len();
    let mut x = vec![0.0; d];
    let mut corr = vec![vec![0.0; d]; m];
    let mut mult = vec![0.0; m];
    for _ in 0..MAX_SWEEPS {
        let mut moved = 0.0f64;
        for (i, w) in rows.iter().enumerate() {
            let y = linalg::add(&x, &corr[i]);
            let next = project_halfspace(&y, w, r);
            corr[i] = linalg::sub(&y, &next);
            mult[i] = dot(&corr[i], w) / dot(w, w);
            moved = moved.max(linalg::dist(&next, &x));
            x = next;
        }
        let worst = rows.iter().map(|w| dot(w, &x) - r).fold(f64::INFINITY, f64::min);
        let xn = norm(&x);
        if worst >= -QP_TOL * r && xn <= 1.0 {
            return Ok(Feasibility::Feasible(x));
        }
        // Dual value of the current multipliers bounds |x*|^2 / 2 from below.
        let combo: Vec<f64> = (0..d).map(|j| rows.iter().zip(&mult).map(|(w, l)| -l * w[j]).sum()).collect();
        let dual = r * mult.iter().map(|l| -l).sum::<f64>() - 0.5 * dot(&combo, &combo);
        if dual > 0.5 * (1.0 + QP_TOL) {
            return Ok(Feasibility::Infeasible);
        }
        if moved <= QP_TOL && worst >= -QP_TOL * r {
            return Ok(if xn <= 1.0 + QP_TOL { Feasibility::Feasible(x) } else { Feasibility::Infeasible });
        }
    }
    if m <= ACTIVE_SET_LIMIT {
        return Ok(active_set(rows, r, d));
    }
    Err(Error::NonConvergence { iterations: MAX_SWEEPS, primal_residual: f64::NAN, dual_residual: f64::NAN, gap: f64::NAN })
}

/// Exact minimum-norm point by enumerating linearly independent active sets.
fn active_set(rows: &[&[f64]], r: f64, d: usize) -> Feasibility {
    let m = rows.len();
    for mask in 1u32..(1u32 << m) {
        let act: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        if act.len() > d {
            continue;
        }
        let a = DMatrix::from_fn(act.len(), d, |i, j| rows[act[i]][j]);
        let gram = &a * a.transpose();
        let Some(chol) = gram.clone().cholesky() else { continue };
        let lam = chol.solve(&nalgebra::DVector::from_element(act.len(), r));
        if lam.iter().any(|&l| l < -1e-12) {
            continue;
        }
        let v: Vec<f64> = (a.transpose() * lam).iter().copied().collect();
        if rows.iter().all(|w| dot(w, &v) >= r - 1e-10 * r.max(1.0)) {
            return if norm(&v) <= 1.0 + QP_TOL { Feasibility::Feasible(v) } else { Feasibility::Infeasible };
        }
    }
    Feasibility::Infeasible
}

/// For `r = 0`: whether the cone `{v : <w, v> >= 0}` contains a nonzero vector.
/// Either the rows leave a null direction, or some extreme ray (null space of
/// `d - 1` independent rows) satisfies every constraint.
fn cone_feasibility(rows: &[&[f64]], d: usize) -> Feasibility {
    let rows: Vec<&[f64]> = rows.iter().copied().filter(|w| norm(w) > 0.0).collect();
    if rows.is_empty() {
        return Feasibility::Feasible(linalg::unit(d, 0));
    }
    let full = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    if let Some(v) = null_vector(&full, d) {
        return Feasibility::Feasible(v);
    }
    let m = rows.len();
    let mut pick = Vec::new();
    let mut found = None;
    choose(m, d - 1, 0, &mut pick, &mut |idx| {
        if found.is_some() {
            return;
        }
        let candidate = if idx.is_empty() {
            vec![linalg::unit(d, 0)]
        } else {
            let a = DMatrix::from_fn(idx.len(), d, |i, j| rows[idx[i]][j]);
            match null_vector(&a, d) {
                Some(v) => vec![v],
                None => vec![],
            }
        };
        for v in candidate {
            for s in [1.0, -1.0] {
                let v: Vec<f64> = linalg::scale(&v, s);
                if rows.iter().all(|w| dot(w, &v) >= -1e-12) {
                    found = Some(v);
                    return;
                }
            }
        }
    });
    match found {
        Some(v) => Feasibility::Feasible(v),
        None => Feasibility::Infeasible,
    }
}

/// A unit vector in the null space of `a` if its rank is below `d`.
fn null_vector(a: &DMatrix<f64>, d: usize) -> Option<Vec<f64>> {
    let gram = a.transpose() * a;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let scale = eig.eigenvalues.amax().max(1.0);
    let i = eig.eigenvalues.imin();
    (eig.eigenvalues[i].abs() <= 1e-12 * scale).then(|| (0..d).map(|j| eig.eigenvectors[(j, i)]).collect())
}

fn choose(m: usize, size: usize, start: usize, pick: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if pick.len() == size {
        f(pick);
        return;
    }
    for i in start..m {
        pick.push(i);
        choose(m, size, i + 1, pick, f);
        pick.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::Points;

    fn inst(x: Vec<f64>, r: f64, rows: &[Vec<f64>]) -> TestingProgramInstance {
        TestingProgramInstance::new(x, r, Points::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn all_spikes_give_full_value() {
        let rows = vec![vec![2.0, 0.0]; 5];
        let sol = solve_mte_bruteforce(&inst(vec![0.0, 0.0], 1.0, &rows)).unwrap();
        assert_eq!(sol.value, 5);
        assert!(sol.b.iter().all(|&b| b));
        assert!((sol.v[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn opposite_pairs_give_two() {
        let rows = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0], vec![-1.0, 0.0]];
        let sol = solve_mte_bruteforce(&inst(vec![0.0, 0.0], 1.0, &rows)).unwrap();
        assert_eq!(sol.value, 2);
    }

    #[test]
    fn short_offset_gives_zero() {
        let sol = solve_mte_bruteforce(&inst(vec![0.0], 1.0, &[vec![0.5]])).unwrap();
        assert_eq!(sol.value, 0);
        assert_eq!(sol.b, vec![false]);
    }

    #[test]
    fn guard_rejects_large_k() {
        let rows = vec![vec![1.0]; 17];
        assert!(matches!(
            solve_mte_bruteforce(&inst(vec![0.0], 1.0, &rows)),
            Err(Error::EnumerationGuard { k: 17, .. })
        ));
    }

    #[test]
    fn certifying_direction_is_valid() {
        let rows = vec![vec![1.5, 0.3], vec![1.2, -0.4], vec![-0.2, 2.0], vec![0.1, -3.0]];
        let x = vec![0.0, 0.0];
        let r = 1.0;
        let sol = solve_mte_bruteforce(&inst(x, r, &rows)).unwrap();
        assert!((norm(&sol.v) - 1.0).abs() < 1e-12);
        for (i, row) in rows.iter().enumerate() {
            if sol.b[i] {
                assert!(dot(row, &sol.v) >= r - 1e-8);
            }
        }
    }

    #[test]
    fn active_set_agrees_with_dykstra() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 0.2], vec![0.8, 0.9], vec![1.1, -0.3]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        for r in [0.3, 0.7, 0.9, 1.2] {
            let a = matches!(active_set(&refs, r, 2), Feasibility::Feasible(_));
            let b = matches!(min_norm_feasibility(&refs, r, 2).unwrap(), Feasibility::Feasible(_));
            assert_eq!(a, b, "r = {r}");
        }
    }

    #[test]
    fn zero_radius_cone_cases() {
        // In one dimension, opposite signs cannot both be nonnegative.
        let sol = solve_mte_bruteforce(&inst(vec![0.0], 0.0, &[vec![1.0], vec![-1.0]])).unwrap();
        assert_eq!(sol.value, 1);
        // In two dimensions the orthogonal direction works, even with a third row.
        let rows = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]];
        let sol = solve_mte_bruteforce(&inst(vec![0.0, 0.0], 0.0, &rows)).unwrap();
        assert_eq!(sol.value, 3);
    }
}
