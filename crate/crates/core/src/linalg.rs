//! Small dense vector helpers and the power-iteration eigensolver.

use nalgebra::DMatrix;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a / |a|`, or `None` for the zero vector.
pub fn normalized(a: &[f64]) -> Option<Vec<f64>> {
    let n = norm(a);
    (n > 0.0 && n.is_finite()).then(|| scale(a, 1.0 / n))
}

pub fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// `ceil(x)`, except that values within rounding noise of an integer round
/// to it (so `0.9 * 200` gives 180, not 181).
pub fn ceil_near(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Top eigenpair of a symmetric PSD matrix by power iteration.
///
/// Starts from `e_1` plus a small deterministic tilt along every axis so the
/// start is never orthogonal to a generic top eigenvector. Stops when
/// `|Av - λv| <= tol * max(λ, 1e-300)` or after `max_iter` steps. The zero
/// matrix yields `(0, e_1)`.
pub fn top_eigenvector(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> (f64, Vec<f64>) {
    let d = m.nrows();
    let mut v: Vec<f64> = (0..d).map(|j| if j == 0 { 1.0 } else { 1e-3 / (j + 1) as f64 }).collect();
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let av: Vec<f64> = (0..d).map(|i| (0..d).map(|j| m[(i, j)] * v[j]).sum()).collect();
        if av.iter().all(|&x| x == 0.0) {
            return (0.0, unit(d, 0));
        }
        lambda = dot(&v, &av);
        let resid: f64 = av.iter().zip(&v).map(|(a, x)| (a - lambda * x).powi(2)).sum::<f64>().sqrt();
        if resid <= tol * lambda.abs().max(1e-300) {
            break;
        }
        v = normalized(&av).unwrap_or_else(|| unit(d, 0));
    }
    (lambda, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    #[test]
    fn power_iteration_matches_dense_eigen() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0]);
        let (lam, v) = top_eigenvector(&a, 1e-12, 10_000);
        let eig = SymmetricEigen::new(a);
        let imax = eig.eigenvalues.imax();
        assert!((lam - eig.eigenvalues[imax]).abs() < 1e-9);
        let w = eig.eigenvectors.column(imax);
        let c = v.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>().abs();
        assert!((c - 1.0).abs() < 1e-9);
    }

    #[test]
    fn start_orthogonal_to_e1_still_converges() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let (lam, v) = top_eigenvector(&a, 1e-10, 10_000);
        assert!((lam - 1.0).abs() < 1e-9);
        assert!(v[1].abs() > 0.999_999);
    }

    #[test]
    fn zero_matrix() {
        let (lam, v) = top_eigenvector(&DMatrix::zeros(3, 3), 1e-8, 100);
        assert_eq!(lam, 0.0);
        assert_eq!(v, vec![1.0, 0.0, 0.0]);
    }
}
