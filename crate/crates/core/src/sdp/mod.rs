//! The testing program: a semidefinite relaxation (MT) of the combinatorial
//! problem (MTE) "how many bucket means lie at least `r` beyond `x` along a
//! common unit direction".
//!
//! The moment matrix is indexed by `1, b_1..b_k, v_1..v_d`; in storage the
//! index `0` is the constant, `1..=k` are the `b_i` and `k+1..k+d` the `v_j`.

mod admm;
mod dump;
mod mte;
mod reduced;

use nalgebra::DMatrix;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg;
use crate::points::Points;

pub use admm::solve_mt_dense;
pub use reduced::{decide_mt, solve_mt};
pub use dump::{instance_from_json, SdpDump};
pub use mte::{solve_mte_bruteforce, MteSolution, ENUMERATION_LIMIT};

/// Largest `k + d + 1` accepted by the solvers.
pub const DENSE_LIMIT: usize = 2000;

/// Outcome of comparing the MT optimum with a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Above,
    Below,
}

/// One instance `(x, r, Z)` of the testing program.
#[derive(Debug, Clone, PartialEq)]
pub struct TestingProgramInstance {
    pub x: Vec<f64>,
    pub r: f64,
    pub bucket_means: Points,
}

impl TestingProgramInstance {
    pub fn new(x: Vec<f64>, r: f64, bucket_means: Points) -> Result<Self> {
        let inst = TestingProgramInstance { x, r, bucket_means };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bucket_means.is_empty() {
            return Err(Error::InvalidSample("testing program needs k >= 1 bucket means".into()));
        }
        if self.x.is_empty() || self.x.len() != self.bucket_means.dim() {
            return Err(Error::InvalidSample(format!(
                "x has dimension {} but bucket means have dimension {}",
                self.x.len(),
                self.bucket_means.dim()
            )));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::Domain(format!("radius must be finite and >= 0, got {}", self.r)));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.bucket_means.len()
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    /// Rows `Z_i - x`.
    pub fn offsets(&self) -> Vec<Vec<f64>> {
        self.bucket_means.rows().map(|z| linalg::sub(z, &self.x)).collect()
    }

    pub fn with_radius(&self, r: f64) -> Self {
        TestingProgramInstance { r, ..self.clone() }
    }
}

/// An approximately optimal moment matrix for MT together with its certificates.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// `sum_i X_{1,b_i}`.
    pub value: f64,
    pub moment_matrix: DMatrix<f64>,
    pub b_diagonal: Vec<f64>,
    pub v_block: DMatrix<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Upper bound on the optimum obtained from the dual iterate.
    pub upper_bound: f64,
    pub iterations: usize,
}

impl SdpSolution {
    pub(crate) fn from_moment_matrix(
        k: usize,
        d: usize,
        m: DMatrix<f64>,
        primal_residual: f64,
        dual_residual: f64,
        upper_bound: f64,
        iterations: usize,
    ) -> Self {
        let value = (1..=k).map(|i| m[(0, i)]).sum();
        let b_diagonal = (1..=k).map(|i| m[(i, i)]).collect();
        let v_block = m.view((k + 1, k + 1), (d, d)).into_owned();
        SdpSolution {
            value,
            moment_matrix: m,
            b_diagonal,
            v_block,
            primal_residual,
            dual_residual,
            upper_bound,
            iterations,
        }
    }

    /// `v_{b_i} = [X_{b_i, v_1}, .., X_{b_i, v_d}]`.
    pub fn v_row(&self, i: usize) -> Vec<f64> {
        let k = self.b_diagonal.len();
        let d = self.v_block.nrows();
        (0..d).map(|j| self.moment_matrix[(1 + i, k + 1 + j)]).collect()
    }
}

/// MT values along an ascending list of radii.
pub fn mt_value_curve(x: &[f64], bucket_means: &Points, radii: &[f64], cfg: &SolverConfig) -> Result<Vec<f64>> {
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("radii must be sorted ascending".into()));
    }
    radii
        .iter()
        .map(|&r| {
            let inst = TestingProgramInstance::new(x.to_vec(), r, bucket_means.clone())?;
            solve_mt(&inst, cfg).map(|sol| sol.value)
        })
        .collect()
}

pub(crate) fn check_instance(inst: &TestingProgramInstance, cfg: &SolverConfig) -> Result<()> {
    inst.validate()?;
    cfg.validate()?;
    let size = inst.k() + inst.d() + 1;
    if size > DENSE_LIMIT {
        return Err(Error::DimensionGuard { size, limit: DENSE_LIMIT });
    }
    Ok(())
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = a;
            m[(j, i)] = a;
        }
    }
}
