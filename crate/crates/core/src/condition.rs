//! 2-norm condition numbers `σ_max / σ_min` of (tall) sparse matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::normal::{EnvelopeCholesky, NormalMatrix};
use crate::sparse::SparseMatrix;

/// Matrices with `σ_min < SINGULAR_RATIO · σ_max` are reported as infinitely
/// ill-conditioned.
pub const SINGULAR_RATIO: f64 = 1e-13;

/// Relative pivot tolerance used when factoring `A^T A` for inverse iteration.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionMode {
    /// Dense SVD of the full matrix.
    Exact,
    /// Power and inverse iteration on `A^T A`.
    Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionEstimate {
    /// `σ_max / σ_min`, or `f64::INFINITY` when flagged singular.
    pub value: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub converged: bool,
    /// Known interval for the condition number when iteration stopped early.
    pub bracket: Option<(f64, f64)>,
    pub warning: Option<String>,
}

impl ConditionEstimate {
    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }

    fn from_sigmas(sigma_max: f64, sigma_min: f64) -> Self {
        let value = if sigma_max == 0.0 || sigma_min < SINGULAR_RATIO * sigma_max {
            f64::INFINITY
        } else {
            sigma_max / sigma_min
        };
        Self {
            value,
            sigma_max,
            sigma_min,
            converged: true,
            bracket: None,
            warning: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterationOptions {
    /// Stop once `‖Gv − θv‖ ≤ tol · θ`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 20_000,
        }
    }
}

pub fn condition_number(a: &SparseMatrix, mode: ConditionMode) -> Result<ConditionEstimate> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidInput(
            "condition number of an empty matrix".into(),
        ));
    }
    match mode {
        ConditionMode::Exact => Ok(exact(a)),
        ConditionMode::Estimate => {
            let g = NormalMatrix::from_gram(a);
            Ok(estimate_from_normal(&g, None, IterationOptions::default()))
        }
    }
}

fn exact(a: &SparseMatrix) -> ConditionEstimate {
    let sv = a.to_dense().singular_values();
    let sigma_max = sv.max();
    // a wide matrix has a nontrivial null space
    let sigma_min = if a.nrows() < a.ncols() { 0.0 } else { sv.min() };
    ConditionEstimate::from_sigmas(sigma_max, sigma_min)
}

fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| 0.5 + rng.gen::<f64>()).collect();
    normalize(&mut v);
    v
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Largest eigenvalue of the symmetric operator by power iteration.
/// Returns `(rayleigh quotient, converged)`.
fn dominant_eigenvalue(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    n: usize,
    opts: IterationOptions,
) -> (f64, bool) {
    let mut v = start_vector(n);
    let mut theta = 0.0;
    for _ in 0..opts.max_iter {
        let mut w = apply(&v);
        theta = dot(&v, &w);
        let resid = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - theta * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if theta <= 0.0 {
            return (theta.max(0.0), true);
        }
        if resid <= opts.tol * theta {
            return (theta, true);
        }
        normalize(&mut w);
        v = w;
    }
    (theta, false)
}

/// Condition estimate of `A` from its normal matrix `G = A^T A`.
/// A factorization of `G` is reused when supplied.
pub fn estimate_from_normal(
    g: &NormalMatrix,
    chol: Option<&EnvelopeCholesky>,
    opts: IterationOptions,
) -> ConditionEstimate {
    let n = g.size();
    let (lambda_max, conv_max) = dominant_eigenvalue(|v| g.matvec(v), n, opts);
    if g.diagonal().contains(&0.0) {
        return ConditionEstimate::from_sigmas(lambda_max.sqrt(), 0.0);
    }
    let owned;
    let chol = match chol {
        Some(c) => c,
        None => match g.cholesky(PIVOT_TOL) {
            Ok(c) => {
                owned = c;
                &owned
            }
            Err(_) => return ConditionEstimate::from_sigmas(lambda_max.sqrt(), 0.0),
        },
    };
    let (inv_max, conv_min) = dominant_eigenvalue(|v| chol.solve(v), n, opts);
    let lambda_min = if inv_max > 0.0 { 1.0 / inv_max } else { 0.0 };
    let mut est = ConditionEstimate::from_sigmas(lambda_max.sqrt(), lambda_min.sqrt());
    if !(conv_max && conv_min) {
        est.converged = false;
        // Rayleigh quotients under-estimate λ_max and over-estimate λ_min
        est.bracket = Some((est.value, f64::INFINITY));
        est.warning = Some(format!(
            "condition estimate did not converge in {} iterations; condition >= {:.3e}",
            opts.max_iter, est.value
        ));
    }
    est
}
