//! Solving the normal system for control points.

use crate::assembly::LinearSystem;
use crate::condition::{self, ConditionEstimate, ConditionMode, IterationOptions, PIVOT_TOL};
use crate::error::{Error, Result};
use crate::normal::NormalMatrix;
use crate::sparse::SparseMatrix;

/// Above this many control points `Auto` switches from the direct solver to CG.
pub const DIRECT_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    Auto,
    /// Cholesky factorization of the explicitly formed normal matrix.
    Direct,
    /// Jacobi-preconditioned conjugate gradient on the normal operator.
    ConjugateGradient,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub method: SolverMethod,
    /// Relative residual tolerance for CG.
    pub tol: f64,
    /// CG iteration cap; `None` means `10 · n_tot`.
    pub max_iter: Option<usize>,
    /// How to compute the condition diagnostics, if at all.
    pub condition: Option<ConditionMode>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: SolverMethod::Auto,
            tol: 1e-10,
            max_iter: None,
            condition: None,
        }
    }
}

impl SolveOptions {
    pub fn with_method(mut self, method: SolverMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_condition(mut self, mode: ConditionMode) -> Self {
        self.condition = Some(mode);
        self
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub method: SolverMethod,
    /// `‖(N; MΛ)P − (Q; 0)‖` per value component.
    pub residual_norms: Vec<f64>,
    /// `‖NP − Q‖` per value component.
    pub data_residual_norms: Vec<f64>,
    /// CG iterations per component (zero for the direct solver).
    pub iterations: Vec<usize>,
    pub condition_stacked: Option<ConditionEstimate>,
    pub condition_collocation: Option<ConditionEstimate>,
    pub regularized_count: usize,
    pub max_lambda: f64,
    pub rank_deficient: bool,
    pub not_converged: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// `n_tot × value_dim` control points, row-major in lexicographic order.
    pub control: Vec<f64>,
    pub report: FitReport,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn solve(system: &LinearSystem, opts: &SolveOptions) -> Result<Solution> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "solver tolerance must be > 0, got {}",
            opts.tol
        )));
    }
    let n = system.n_ctrl();
    let vdim = system.value_dim;
    let stacked = system.stacked();
    let method = match opts.method {
        SolverMethod::Auto if n <= DIRECT_LIMIT => SolverMethod::Direct,
        SolverMethod::Auto => SolverMethod::ConjugateGradient,
        m => m,
    };

    let mut columns = Vec::with_capacity(vdim);
    let mut iterations = Vec::with_capacity(vdim);
    let mut normal = None;
    match method {
        SolverMethod::Direct => {
            let g = NormalMatrix::from_gram(&stacked);
            let chol = g.cholesky(PIVOT_TOL)?;
            for c in 0..vdim {
                columns.push(chol.solve(&system.rhs(c)));
                iterations.push(0);
            }
            normal = Some((g, chol));
        }
        SolverMethod::ConjugateGradient => {
            let max_iter = opts.max_iter.unwrap_or(10 * n);
            for c in 0..vdim {
                let (x, it) = conjugate_gradient(&stacked, &system.rhs(c), opts.tol, max_iter)?;
                columns.push(x);
                iterations.push(it);
            }
        }
        SolverMethod::Auto => unreachable!(),
    }

    let mut control = vec![0.0; n * vdim];
    for (c, col) in columns.iter().enumerate() {
        for (j, &v) in col.iter().enumerate() {
            control[j * vdim + c] = v;
        }
    }

    let mut residual_norms = Vec::with_capacity(vdim);
    let mut data_residual_norms = Vec::with_capacity(vdim);
    for (c, col) in columns.iter().enumerate() {
        let b = system.stacked_rhs(c);
        let r: Vec<f64> = stacked
            .matvec(col)
            .iter()
            .zip(&b)
            .map(|(a, b)| a - b)
            .collect();
        let m = system.collocation.nrows();
        residual_norms.push(norm(&r));
        data_residual_norms.push(norm(&r[..m]));
    }

    let mut warnings = system.warnings().to_vec();
    let (condition_stacked, condition_collocation) = match opts.condition {
        None => (None, None),
        Some(mode) => {
            let cs = match (&normal, mode) {
                (Some((g, chol)), ConditionMode::Estimate) => {
                    condition::estimate_from_normal(g, Some(chol), IterationOptions::default())
                }
                _ => condition::condition_number(&stacked, mode)?,
            };
            let cn = if system.lambdas.lambda.iter().all(|&l| l == 0.0) {
                cs.clone()
            } else {
                condition::condition_number(&system.collocation, mode)?
            };
            warnings.extend(cs.warning.iter().cloned());
            warnings.extend(cn.warning.iter().cloned());
            (Some(cs), Some(cn))
        }
    };

    let lambda = &system.lambdas.lambda;
    let report = FitReport {
        method,
        residual_norms,
        data_residual_norms,
        iterations,
        rank_deficient: condition_stacked.as_ref().is_some_and(|c| c.is_infinite()),
        not_converged: condition_stacked.as_ref().is_some_and(|c| !c.converged),
        condition_stacked,
        condition_collocation,
        regularized_count: lambda.iter().filter(|&&l| l > 0.0).count(),
        max_lambda: lambda.iter().copied().fold(0.0, f64::max),
        warnings,
    };
    Ok(Solution { control, report })
}

/// Jacobi-preconditioned CG on `A^T A x = rhs` without forming `A^T A`.
/// Returns the solution and the number of iterations taken.
pub fn conjugate_gradient(
    a: &SparseMatrix,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = a.ncols();
    let diag = a.column_sq_norms();
    if let Some(column) = diag.iter().position(|&d| d == 0.0) {
        return Err(Error::RankDeficient { column });
    }
    let apply = |x: &[f64]| a.matvec_transpose(&a.matvec(x));
    let bnorm = norm(rhs);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap.is_nan() || pap <= 0.0 {
            return Err(Error::NotConverged {
                iterations: it,
                residual: norm(&r) / bnorm,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * bnorm {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: norm(&r) / bnorm,
    })
}
