//! Assembly of the adaptively regularized least-squares system
//!
//! ```text
//! (N^T (MΛ)^T) (N; MΛ) P = N^T Q
//! ```
//!
//! `N` is the collocation matrix of basis values at the data parameters,
//! `M` stacks one block `M_δ` per derivative multi-index `δ`, holding
//! `∂^δ N_β(w_α)` where `w_α` is the peak of basis function `α`, and
//! `Λ = diag(λ_j)` with
//!
//! ```text
//! λ_j = max(s* - s_j, 0) / s̃_j
//! ```
//!
//! where `s_j` is the j-th column sum of `N` and `s̃_j` the j-th column sum
//! of `|M|`. With this choice every column of the stacked matrix
//! `(N; MΛ)` has (absolute) sum `max(s_j, s*)`.

use crate::bspline::KnotVector;
use crate::cloud::{BoundingBox, PointCloud};
use crate::error::{Error, Result};
use crate::index::{derivative_indices, IndexSet};
use crate::sparse::{RowBuilder, SparseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub degree: usize,
    /// Control points per dimension.
    pub ctrl: Vec<usize>,
    /// Regularization threshold `s*`.
    pub threshold: f64,
    /// Derivative orders in the penalty, a subset of `{1, 2}`.
    pub orders: Vec<usize>,
}

impl FitConfig {
    pub fn new(degree: usize, ctrl: Vec<usize>, threshold: f64, orders: Vec<usize>) -> Self {
        Self {
            degree,
            ctrl,
            threshold,
            orders,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.ctrl.len() != dim {
            return Err(Error::InvalidConfig(format!(
                "control grid has {} dimensions, data have {dim}",
                self.ctrl.len()
            )));
        }
        if let Some(&n) = self.ctrl.iter().find(|&&n| n < self.degree + 1) {
            return Err(Error::InvalidConfig(format!(
                "{n} control points per dimension is too few for degree {}",
                self.degree
            )));
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "regularization threshold must be finite and >= 0, got {}",
                self.threshold
            )));
        }
        if let Some(&o) = self.orders.iter().find(|&&o| o != 1 && o != 2) {
            return Err(Error::InvalidConfig(format!(
                "penalty derivative orders must be 1 or 2, got {o}"
            )));
        }
        if self.threshold > 0.0 && self.orders.is_empty() {
            return Err(Error::InvalidConfig(
                "a positive regularization threshold needs at least one penalty order".into(),
            ));
        }
        if let Some(&o) = self.orders.iter().find(|&&o| o > self.degree) {
            return Err(Error::InvalidOrder {
                order: o,
                degree: self.degree,
            });
        }
        Ok(())
    }

    pub fn knots(&self) -> Result<Vec<KnotVector>> {
        self.ctrl
            .iter()
            .map(|&n| KnotVector::uniform_clamped(n, self.degree))
            .collect()
    }

    /// Derivative multi-indices of the penalty blocks, lower orders first.
    pub fn penalty_deltas(&self) -> Vec<Vec<usize>> {
        let mut orders = self.orders.clone();
        orders.sort_unstable();
        orders.dedup();
        orders
            .into_iter()
            .flat_map(|o| derivative_indices(self.ctrl.len(), o))
            .collect()
    }
}

/// Maps every point into `[0,1]^d` through the cloud's bounding box.
/// Returns `m × d` parameters, row-major.
pub fn parameterize(cloud: &PointCloud) -> Result<Vec<f64>> {
    let bbox = cloud.bbox();
    let mut out = Vec::with_capacity(cloud.coords().len());
    for x in cloud.coords().chunks_exact(cloud.dim()) {
        out.extend(bbox.to_parameter(x)?);
    }
    Ok(out)
}

/// Appends the tensor product of per-dimension local windows as one row.
fn push_tensor_row(b: &mut RowBuilder, dims: &[usize], windows: &[(usize, &[f64])]) {
    let d = dims.len();
    let widths: Vec<usize> = windows.iter().map(|w| w.1.len()).collect();
    let mut local = vec![0usize; d];
    loop {
        let mut weight = 1.0;
        let mut col = 0;
        for k in 0..d {
            let (first, vals) = windows[k];
            weight *= vals[local[k]];
            col = col * dims[k] + first + local[k];
        }
        b.push(col, weight);
        let mut k = d;
        loop {
            if k == 0 {
                b.finish_row();
                return;
            }
            k -= 1;
            local[k] += 1;
            if local[k] < widths[k] {
                break;
            }
            local[k] = 0;
        }
    }
}

/// Collocation matrix `N_ij = N_α(v_i)` with `⌊α⌋ = j`.
pub fn build_collocation(cloud: &PointCloud, knots: &[KnotVector]) -> Result<SparseMatrix> {
    if knots.len() != cloud.dim() {
        return Err(Error::InvalidConfig(format!(
            "{} knot vectors for {}-dimensional data",
            knots.len(),
            cloud.dim()
        )));
    }
    let params = parameterize(cloud)?;
    let dims: Vec<usize> = knots.iter().map(KnotVector::len).collect();
    let total: usize = dims.iter().product();
    let per_row = knots.iter().map(|k| k.degree() + 1).product::<usize>();
    let mut b = RowBuilder::with_capacity(total, cloud.len(), cloud.len() * per_row);
    for v in params.chunks_exact(cloud.dim()) {
        let locals = knots
            .iter()
            .zip(v)
            .map(|(kv, &u)| kv.basis_values(u))
            .collect::<Result<Vec<_>>>()?;
        let windows: Vec<(usize, &[f64])> = locals
            .iter()
            .map(|l| (l.first, l.values.as_slice()))
            .collect();
        push_tensor_row(&mut b, &dims, &windows);
    }
    Ok(b.build())
}

/// Peak locations `w_a` of every 1D basis function, per dimension.
pub fn penalty_sites(knots: &[KnotVector]) -> Result<Vec<Vec<f64>>> {
    knots
        .iter()
        .map(|kv| (0..kv.len()).map(|j| kv.basis_maximizer(j)).collect())
        .collect()
}

/// Penalty block `(M_δ)_{⌊α⌋,⌊β⌋} = ∂^δ N_β(w_α)`.
pub fn build_penalty_block(delta: &[usize], knots: &[KnotVector]) -> Result<SparseMatrix> {
    let sites = penalty_sites(knots)?;
    penalty_block_at(delta, knots, &sites)
}

fn penalty_block_at(
    delta: &[usize],
    knots: &[KnotVector],
    sites: &[Vec<f64>],
) -> Result<SparseMatrix> {
    if delta.len() != knots.len() {
        return Err(Error::InvalidInput(format!(
            "derivative index has {} components, expected {}",
            delta.len(),
            knots.len()
        )));
    }
    // tables[k][a] = (first, δ_k-th derivative row) at the peak of N_a in dimension k
    let tables = knots
        .iter()
        .zip(delta)
        .zip(sites)
        .map(|((kv, &dk), w)| {
            w.iter()
                .map(|&u| {
                    let d = kv.basis_derivatives(u, dk)?;
                    Ok((d.first, d.rows[dk].clone()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let index = IndexSet::new(knots.iter().map(KnotVector::len).collect())?;
    let dims = index.dims().to_vec();
    let per_row = knots.iter().map(|k| k.degree() + 1).product::<usize>();
    let mut b = RowBuilder::with_capacity(index.total(), index.total(), index.total() * per_row);
    for alpha in index.iter() {
        let windows: Vec<(usize, &[f64])> = alpha
            .iter()
            .enumerate()
            .map(|(k, &a)| (tables[k][a].0, tables[k][a].1.as_slice()))
            .collect();
        push_tensor_row(&mut b, &dims, &windows);
    }
    Ok(b.build())
}

/// Stacks the blocks `M_δ` in the order of `config.penalty_deltas()`.
pub fn stack_penalty(config: &FitConfig, blocks: &[SparseMatrix]) -> Result<SparseMatrix> {
    if config.threshold > 0.0 && config.orders.is_empty() {
        return Err(Error::InvalidConfig(
            "a positive regularization threshold needs at least one penalty order".into(),
        ));
    }
    let expected = config.penalty_deltas().len();
    if blocks.len() != expected {
        return Err(Error::InvalidInput(format!(
            "expected {expected} penalty blocks, got {}",
            blocks.len()
        )));
    }
    if blocks.is_empty() {
        let n: usize = config.ctrl.iter().product();
        return Ok(SparseMatrix::zeros(0, n));
    }
    let refs: Vec<&SparseMatrix> = blocks.iter().collect();
    SparseMatrix::vstack(&refs)
}

/// Per-column regularization strengths together with the sums they derive from.
#[derive(Debug, Clone, PartialEq)]
pub struct Lambdas {
    pub lambda: Vec<f64>,
    /// Column sums of `N`.
    pub s: Vec<f64>,
    /// Absolute column sums of `M`.
    pub s_tilde: Vec<f64>,
    pub warnings: Vec<String>,
}

pub fn compute_lambdas(n: &SparseMatrix, m: &SparseMatrix, threshold: f64) -> Result<Lambdas> {
    if n.ncols() != m.ncols() {
        return Err(Error::InvalidInput(format!(
            "collocation has {} columns, penalty has {}",
            n.ncols(),
            m.ncols()
        )));
    }
    let s = n.column_sums();
    let s_tilde = m.column_abs_sums();
    let mut warnings = Vec::new();
    let lambda = s
        .iter()
        .zip(&s_tilde)
        .enumerate()
        .map(|(j, (&sj, &stj))| {
            let deficit = (threshold - sj).max(0.0);
            if deficit == 0.0 {
                0.0
            } else if stj == 0.0 {
                warnings.push(format!(
                    "control point {j} has column sum {sj} < s* but no penalty mass; left unregularized"
                ));
                0.0
            } else {
                deficit / stj
            }
        })
        .collect();
    Ok(Lambdas {
        lambda,
        s,
        s_tilde,
        warnings,
    })
}

/// Everything needed to solve for the control points.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub knots: Vec<KnotVector>,
    pub bbox: BoundingBox,
    pub threshold: f64,
    /// `m × n_tot` collocation matrix.
    pub collocation: SparseMatrix,
    /// Stacked penalty blocks, `n_blocks · n_tot × n_tot`.
    pub penalty: SparseMatrix,
    /// Derivative index of each penalty block, in stacking order.
    pub deltas: Vec<Vec<usize>>,
    pub lambdas: Lambdas,
    pub value_dim: usize,
    /// `m × value_dim` data values, row-major.
    pub values: Vec<f64>,
}

impl LinearSystem {
    pub fn n_ctrl(&self) -> usize {
        self.collocation.ncols()
    }

    pub fn index_set(&self) -> IndexSet {
        IndexSet::new(self.knots.iter().map(KnotVector::len).collect())
            .expect("knot vectors are nonempty")
    }

    /// `(N; MΛ)`. Columns with `λ_j = 0` contribute no penalty entries, so
    /// with `s* = 0` this is `N` followed by empty rows.
    pub fn stacked(&self) -> SparseMatrix {
        let scaled = self.penalty.scale_columns(&self.lambdas.lambda);
        SparseMatrix::vstack(&[&self.collocation, &scaled]).expect("column counts agree")
    }

    /// Data values of component `c`, padded with zeros for the penalty rows.
    pub fn stacked_rhs(&self, c: usize) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .values
            .chunks_exact(self.value_dim)
            .map(|q| q[c])
            .collect();
        b.resize(b.len() + self.penalty.nrows(), 0.0);
        b
    }

    /// `N^T Q` for component `c`.
    pub fn rhs(&self, c: usize) -> Vec<f64> {
        let q: Vec<f64> = self
            .values
            .chunks_exact(self.value_dim)
            .map(|q| q[c])
            .collect();
        self.collocation.matvec_transpose(&q)
    }

    pub fn warnings(&self) -> &[String] {
        &self.lambdas.warnings
    }
}

pub fn assemble_system(cloud: &PointCloud, config: &FitConfig) -> Result<LinearSystem> {
    config.validate(cloud.dim())?;
    let knots = config.knots()?;
    let collocation = build_collocation(cloud, &knots)?;
    let deltas = config.penalty_deltas();
    let sites = penalty_sites(&knots)?;
    let blocks = deltas
        .iter()
        .map(|d| penalty_block_at(d, &knots, &sites))
        .collect::<Result<Vec<_>>>()?;
    let penalty = stack_penalty(config, &blocks)?;
    let lambdas = compute_lambdas(&collocation, &penalty, config.threshold)?;
    Ok(LinearSystem {
        knots,
        bbox: cloud.bbox().clone(),
        threshold: config.threshold,
        collocation,
        penalty,
        deltas,
        lambdas,
        value_dim: cloud.value_dim(),
        values: cloud.values().to_vec(),
    })
}
