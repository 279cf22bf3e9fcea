//! Tensor-product B-spline models `C(u) = Σ_α N_α(u) P_α`.

use crate::bspline::KnotVector;
use crate::cloud::BoundingBox;
use crate::error::{Error, Result};
use crate::index::IndexSet;

/// A fitted (or hand-built) tensor-product spline.
///
/// Control points are stored row-major: row `⌊α⌋` holds the `value_dim`
/// components of `P_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineModel {
    knots: Vec<KnotVector>,
    index: IndexSet,
    value_dim: usize,
    control: Vec<f64>,
    bbox: BoundingBox,
}

impl SplineModel {
    pub fn new(
        knots: Vec<KnotVector>,
        value_dim: usize,
        control: Vec<f64>,
        bbox: BoundingBox,
    ) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidConfig(
                "a model needs at least one dimension".into(),
            ));
        }
        let degree = knots[0].degree();
        if knots.iter().any(|k| k.degree() != degree) {
            return Err(Error::InvalidConfig(
                "all knot vectors must share one degree".into(),
            ));
        }
        if bbox.dim() != knots.len() {
            return Err(Error::InvalidConfig(format!(
                "bounding box has {} dimensions, model has {}",
                bbox.dim(),
                knots.len()
            )));
        }
        if value_dim == 0 {
            return Err(Error::InvalidConfig(
                "value dimension must be positive".into(),
            ));
        }
        let index = IndexSet::new(knots.iter().map(KnotVector::len).collect())?;
        if control.len() != index.total() * value_dim {
            return Err(Error::InvalidConfig(format!(
                "expected {} control values ({} points x {value_dim}), got {}",
                index.total() * value_dim,
                index.total(),
                control.len()
            )));
        }
        Ok(Self {
            knots,
            index,
            value_dim,
            control,
            bbox,
        })
    }

    pub fn dim(&self) -> usize {
        self.knots.len()
    }

    pub fn degree(&self) -> usize {
        self.knots[0].degree()
    }

    pub fn value_dim(&self) -> usize {
        self.value_dim
    }

    pub fn knots(&self) -> &[KnotVector] {
        &self.knots
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index
    }

    pub fn control_points(&self) -> &[f64] {
        &self.control
    }

    pub fn control_point(&self, rank: usize) -> &[f64] {
        &self.control[rank * self.value_dim..(rank + 1) * self.value_dim]
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    fn check_param(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "parameter has {} components, model has dimension {}",
                u.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Value at parameter `u ∈ [0,1]^d`.
    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.eval_derivative(u, &vec![0; self.dim()])
    }

    /// Value at physical coordinate `x`, mapped through the bounding box.
    pub fn eval_physical(&self, x: &[f64]) -> Result<Vec<f64>> {
        let u = self.bbox.to_parameter(x)?;
        self.eval(&u)
    }

    /// Partial derivative `∂^δ C(u)` in parameter space.
    pub fn eval_derivative(&self, u: &[f64], delta: &[usize]) -> Result<Vec<f64>> {
        self.check_param(u)?;
        if delta.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "derivative order has {} components, model has dimension {}",
                delta.len(),
                self.dim()
            )));
        }
        let p = self.degree();
        let tables = self
            .knots
            .iter()
            .zip(u.iter().zip(delta))
            .map(|(kv, (&uk, &dk))| {
                let d = kv.basis_derivatives(uk, dk)?;
                Ok((d.first, d.rows[dk].clone()))
            })
            .collect::<Result<Vec<_>>>()?;

        let d = self.dim();
        let dims = self.index.dims();
        let mut out = vec![0.0; self.value_dim];
        // odometer over the (p+1)^d local functions
        let mut local = vec![0usize; d];
        loop {
            let mut weight = 1.0;
            let mut rank = 0;
            for k in 0..d {
                let (first, ref row) = tables[k];
                weight *= row[local[k]];
                rank = rank * dims[k] + first + local[k];
            }
            for (o, c) in out.iter_mut().zip(self.control_point(rank)) {
                *o += weight * c;
            }
            let mut k = d;
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                local[k] += 1;
                if local[k] <= p {
                    break;
                }
                local[k] = 0;
            }
        }
    }
}
