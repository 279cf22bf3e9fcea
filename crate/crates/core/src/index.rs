//! Multi-index sets `{α : 0 <= α^k < n_k}` and their lexicographic ranking.
//!
//! The last dimension varies fastest (row-major). Every matrix in the crate
//! that is indexed by control points uses this ordering.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    dims: Vec<usize>,
}

impl IndexSet {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "index set sizes must be positive, got {dims:?}"
            )));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Total size `Π n_k`.
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn rank(&self, alpha: &[usize]) -> Result<usize> {
        if alpha.len() != self.dims.len() {
            return Err(Error::InvalidInput(format!(
                "multi-index has {} components, index set has {}",
                alpha.len(),
                self.dims.len()
            )));
        }
        let mut r = 0;
        for (&a, &n) in alpha.iter().zip(&self.dims) {
            if a >= n {
                return Err(Error::Index { index: a, size: n });
            }
            r = r * n + a;
        }
        Ok(r)
    }

    pub fn unrank(&self, mut i: usize) -> Result<Vec<usize>> {
        let total = self.total();
        if i >= total {
            return Err(Error::Index {
                index: i,
                size: total,
            });
        }
        let mut alpha = vec![0; self.dims.len()];
        for (a, &n) in alpha.iter_mut().zip(&self.dims).rev() {
            *a = i % n;
            i /= n;
        }
        Ok(alpha)
    }

    /// All members in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.total()).map(move |i| self.unrank(i).expect("rank within bounds"))
    }
}

/// Derivative multi-indices `δ` with `|δ| = order` in `dim` dimensions,
/// ordered with the first dimension's order decreasing:
/// `(2,0), (1,1), (0,2)` for `dim = 2, order = 2`.
pub fn derivative_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    fn fill(prefix: &mut Vec<usize>, dim: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == dim {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            fill(prefix, dim, remaining - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim > 0 {
        fill(&mut Vec::with_capacity(dim), dim, order, &mut out);
    }
    out
}
