//! Symmetric normal matrices `A^T A` in envelope (skyline) storage.
//!
//! Row `j` stores the entries `G[j][first_j ..= j]`. Tensor-product basis
//! functions only couple control points that are close in every dimension,
//! so with row-major ordering the envelope is a band of width roughly
//! `2p · n_d` and Cholesky fill-in stays inside it.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalMatrix {
    n: usize,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

/// Lower-triangular factor `L` with `G = L L^T`, sharing `G`'s envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    factor: NormalMatrix,
}

impl NormalMatrix {
    /// Forms `A^T A`. Rows of `A` are accumulated in order, so the result is
    /// a deterministic function of `A`'s stored entries.
    pub fn from_gram(a: &SparseMatrix) -> Self {
        let n = a.ncols();
        let mut first: Vec<usize> = (0..n).collect();
        for i in 0..a.nrows() {
            let (cols, _) = a.row(i);
            if let Some(&lo) = cols.first() {
                for &j in cols {
                    first[j] = first[j].min(lo);
                }
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for j in 0..n {
            offset.push(offset[j] + j - first[j] + 1);
        }
        let mut g = Self {
            n,
            data: vec![0.0; offset[n]],
            first,
            offset,
        };
        for i in 0..a.nrows() {
            let (cols, vals) = a.row(i);
            for (x, (&j, &vj)) in cols.iter().zip(vals).enumerate() {
                let base = g.offset[j] - g.first[j];
                for (&k, &vk) in cols[..=x].iter().zip(&vals[..=x]) {
                    g.data[base + k] += vj * vk;
                }
            }
        }
        g
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Stored entries (lower triangle including the diagonal).
    pub fn stored(&self) -> usize {
        self.data.len()
    }

    #[inline]
    fn row(&self, j: usize) -> &[f64] {
        &self.data[self.offset[j]..self.offset[j + 1]]
    }

    /// Entry `G[i][j]` (symmetric).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if c < self.first[r] {
            0.0
        } else {
            self.data[self.offset[r] + c - self.first[r]]
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.data[self.offset[j + 1] - 1])
            .collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let f = self.first[j];
            let row = self.row(j);
            let (diag, off) = row.split_last().expect("nonempty row");
            let mut acc = diag * x[j];
            for (k, &g) in off.iter().enumerate() {
                acc += g * x[f + k];
                y[f + k] += g * x[j];
            }
            y[j] += acc;
        }
        y
    }

    /// Cholesky factorization. A pivot that falls to `pivot_tol` times the
    /// original diagonal entry (or below) means the column is numerically
    /// dependent on the previous ones and the matrix is reported singular.
    pub fn cholesky(&self, pivot_tol: f64) -> Result<EnvelopeCholesky> {
        let mut l = self.clone();
        let max_diag = self.diagonal().into_iter().fold(0.0f64, f64::max);
        for i in 0..l.n {
            let fi = l.first[i];
            let oi = l.offset[i];
            for j in fi..i {
                let fj = l.first[j];
                let oj = l.offset[j];
                let start = fi.max(fj);
                let dot: f64 = l.data[oi + start - fi..oi + j - fi]
                    .iter()
                    .zip(&l.data[oj + start - fj..oj + j - fj])
                    .map(|(a, b)| a * b)
                    .sum();
                let ljj = l.data[oj + j - fj];
                l.data[oi + j - fi] = (l.data[oi + j - fi] - dot) / ljj;
            }
            let diag_idx = oi + i - fi;
            let orig = l.data[diag_idx];
            let mut d = orig;
            for k in fi..i {
                let v = l.data[oi + k - fi];
                d -= v * v;
            }
            if orig <= f64::MIN_POSITIVE * max_diag.max(1.0) || d.is_nan() || d <= pivot_tol * orig
            {
                return Err(Error::RankDeficient { column: i });
            }
            l.data[diag_idx] = d.sqrt();
        }
        Ok(EnvelopeCholesky { factor: l })
    }
}

impl EnvelopeCholesky {
    pub fn size(&self) -> usize {
        self.factor.n
    }

    /// Solves `L L^T x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.factor;
        assert_eq!(b.len(), l.n);
        let mut y = b.to_vec();
        for i in 0..l.n {
            let f = l.first[i];
            let row = l.row(i);
            let (diag, off) = row.split_last().expect("nonempty row");
            let mut s = y[i];
            for (k, &v) in off.iter().enumerate() {
                s -= v * y[f + k];
            }
            y[i] = s / diag;
        }
        for i in (0..l.n).rev() {
            let f = l.first[i];
            let row = l.row(i);
            let (diag, off) = row.split_last().expect("nonempty row");
            y[i] /= diag;
            let yi = y[i];
            for (k, &v) in off.iter().enumerate() {
                y[f + k] -= v * yi;
            }
        }
        y
    }
}
