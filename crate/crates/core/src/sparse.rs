//! Compressed sparse row matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

/// Appends rows one at a time; entries within a row are sorted on `finish_row`.
#[derive(Debug)]
pub struct RowBuilder {
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
    row_start: usize,
}

impl RowBuilder {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            indptr: vec![0],
            indices: Vec::new(),
            data: Vec::new(),
            row_start: 0,
        }
    }

    pub fn with_capacity(ncols: usize, rows: usize, nnz: usize) -> Self {
        let mut b = Self::new(ncols);
        b.indptr.reserve(rows);
        b.indices.reserve(nnz);
        b.data.reserve(nnz);
        b
    }

    pub fn push(&mut self, col: usize, value: f64) {
        debug_assert!(col < self.ncols);
        self.indices.push(col);
        self.data.push(value);
    }

    pub fn finish_row(&mut self) {
        let start = self.row_start;
        let mut entries: Vec<(usize, f64)> = self.indices[start..]
            .iter()
            .copied()
            .zip(self.data[start..].iter().copied())
            .collect();
        entries.sort_by_key(|&(c, _)| c);
        self.indices.truncate(start);
        self.data.truncate(start);
        for (c, v) in entries {
            match self.indices[start..].last() {
                Some(&last) if last == c => *self.data.last_mut().unwrap() += v,
                _ => {
                    self.indices.push(c);
                    self.data.push(v);
                }
            }
        }
        self.indptr.push(self.indices.len());
        self.row_start = self.indices.len();
    }

    pub fn build(self) -> SparseMatrix {
        debug_assert_eq!(self.row_start, self.indices.len(), "unfinished row");
        SparseMatrix {
            nrows: self.indptr.len() - 1,
            ncols: self.ncols,
            indptr: self.indptr,
            indices: self.indices,
            data: self.data,
        }
    }
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            if r >= nrows {
                return Err(Error::Index {
                    index: r,
                    size: nrows,
                });
            }
            if c >= ncols {
                return Err(Error::Index {
                    index: c,
                    size: ncols,
                });
            }
            rows[r].push((c, v));
        }
        let mut b = RowBuilder::with_capacity(ncols, nrows, triplets.len());
        for row in rows {
            for (c, v) in row {
                b.push(c, v);
            }
            b.finish_row();
        }
        Ok(b.build())
    }

    pub fn from_dense(dense: &DMatrix<f64>) -> Self {
        let mut b = RowBuilder::new(dense.ncols());
        for i in 0..dense.nrows() {
            for j in 0..dense.ncols() {
                let v = dense[(i, j)];
                if v != 0.0 {
                    b.push(j, v);
                }
            }
            b.finish_row();
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Column indices and values of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[range.clone()], &self.data[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// Stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn matvec_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[j] += v * yi;
            }
        }
        out
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.ncols];
        for (&j, &v) in self.indices.iter().zip(&self.data) {
            s[j] += v;
        }
        s
    }

    pub fn column_abs_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.ncols];
        for (&j, &v) in self.indices.iter().zip(&self.data) {
            s[j] += v.abs();
        }
        s
    }

    pub fn column_sq_norms(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.ncols];
        for (&j, &v) in self.indices.iter().zip(&self.data) {
            s[j] += v * v;
        }
        s
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().sum())
            .collect()
    }

    /// `A · diag(scale)`; entries whose scale is zero are dropped.
    pub fn scale_columns(&self, scale: &[f64]) -> Self {
        assert_eq!(scale.len(), self.ncols);
        let mut b = RowBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if scale[j] != 0.0 {
                    b.push(j, v * scale[j]);
                }
            }
            b.finish_row();
        }
        b.build()
    }

    /// Vertical concatenation of matrices with equal column counts.
    pub fn vstack(blocks: &[&SparseMatrix]) -> Result<Self> {
        let ncols = blocks.first().map_or(0, |b| b.ncols);
        if blocks.iter().any(|b| b.ncols != ncols) {
            return Err(Error::InvalidInput("vstack: column counts differ".into()));
        }
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for b in blocks {
            let offset = indices.len();
            indptr.extend(b.indptr[1..].iter().map(|&p| p + offset));
            indices.extend_from_slice(&b.indices);
            data.extend_from_slice(&b.data);
        }
        Ok(Self {
            nrows: indptr.len() - 1,
            ncols,
            indptr,
            indices,
            data,
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }
}
