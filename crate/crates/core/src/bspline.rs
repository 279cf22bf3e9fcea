//! Clamped B-spline basis functions on the parameter interval [0, 1].
//!
//! Evaluation follows the usual triangular (Cox-de Boor) scheme: at a
//! parameter `u` only the `p + 1` functions `N_{span-p} ..= N_span` are
//! nonzero, and all routines here return just that local window.

use crate::error::{Error, Result};

/// Nondecreasing clamped knot sequence `t_0 ..= t_{n+p}` on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

/// The `p + 1` basis values that may be nonzero at a parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasis {
    /// Index of the basis function stored in `values[0]`.
    pub first: usize,
    pub values: Vec<f64>,
}

/// Derivative table for the local window: `rows[k][i]` is the k-th
/// derivative of basis function `first + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDerivatives {
    pub first: usize,
    pub rows: Vec<Vec<f64>>,
}

impl KnotVector {
    /// Validates and wraps an explicit knot sequence.
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        let p = degree;
        if knots.len() < 2 * (p + 1) {
            return Err(Error::InvalidConfig(format!(
                "degree {p} needs at least {} knots, got {}",
                2 * (p + 1),
                knots.len()
            )));
        }
        if knots.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidConfig("knots must be nondecreasing".into()));
        }
        let len = knots.len();
        let clamped_lo = knots[..=p].iter().all(|&t| t == 0.0);
        let clamped_hi = knots[len - p - 1..].iter().all(|&t| t == 1.0);
        if !clamped_lo || !clamped_hi {
            return Err(Error::InvalidConfig(format!(
                "knot vector is not clamped: first and last {} knots must be 0 and 1",
                p + 1
            )));
        }
        Ok(Self { degree, knots })
    }

    /// Clamped knots with `n - p - 1` equally spaced interior knots.
    pub fn uniform_clamped(n: usize, p: usize) -> Result<Self> {
        if n < p + 1 {
            return Err(Error::InvalidConfig(format!(
                "{n} basis functions are too few for degree {p} (need at least {})",
                p + 1
            )));
        }
        let segments = n - p;
        let mut knots = Vec::with_capacity(n + p + 1);
        knots.extend(std::iter::repeat_n(0.0, p + 1));
        knots.extend((1..segments).map(|i| i as f64 / segments as f64));
        knots.extend(std::iter::repeat_n(1.0, p + 1));
        Ok(Self { degree: p, knots })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions `n`.
    pub fn len(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_domain(u: f64) -> Result<()> {
        if (0.0..=1.0).contains(&u) {
            Ok(())
        } else {
            Err(Error::Domain {
                value: u,
                lo: 0.0,
                hi: 1.0,
            })
        }
    }

    /// Knot interval `i` with `t_i <= u < t_{i+1}`; `u = 1` maps to the last
    /// non-degenerate interval `n - 1`.
    pub fn find_span(&self, u: f64) -> Result<usize> {
        Self::check_domain(u)?;
        let p = self.degree;
        let n = self.len();
        if u >= self.knots[n] {
            return Ok(n - 1);
        }
        // t_lo <= u < t_hi throughout
        let (mut lo, mut hi) = (p, n);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if u < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(lo)
    }

    /// Values of the `p + 1` basis functions supported at `u`.
    pub fn basis_values(&self, u: f64) -> Result<LocalBasis> {
        let span = self.find_span(u)?;
        let p = self.degree;
        let t = &self.knots;
        let mut values = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        values[0] = 1.0;
        for j in 1..=p {
            left[j] = u - t[span + 1 - j];
            right[j] = t[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        Ok(LocalBasis {
            first: span - p,
            values,
        })
    }

    /// Derivatives of order `0..=order` of the local basis functions at `u`.
    pub fn basis_derivatives(&self, u: f64, order: usize) -> Result<LocalDerivatives> {
        let p = self.degree;
        if order > p {
            return Err(Error::InvalidOrder { order, degree: p });
        }
        let span = self.find_span(u)?;
        let t = &self.knots;

        // ndu: upper triangle holds basis values of increasing degree,
        // lower triangle the knot differences used as denominators
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = u - t[span + 1 - j];
            right[j] = t[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut rows = vec![vec![0.0; p + 1]; order + 1];
        for j in 0..=p {
            rows[0][j] = ndu[j][p];
        }

        let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=order {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if rk >= 0 {
                    let rk = rk as usize;
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r <= pk + 1 { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                rows[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }

        let mut factor = p as f64;
        for (k, row) in rows.iter_mut().enumerate().skip(1) {
            for v in row.iter_mut() {
                *v *= factor;
            }
            factor *= (p - k) as f64;
        }
        Ok(LocalDerivatives {
            first: span - p,
            rows,
        })
    }

    /// Value of the single basis function `N_j` at `u` (zero outside the window).
    pub fn basis_function(&self, j: usize, u: f64) -> Result<f64> {
        self.check_index(j)?;
        let local = self.basis_values(u)?;
        Ok(local.get(j))
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j < self.len() {
            Ok(())
        } else {
            Err(Error::Index {
                index: j,
                size: self.len(),
            })
        }
    }

    /// Support `[t_j, t_{j+p+1}]` of `N_j`.
    pub fn support(&self, j: usize) -> (f64, f64) {
        (self.knots[j], self.knots[j + self.degree + 1])
    }

    /// Parameter in [0, 1] at which `N_j` attains its maximum.
    ///
    /// Basis functions are unimodal on their support, so the peak is
    /// bracketed by bisection; clamped end functions peak at the boundary knot.
    pub fn basis_maximizer(&self, j: usize) -> Result<f64> {
        const TOL: f64 = 1e-10;
        const MAX_ITER: usize = 200;

        self.check_index(j)?;
        let p = self.degree;
        let t = &self.knots;
        let (mut lo, mut hi) = self.support(j);
        if p == 0 {
            return Ok(0.5 * (lo + hi));
        }
        if t[j] == t[j + p] {
            return Ok(lo);
        }
        if t[j + 1] == t[j + p + 1] {
            return Ok(hi);
        }
        // bisect on the sign of N_j'
        for _ in 0..MAX_ITER {
            if hi - lo <= TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let slope = self.basis_derivatives(mid, 1)?.get(1, j);
            if slope > 0.0 {
                lo = mid;
            } else if slope < 0.0 {
                hi = mid;
            } else {
                return Ok(mid);
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl LocalBasis {
    /// Value of basis function `j`, zero if it is outside the window.
    pub fn get(&self, j: usize) -> f64 {
        j.checked_sub(self.first)
            .and_then(|i| self.values.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

impl LocalDerivatives {
    /// Derivative of order `k` of basis function `j`, zero outside the window.
    pub fn get(&self, k: usize, j: usize) -> f64 {
        j.checked_sub(self.first)
            .and_then(|i| self.rows.get(k).and_then(|row| row.get(i)))
            .copied()
            .unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn kv(p: usize, knots: &[f64]) -> KnotVector {
        KnotVector::new(p, knots.to_vec()).unwrap()
    }

    #[test]
    fn uniform_knots() {
        assert_eq!(
            KnotVector::uniform_clamped(3, 1).unwrap().knots(),
            &[0.0, 0.0, 0.5, 1.0, 1.0]
        );
        assert_eq!(
            KnotVector::uniform_clamped(3, 2).unwrap().knots(),
            &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]
        );
        let k = KnotVector::uniform_clamped(5, 2).unwrap();
        assert_eq!(
            k.knots(),
            &[0.0, 0.0, 0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0, 1.0, 1.0]
        );
        assert_eq!(k.len(), 5);
        assert!(matches!(
            KnotVector::uniform_clamped(2, 2),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.7, 0.5, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.1, 0.5, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(2, vec![0.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn spans() {
        let k = kv(1, &[0.0, 0.0, 0.5, 1.0, 1.0]);
        assert_eq!(k.find_span(0.25).unwrap(), 1);
        assert_eq!(k.find_span(1.0).unwrap(), 2);
        assert_eq!(k.find_span(0.5).unwrap(), 2);
        assert_eq!(k.find_span(0.0).unwrap(), 1);
        let b = kv(2, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(b.find_span(0.7).unwrap(), 2);
        assert!(matches!(k.find_span(1.5), Err(Error::Domain { .. })));
        assert!(k.find_span(-1e-12).is_err());
        assert!(k.find_span(f64::NAN).is_err());
    }

    #[test]
    fn values_match_hand_evaluation() {
        let k = kv(1, &[0.0, 0.0, 0.5, 1.0, 1.0]);
        let b = k.basis_values(0.25).unwrap();
        assert_eq!(b.first, 0);
        assert_abs_diff_eq!(b.values[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.values[1], 0.5, epsilon = 1e-15);

        let bez = kv(2, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = bez.basis_values(0.5).unwrap();
        assert_eq!(b.values, vec![0.25, 0.5, 0.25]);

        for p in 0..5 {
            let k = KnotVector::uniform_clamped(p + 4, p).unwrap();
            let b = k.basis_values(0.0).unwrap();
            assert_eq!(b.first, 0);
            assert_eq!(b.values[0], 1.0);
            assert!(b.values[1..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn derivatives_match_hand_evaluation() {
        let k = kv(1, &[0.0, 0.0, 0.5, 1.0, 1.0]);
        let d = k.basis_derivatives(0.25, 1).unwrap();
        assert_abs_diff_eq!(d.rows[1][0], -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.rows[1][1], 2.0, epsilon = 1e-14);

        let bez = kv(2, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let d = bez.basis_derivatives(0.5, 2).unwrap();
        assert_eq!(d.rows[2], vec![2.0, -4.0, 2.0]);

        let k = KnotVector::uniform_clamped(7, 3).unwrap();
        for &u in &[0.0, 0.13, 0.5, 0.77, 1.0] {
            let d = k.basis_derivatives(u, 0).unwrap();
            assert_eq!(d.rows[0], k.basis_values(u).unwrap().values);
        }
        assert!(matches!(
            k.basis_derivatives(0.5, 4),
            Err(Error::InvalidOrder {
                order: 4,
                degree: 3
            })
        ));
    }

    #[test]
    fn end_functions_peak_at_boundary() {
        let k = KnotVector::uniform_clamped(6, 3).unwrap();
        assert_eq!(k.basis_maximizer(0).unwrap(), 0.0);
        assert_eq!(k.basis_function(0, 0.0).unwrap(), 1.0);
        assert_eq!(k.basis_maximizer(5).unwrap(), 1.0);
        assert_eq!(k.basis_function(5, 1.0).unwrap(), 1.0);
        assert!(matches!(k.basis_maximizer(6), Err(Error::Index { .. })));
    }

    #[test]
    fn symmetric_bezier_peak() {
        let bez = kv(2, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_abs_diff_eq!(bez.basis_maximizer(1).unwrap(), 0.5, epsilon = 1e-10);
    }

    #[test]
    fn maximizer_matches_grid_scan() {
        let k = KnotVector::uniform_clamped(5, 2).unwrap();
        let samples = 1_000_000;
        let (mut best_u, mut best_v) = (0.0, f64::MIN);
        for i in 0..=samples {
            let u = i as f64 / samples as f64;
            let v = k.basis_function(1, u).unwrap();
            if v > best_v {
                best_v = v;
                best_u = u;
            }
        }
        let w = k.basis_maximizer(1).unwrap();
        assert!((w - best_u).abs() < 1e-6, "ternary {w} vs scan {best_u}");
    }

    #[test]
    fn degree_zero_maximizer_is_midpoint() {
        let k = KnotVector::uniform_clamped(4, 0).unwrap();
        assert_eq!(k.basis_maximizer(1).unwrap(), 0.375);
    }
}
