//! Scattered samples and the axis-aligned boxes used to parameterize them.

use crate::error::{Error, Result};

/// Axis-aligned box `[min_k, max_k]` per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BoundingBox {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() || min.is_empty() {
            return Err(Error::InvalidInput(
                "bounding box needs matching nonempty min/max".into(),
            ));
        }
        for (k, (&lo, &hi)) in min.iter().zip(&max).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::InvalidInput(format!(
                    "degenerate bounding box in dimension {k}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { min, max })
    }

    /// Square/cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.min.iter().zip(&self.max))
                .all(|(&v, (&lo, &hi))| lo <= v && v <= hi)
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        self.contains(&other.min) && self.contains(&other.max)
    }

    /// Affine map into the unit cube.
    pub fn to_parameter(&self, x: &[f64]) -> Result<Vec<f64>> {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                let u = (v - lo) / (hi - lo);
                if (0.0..=1.0).contains(&u) {
                    Ok(u)
                } else {
                    Err(Error::Domain { value: v, lo, hi })
                }
            })
            .collect()
    }

    pub fn to_physical(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&t, (&lo, &hi))| lo + t * (hi - lo))
            .collect()
    }
}

/// `m` samples with `dim` spatial coordinates and `value_dim` value components,
/// both stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    value_dim: usize,
    coords: Vec<f64>,
    values: Vec<f64>,
    bbox: BoundingBox,
}

impl PointCloud {
    /// Builds a cloud whose box is the tight bounds of the coordinates.
    pub fn new(dim: usize, value_dim: usize, coords: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::check_shapes(dim, value_dim, &coords, &values)?;
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for x in coords.chunks_exact(dim) {
            for k in 0..dim {
                min[k] = min[k].min(x[k]);
                max[k] = max[k].max(x[k]);
            }
        }
        let bbox = BoundingBox::new(min, max)?;
        Ok(Self {
            dim,
            value_dim,
            coords,
            values,
            bbox,
        })
    }

    /// Builds a cloud over an explicit box, which must contain every point.
    pub fn with_bbox(
        dim: usize,
        value_dim: usize,
        coords: Vec<f64>,
        values: Vec<f64>,
        bbox: BoundingBox,
    ) -> Result<Self> {
        Self::check_shapes(dim, value_dim, &coords, &values)?;
        if bbox.dim() != dim {
            return Err(Error::InvalidInput(format!(
                "bounding box has {} dimensions, points have {dim}",
                bbox.dim()
            )));
        }
        if let Some(i) = coords.chunks_exact(dim).position(|x| !bbox.contains(x)) {
            return Err(Error::InvalidInput(format!(
                "point {i} lies outside the bounding box"
            )));
        }
        Ok(Self {
            dim,
            value_dim,
            coords,
            values,
            bbox,
        })
    }

    fn check_shapes(dim: usize, value_dim: usize, coords: &[f64], values: &[f64]) -> Result<()> {
        if dim == 0 || value_dim == 0 {
            return Err(Error::InvalidInput(
                "point clouds need at least one coordinate and one value".into(),
            ));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "coordinate buffer of length {} is not a nonempty multiple of {dim}",
                coords.len()
            )));
        }
        let m = coords.len() / dim;
        if values.len() != m * value_dim {
            return Err(Error::InvalidInput(format!(
                "expected {} values for {m} points, got {}",
                m * value_dim,
                values.len()
            )));
        }
        if coords.iter().chain(values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "point cloud contains non-finite numbers".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value_dim(&self) -> usize {
        self.value_dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.value_dim..(i + 1) * self.value_dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn points(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.values.chunks_exact(self.value_dim))
    }
}
