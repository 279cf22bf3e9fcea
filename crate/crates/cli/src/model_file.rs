//! JSON persistence for fitted models.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use adaspline::{BoundingBox, KnotVector, SplineModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT: &str = "adaspline-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxFile {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// On-disk model. `control` holds one row of `value_dim` numbers per
/// control point, in lexicographic order with the last index fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub dim: usize,
    pub value_dim: usize,
    pub degree: usize,
    pub shape: Vec<usize>,
    pub knots: Vec<Vec<f64>>,
    pub bbox: BoxFile,
    pub control: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn from_model(model: &SplineModel) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            dim: model.dim(),
            value_dim: model.value_dim(),
            degree: model.degree(),
            shape: model.knots().iter().map(KnotVector::len).collect(),
            knots: model.knots().iter().map(|k| k.knots().to_vec()).collect(),
            bbox: BoxFile {
                min: model.bbox().min.clone(),
                max: model.bbox().max.clone(),
            },
            control: model
                .control_points()
                .chunks(model.value_dim())
                .map(<[f64]>::to_vec)
                .collect(),
        }
    }

    pub fn into_model(self) -> Result<SplineModel, CliError> {
        let bad = |msg: String| CliError::Format(msg);
        if self.format != FORMAT {
            return Err(bad(format!("not a model file (format {:?})", self.format)));
        }
        if self.version != VERSION {
            return Err(bad(format!("unsupported model version {}", self.version)));
        }
        if self.knots.len() != self.dim || self.shape.len() != self.dim {
            return Err(bad(format!(
                "dim is {} but the file lists {} knot vectors and a {}-dimensional shape",
                self.dim,
                self.knots.len(),
                self.shape.len()
            )));
        }
        let knots = self
            .knots
            .into_iter()
            .map(|k| KnotVector::new(self.degree, k))
            .collect::<Result<Vec<_>, _>>()?;
        for (k, (kv, &n)) in knots.iter().zip(&self.shape).enumerate() {
            if kv.len() != n {
                return Err(bad(format!(
                    "knot vector {} implies {} control points, shape says {n}",
                    k + 1,
                    kv.len()
                )));
            }
        }
        let total: usize = self.shape.iter().product();
        if self.control.len() != total {
            return Err(bad(format!(
                "expected {total} control points, found {}",
                self.control.len()
            )));
        }
        if let Some(row) = self.control.iter().find(|r| r.len() != self.value_dim) {
            return Err(bad(format!(
                "control point with {} components, value_dim is {}",
                row.len(),
                self.value_dim
            )));
        }
        let bbox = BoundingBox::new(self.bbox.min, self.bbox.max)?;
        let control = self.control.into_iter().flatten().collect();
        Ok(SplineModel::new(knots, self.value_dim, control, bbox)?)
    }
}

pub fn save(model: &SplineModel, path: &Path) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &ModelFile::from_model(model))
        .map_err(|e| CliError::Format(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SplineModel, CliError> {
    let file: ModelFile = serde_json::from_reader(BufReader::new(File::open(path)?))
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    file.into_model()
}
