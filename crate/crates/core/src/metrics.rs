//! Error measurements against reference data and per-control-point
//! regularization diagnostics.

use std::io::{BufWriter, Write};

use crate::assembly::{penalty_sites, LinearSystem};
use crate::bspline::KnotVector;
use crate::cloud::{BoundingBox, PointCloud};
use crate::datasets::grid_axes;
use crate::error::{Error, Result};
use crate::index::IndexSet;
use crate::model::SplineModel;

/// Samples per dimension used for grid error sampling in 2D.
pub const DEFAULT_GRID: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct RegionOfInterest(pub BoundingBox);

impl RegionOfInterest {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        Ok(Self(BoundingBox::new(min, max)?))
    }
}

pub enum Reference<'a> {
    /// Compare at the cloud's own points.
    Cloud(&'a PointCloud),
    /// Compare against a function of physical coordinates on a dense grid.
    Analytic(&'a dyn Fn(&[f64]) -> Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub max: f64,
    /// Root mean square over all samples and value components.
    pub l2: f64,
    pub samples: usize,
}

struct Accumulator {
    max: f64,
    sum_sq: f64,
    count: usize,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            max: 0.0,
            sum_sq: 0.0,
            count: 0,
        }
    }

    fn add(&mut self, model: &[f64], reference: &[f64]) {
        for (a, b) in model.iter().zip(reference) {
            let e = (a - b).abs();
            // keep NaN visible
            if e > self.max || e.is_nan() {
                self.max = e;
            }
            self.sum_sq += e * e;
            self.count += 1;
        }
    }
}

/// Max and RMS error of `model` against `reference`, restricted to `roi`.
/// Analytic references are sampled on an equispaced grid of `grid` points
/// per dimension covering the ROI (or the whole model box).
pub fn pointwise_errors(
    model: &SplineModel,
    reference: Reference<'_>,
    roi: Option<&RegionOfInterest>,
    grid: &[usize],
) -> Result<ErrorSummary> {
    let region = match roi {
        Some(RegionOfInterest(b)) => {
            if b.dim() != model.dim() || !model.bbox().contains_box(b) {
                return Err(Error::InvalidInput(format!(
                    "region of interest {:?}..{:?} is not inside the model box {:?}..{:?}",
                    b.min,
                    b.max,
                    model.bbox().min,
                    model.bbox().max
                )));
            }
            b.clone()
        }
        None => model.bbox().clone(),
    };

    let mut acc = Accumulator::new();
    match reference {
        Reference::Cloud(cloud) => {
            if cloud.dim() != model.dim() || cloud.value_dim() != model.value_dim() {
                return Err(Error::InvalidInput(
                    "reference cloud shape does not match the model".into(),
                ));
            }
            for (x, v) in cloud.points().filter(|(x, _)| region.contains(x)) {
                acc.add(&model.eval_physical(x)?, v);
            }
        }
        Reference::Analytic(f) => {
            if grid.len() != model.dim() {
                return Err(Error::InvalidConfig(format!(
                    "sample grid has {} dimensions, model has {}",
                    grid.len(),
                    model.dim()
                )));
            }
            let axes = grid_axes(grid)?;
            for idx in IndexSet::new(grid.to_vec())?.iter() {
                let t: Vec<f64> = idx.iter().zip(&axes).map(|(&i, ax)| ax[i]).collect();
                let x: Vec<f64> = region
                    .to_physical(&t)
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c.clamp(model.bbox().min[k], model.bbox().max[k]))
                    .collect();
                acc.add(&model.eval_physical(&x)?, &f(&x));
            }
        }
    }
    if acc.count == 0 {
        return Err(Error::InvalidInput(
            "no reference samples inside the region".into(),
        ));
    }
    Ok(ErrorSummary {
        max: acc.max,
        l2: (acc.sum_sq / acc.count as f64).sqrt(),
        samples: acc.count,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRecord {
    pub index: Vec<usize>,
    /// Peak location `w_α` of the control point's basis function.
    pub site: Vec<f64>,
    pub s: f64,
    pub s_tilde: f64,
    pub lambda: f64,
}

/// One record per control point, in lexicographic order.
pub fn lambda_field(system: &LinearSystem, knots: &[KnotVector]) -> Result<Vec<LambdaRecord>> {
    let index = IndexSet::new(knots.iter().map(KnotVector::len).collect())?;
    if index.total() != system.n_ctrl() {
        return Err(Error::InvalidInput(format!(
            "knots describe {} control points, system has {}",
            index.total(),
            system.n_ctrl()
        )));
    }
    let sites = penalty_sites(knots)?;
    let l = &system.lambdas;
    Ok(index
        .iter()
        .enumerate()
        .map(|(j, alpha)| LambdaRecord {
            site: alpha
                .iter()
                .enumerate()
                .map(|(k, &a)| sites[k][a])
                .collect(),
            index: alpha,
            s: l.s[j],
            s_tilde: l.s_tilde[j],
            lambda: l.lambda[j],
        })
        .collect())
}

/// CSV with columns `i1..id,w1..wd,s,s_tilde,lambda`.
pub fn write_lambda_csv<W: Write>(records: &[LambdaRecord], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let d = records.first().map_or(0, |r| r.index.len());
    let header: Vec<String> = (1..=d)
        .map(|k| format!("i{k}"))
        .chain((1..=d).map(|k| format!("w{k}")))
        .chain(["s".into(), "s_tilde".into(), "lambda".into()])
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for r in records {
        let row: Vec<String> = r
            .index
            .iter()
            .map(|i| i.to_string())
            .chain(
                r.site
                    .iter()
                    .chain([&r.s, &r.s_tilde, &r.lambda])
                    .map(|v| format!("{v:?}")),
            )
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_system, FitConfig};
    use crate::datasets::{generate_annulus_cloud, AnnulusConfig};

    fn constant_model(c: f64) -> SplineModel {
        let knots = vec![
            KnotVector::uniform_clamped(5, 2).unwrap(),
            KnotVector::uniform_clamped(5, 2).unwrap(),
        ];
        SplineModel::new(
            knots,
            1,
            vec![c; 25],
            BoundingBox::cube(2, -1.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn offset_constant() {
        let model = constant_model(2.0);
        let f = |_: &[f64]| vec![3.0];
        let e = pointwise_errors(&model, Reference::Analytic(&f), None, &[16, 16]).unwrap();
        assert!((e.max - 1.0).abs() < 1e-13);
        assert!((e.l2 - 1.0).abs() < 1e-13);
        assert_eq!(e.samples, 256);
    }

    #[test]
    fn roi_must_be_inside() {
        let model = constant_model(2.0);
        let f = |_: &[f64]| vec![2.0];
        let roi = RegionOfInterest::new(vec![0.0, 0.0], vec![2.0, 0.5]).unwrap();
        assert!(pointwise_errors(&model, Reference::Analytic(&f), Some(&roi), &[8, 8]).is_err());
        let roi = RegionOfInterest::new(vec![0.0, 0.0], vec![1.0, 0.5]).unwrap();
        let e = pointwise_errors(&model, Reference::Analytic(&f), Some(&roi), &[8, 8]).unwrap();
        assert!(e.max < 1e-13);
    }

    #[test]
    fn cloud_reference_uses_points_in_roi() {
        let model = constant_model(1.0);
        let cloud = PointCloud::new(2, 1, vec![-0.5, -0.5, 0.5, 0.5], vec![1.0, 4.0]).unwrap();
        let all = pointwise_errors(&model, Reference::Cloud(&cloud), None, &[]).unwrap();
        assert_eq!(all.samples, 2);
        assert!((all.max - 3.0).abs() < 1e-13);
        let roi = RegionOfInterest::new(vec![-1.0, -1.0], vec![0.0, 0.0]).unwrap();
        let part = pointwise_errors(&model, Reference::Cloud(&cloud), Some(&roi), &[]).unwrap();
        assert_eq!(part.samples, 1);
        assert!(part.max < 1e-13);
    }

    #[test]
    fn lambda_field_matches_direct_column_sums() {
        let cloud = generate_annulus_cloud(&AnnulusConfig::new(3000, 5)).unwrap();
        let cfg = FitConfig::new(2, vec![20, 20], 5.0, vec![1, 2]);
        let sys = assemble_system(&cloud, &cfg).unwrap();
        let field = lambda_field(&sys, &sys.knots).unwrap();
        assert_eq!(field.len(), 400);
        // independent column sums straight from the triplets
        let mut s = vec![0.0; 400];
        for (_, j, v) in sys.collocation.triplets() {
            s[j] += v;
        }
        let index = sys.index_set();
        for (j, r) in field.iter().enumerate() {
            assert_eq!(index.rank(&r.index).unwrap(), j);
            assert!((r.s - s[j]).abs() < 1e-12);
            assert_eq!(r.lambda > 0.0, s[j] < 5.0);
        }
        // the hole's center control points are regularized
        let center = field.iter().find(|r| r.index == vec![10, 10]).unwrap();
        assert_eq!(center.s, 0.0);
        assert!(center.lambda > 0.0);
    }

    #[test]
    fn zero_threshold_field() {
        let cloud = generate_annulus_cloud(&AnnulusConfig::new(500, 5)).unwrap();
        let sys = assemble_system(&cloud, &FitConfig::new(2, vec![8, 8], 0.0, vec![2])).unwrap();
        let field = lambda_field(&sys, &sys.knots).unwrap();
        assert!(field.iter().all(|r| r.lambda == 0.0));
        let mut buf = Vec::new();
        write_lambda_csv(&field, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("i1,i2,w1,w2,s,s_tilde,lambda\n"));
        assert_eq!(text.lines().count(), 65);
    }
}
