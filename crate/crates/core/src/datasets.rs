//! Synthetic point clouds plus CSV and grid utilities.
//!
//! Random streams come from ChaCha8 seeded with a `u64`; uniforms in
//! `[0, 1)` are formed from the top 53 bits of each 64-bit output, so a
//! given seed produces the same cloud on every platform.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::{BoundingBox, PointCloud};
use crate::error::{Error, Result};
use crate::index::IndexSet;
use crate::model::SplineModel;

/// Unnormalized sinc, `sin(t)/t` with `sinc(0) = 1`.
pub fn sinc(t: f64) -> f64 {
    if t == 0.0 {
        1.0
    } else {
        t.sin() / t
    }
}

/// `sinc(x² + y²) · sinc(2(x − 2)² + (y + 2)²)`
pub fn polysinc(x: f64, y: f64) -> f64 {
    sinc(x * x + y * y) * sinc(2.0 * (x - 2.0).powi(2) + (y + 2.0).powi(2))
}

/// The `[-4π, 4π]²` box the polysinc benchmark is sampled on.
pub fn polysinc_domain() -> BoundingBox {
    BoundingBox::cube(2, -4.0 * PI, 4.0 * PI).expect("valid box")
}

/// Disk (ball) where only a fraction `sparsity` of candidate samples is kept.
#[derive(Debug, Clone, PartialEq)]
pub struct VoidSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub sparsity: f64,
}

impl VoidSpec {
    pub fn new(center: Vec<f64>, radius: f64, sparsity: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "void radius must be > 0, got {radius}"
            )));
        }
        if !(sparsity > 0.0 && sparsity <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "void sparsity must lie in (0, 1], got {sparsity}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("void center must be finite".into()));
        }
        Ok(Self {
            center,
            radius,
            sparsity,
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        d2 <= self.radius * self.radius
    }
}

/// Four disks of radius π centered at `(±2π, ±2π)`.
pub fn default_voids(sparsity: f64) -> Result<Vec<VoidSpec>> {
    let c = 2.0 * PI;
    [(-c, -c), (c, -c), (-c, c), (c, c)]
        .into_iter()
        .map(|(x, y)| VoidSpec::new(vec![x, y], PI, sparsity))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub count: usize,
    pub domain: BoundingBox,
    pub voids: Vec<VoidSpec>,
    pub seed: u64,
}

impl SynthConfig {
    /// Polysinc domain without voids.
    pub fn polysinc(count: usize, seed: u64) -> Self {
        Self {
            count,
            domain: polysinc_domain(),
            voids: Vec::new(),
            seed,
        }
    }

    pub fn with_voids(mut self, voids: Vec<VoidSpec>) -> Self {
        self.voids = voids;
        self
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn max_attempts(count: usize) -> usize {
    count.saturating_mul(1000).saturating_add(1_000_000)
}

/// Rejection-samples `count` points uniformly in `domain`, keeping a
/// candidate with probability `keep(x)`.
fn sample_points(
    count: usize,
    domain: &BoundingBox,
    seed: u64,
    keep: impl Fn(&[f64]) -> f64,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidConfig(
            "point count must be at least 1".into(),
        ));
    }
    let d = domain.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::with_capacity(count * d);
    let mut x = vec![0.0; d];
    let limit = max_attempts(count);
    let mut attempts = 0;
    while coords.len() < count * d {
        attempts += 1;
        if attempts > limit {
            return Err(Error::Generation(format!(
                "accepted only {} of {count} points after {limit} candidates",
                coords.len() / d
            )));
        }
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = domain.min[k] + uniform(&mut rng) * (domain.max[k] - domain.min[k]);
        }
        let p = keep(&x);
        if p >= 1.0 || (p > 0.0 && uniform(&mut rng) < p) {
            coords.extend_from_slice(&x);
        }
    }
    Ok(coords)
}

/// Acceptance probability at `x`: the smallest sparsity of any void containing it.
pub fn void_acceptance(voids: &[VoidSpec], x: &[f64]) -> f64 {
    voids
        .iter()
        .filter(|v| v.contains(x))
        .map(|v| v.sparsity)
        .fold(1.0, f64::min)
}

pub fn generate_polysinc_cloud(cfg: &SynthConfig) -> Result<PointCloud> {
    if cfg.domain.dim() != 2 {
        return Err(Error::InvalidConfig("polysinc is two-dimensional".into()));
    }
    if let Some(v) = cfg.voids.iter().find(|v| v.center.len() != 2) {
        return Err(Error::InvalidConfig(format!(
            "void center {:?} is not two-dimensional",
            v.center
        )));
    }
    let coords = sample_points(cfg.count, &cfg.domain, cfg.seed, |x| {
        void_acceptance(&cfg.voids, x)
    })?;
    let values = coords
        .chunks_exact(2)
        .map(|x| polysinc(x[0], x[1]))
        .collect();
    PointCloud::with_bbox(2, 1, coords, values, cfg.domain.clone())
}

/// A box with an empty central disk.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusConfig {
    pub count: usize,
    pub domain: BoundingBox,
    /// Hole radius as a fraction of the box half-width.
    pub hole_radius: f64,
    pub seed: u64,
}

impl AnnulusConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            domain: BoundingBox::cube(2, -1.0, 1.0).expect("valid box"),
            hole_radius: 0.4,
            seed,
        }
    }
}

/// Box coordinates mapped to `[-1, 1]^2`.
fn normalized(domain: &BoundingBox, x: &[f64]) -> [f64; 2] {
    let f = |k: usize| 2.0 * (x[k] - domain.min[k]) / (domain.max[k] - domain.min[k]) - 1.0;
    [f(0), f(1)]
}

/// Smooth test field with range `[-2, 10]`: `4 + 6 sin(πx̂) cos(πŷ)` in
/// box-normalized coordinates.
pub fn annulus_value(domain: &BoundingBox, x: &[f64]) -> f64 {
    let [a, b] = normalized(domain, x);
    4.0 + 6.0 * (PI * a).sin() * (PI * b).cos()
}

/// Whether `x` lies inside the annulus hole.
pub fn in_annulus_hole(cfg: &AnnulusConfig, x: &[f64]) -> bool {
    let [a, b] = normalized(&cfg.domain, x);
    a * a + b * b < cfg.hole_radius * cfg.hole_radius
}

pub fn generate_annulus_cloud(cfg: &AnnulusConfig) -> Result<PointCloud> {
    if cfg.domain.dim() != 2 {
        return Err(Error::InvalidConfig(
            "annulus clouds are two-dimensional".into(),
        ));
    }
    if cfg.hole_radius.is_nan() || cfg.hole_radius < 0.0 {
        return Err(Error::InvalidConfig("hole radius must be >= 0".into()));
    }
    if cfg.hole_radius * cfg.hole_radius >= 2.0 {
        return Err(Error::Generation("the hole covers the whole box".into()));
    }
    let coords = sample_points(cfg.count, &cfg.domain, cfg.seed, |x| {
        if in_annulus_hole(cfg, x) {
            0.0
        } else {
            1.0
        }
    })?;
    let values = coords
        .chunks_exact(2)
        .map(|x| annulus_value(&cfg.domain, x))
        .collect();
    PointCloud::with_bbox(2, 1, coords, values, cfg.domain.clone())
}

fn parse_header(fields: &csv::StringRecord) -> Result<(usize, usize)> {
    let names: Vec<&str> = fields.iter().map(str::trim).collect();
    let d = names.iter().take_while(|n| n.starts_with('x')).count();
    let vd = names.len() - d;
    let expected: Vec<String> = (1..=d)
        .map(|k| format!("x{k}"))
        .chain((1..=vd).map(|k| format!("v{k}")))
        .collect();
    if d == 0 || vd == 0 || names != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header x1,..,xd,v1,..,vD; got {:?}",
                names.join(",")
            ),
        });
    }
    Ok((d, vd))
}

pub fn read_csv_from<R: Read>(reader: R) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty file, missing header".into(),
            })
        }
        Some(r) => r.map_err(csv_error)?,
    };
    let (d, vd) = parse_header(&header)?;
    let mut coords = Vec::new();
    let mut values = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != d + vd {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", d + vd, rec.len()),
            });
        }
        for (i, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("field {} is not a number: {field:?}", i + 1),
            })?;
            if i < d {
                coords.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if coords.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no data rows".into(),
        });
    }
    PointCloud::new(d, vd, coords, values)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Parse {
            line,
            message: format!("{kind:?}"),
        },
    }
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<PointCloud> {
    read_csv_from(BufReader::new(File::open(path)?))
}

/// Writes `x1..xd,v1..vD` rows. Numbers use Rust's shortest round-trip
/// formatting, so reading the file back reproduces every value bit for bit.
pub fn write_csv_to<W: Write>(cloud: &PointCloud, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let header: Vec<String> = (1..=cloud.dim())
        .map(|k| format!("x{k}"))
        .chain((1..=cloud.value_dim()).map(|k| format!("v{k}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (x, v) in cloud.points() {
        let row: Vec<String> = x.iter().chain(v).map(|f| format!("{f:?}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    write_csv_to(cloud, File::create(path)?)
}

/// Equispaced parameters `0, 1/(n-1), ..., 1` per dimension.
pub fn grid_axes(shape: &[usize]) -> Result<Vec<Vec<f64>>> {
    if let Some(&n) = shape.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidConfig(format!(
            "grid needs at least 2 samples per dimension, got {n}"
        )));
    }
    Ok(shape
        .iter()
        .map(|&n| (0..n).map(|i| i as f64 / (n - 1) as f64).collect())
        .collect())
}

/// Evaluates the model on a tensor grid of parameters (endpoints included),
/// row-major with the last dimension fastest. Coordinates are physical.
pub fn resample_grid(model: &SplineModel, shape: &[usize]) -> Result<PointCloud> {
    if shape.len() != model.dim() {
        return Err(Error::InvalidConfig(format!(
            "grid has {} dimensions, model has {}",
            shape.len(),
            model.dim()
        )));
    }
    let axes = grid_axes(shape)?;
    let index = IndexSet::new(shape.to_vec())?;
    let mut coords = Vec::with_capacity(index.total() * model.dim());
    let mut values = Vec::with_capacity(index.total() * model.value_dim());
    for idx in index.iter() {
        let u: Vec<f64> = idx.iter().zip(&axes).map(|(&i, ax)| ax[i]).collect();
        values.extend(model.eval(&u)?);
        coords.extend(model.bbox().to_physical(&u));
    }
    // to_physical can round a hair past the box; clamp back inside
    let bbox = model.bbox();
    for (i, c) in coords.iter_mut().enumerate() {
        let k = i % model.dim();
        *c = c.clamp(bbox.min[k], bbox.max[k]);
    }
    PointCloud::with_bbox(model.dim(), model.value_dim(), coords, values, bbox.clone())
}
