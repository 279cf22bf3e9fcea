//! Tensor-product B-spline approximation of scattered point clouds with
//! adaptive, per-control-point regularization.
//!
//! The usual pipeline is [`assemble_system`] → [`solve`] → [`SplineModel`],
//! bundled by [`fit`].

pub mod assembly;
pub mod bspline;
pub mod cloud;
pub mod condition;
pub mod datasets;
pub mod error;
pub mod index;
pub mod metrics;
pub mod model;
pub mod normal;
pub mod solver;
pub mod sparse;

pub use assembly::{assemble_system, FitConfig, Lambdas, LinearSystem};
pub use bspline::KnotVector;
pub use cloud::{BoundingBox, PointCloud};
pub use condition::{condition_number, ConditionEstimate, ConditionMode};
pub use error::{Error, Result};
pub use index::IndexSet;
pub use model::SplineModel;
pub use solver::{solve, FitReport, SolveOptions, SolverMethod};
pub use sparse::SparseMatrix;

/// A fitted model together with its diagnostics and the system it came from.
#[derive(Debug, Clone)]
pub struct Fit {
    pub model: SplineModel,
    pub report: FitReport,
    pub system: LinearSystem,
}

/// Assembles and solves in one step.
pub fn fit(cloud: &PointCloud, config: &FitConfig, opts: &SolveOptions) -> Result<Fit> {
    let system = assemble_system(cloud, config)?;
    let solution = solve(&system, opts)?;
    let model = SplineModel::new(
        system.knots.clone(),
        system.value_dim,
        solution.control,
        system.bbox.clone(),
    )?;
    Ok(Fit {
        model,
        report: solution.report,
        system,
    })
}
