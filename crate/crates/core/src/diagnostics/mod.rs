//! Runtime monitors for the a-priori estimate quantities, transport
//! residuals and manufactured-solution convergence studies.

mod estimates;
mod study;
mod transport;

pub use estimates::{
    boundary_w, estimate_report, pogorelov_functional, BoundaryW, EstimateReport, PogorelovField,
    PogorelovParams,
};
pub use study::{convergence_study, solution_error, StudyFailure, StudyRow, StudyTable};
pub use transport::{
    map_error, transport_map, transport_residual, ImpliedDensity, TransportResidual,
};

use thiserror::Error;

use crate::discretize::DiscretizeError;
use crate::model::ModelError;
use crate::solver::SolverError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("need ≥2 resolutions, got {0}")]
    TooFewResolutions(usize),
    #[error("problem {0} has no exact solution")]
    MissingExact(String),
    #[error("problem {0} has no subsolution")]
    MissingSubsolution(String),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
