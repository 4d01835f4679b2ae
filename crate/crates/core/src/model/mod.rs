//! Problem instances: domains, matrix functions, right-hand sides, cost
//! functions, generating maps and coordinate transforms.

mod cost;
mod domain;
mod mapping;
mod matrix;
mod problem;
pub mod registry;
mod transform;

pub use cost::{
    a_from_cost, solve_y, CostMatrix, CostModel, InversionConfig, LinearCost, LogCost, NegSqrtCost,
    QuadraticCost, SqrtCost,
};
pub use domain::{BoundarySample, Domain};
pub use mapping::{
    problem_from_mapping, CostMapping, ExprMapping, GeneratingMap, MappingB, MappingMatrix,
};
pub use matrix::{
    eval_a, fd_dp, fd_dpp, AEval, ConstantMatrix, ExprMatrix, FnMatrix, LogCostMatrix,
    MatrixFunction, SqrtCostMatrix, ZeroMatrix,
};
pub use problem::{fd_grad_p, spatial, ExprScalar, FnScalar, ProblemSpec, ScalarFunction, Spatial};
pub use transform::{
    transform_problem, AffineMap, Diffeomorphism, TransformedMatrix, TransformedScalar,
};

use thiserror::Error;

/// Default floor for `|det D²_{x,y}c|` and `|det Y_p|`.
pub const DET_FLOOR: f64 = 1e-8;

/// Relative finite-difference step in `p`: `h_p = 1e−4·(1 + |p|)`.
pub fn fd_step(p: &crate::Vector) -> f64 {
    1e-4 * (1.0 + p.norm())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("evaluation failed at x={x:?}, p={p:?}: {reason}")]
    Evaluation {
        x: Vec<f64>,
        p: Vec<f64>,
        reason: String,
    },
    #[error("A1 violated or bad initial guess at x={x:?}, p={p:?} (residual trace {trace:?})")]
    InversionFailed {
        x: Vec<f64>,
        p: Vec<f64>,
        trace: Vec<f64>,
    },
    #[error("degenerate cost at x={x:?}, y={y:?}: |det D²xy c| = {det:e}")]
    DegenerateCost { x: Vec<f64>, y: Vec<f64>, det: f64 },
    #[error("mapping degenerate at x={x:?}, p={p:?}: |det Y_p| = {det:e}")]
    MappingDegenerate { x: Vec<f64>, p: Vec<f64>, det: f64 },
    #[error("non-invertible Jacobian at x={x:?}: det J = {det:e}")]
    NonInvertibleJacobian { x: Vec<f64>, det: f64 },
    #[error("inf B = {value:e} ≤ 0 at x={x:?}, p={p:?}")]
    NonPositiveB {
        x: Vec<f64>,
        p: Vec<f64>,
        value: f64,
    },
    #[error("unknown model {0:?}")]
    UnknownModel(String),
    #[error("model {model:?}: {reason}")]
    Config { model: String, reason: String },
}

impl ModelError {
    pub(crate) fn eval(x: &crate::Vector, p: &crate::Vector, reason: impl Into<String>) -> Self {
        ModelError::Evaluation {
            x: x.iter().copied().collect(),
            p: p.iter().copied().collect(),
            reason: reason.into(),
        }
    }
}
