//! Newton's method on the discrete equation, linearized with the operator
//! `ℒδ = F^{ij}(D_{ij}δ − D_{p_k}A_{ij} D_kδ) − s·D_{p_k}(log B) D_kδ`,
//! `F = w⁻¹`, inside the method of continuity in `t`.

mod continuation;
mod linearized;

pub use continuation::{
    comparison_check, continuation_solve, continuation_solve_with, newton_step, ContinuationResult,
    NewtonOutcome, SolveStatus, StepRecord, TraceLine,
};
pub use linearized::{
    assemble_linearized, linearized_coefficients, LinearizedCoefficients, LinearizedSystem,
};

use thiserror::Error;

use crate::discretize::DiscretizeError;
use crate::linalg::LinalgError;
use crate::model::ModelError;

/// Newton and continuation settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Target max-norm of the residual.
    pub tol: f64,
    /// Newton iterations per continuation step.
    pub max_newton: usize,
    /// First continuation step in `t`.
    pub t_step0: f64,
    /// Smallest continuation step before giving up.
    pub min_step: f64,
    /// Ellipticity floor factor: `ε_ell = factor·(1 + max|w|)`.
    pub eps_ell_factor: f64,
    /// Line search tries `α = 1, ½, …, 2^{−max_halvings}`.
    pub max_halvings: u32,
    /// Steps finishing in at most this many Newton iterations double the next step.
    pub fast_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-9,
            max_newton: 30,
            t_step0: 1.0,
            min_step: 1e-4,
            eps_ell_factor: 1e-10,
            max_halvings: 10,
            fast_iters: 3,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(
        "iterate not elliptic: min eigenvalue of w = {min_eig:e} < floor {floor:e} at node {node}"
    )]
    NotElliptic {
        node: usize,
        min_eig: f64,
        floor: f64,
    },
    #[error("line search failed: no α ≥ 2^-{halvings} keeps ellipticity and reduces the residual {residual:e}")]
    LineSearchFailed {
        residual: f64,
        halvings: u32,
        /// Every trial step left the elliptic cone.
        ellipticity_blocked: bool,
    },
    #[error(transparent)]
    Linear(#[from] LinalgError),
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
