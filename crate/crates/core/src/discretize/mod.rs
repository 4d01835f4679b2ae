//! Uniform-grid finite differences on Ω: node classification, unequal-arm
//! stencils at curved boundaries, the augmented Hessian `w = D²u − A(x, Du)`
//! and the continuation residual.

mod field;
mod grid;
mod iterate;

pub use field::{write_csv, write_vtk, ScalarField};
pub use grid::{Arm, ArmEnd, Grid, NodeKind, Stencil, DIRECTIONS, MIN_INTERIOR_PER_AXIS};
pub use iterate::{
    assemble_w, boundary_derivatives, derivatives, residual, residual_of, EllipticIterate, Homotopy,
};
pub(crate) use iterate::{stencil_values, to_m2, vec2};

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizeError {
    #[error("spacing must be positive, got {0}")]
    BadSpacing(f64),
    #[error("too coarse: h = {h} leaves {nx}×{ny} interior nodes per axis (need ≥ {min})")]
    TooCoarse {
        h: f64,
        nx: usize,
        ny: usize,
        min: usize,
    },
    #[error("not elliptic at interior node {node} (x = {x:?}): min eigenvalue of w = {min_eig:e}")]
    NotElliptic {
        node: usize,
        x: [f64; 2],
        min_eig: f64,
    },
    #[error("right-hand side {value:e} ≤ 0 at interior node {node} (x = {x:?})")]
    NonPositiveRhs {
        node: usize,
        x: [f64; 2],
        value: f64,
    },
    #[error("subsolution missing: the continuation residual at t < 1 needs u̲")]
    MissingSubsolution,
    #[error(transparent)]
    Model(#[from] ModelError),
}
