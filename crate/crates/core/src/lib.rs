//! Numerical solver and hypothesis checks for the Dirichlet problem of
//! Monge-Ampère type equations
//!
//! ```text
//!     det(D²u − A(x, Du)) = B(x, Du)   in Ω,
//!                       u = φ          on ∂Ω,
//! ```
//!
//! solved for elliptic solutions (`D²u − A(x, Du) > 0`) by the method of
//! continuity, starting from a subsolution `u̲` and following
//!
//! ```text
//!     det(D²u − A(x, Du)) = t·B(x, Du) + (1 − t)·det(D²u̲ − A(x, Du̲)),   0 ≤ t ≤ 1.
//! ```
//!
//! The crate is organised in layers:
//!
//! - [`model`]: domains, matrix functions `A(x, p)`, right-hand sides `B(x, p)`,
//!   cost functions and generating maps that produce `(A, B)`, coordinate
//!   transforms.
//! - [`discretize`]: uniform grids with Shortley–Weller arms at curved
//!   boundaries, derivative stencils, the augmented Hessian and the residual.
//! - [`solver`]: the linearized operator, damped Newton with an ellipticity
//!   safeguard and the continuation driver.
//! - [`conditions`]: executable checks for the structural hypotheses
//!   (regularity, structure bounds, subsolutions, barriers, convexity).
//! - [`diagnostics`]: estimate monitors, transport residuals and convergence
//!   studies.
//! - [`instances`]: manufactured problems with known solutions.
//! - [`cli`]: the `mongeampere` command-line front end and its config format.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cli;
pub mod conditions;
pub mod diagnostics;
pub mod discretize;
pub mod expr;
pub mod instances;
pub mod linalg;
pub mod model;
pub mod solver;

pub use nalgebra;

/// Dense vector used by the dimension-generic model evaluators.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used by the dimension-generic model evaluators.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Point or vector in the plane, used by the discrete layer.
pub type P2 = nalgebra::Vector2<f64>;
/// 2×2 matrix used by the discrete layer.
pub type M2 = nalgebra::Matrix2<f64>;
