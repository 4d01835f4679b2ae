//! Executable checks for the structural hypotheses of the existence theory.
//!
//! Every check returns a [`ConditionReport`] whose margin is signed so that
//! non-negative values pass. Sampling of `x`, `p` and directions is explicit;
//! see [`sampling`] for the usual sample sets.

mod barrier;
mod convexity;
mod hypotheses;
mod report;
pub mod sampling;
mod subsolution;

pub use barrier::{
    barrier_search, check_barrier, BarrierCertificate, BarrierSearch, BARRIER_K_LADDER,
};
pub use convexity::{check_domain_c_convexity, check_solution_c_convexity, CONVEXITY_TOL};
pub use hypotheses::{
    check_a0_eigenvalue, check_a_bounded, check_regularity, check_structure,
    check_uniform_a_convexity, REGULARITY_TOL,
};
pub use report::{ConditionReport, Witness};
pub use subsolution::{
    check_subsolution, check_subsolution_where, strictify, StrictifyMode, STRICT_MARGIN,
};

/// Number of direction angles on `[0, π)` shared by all direction scans.
pub const DIRECTION_SAMPLES: usize = 64;
