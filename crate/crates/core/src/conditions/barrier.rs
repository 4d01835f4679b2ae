use super::{check_subsolution, ConditionReport};
use crate::discretize::{EllipticIterate, Grid, ScalarField};
use crate::model::ProblemSpec;
use crate::solver::{linearized_coefficients, SolverError};

/// Values of `K` tried by [`barrier_search`], in order.
pub const BARRIER_K_LADDER: [f64; 11] = [
    1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0,
];

/// Constants for `ℒ(e^{K(u̲ − u)}) ≥ ε₁ΣF^{ii} − C` at the interior nodes.
#[derive(Clone, Debug)]
pub struct BarrierCertificate {
    pub k: f64,
    pub eps1: f64,
    pub c: f64,
    /// `ℒφ − ε₁ΣF^{ii} + C` per interior node.
    pub margin_field: Vec<f64>,
    /// `ℒφ` per interior node.
    pub l_phi: Vec<f64>,
    /// `ΣF^{ii}` per interior node.
    pub trace_f: Vec<f64>,
    pub valid: bool,
    /// `ε₁ΣF^{ii} − C ≤ 0` at every node: the inequality carries no information.
    pub vacuous: bool,
    pub subsolution: ConditionReport,
    pub notes: Vec<String>,
}

impl BarrierCertificate {
    pub fn min_margin(&self) -> f64 {
        self.margin_field
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Fits `(ε₁, C)` for one `K`.
///
/// `C₀ = max(0, −min ℒφ)` is the least `C` that any `ε₁ ≥ 0` needs; the
/// budget `C = (1 + slack)·C₀ + slack` leaves room for a positive `ε₁`, which is
/// then the largest value with `ℒφ ≥ ε₁ΣF^{ii} − C` at every node. The
/// certificate is valid when `K > 0`, `ε₁ > 0`, every margin is non-negative
/// and `u̲` is a strict subsolution.
pub fn check_barrier(
    ps: &ProblemSpec,
    grid: &Grid,
    it: &EllipticIterate,
    sub: &ScalarField,
    k: f64,
    slack: f64,
    eps_ell: f64,
) -> Result<BarrierCertificate, SolverError> {
    let coeffs = linearized_coefficients(ps, grid, it, 1.0, None, eps_ell)?;
    let phi = ScalarField {
        interior: sub
            .interior
            .iter()
            .zip(&it.u.interior)
            .map(|(s, u)| (k * (s - u)).exp())
            .collect(),
        boundary: sub
            .boundary
            .iter()
            .zip(&it.u.boundary)
            .map(|(s, u)| (k * (s - u)).exp())
            .collect(),
    };
    let l_phi = coeffs.apply(grid, &phi);
    let trace_f = coeffs.trace_f();
    let c0 = l_phi.iter().fold(0.0_f64, |m, v| m.max(-v));
    let c = (1.0 + slack) * c0 + slack;
    let eps1 = l_phi
        .iter()
        .zip(&trace_f)
        .map(|(l, s)| (l + c) / s)
        .fold(f64::INFINITY, f64::min)
        * (1.0 - 1e-12);
    let margin_field: Vec<f64> = l_phi
        .iter()
        .zip(&trace_f)
        .map(|(l, s)| l - eps1 * s + c)
        .collect();
    let max_trace = trace_f.iter().copied().fold(0.0, f64::max);
    let vacuous = eps1 * max_trace <= c;
    let subsolution = check_subsolution(ps, grid, sub, true);
    let mut notes = Vec::new();
    if k <= 0.0 {
        notes.push("K too small".to_string());
    } else if vacuous {
        notes.push("vacuous: ε₁ΣF^{ii} ≤ C at every node".to_string());
    }
    if !subsolution.pass {
        notes.push("u̲ is not a strict subsolution".to_string());
    }
    let valid = k > 0.0
        && eps1 > 0.0
        && eps1.is_finite()
        && margin_field.iter().all(|&m| m >= 0.0)
        && subsolution.pass;
    Ok(BarrierCertificate {
        k,
        eps1,
        c,
        margin_field,
        l_phi,
        trace_f,
        valid,
        vacuous,
        subsolution,
        notes,
    })
}

/// Result of trying the `K` ladder.
#[derive(Clone, Debug)]
pub struct BarrierSearch {
    /// First valid certificate, if any.
    pub certificate: Option<BarrierCertificate>,
    /// `(K, ε₁, C, valid)` for every `K` tried.
    pub trace: Vec<(f64, f64, f64, bool)>,
}

/// Tries `K ∈ {1, 2, 4, …, 1024}` and keeps the first valid certificate.
pub fn barrier_search(
    ps: &ProblemSpec,
    grid: &Grid,
    it: &EllipticIterate,
    sub: &ScalarField,
    slack: f64,
    eps_ell: f64,
) -> Result<BarrierSearch, SolverError> {
    let mut trace = Vec::new();
    for k in BARRIER_K_LADDER {
        let cert = check_barrier(ps, grid, it, sub, k, slack, eps_ell)?;
        trace.push((k, cert.eps1, cert.c, cert.valid));
        if cert.valid {
            return Ok(BarrierSearch {
                certificate: Some(cert),
                trace,
            });
        }
    }
    Ok(BarrierSearch {
        certificate: None,
        trace,
    })
}
