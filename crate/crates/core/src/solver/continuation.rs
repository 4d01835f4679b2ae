use std::fmt;

use super::linearized::assemble_linearized;
use super::{SolverConfig, SolverError};
use crate::conditions::{ConditionReport, Witness};
use crate::discretize::{assemble_w, residual_of, EllipticIterate, Grid, Homotopy, ScalarField};
use crate::model::ProblemSpec;

/// One line of the machine-readable solver trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceLine {
    pub t: f64,
    pub iter: usize,
    pub residual: f64,
    pub min_eig: f64,
    pub alpha: f64,
}

impl TraceLine {
    pub const HEADER: &'static str = "t,iter,residual,min_eig,alpha";
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{:e},{:e},{}",
            self.t, self.iter, self.residual, self.min_eig, self.alpha
        )
    }
}

/// One attempted continuation step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub step: f64,
    pub newton_iters: usize,
    pub residual: f64,
    pub min_eig: f64,
    pub accepted: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    Stalled,
    EllipticityLost,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::Stalled => "stalled",
            SolveStatus::EllipticityLost => "ellipticity-lost",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ContinuationResult {
    pub status: SolveStatus,
    pub steps: Vec<StepRecord>,
    pub trace: Vec<TraceLine>,
    /// Last accepted iterate (at `t = 1` on success).
    pub iterate: EllipticIterate,
    /// Largest `t` reached.
    pub t: f64,
    pub final_residual: f64,
    /// Smallest `min_eig(w)` over every accepted iterate.
    pub min_eig_accepted: f64,
    /// Last failure, when a step was rejected.
    pub last_error: Option<String>,
}

impl ContinuationResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }

    pub fn accepted_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.accepted).count()
    }

    pub fn total_newton_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.newton_iters).sum()
    }

    pub fn trace_csv(&self) -> String {
        let mut s = String::from(TraceLine::HEADER);
        s.push('\n');
        for l in &self.trace {
            s.push_str(&l.to_string());
            s.push('\n');
        }
        s
    }
}

/// Result of one damped Newton step.
#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub iterate: EllipticIterate,
    pub residual: f64,
    pub alpha: f64,
    pub delta_max: f64,
}

fn max_interior(r: &ScalarField) -> f64 {
    r.interior.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Solves the linearized system and backtracks `α = 1, ½, …` until the new
/// iterate keeps `min_eig(w) ≥ ε_ell` and reduces the residual max-norm.
pub fn newton_step(
    ps: &ProblemSpec,
    grid: &Grid,
    it: &EllipticIterate,
    t: f64,
    hom: Option<&Homotopy>,
    cfg: &SolverConfig,
) -> Result<NewtonOutcome, SolverError> {
    let eps_ell = it.ellipticity_floor(cfg.eps_ell_factor);
    if it.min_eigenvalue() < eps_ell {
        let node = it.least_elliptic_node();
        return Err(SolverError::NotElliptic {
            node,
            min_eig: it.min_eig[node],
            floor: eps_ell,
        });
    }
    let res = residual_of(ps, grid, it, t, hom)?;
    let r0 = max_interior(&res);
    let sys = assemble_linearized(ps, grid, it, &res, t, hom, eps_ell)?;
    let delta = sys.matrix.factor()?.solve(&sys.rhs);
    let delta_max = delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut alpha = 1.0;
    let mut ellipticity_blocked = true;
    for _ in 0..=cfg.max_halvings {
        let mut u = it.u.clone();
        for (v, d) in u.interior.iter_mut().zip(&delta) {
            *v += alpha * d;
        }
        let cand = assemble_w(ps, grid, &u)?;
        if cand.min_eigenvalue() >= cand.ellipticity_floor(cfg.eps_ell_factor) {
            ellipticity_blocked = false;
            if let Ok(r) = residual_of(ps, grid, &cand, t, hom) {
                let rn = max_interior(&r);
                if rn < r0 || rn == 0.0 {
                    return Ok(NewtonOutcome {
                        iterate: cand,
                        residual: rn,
                        alpha,
                        delta_max,
                    });
                }
            }
        }
        alpha *= 0.5;
    }
    Err(SolverError::LineSearchFailed {
        residual: r0,
        halvings: cfg.max_halvings,
        ellipticity_blocked,
    })
}

enum StepFailure {
    Ellipticity(String),
    Other(String),
}

/// Runs Newton at fixed `t` from `start`; returns the converged iterate and
/// iteration count, appending to `trace`.
fn solve_at(
    ps: &ProblemSpec,
    grid: &Grid,
    start: EllipticIterate,
    t: f64,
    hom: &Homotopy,
    cfg: &SolverConfig,
    trace: &mut Vec<TraceLine>,
) -> Result<(EllipticIterate, usize, f64), (StepFailure, usize, f64, f64)> {
    let floor = start.ellipticity_floor(cfg.eps_ell_factor);
    if start.min_eigenvalue() < floor {
        return Err((
            StepFailure::Ellipticity(format!(
                "predictor not elliptic at t = {t}: min eig {:e}",
                start.min_eigenvalue()
            )),
            0,
            f64::NAN,
            start.min_eigenvalue(),
        ));
    }
    let mut it = start;
    let mut r = match residual_of(ps, grid, &it, t, Some(hom)) {
        Ok(r) => max_interior(&r),
        Err(e) => {
            return Err((
                StepFailure::Other(e.to_string()),
                0,
                f64::NAN,
                it.min_eigenvalue(),
            ))
        }
    };
    trace.push(TraceLine {
        t,
        iter: 0,
        residual: r,
        min_eig: it.min_eigenvalue(),
        alpha: 0.0,
    });
    for iter in 1..=cfg.max_newton {
        if r <= cfg.tol {
            return Ok((it, iter - 1, r));
        }
        match newton_step(ps, grid, &it, t, Some(hom), cfg) {
            Ok(out) => {
                it = out.iterate;
                r = out.residual;
                trace.push(TraceLine {
                    t,
                    iter,
                    residual: r,
                    min_eig: it.min_eigenvalue(),
                    alpha: out.alpha,
                });
            }
            Err(e) => {
                let fail = match e {
                    SolverError::LineSearchFailed {
                        ellipticity_blocked: true,
                        ..
                    }
                    | SolverError::NotElliptic { .. } => StepFailure::Ellipticity(e.to_string()),
                    other => StepFailure::Other(other.to_string()),
                };
                return Err((fail, iter, r, it.min_eigenvalue()));
            }
        }
    }
    if r <= cfg.tol {
        Ok((it, cfg.max_newton, r))
    } else {
        Err((
            StepFailure::Other(format!(
                "no convergence in {} Newton iterations",
                cfg.max_newton
            )),
            cfg.max_newton,
            r,
            it.min_eigenvalue(),
        ))
    }
}

/// Method of continuity from the subsolution `sub` to `t = 1`.
///
/// The `t = 0` problem is solved exactly by `u̲`. Each step predicts
/// `u + Δt·(φ − u̲)` (which carries the boundary values from `g_t` to
/// `g_{t+Δt}`), then runs damped Newton. Steps double after fast Newton
/// solves and halve on failure.
pub fn continuation_solve(
    ps: &ProblemSpec,
    grid: &Grid,
    sub: &ScalarField,
    cfg: &SolverConfig,
) -> Result<ContinuationResult, SolverError> {
    continuation_solve_with(ps, grid, sub, cfg, &mut |_, _| {})
}

/// [`continuation_solve`] calling `on_accept(t, iterate)` after every
/// accepted step.
pub fn continuation_solve_with(
    ps: &ProblemSpec,
    grid: &Grid,
    sub: &ScalarField,
    cfg: &SolverConfig,
    on_accept: &mut dyn FnMut(f64, &EllipticIterate),
) -> Result<ContinuationResult, SolverError> {
    let hom = Homotopy::new(ps, grid, sub.clone())?;
    let phi_field = ScalarField::sample(grid, &ps.phi);
    let mut current = assemble_w(ps, grid, sub)?;
    let mut t = 0.0;
    let mut dt = cfg.t_step0.min(1.0);
    let mut steps = Vec::new();
    let mut trace = Vec::new();
    let mut min_eig_accepted = current.min_eigenvalue();
    let mut last_error = None;
    let mut final_residual = 0.0;

    while t < 1.0 {
        let t_new = if t + dt >= 1.0 - 1e-12 { 1.0 } else { t + dt };
        let step = t_new - t;
        let mut u = current.u.clone();
        for (v, (p, s)) in u
            .interior
            .iter_mut()
            .zip(phi_field.interior.iter().zip(&sub.interior))
        {
            *v += step * (p - s);
        }
        u.boundary = hom.boundary_values(t_new);
        let attempt = assemble_w(ps, grid, &u)
            .map_err(|e| (StepFailure::Other(e.to_string()), 0, f64::NAN, f64::NAN))
            .and_then(|pred| solve_at(ps, grid, pred, t_new, &hom, cfg, &mut trace));
        match attempt {
            Ok((it, iters, r)) => {
                min_eig_accepted = min_eig_accepted.min(it.min_eigenvalue());
                steps.push(StepRecord {
                    t: t_new,
                    step,
                    newton_iters: iters,
                    residual: r,
                    min_eig: it.min_eigenvalue(),
                    accepted: true,
                });
                current = it;
                t = t_new;
                on_accept(t, &current);
                final_residual = r;
                if iters <= cfg.fast_iters {
                    dt = (2.0 * dt).min(1.0);
                }
            }
            Err((fail, iters, r, me)) => {
                steps.push(StepRecord {
                    t: t_new,
                    step,
                    newton_iters: iters,
                    residual: r,
                    min_eig: me,
                    accepted: false,
                });
                let (msg, ellipticity) = match fail {
                    StepFailure::Ellipticity(m) => (m, true),
                    StepFailure::Other(m) => (m, false),
                };
                last_error = Some(msg);
                dt *= 0.5;
                if dt < cfg.min_step {
                    return Ok(ContinuationResult {
                        status: if ellipticity {
                            SolveStatus::EllipticityLost
                        } else {
                            SolveStatus::Stalled
                        },
                        steps,
                        trace,
                        iterate: current,
                        t,
                        final_residual,
                        min_eig_accepted,
                        last_error,
                    });
                }
            }
        }
    }
    Ok(ContinuationResult {
        status: SolveStatus::Converged,
        steps,
        trace,
        iterate: current,
        t,
        final_residual,
        min_eig_accepted,
        last_error,
    })
}

/// `min(u − u̲)` over all stored nodes; passes at `≥ −1e−8`.
pub fn comparison_check(grid: &Grid, u: &ScalarField, sub: &ScalarField) -> ConditionReport {
    let mut rep = ConditionReport::new("comparison", 1e-8);
    for n in 0..grid.n_interior() {
        rep.observe(
            u.interior[n] - sub.interior[n],
            Witness::node(n, grid.interior_point(n)),
        );
    }
    for (b, x) in grid.boundary_points().iter().enumerate() {
        rep.observe(u.boundary[b] - sub.boundary[b], Witness::at(*x));
    }
    rep
}
