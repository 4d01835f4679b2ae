use std::fmt::Write;

use super::{estimate_report, pogorelov_functional, DiagnosticsError, PogorelovParams};
use crate::discretize::{Grid, ScalarField};
use crate::model::ProblemSpec;
use crate::solver::{continuation_solve, SolveStatus, SolverConfig, SolverError};

/// One resolution of a convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub h: f64,
    pub interior_nodes: usize,
    pub t_steps: usize,
    pub newton_iterations: usize,
    pub residual: f64,
    /// Max-norm error against the exact solution over all stored nodes.
    pub error: f64,
    /// `log(e_prev/e)/log(h_prev/h)` against the previous row; `None` on the first row or when either error is zero.
    pub order: Option<f64>,
    pub c_est: f64,
    /// Over interior nodes and boundary points.
    pub pogorelov_max: f64,
    pub pogorelov_interior_max: f64,
    pub min_eig: f64,
    pub comparison_margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyTable {
    pub problem: String,
    pub rows: Vec<StudyRow>,
    /// Set when a solve failed; `rows` holds the completed resolutions.
    pub failure: Option<StudyFailure>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyFailure {
    pub h: f64,
    /// `Stalled` also covers setup errors (grid, model evaluation).
    pub status: SolveStatus,
    pub message: String,
}

impl std::fmt::Display for StudyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "h = {}: {} ({})", self.h, self.status, self.message)
    }
}

impl StudyTable {
    pub const CSV_HEADER: &'static str =
        "h,interior_nodes,t_steps,newton_iterations,residual,error,order,c_est,pogorelov_max,pogorelov_interior_max,min_eig,comparison_margin";

    pub fn csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{}", Self::CSV_HEADER).unwrap();
        for r in &self.rows {
            writeln!(
                s,
                "{:e},{},{},{},{:e},{:e},{},{:e},{:e},{:e},{:e},{:e}",
                r.h,
                r.interior_nodes,
                r.t_steps,
                r.newton_iterations,
                r.residual,
                r.error,
                r.order.map(|o| format!("{o:e}")).unwrap_or_default(),
                r.c_est,
                r.pogorelov_max,
                r.pogorelov_interior_max,
                r.min_eig,
                r.comparison_margin
            )
            .unwrap();
        }
        s
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }
}

/// `max |u − u*|` over all stored nodes.
pub fn solution_error(u: &ScalarField, exact: &ScalarField) -> f64 {
    u.max_diff(exact)
}

/// Solves `ps` from its subsolution at every `h` and tabulates errors
/// against its exact solution. A failed solve ends the study with the
/// partial table.
pub fn convergence_study(
    ps: &ProblemSpec,
    hs: &[f64],
    cfg: &SolverConfig,
    pogorelov: PogorelovParams,
) -> Result<StudyTable, DiagnosticsError> {
    if hs.len() < 2 {
        return Err(DiagnosticsError::TooFewResolutions(hs.len()));
    }
    let exact = ps
        .exact
        .clone()
        .ok_or_else(|| DiagnosticsError::MissingExact(ps.name.clone()))?;
    let sub_fn = ps
        .subsolution
        .clone()
        .ok_or_else(|| DiagnosticsError::MissingSubsolution(ps.name.clone()))?;
    let mut table = StudyTable {
        problem: ps.name.clone(),
        rows: Vec::new(),
        failure: None,
    };
    for &h in hs {
        let attempt = (|| -> Result<StudyRow, DiagnosticsError> {
            let grid = Grid::build(&ps.domain, h)?;
            let sub = ScalarField::sample(&grid, &sub_fn);
            let res = continuation_solve(ps, &grid, &sub, cfg)?;
            if res.status != SolveStatus::Converged {
                return Err(DiagnosticsError::Solver(SolverError::LineSearchFailed {
                    residual: res.final_residual,
                    halvings: cfg.max_halvings,
                    ellipticity_blocked: res.status == SolveStatus::EllipticityLost,
                }));
            }
            let it = &res.iterate;
            let error = solution_error(&it.u, &ScalarField::sample(&grid, &exact));
            let est = estimate_report(ps, &grid, it, &sub, 0.0);
            let pog = pogorelov_functional(ps, &grid, it, &sub, pogorelov);
            let comparison = crate::solver::comparison_check(&grid, &it.u, &sub);
            Ok(StudyRow {
                h,
                interior_nodes: grid.n_interior(),
                t_steps: res.accepted_steps(),
                newton_iterations: res.total_newton_iterations(),
                residual: res.final_residual,
                error,
                order: None,
                c_est: est.c_est,
                pogorelov_max: pog.max,
                pogorelov_interior_max: pog.interior_max,
                min_eig: res.min_eig_accepted,
                comparison_margin: comparison.min_margin,
            })
        })();
        match attempt {
            Ok(mut row) => {
                if let Some(prev) = table.rows.last() {
                    if prev.error > 0.0 && row.error > 0.0 {
                        row.order = Some((prev.error / row.error).ln() / (prev.h / row.h).ln());
                    }
                }
                table.rows.push(row);
            }
            Err(e) => {
                let status = match &e {
                    DiagnosticsError::Solver(SolverError::LineSearchFailed {
                        ellipticity_blocked: true,
                        ..
                    })
                    | DiagnosticsError::Solver(SolverError::NotElliptic { .. }) => {
                        SolveStatus::EllipticityLost
                    }
                    _ => SolveStatus::Stalled,
                };
                table.failure = Some(StudyFailure {
                    h,
                    status,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::quadratic_ma;

    #[test]
    fn single_resolution_is_rejected() {
        let r = convergence_study(
            &quadratic_ma(),
            &[0.1],
            &SolverConfig::default(),
            PogorelovParams::default(),
        );
        assert!(matches!(r, Err(DiagnosticsError::TooFewResolutions(1))));
    }

    #[test]
    fn quadratic_solution_is_exact() {
        let t = convergence_study(
            &quadratic_ma(),
            &[1.0 / 8.0, 1.0 / 16.0],
            &SolverConfig::default(),
            PogorelovParams::default(),
        )
        .unwrap();
        assert!(t.failure.is_none(), "{:?}", t.failure);
        assert!(t.rows.iter().all(|r| r.error <= 1e-9), "{}", t.csv());
        assert_eq!(t.csv().lines().count(), 3);
    }
}
