use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{RunConfig, SOLUTION_CHECKS};
use super::{exit, CliError};
use crate::conditions::{
    self, barrier_search, check_a0_eigenvalue, check_a_bounded, check_domain_c_convexity,
    check_regularity, check_solution_c_convexity, check_structure, check_subsolution,
    check_uniform_a_convexity, ConditionReport, Witness,
};
use crate::diagnostics::{
    convergence_study, estimate_report, map_error, solution_error, transport_residual,
    ImpliedDensity,
};
use crate::discretize::{assemble_w, write_csv, write_vtk, EllipticIterate, Grid, ScalarField};
use crate::expr::Expr;
use crate::instances;
use crate::model::{registry, CostModel, GeneratingMap, ProblemSpec, ScalarFunction, Spatial};
use crate::solver::{comparison_check, continuation_solve, ContinuationResult, SolveStatus};
use crate::{Vector, P2};

/// A problem assembled from a [`RunConfig`], with whatever transport data
/// its model provides.
pub struct Built {
    pub problem: ProblemSpec,
    pub cost: Option<Arc<dyn CostModel>>,
    pub map: Option<Arc<dyn GeneratingMap>>,
    pub density: Option<Arc<dyn ScalarFunction>>,
    pub exact_map: Option<Arc<dyn Fn(&P2) -> P2 + Send + Sync>>,
}

fn expr_fn(src: &str) -> Result<Spatial, CliError> {
    let e: Expr = src
        .parse()
        .map_err(|e| CliError::Config(format!("{src:?}: {e}")))?;
    if e.uses_gradient() {
        return Err(CliError::Config(format!("{src:?} must depend on x only")));
    }
    Ok(Arc::new(move |x: &P2| e.eval_x([x.x, x.y])))
}

pub fn build_problem(cfg: &RunConfig) -> Result<Built, CliError> {
    if let Some(name) = &cfg.problem.instance {
        if let Some(t) = instances::transport_by_name(name) {
            return Ok(Built {
                problem: t.problem,
                cost: Some(t.cost),
                map: Some(t.map),
                density: Some(t.density),
                exact_map: Some(t.exact_map),
            });
        }
        let problem = instances::by_name(name)
            .ok_or_else(|| CliError::Config(format!("unknown instance {name:?}")))?;
        return Ok(Built {
            problem,
            cost: None,
            map: None,
            density: None,
            exact_map: None,
        });
    }
    let name = cfg.model.name.as_deref().ok_or_else(|| {
        CliError::Config("model.name is required without problem.instance".into())
    })?;
    let parts =
        registry::build(name, &cfg.model.params).map_err(|e| CliError::Config(e.to_string()))?;
    let b = parts.b.clone().ok_or_else(|| {
        CliError::Config(format!("model {name:?} needs model.b or model.density"))
    })?;
    let phi = cfg.problem.phi.as_deref().ok_or_else(|| {
        CliError::Config("problem.phi is required without problem.instance".into())
    })?;
    let mut problem = ProblemSpec::new(
        name,
        cfg.problem.domain.build(),
        parts.a.clone(),
        b.clone(),
        expr_fn(phi)?,
    );
    if let Some(s) = &cfg.problem.subsolution {
        problem = problem.with_subsolution(expr_fn(s)?);
    }
    if let Some(s) = &cfg.problem.exact {
        problem = problem.with_exact(expr_fn(s)?);
    }
    let density = parts.mapping.as_ref().map(|map| {
        Arc::new(ImpliedDensity {
            map: map.clone(),
            b: b.clone(),
        }) as Arc<dyn ScalarFunction>
    });
    Ok(Built {
        problem,
        cost: parts.cost,
        map: parts.mapping,
        density,
        exact_map: None,
    })
}

fn grid_for(ps: &ProblemSpec, h: f64) -> Result<Grid, CliError> {
    Grid::build(&ps.domain, h).map_err(|e| CliError::Config(e.to_string()))
}

fn subsolution_field(ps: &ProblemSpec, grid: &Grid) -> Result<ScalarField, CliError> {
    let sub = ps
        .subsolution
        .as_ref()
        .ok_or_else(|| CliError::Config("problem.subsolution is required".into()))?;
    Ok(ScalarField::sample(grid, sub))
}

fn status_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => exit::OK,
        SolveStatus::Stalled => exit::STALL,
        SolveStatus::EllipticityLost => exit::ELLIPTICITY,
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.output.dir)
        .map_err(|e| CliError::Io(cfg.output.dir.clone(), e.to_string()))?;
    let resolved = cfg.output.dir.join("resolved.ini");
    write_file(&resolved, &cfg.emit())?;
    Ok(cfg.output.dir.clone())
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e.to_string()))
}

fn write_field(
    cfg: &RunConfig,
    dir: &Path,
    grid: &Grid,
    field: &ScalarField,
    name: &str,
) -> Result<(), CliError> {
    if cfg.output.csv {
        let mut buf = Vec::new();
        write_csv(grid, field, &mut buf).expect("write to memory");
        write_file(
            &dir.join(format!("{name}.csv")),
            &String::from_utf8(buf).expect("ascii"),
        )?;
    }
    if cfg.output.vtk {
        let mut buf = Vec::new();
        write_vtk(grid, field, name, &mut buf).expect("write to memory");
        write_file(
            &dir.join(format!("{name}.vtk")),
            &String::from_utf8(buf).expect("ascii"),
        )?;
    }
    Ok(())
}

struct Solved {
    grid: Grid,
    sub: ScalarField,
    result: ContinuationResult,
}

/// Gates on the subsolution (when enabled) and runs the continuation solve.
fn solve_problem(cfg: &RunConfig, ps: &ProblemSpec) -> Result<Solved, CliError> {
    let grid = grid_for(ps, cfg.problem.h)?;
    let sub = subsolution_field(ps, &grid)?;
    if cfg.checks.gate {
        let rep = check_subsolution(ps, &grid, &sub, false);
        if !rep.pass {
            return Err(CliError::Hypothesis(format!("subsolution rejected: {rep}")));
        }
    }
    let result =
        continuation_solve(ps, &grid, &sub, &cfg.solver).map_err(|e| CliError::Solver {
            code: match e {
                crate::solver::SolverError::NotElliptic { .. }
                | crate::solver::SolverError::LineSearchFailed {
                    ellipticity_blocked: true,
                    ..
                } => exit::ELLIPTICITY,
                _ => exit::STALL,
            },
            message: e.to_string(),
        })?;
    Ok(Solved { grid, sub, result })
}

fn solve_summary(ps: &ProblemSpec, s: &Solved) -> String {
    let r = &s.result;
    let mut out = String::new();
    writeln!(out, "problem     {}", ps.name).unwrap();
    writeln!(out, "h           {}", s.grid.h).unwrap();
    writeln!(
        out,
        "nodes       {} interior, {} boundary",
        s.grid.n_interior(),
        s.grid.n_boundary()
    )
    .unwrap();
    writeln!(out, "status      {}", r.status).unwrap();
    writeln!(out, "t reached   {}", r.t).unwrap();
    writeln!(
        out,
        "steps       {} accepted, {} Newton iterations",
        r.accepted_steps(),
        r.total_newton_iterations()
    )
    .unwrap();
    writeln!(out, "residual    {:e}", r.final_residual).unwrap();
    writeln!(out, "min eig(w)  {:e}", r.min_eig_accepted).unwrap();
    if let Some(exact) = &ps.exact {
        let e = solution_error(&r.iterate.u, &ScalarField::sample(&s.grid, exact));
        writeln!(out, "max error   {e:e}").unwrap();
    }
    if let Some(e) = &r.last_error {
        writeln!(out, "last error  {e}").unwrap();
    }
    out
}

/// `solve`: writes `u`, `trace.csv` (solver trace followed by the estimate
/// report) and `summary.txt`.
pub fn solve(cfg: &RunConfig) -> Result<i32, CliError> {
    let built = build_problem(cfg)?;
    let ps = &built.problem;
    let dir = out_dir(cfg)?;
    let s = solve_problem(cfg, ps)?;
    let it = &s.result.iterate;
    write_field(cfg, &dir, &s.grid, &it.u, "u")?;
    let est = estimate_report(ps, &s.grid, it, &s.sub, cfg.checks.mu0);
    if cfg.output.trace {
        let mut trace = s.result.trace_csv();
        writeln!(
            trace,
            "\n{}",
            crate::diagnostics::EstimateReport::CSV_HEADER
        )
        .unwrap();
        writeln!(trace, "{}", est.csv_row()).unwrap();
        write_file(&dir.join("trace.csv"), &trace)?;
    }
    let summary = format!("{}\n{est}\n", solve_summary(ps, &s));
    write_file(&dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(status_code(s.result.status))
}

/// Direction-independent radius where `A(x, ·)` still evaluates, shrinking
/// `r` by 10% until it does (models like the sqrt cost live on `|p| < 1`).
fn admissible_radius(ps: &ProblemSpec, xs: &[P2], mut r: f64) -> f64 {
    let x = xs.first().copied().unwrap_or_else(P2::zeros);
    let xv = Vector::from_column_slice(&[x.x, x.y]);
    for _ in 0..60 {
        let ok = (0..16).all(|k| {
            let a = std::f64::consts::TAU * k as f64 / 16.0;
            let p = Vector::from_column_slice(&[r * a.cos(), r * a.sin()]);
            ps.a.value(&xv, &p).is_ok()
        });
        if ok {
            break;
        }
        r *= 0.9;
    }
    r
}

fn b_positive_report(ps: &ProblemSpec, m: usize, r: f64) -> ConditionReport {
    let mut rep = ConditionReport::new("B-positive", 0.0);
    match ps.check_b_positive(m, r) {
        Ok(inf) => {
            rep.observe(inf, Witness::default());
            rep.samples = m.pow(4);
        }
        Err(e) => rep.fail(e.to_string()),
    }
    rep.extra("p_radius", r);
    rep
}

fn needs(name: &str, what: &str) -> CliError {
    CliError::Config(format!("check {name} needs {what}"))
}

/// `verify`: runs `checks.names` in order and writes `checks.csv`,
/// `summary.txt` and, for the barrier check, `barrier.csv`.
pub fn verify(cfg: &RunConfig) -> Result<i32, CliError> {
    let built = build_problem(cfg)?;
    let ps = &built.problem;
    let dir = out_dir(cfg)?;
    let c = &cfg.checks;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let grid = grid_for(ps, cfg.problem.h)?;
    let sub = ps
        .subsolution
        .as_ref()
        .map(|f| ScalarField::sample(&grid, f));
    let wants_solution = c
        .names
        .iter()
        .any(|n| SOLUTION_CHECKS.contains(&n.as_str()));

    let mut solve_status = None;
    let solved: Option<EllipticIterate> = if wants_solution {
        let s = solve_problem(
            &RunConfig {
                checks: crate::cli::config::ChecksConfig {
                    gate: false,
                    ..c.clone()
                },
                ..cfg.clone()
            },
            ps,
        )?;
        solve_status = Some(s.result.status);
        (s.result.status == SolveStatus::Converged).then_some(s.result.iterate)
    } else {
        None
    };
    let sub_iterate = match &sub {
        Some(s) => assemble_w(ps, &grid, s).ok(),
        None => None,
    };

    let xs = conditions::sampling::x_grid(&ps.domain, c.x_samples);
    let radius = match c.p_radius {
        Some(r) => r,
        None => {
            let from = solved.as_ref().or(sub_iterate.as_ref());
            let r = from
                .map(conditions::sampling::gradient_radius)
                .unwrap_or(1.0);
            admissible_radius(ps, &xs, r)
        }
    };
    let mut pss = vec![P2::zeros()];
    pss.extend(conditions::sampling::p_random(
        &mut rng,
        radius,
        c.p_samples,
    ));
    let ys: Vec<P2> = (0..c.y_samples)
        .map(|_| {
            P2::new(
                rng.gen_range(-c.y_radius..=c.y_radius),
                rng.gen_range(-c.y_radius..=c.y_radius),
            )
        })
        .collect();

    let mut reports = Vec::new();
    let mut barrier_rows = None;
    for name in &c.names {
        let solution = || {
            solved.as_ref().ok_or_else(|| CliError::Solver {
                code: solve_status.map(status_code).unwrap_or(exit::STALL),
                message: format!("check {name} needs a converged solution"),
            })
        };
        let sub_field = || {
            sub.as_ref()
                .ok_or_else(|| needs(name, "problem.subsolution"))
        };
        let mut rep = match name.as_str() {
            "regularity" => check_regularity(ps.a.as_ref(), &xs, &pss, c.directions),
            "structure" => check_structure(ps.a.as_ref(), c.mu0, &xs, &pss),
            "a0-eigenvalue" => check_a0_eigenvalue(ps.a.as_ref(), &ps.domain, c.x_samples),
            "b-positive" => b_positive_report(ps, c.x_samples, radius),
            "subsolution" => check_subsolution(ps, &grid, sub_field()?, false),
            "strict-subsolution" => check_subsolution(ps, &grid, sub_field()?, true),
            "a-bounded" => {
                let phi_bar = ScalarField::sample(&grid, &expr_fn(&c.phi_bar)?);
                check_a_bounded(ps, &grid, solution()?, &phi_bar)
            }
            "uniform-a-convexity" => {
                let it = solved.as_ref().or(sub_iterate.as_ref());
                check_uniform_a_convexity(
                    ps,
                    it.map(|it| (&grid, it)),
                    c.delta0,
                    c.boundary_samples,
                )
            }
            "domain-c-convexity" => {
                let cost = built
                    .cost
                    .as_ref()
                    .ok_or_else(|| needs(name, "a cost model"))?;
                check_domain_c_convexity(cost.as_ref(), &ps.domain, &ys, c.polygon)
            }
            "solution-c-convexity" => {
                let cost = built
                    .cost
                    .clone()
                    .ok_or_else(|| needs(name, "a cost model"))?;
                check_solution_c_convexity(cost, &grid, solution()?, 1e-6)
            }
            "barrier" => {
                let it = solution()?;
                let eps_ell = it.ellipticity_floor(cfg.solver.eps_ell_factor);
                let search = barrier_search(ps, &grid, it, sub_field()?, c.barrier_slack, eps_ell)
                    .map_err(|e| CliError::Solver {
                        code: exit::ELLIPTICITY,
                        message: e.to_string(),
                    })?;
                let mut rep = ConditionReport::new("barrier", 0.0);
                for (k, eps1, cc, valid) in &search.trace {
                    rep.note(format!("K={k} eps1={eps1:e} C={cc:e} valid={valid}"));
                }
                match &search.certificate {
                    Some(cert) => {
                        rep.observe(cert.min_margin(), Witness::default());
                        rep.samples = cert.margin_field.len();
                        rep.extra("K", cert.k);
                        rep.extra("eps1", cert.eps1);
                        rep.extra("C", cert.c);
                        if cert.vacuous {
                            rep.note("vacuous");
                        }
                        let mut rows = String::from("x1,x2,l_phi,trace_f,margin\n");
                        for (n, x) in grid.interior_points().iter().enumerate() {
                            writeln!(
                                rows,
                                "{},{},{:e},{:e},{:e}",
                                x.x, x.y, cert.l_phi[n], cert.trace_f[n], cert.margin_field[n]
                            )
                            .unwrap();
                        }
                        barrier_rows = Some(rows);
                    }
                    None => rep.fail("no valid certificate for K ≤ 1024"),
                }
                rep
            }
            "comparison" => comparison_check(&grid, &solution()?.u, sub_field()?),
            other => return Err(CliError::Config(format!("unknown check {other:?}"))),
        };
        if name == "structure" {
            rep.extra("p_radius", radius);
        }
        reports.push(rep);
    }

    let mut csv = format!("{}\n", ConditionReport::CSV_HEADER);
    let mut summary = format!("problem {} (h = {}, seed {})\n", ps.name, grid.h, cfg.seed);
    for r in &reports {
        writeln!(csv, "{}", r.csv_row()).unwrap();
        writeln!(summary, "{r}").unwrap();
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    writeln!(
        summary,
        "{} of {} checks passed",
        reports.len() - failed,
        reports.len()
    )
    .unwrap();
    write_file(&dir.join("checks.csv"), &csv)?;
    write_file(&dir.join("summary.txt"), &summary)?;
    if let Some(rows) = barrier_rows {
        write_file(&dir.join("barrier.csv"), &rows)?;
    }
    print!("{summary}");
    Ok(if failed == 0 {
        exit::OK
    } else {
        exit::HYPOTHESIS
    })
}

/// `study`: solves at every `study.h` and writes `study.csv`.
pub fn study(cfg: &RunConfig) -> Result<i32, CliError> {
    let built = build_problem(cfg)?;
    let ps = &built.problem;
    if cfg.study.hs.len() < 2 {
        return Err(CliError::Config(format!(
            "need ≥2 resolutions, got {}",
            cfg.study.hs.len()
        )));
    }
    let dir = out_dir(cfg)?;
    let table = convergence_study(ps, &cfg.study.hs, &cfg.solver, cfg.study.pogorelov)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write_file(&dir.join("study.csv"), &table.csv())?;
    let mut summary = format!("problem {}\n", table.problem);
    for r in &table.rows {
        writeln!(
            summary,
            "h = {:<10} error {:.3e}  order {}  C_est {:.4}",
            r.h,
            r.error,
            r.order
                .map(|o| format!("{o:.3}"))
                .unwrap_or_else(|| "-".into()),
            r.c_est
        )
        .unwrap();
    }
    if let Some(f) = &table.failure {
        writeln!(summary, "failed at {f}").unwrap();
    }
    write_file(&dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(table
        .failure
        .as_ref()
        .map(|f| status_code(f.status))
        .unwrap_or(exit::OK))
}

/// `transport`: solves, then writes `u`, `transport.csv` with
/// `|det DT| − ψ` per node, and `summary.txt`.
pub fn transport(cfg: &RunConfig) -> Result<i32, CliError> {
    let built = build_problem(cfg)?;
    let ps = &built.problem;
    let (map, density) = match (&built.map, &built.density) {
        (Some(m), Some(d)) => (m.clone(), d.clone()),
        _ => {
            return Err(CliError::Config(
                "transport needs a transport instance or a cost/mapping model".into(),
            ))
        }
    };
    let dir = out_dir(cfg)?;
    let s = solve_problem(cfg, ps)?;
    let it = &s.result.iterate;
    write_field(cfg, &dir, &s.grid, &it.u, "u")?;
    let model_err = |e: crate::model::ModelError| CliError::Solver {
        code: exit::STALL,
        message: e.to_string(),
    };
    let res = transport_residual(map.as_ref(), density.as_ref(), &s.grid, it).map_err(model_err)?;
    let mut csv = String::from("x1,x2,residual\n");
    for (x, v) in res.rows(&s.grid) {
        writeln!(csv, "{},{},{:e}", x.x, x.y, v).unwrap();
    }
    write_file(&dir.join("transport.csv"), &csv)?;
    let mut summary = solve_summary(ps, &s);
    writeln!(
        summary,
        "transport residual max {:e} over {} nodes",
        res.max_abs,
        res.nodes.len()
    )
    .unwrap();
    if let Some(exact) = &built.exact_map {
        let e = map_error(map.as_ref(), &s.grid, it, exact.as_ref()).map_err(model_err)?;
        writeln!(summary, "map error max {e:e}").unwrap();
    }
    write_file(&dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(status_code(s.result.status))
}
