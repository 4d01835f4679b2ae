use std::sync::Arc;

use proptest::prelude::*;

use mongeampere::cli::config::{ChecksConfig, OutputConfig, ProblemConfig, StudyConfig};
use mongeampere::cli::RunConfig;
use mongeampere::conditions::{check_barrier, check_regularity, strictify, StrictifyMode};
use mongeampere::diagnostics::{pogorelov_functional, PogorelovParams};
use mongeampere::discretize::{assemble_w, residual_of, Grid, Homotopy, ScalarField};
use mongeampere::model::{
    spatial, AffineMap, Diffeomorphism, Domain, FnScalar, ProblemSpec, ZeroMatrix,
};
use mongeampere::solver::SolverConfig;
use mongeampere::{Matrix, Vector, P2};

fn ma(b: f64, domain: Domain) -> ProblemSpec {
    ProblemSpec::new(
        "ma",
        domain,
        Arc::new(ZeroMatrix::default()),
        Arc::new(FnScalar::constant(b)),
        spatial(|x| x.norm_squared()),
    )
}

fn point() -> impl Strategy<Value = P2> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| P2::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pogorelov_ignores_constant_shift(
        c in -5.0..5.0f64,
        cubic in -0.2..0.2f64,
        a in 0.0..2.0f64,
        b in 0.0..2.0f64,
        k in 0.5..4.0f64,
    ) {
        let ps = ma(1.0, Domain::unit_disc());
        let grid = Grid::build(&ps.domain, 0.1).unwrap();
        let f = move |x: &P2| x.norm_squared() + cubic * x.x.powi(3);
        let u = ScalarField::from_fn(&grid, f);
        let sub = ScalarField::from_fn(&grid, move |x| f(x) - 0.1 * (1.0 - x.norm_squared()));
        let params = PogorelovParams { a, b, k };
        let base = pogorelov_functional(&ps, &grid, &assemble_w(&ps, &grid, &u).unwrap(), &sub, params);
        let us = ScalarField::from_fn(&grid, move |x| f(x) + c);
        let subs = sub.map_with(&grid, |_, v| v + c);
        let shifted = pogorelov_functional(&ps, &grid, &assemble_w(&ps, &grid, &us).unwrap(), &subs, params);
        prop_assert!((base.max - shifted.max).abs() <= 1e-9 * base.max);
        prop_assert!((base.interior_max - shifted.interior_max).abs() <= 1e-9 * base.interior_max);
        prop_assert!(base.max >= base.interior_max);
    }

    #[test]
    fn strictify_is_monotone_and_vanishes_with_a(
        a in 1e-6..1.0f64,
        b in 0.0..3.0f64,
        boundary_mode in any::<bool>(),
    ) {
        let domain = Domain::unit_disc();
        let grid = Grid::build(&domain, 0.1).unwrap();
        let sub = ScalarField::from_fn(&grid, |x| x.norm_squared());
        let mode = if boundary_mode { StrictifyMode::BoundaryDistance } else { StrictifyMode::X1 };
        let small = strictify(&grid, &domain, &sub, a, b, mode);
        let large = strictify(&grid, &domain, &sub, 2.0 * a, b, mode);
        let tiny = strictify(&grid, &domain, &sub, a * 1e-6, b, mode);
        let bound = |s: f64| s * b.exp() + 1e-15;
        for (field, base) in [(&small, &sub), (&tiny, &sub)] {
            for (v, s) in field.interior.iter().zip(&base.interior) {
                prop_assert!(v >= s);
            }
        }
        for ((s, l), t) in small.interior.iter().zip(&large.interior).zip(&tiny.interior) {
            prop_assert!(s <= l);
            prop_assert!((t - s).abs() <= bound(a));
        }
        let dev = tiny.interior.iter().zip(&sub.interior).map(|(t, s)| t - s).fold(0.0, f64::max);
        prop_assert!(dev <= bound(a * 1e-6));
        if boundary_mode {
            for (v, s) in small.boundary.iter().zip(&sub.boundary) {
                prop_assert!((v - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn barrier_at_the_subsolution_is_valid(
        m in 0.6..3.0f64,
        tilt in -1.0..1.0f64,
        slack in 0.01..1.0f64,
    ) {
        let ps = ma(1.0, Domain::centered_unit_square());
        let grid = Grid::build(&ps.domain, 0.125).unwrap();
        let sub = ScalarField::from_fn(&grid, move |x| m * x.norm_squared() + tilt * x.x);
        let it = assemble_w(&ps, &grid, &sub).unwrap();
        for k in [1.0, 8.0] {
            let cert = check_barrier(&ps, &grid, &it, &sub, k, slack, 1e-10).unwrap();
            prop_assert!(cert.valid, "{:?}", cert.notes);
            prop_assert!(cert.l_phi.iter().all(|v| v.abs() < 1e-9));
            prop_assert!(cert.eps1 > 0.0);
            prop_assert!((cert.c - slack).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_matrix_sits_on_the_regularity_boundary(
        xs in prop::collection::vec(point(), 1..6),
        ps in prop::collection::vec(point(), 1..6),
        dirs in 4usize..40,
    ) {
        let r = check_regularity(&ZeroMatrix::default(), &xs, &ps, dirs);
        prop_assert_eq!(r.min_margin, 0.0);
        prop_assert!(r.pass);
    }

    #[test]
    fn homotopy_residual_vanishes_at_t0(m in 0.3..3.0f64, b in 0.1..10.0f64) {
        let ps = ma(b, Domain::l_shape());
        let grid = Grid::build(&ps.domain, 0.1).unwrap();
        let sub = ScalarField::from_fn(&grid, move |x| m * x.norm_squared() + 0.1 * x.x.powi(3));
        let hom = Homotopy::new(&ps, &grid, sub.clone()).unwrap();
        let it = assemble_w(&ps, &grid, &sub).unwrap();
        let r = residual_of(&ps, &grid, &it, 0.0, Some(&hom)).unwrap();
        prop_assert!(r.interior.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn affine_maps_invert(
        m in prop::array::uniform4(-2.0..2.0f64),
        shift in point(),
        x in point(),
    ) {
        let mat = Matrix::from_row_slice(2, 2, &m);
        prop_assume!(mat.determinant().abs() > 0.1);
        let map = AffineMap::new(mat, Vector::from_column_slice(&[shift.x, shift.y])).unwrap();
        let xv = Vector::from_column_slice(&[x.x, x.y]);
        let y = map.forward(&xv);
        prop_assert!((map.inverse(&y) - &xv).amax() < 1e-9);
        prop_assert!((map.inverse_map().forward(&y) - &xv).amax() < 1e-9);
        let j = map.jacobian(&xv) * map.inverse_map().jacobian(&y);
        prop_assert!((j - Matrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn config_round_trips(
        seed in any::<u64>(),
        h in 0.005..0.5f64,
        tol in 1e-14..1e-3f64,
        max_newton in 1usize..100,
        step in 0.01..1.0f64,
        names in prop::sample::subsequence(mongeampere::cli::config::CHECK_NAMES.to_vec(), 0..6),
        radius in prop::option::of(0.1..5.0f64),
        hs in prop::collection::vec(0.005..0.5f64, 2..5),
        vtk in any::<bool>(),
        gate in any::<bool>(),
    ) {
        let base = RunConfig::default();
        let cfg = RunConfig {
            seed,
            problem: ProblemConfig { instance: Some("manufactured-ma".into()), h, ..base.problem },
            solver: SolverConfig { tol, max_newton, t_step0: step, ..base.solver },
            checks: ChecksConfig {
                names: names.iter().map(|s| s.to_string()).collect(),
                p_radius: radius,
                gate,
                ..base.checks
            },
            study: StudyConfig { hs, ..base.study },
            output: OutputConfig { vtk, ..base.output },
            model: base.model,
        };
        let text = cfg.emit();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
