use super::{ConditionReport, Witness};
use crate::discretize::{derivatives, vec2, EllipticIterate, Grid, ScalarField};
use crate::linalg::{direction, direction_angles};
use crate::model::{eval_a, Domain, MatrixFunction, ProblemSpec};
use crate::{Matrix, Vector, P2};

/// Pass threshold of the regularity form.
pub const REGULARITY_TOL: f64 = 1e-6;

fn eigen_range(m: &Matrix) -> (f64, f64) {
    let e = m.clone().symmetric_eigen().eigenvalues;
    (e.min(), e.max())
}

fn p2(v: &Vector) -> P2 {
    P2::new(v[0], v[1])
}

/// Minimum of `A_{ij,kl}(x, p) ξ_i ξ_j η_k η_l` over the sample points and
/// `dirs` orthogonal pairs `ξ = (cos θ, sin θ)`, `η = (−sin θ, cos θ)`.
pub fn check_regularity(
    mf: &dyn MatrixFunction,
    xs: &[P2],
    ps: &[P2],
    dirs: usize,
) -> ConditionReport {
    let mut rep = ConditionReport::new("regularity", REGULARITY_TOL);
    let angles = direction_angles(dirs);
    let pairs: Vec<(Vector, Vector)> = angles
        .iter()
        .map(|&t| {
            (
                vec2(&direction(t)),
                vec2(&direction(t + std::f64::consts::FRAC_PI_2)),
            )
        })
        .collect();
    let p_radius = ps.iter().map(|p| p.norm()).fold(0.0, f64::max);
    rep.extra("p_radius", p_radius);
    for x in xs {
        let xv = vec2(x);
        for p in ps {
            let pv = vec2(p);
            let ev = match eval_a(mf, &xv, &pv, 2) {
                Ok(ev) => ev,
                Err(e) => {
                    rep.fail(format!(
                        "evaluation failed at x=({},{}) p=({},{}): {e}",
                        x.x, x.y, p.x, p.y
                    ));
                    return rep;
                }
            };
            for (xi, eta) in &pairs {
                rep.observe(
                    ev.a3w_form(xi, eta),
                    Witness::at(*x).with_p(*p).with_dirs(p2(xi), p2(eta)),
                );
            }
        }
    }
    rep
}

/// Minimum eigenvalue of `A(x, p) + μ0(1 + |p|²)I` over the samples.
pub fn check_structure(mf: &dyn MatrixFunction, mu0: f64, xs: &[P2], ps: &[P2]) -> ConditionReport {
    let mut rep = ConditionReport::new("structure", 0.0);
    rep.extra("mu0", mu0);
    for x in xs {
        for p in ps {
            match mf.value(&vec2(x), &vec2(p)) {
                Ok(a) => rep.observe(
                    eigen_range(&a).0 + mu0 * (1.0 + p.norm_squared()),
                    Witness::at(*x).with_p(*p),
                ),
                Err(e) => {
                    rep.fail(format!("evaluation failed: {e}"));
                    return rep;
                }
            }
        }
    }
    rep
}

/// Minimum over `x` of the largest eigenvalue of `A(x, 0)`, sampled on an
/// `m × m` grid of Ω.
pub fn check_a0_eigenvalue(mf: &dyn MatrixFunction, domain: &Domain, m: usize) -> ConditionReport {
    let mut rep = ConditionReport::new("A0-eigenvalue", 0.0);
    let zero = Vector::zeros(2);
    for x in super::sampling::x_grid(domain, m) {
        match mf.value(&vec2(&x), &zero) {
            Ok(a) => rep.observe(eigen_range(&a).1, Witness::at(x).with_p(P2::zeros())),
            Err(e) => {
                rep.fail(format!("evaluation failed: {e}"));
                return rep;
            }
        }
    }
    rep
}

/// `min_{|ξ|=1} [D_{ij}φ̄ − D_{p_k}A_{ij}(x, Du) D_kφ̄] ξ_iξ_j − 1` over the
/// interior nodes; the minimum over `ξ` is the smallest eigenvalue.
pub fn check_a_bounded(
    ps: &ProblemSpec,
    grid: &Grid,
    it: &EllipticIterate,
    phi_bar: &ScalarField,
) -> ConditionReport {
    let mut rep = ConditionReport::new("A-bounded", 0.0);
    let (dphi, d2phi) = derivatives(grid, phi_bar);
    for n in 0..grid.n_interior() {
        let x = grid.interior_point(n);
        let mut m = Matrix::from_fn(2, 2, |i, j| d2phi[n][(i, j)]);
        if !ps.a.p_independent() {
            match eval_a(ps.a.as_ref(), &vec2(&x), &vec2(&it.du[n]), 1) {
                Ok(ev) => {
                    for (k, dk) in ev.dp.expect("order 1").iter().enumerate() {
                        m -= dk * dphi[n][k];
                    }
                }
                Err(e) => {
                    rep.fail(format!("evaluation failed: {e}"));
                    return rep;
                }
            }
        }
        rep.observe(
            eigen_range(&m).0 - 1.0,
            Witness::node(n, x).with_p(it.du[n]),
        );
    }
    rep
}

/// `[D_iγ_j + D_{p_k}A_{ij}(x, Du)γ_k] τ_iτ_j − δ0` at `samples` smooth
/// boundary points. `D_iγ_j τ_iτ_j` is the boundary curvature; `Du` is taken
/// from the nearest interior node of `it`, or zero without an iterate.
pub fn check_uniform_a_convexity(
    ps: &ProblemSpec,
    grid: Option<(&Grid, &EllipticIterate)>,
    delta0: f64,
    samples: usize,
) -> ConditionReport {
    let mut rep = ConditionReport::new("uniform-A-convexity", 0.0);
    rep.extra("delta0", delta0);
    for s in ps.domain.boundary_samples(samples) {
        let p = match grid {
            Some((g, it)) => {
                let nearest = g
                    .interior_points()
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - s.point).norm().total_cmp(&(b.1 - s.point).norm()))
                    .map(|(i, _)| i);
                nearest.map(|i| it.du[i]).unwrap_or_else(P2::zeros)
            }
            None => P2::zeros(),
        };
        let tau = s.tangent();
        let mut margin = s.curvature - delta0;
        if !ps.a.p_independent() {
            match eval_a(ps.a.as_ref(), &vec2(&s.point), &vec2(&p), 1) {
                Ok(ev) => {
                    let t = vec2(&tau);
                    for (k, dk) in ev.dp.expect("order 1").iter().enumerate() {
                        margin += s.normal[k] * t.dot(&(dk * &t));
                    }
                }
                Err(e) => {
                    rep.fail(format!("evaluation failed: {e}"));
                    return rep;
                }
            }
        }
        rep.observe(
            margin,
            Witness::at(s.point).with_p(p).with_dirs(tau, s.normal),
        );
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::sampling::{p_disc, x_grid};
    use crate::conditions::DIRECTION_SAMPLES;
    use crate::discretize::assemble_w;
    use crate::model::{spatial, ConstantMatrix, FnMatrix, FnScalar, SqrtCostMatrix, ZeroMatrix};
    use std::sync::Arc;

    fn xs() -> Vec<P2> {
        x_grid(&Domain::unit_square(), 3)
    }

    #[test]
    fn regularity_of_constant_models_is_exactly_zero() {
        let ps = p_disc(2.0, 3, 8);
        for mf in [
            &ZeroMatrix::default() as &dyn MatrixFunction,
            &ConstantMatrix::identity(2),
        ] {
            let r = check_regularity(mf, &xs(), &ps, DIRECTION_SAMPLES);
            assert!(r.pass);
            assert_eq!(r.min_margin, 0.0);
        }
    }

    #[test]
    fn regularity_violator_reports_witness() {
        let bad = FnMatrix::new("violator", 2, |_, p| {
            Matrix::from_row_slice(2, 2, &[-p[1].powi(4), 0.0, 0.0, 0.0])
        });
        let r = check_regularity(&bad, &xs(), &p_disc(1.0, 2, 8), 16);
        assert!(!r.pass);
        let w = r.witness.unwrap();
        assert!(w.xi.is_some() && w.p.is_some());
    }

    #[test]
    fn structure_controls() {
        let ps = p_disc(0.9, 3, 12);
        let r = check_structure(&ConstantMatrix::identity(2), 0.1, &xs(), &ps);
        assert!(r.pass && r.min_margin >= 0.9);
        let bad = FnMatrix::new("minus", 2, |_, p| {
            Matrix::identity(2, 2) * (-2.0 * (1.0 + p.norm_squared()))
        });
        let r = check_structure(&bad, 1.0, &xs(), &ps);
        assert!(!r.pass);
        let p = r.witness.unwrap().p.unwrap();
        assert!((r.min_margin + 1.0 + p.norm_squared()).abs() < 1e-12);
        assert!(check_structure(&SqrtCostMatrix::new(), 1.0, &xs(), &ps).pass);
    }

    #[test]
    fn a0_eigenvalue_controls() {
        let d = Domain::unit_square();
        assert_eq!(
            check_a0_eigenvalue(&ZeroMatrix::default(), &d, 4).min_margin,
            0.0
        );
        assert_eq!(
            check_a0_eigenvalue(&ConstantMatrix::identity(2), &d, 4).min_margin,
            1.0
        );
        let r = check_a0_eigenvalue(&ConstantMatrix::scaled_identity(2, -1.0), &d, 4);
        assert!(!r.pass && r.min_margin == -1.0);
    }

    fn spec(a: Arc<dyn MatrixFunction>, domain: Domain) -> ProblemSpec {
        ProblemSpec::new(
            "t",
            domain,
            a,
            Arc::new(FnScalar::constant(1.0)),
            spatial(|x| x.norm_squared()),
        )
    }

    #[test]
    fn a_bounded_controls() {
        for a in [
            Arc::new(ZeroMatrix::default()) as Arc<dyn MatrixFunction>,
            Arc::new(ConstantMatrix::identity(2)),
        ] {
            let ps = spec(a, Domain::unit_square());
            let g = Grid::build(&ps.domain, 0.125).unwrap();
            let u = ScalarField::from_fn(&g, |x| x.norm_squared());
            let it = assemble_w(&ps, &g, &u).unwrap();
            let r = check_a_bounded(&ps, &g, &it, &u);
            assert!(r.pass && (r.min_margin - 1.0).abs() < 1e-9);
            let r = check_a_bounded(&ps, &g, &it, &ScalarField::zeros(&g));
            assert!(!r.pass && r.min_margin == -1.0);
        }
    }

    #[test]
    fn uniform_a_convexity_controls() {
        let r = check_uniform_a_convexity(
            &spec(Arc::new(ZeroMatrix::default()), Domain::unit_disc()),
            None,
            1.0,
            64,
        );
        assert!(r.pass && (r.min_margin).abs() < 1e-12);
        let rounded = Domain::RoundedRectangle {
            lower: P2::new(0.0, 0.0),
            upper: P2::new(1.0, 1.0),
            radius: 0.2,
        };
        let r = check_uniform_a_convexity(
            &spec(Arc::new(ConstantMatrix::identity(2)), rounded),
            None,
            0.1,
            64,
        );
        assert!(!r.pass && (r.min_margin + 0.1).abs() < 1e-12);
    }
}
