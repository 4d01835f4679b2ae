use super::{ConditionReport, Witness};
use crate::discretize::{assemble_w, vec2, Grid, ScalarField};
use crate::model::{Domain, ProblemSpec};
use crate::P2;

/// A strict subsolution needs `det w̲ − B ≥ δ₀` with `δ₀` above this value.
pub const STRICT_MARGIN: f64 = 1e-9;

/// Checks `w̲ = D²u̲ − A(x, Du̲) > 0` and `det w̲ ≥ B(x, Du̲)` at the interior
/// nodes.
///
/// The margin at a node is `min(λ_min(w̲), det w̲ − B)`; for `strict` the
/// second entry is `det w̲ − B − STRICT_MARGIN`. The largest admissible `δ₀`
/// (the minimum of `det w̲ − B`) is stored as the extra `delta0`, and
/// `max(u̲ − φ)` on the boundary points as `boundary_excess`.
pub fn check_subsolution(
    ps: &ProblemSpec,
    grid: &Grid,
    sub: &ScalarField,
    strict: bool,
) -> ConditionReport {
    check_subsolution_where(ps, grid, sub, strict, |_| true)
}

/// [`check_subsolution`] restricted to the interior nodes accepted by `keep`.
pub fn check_subsolution_where(
    ps: &ProblemSpec,
    grid: &Grid,
    sub: &ScalarField,
    strict: bool,
    keep: impl Fn(&P2) -> bool,
) -> ConditionReport {
    let name = if strict {
        "strict-subsolution"
    } else {
        "subsolution"
    };
    let mut rep = ConditionReport::new(name, if strict { 0.0 } else { 1e-9 });
    let it = match assemble_w(ps, grid, sub) {
        Ok(it) => it,
        Err(e) => {
            rep.fail(format!("evaluation failed: {e}"));
            return rep;
        }
    };
    let mut delta0 = f64::INFINITY;
    let mut min_eig = f64::INFINITY;
    let mut worst_eig = None;
    for n in 0..grid.n_interior() {
        let x = grid.interior_point(n);
        if !keep(&x) {
            continue;
        }
        let b = match ps.b.value(&vec2(&x), &vec2(&it.du[n])) {
            Ok(b) => b,
            Err(e) => {
                rep.fail(format!("evaluation failed: {e}"));
                return rep;
            }
        };
        let gap = it.w[n].determinant() - b;
        delta0 = delta0.min(gap);
        if it.min_eig[n] < min_eig {
            min_eig = it.min_eig[n];
            worst_eig = Some(Witness::node(n, x).with_p(it.du[n]));
        }
        let det_margin = if strict { gap - STRICT_MARGIN } else { gap };
        rep.observe(
            it.min_eig[n].min(det_margin),
            Witness::node(n, x).with_p(it.du[n]),
        );
    }
    rep.extra("delta0", delta0);
    rep.extra("min_eig", min_eig);
    let excess = grid
        .boundary_points()
        .iter()
        .zip(&sub.boundary)
        .map(|(x, s)| s - (ps.phi)(x))
        .fold(f64::NEG_INFINITY, f64::max);
    rep.extra("boundary_excess", excess);
    if min_eig <= 0.0 {
        rep.witness = worst_eig;
        rep.fail("not elliptic");
    }
    rep
}

/// How [`strictify`] perturbs a subsolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrictifyMode {
    /// `u̲ + a·e^{b x₁}`.
    X1,
    /// `u̲ + a·(e^{b d(x)} − 1)` with `d` the signed distance to ∂Ω; the
    /// boundary values are unchanged.
    BoundaryDistance,
}

/// Perturbs `sub` so that it may become strict; re-check with
/// [`check_subsolution`].
pub fn strictify(
    grid: &Grid,
    domain: &Domain,
    sub: &ScalarField,
    a: f64,
    b: f64,
    mode: StrictifyMode,
) -> ScalarField {
    if a == 0.0 {
        return sub.clone();
    }
    sub.map_with(grid, |x, v| match mode {
        StrictifyMode::X1 => v + a * (b * x.x).exp(),
        StrictifyMode::BoundaryDistance => {
            v + a * ((b * domain.signed_distance(x).max(0.0)).exp() - 1.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{spatial, ConstantMatrix, FnScalar, MatrixFunction, ZeroMatrix};
    use std::sync::Arc;

    fn spec(a: Arc<dyn MatrixFunction>, domain: Domain) -> (ProblemSpec, Grid) {
        let ps = ProblemSpec::new(
            "t",
            domain,
            a,
            Arc::new(FnScalar::constant(1.0)),
            spatial(|x| x.norm_squared()),
        );
        let g = Grid::build(&ps.domain, 0.1).unwrap();
        (ps, g)
    }

    #[test]
    fn paraboloid_on_disc_is_strict() {
        let (ps, g) = spec(Arc::new(ZeroMatrix::default()), Domain::unit_disc());
        let sub = ScalarField::from_fn(&g, |x| x.norm_squared());
        let r = check_subsolution(&ps, &g, &sub, true);
        assert!(r.pass);
        assert!((r.get_extra("delta0").unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn half_paraboloid_is_only_non_strict() {
        let (ps, g) = spec(Arc::new(ZeroMatrix::default()), Domain::unit_disc());
        let sub = ScalarField::from_fn(&g, |x| 0.5 * x.norm_squared());
        assert!(check_subsolution(&ps, &g, &sub, false).pass);
        let r = check_subsolution(&ps, &g, &sub, true);
        assert!(!r.pass);
        assert!(r.get_extra("delta0").unwrap().abs() < 1e-9);
    }

    #[test]
    fn identity_matrix_shifts_hessian() {
        let (ps, g) = spec(Arc::new(ConstantMatrix::identity(2)), Domain::unit_square());
        let sub = ScalarField::from_fn(&g, |x| x.norm_squared());
        assert!(check_subsolution(&ps, &g, &sub, false).pass);
        let concave = ScalarField::from_fn(&g, |x| -x.norm_squared());
        let r = check_subsolution(&ps, &g, &concave, false);
        assert!(!r.pass && r.notes.iter().any(|n| n == "not elliptic"));
    }

    #[test]
    fn strictify_x1_makes_strict() {
        let (ps, g) = spec(Arc::new(ZeroMatrix::default()), Domain::unit_square());
        let sub = ScalarField::from_fn(&g, |x| 0.5 * x.norm_squared());
        assert_eq!(
            strictify(&g, &ps.domain, &sub, 0.0, 2.0, StrictifyMode::X1),
            sub
        );
        let s = strictify(&g, &ps.domain, &sub, 0.01, 2.0, StrictifyMode::X1);
        let r = check_subsolution(&ps, &g, &s, true);
        assert!(r.pass, "{r}");
        let mut last = f64::NEG_INFINITY;
        for a in [0.001, 0.01, 0.1] {
            let s = strictify(&g, &ps.domain, &sub, a, 2.0, StrictifyMode::X1);
            let d = check_subsolution(&ps, &g, &s, true)
                .get_extra("delta0")
                .unwrap();
            assert!(d > last);
            last = d;
        }
    }
}
