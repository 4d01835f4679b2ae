use super::{ArmEnd, DiscretizeError, Grid, ScalarField};
use crate::linalg::sym2_eigenvalues;
use crate::model::{ModelError, ProblemSpec};
use crate::{Vector, M2, P2};

pub(crate) fn vec2(p: &P2) -> Vector {
    Vector::from_column_slice(&[p.x, p.y])
}

pub(crate) fn to_m2(m: &crate::Matrix) -> M2 {
    M2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// Values at the node and its eight arm ends.
pub(crate) fn stencil_values(grid: &Grid, u: &ScalarField, n: usize) -> [f64; 9] {
    let mut v = [u.interior[n]; 9];
    for (k, arm) in grid.arms(n).iter().enumerate() {
        v[k + 1] = match arm.end {
            ArmEnd::Interior(m) => u.interior[m],
            ArmEnd::Boundary(b) => u.boundary[b],
        };
    }
    v
}

fn dot9(w: &[f64; 9], v: &[f64; 9]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `Du` and `D²u` at every interior node.
pub fn derivatives(grid: &Grid, u: &ScalarField) -> (Vec<P2>, Vec<M2>) {
    (0..grid.n_interior())
        .map(|n| {
            let v = stencil_values(grid, u, n);
            let st = grid.stencil(n);
            let uxy = dot9(&st.dxy, &v);
            (
                P2::new(dot9(&st.dx, &v), dot9(&st.dy, &v)),
                M2::new(dot9(&st.dxx, &v), uxy, uxy, dot9(&st.dyy, &v)),
            )
        })
        .unzip()
}

/// `Du` and `D²u` at every boundary point, from a least-squares cubic fit to
/// the stored values within `3.5h` (widened until 16 points are found).
/// All fitted points lie in Ω̄, so this is a one-sided second-order formula
/// that also works at corners and curved boundaries.
pub fn boundary_derivatives(grid: &Grid, u: &ScalarField) -> (Vec<P2>, Vec<M2>) {
    let points: Vec<(P2, f64)> = grid
        .interior_points()
        .iter()
        .copied()
        .zip(u.interior.iter().copied())
        .chain(
            grid.boundary_points()
                .iter()
                .copied()
                .zip(u.boundary.iter().copied()),
        )
        .collect();
    let h = grid.h;
    grid.boundary_points()
        .iter()
        .map(|xb| {
            let mut r = 3.5 * h;
            let near = loop {
                let near: Vec<&(P2, f64)> = points
                    .iter()
                    .filter(|(x, _)| (x - xb).norm() <= r)
                    .collect();
                if near.len() >= 16 || r > 8.0 * h {
                    break near;
                }
                r += h;
            };
            let rows = near.len();
            let mut m = crate::Matrix::zeros(rows, 10);
            let mut rhs = Vector::zeros(rows);
            for (i, (x, v)) in near.iter().enumerate() {
                let (a, b) = ((x.x - xb.x) / h, (x.y - xb.y) / h);
                let basis = [
                    1.0,
                    a,
                    b,
                    a * a,
                    a * b,
                    b * b,
                    a * a * a,
                    a * a * b,
                    a * b * b,
                    b * b * b,
                ];
                for (j, &f) in basis.iter().enumerate() {
                    m[(i, j)] = f;
                }
                rhs[i] = *v;
            }
            let c = m
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .expect("SVD computed with U and V");
            let uxy = c[4] / (h * h);
            (
                P2::new(c[1] / h, c[2] / h),
                M2::new(2.0 * c[3] / (h * h), uxy, uxy, 2.0 * c[5] / (h * h)),
            )
        })
        .unzip()
}

/// A grid function with its derivatives and augmented Hessian.
#[derive(Clone, Debug)]
pub struct EllipticIterate {
    pub u: ScalarField,
    pub du: Vec<P2>,
    pub d2u: Vec<M2>,
    pub a: Vec<M2>,
    /// `w = D²u − A(x, Du)`.
    pub w: Vec<M2>,
    pub min_eig: Vec<f64>,
    pub elliptic: bool,
}

impl EllipticIterate {
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the node with the smallest eigenvalue of `w`.
    pub fn least_elliptic_node(&self) -> usize {
        self.min_eig
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// `max_n |w_n|` (entrywise).
    pub fn max_abs_w(&self) -> f64 {
        self.w.iter().map(|w| w.amax()).fold(0.0, f64::max)
    }

    /// Relative ellipticity floor `factor·(1 + max |w|)`.
    pub fn ellipticity_floor(&self, factor: f64) -> f64 {
        factor * (1.0 + self.max_abs_w())
    }

    pub fn max_grad(&self) -> f64 {
        self.du.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }
}

pub fn assemble_w(
    ps: &ProblemSpec,
    grid: &Grid,
    u: &ScalarField,
) -> Result<EllipticIterate, ModelError> {
    let (du, d2u) = derivatives(grid, u);
    let mut a = Vec::with_capacity(du.len());
    let mut w = Vec::with_capacity(du.len());
    let mut min_eig = Vec::with_capacity(du.len());
    for n in 0..grid.n_interior() {
        let x = vec2(&grid.interior_point(n));
        let am = to_m2(&ps.a.value(&x, &vec2(&du[n]))?);
        let wn = d2u[n] - am;
        min_eig.push(sym2_eigenvalues(&wn).0);
        a.push(am);
        w.push(wn);
    }
    let elliptic = min_eig.iter().all(|&l| l > 0.0);
    Ok(EllipticIterate {
        u: u.clone(),
        du,
        d2u,
        a,
        w,
        min_eig,
        elliptic,
    })
}

/// Data of the continuity family started at a subsolution `u̲`:
/// `det w = t·B(x, Du) + (1 − t)·det w̲` in Ω, with boundary values blended
/// from `u̲` to `φ` so that `u̲` solves the `t = 0` problem exactly.
#[derive(Clone, Debug)]
pub struct Homotopy {
    pub sub: ScalarField,
    pub det_w_sub: Vec<f64>,
    /// `φ` at the boundary points.
    pub phi: Vec<f64>,
}

impl Homotopy {
    pub fn new(ps: &ProblemSpec, grid: &Grid, sub: ScalarField) -> Result<Self, DiscretizeError> {
        let it = assemble_w(ps, grid, &sub)?;
        if !it.elliptic {
            let n = it.least_elliptic_node();
            let x = grid.interior_point(n);
            return Err(DiscretizeError::NotElliptic {
                node: n,
                x: [x.x, x.y],
                min_eig: it.min_eig[n],
            });
        }
        Ok(Homotopy {
            det_w_sub: it.w.iter().map(|w| w.determinant()).collect(),
            phi: grid.boundary_points().iter().map(|x| (ps.phi)(x)).collect(),
            sub,
        })
    }

    /// `φ + (1 − t)(u̲ − φ)` at the boundary points.
    pub fn boundary_values(&self, t: f64) -> Vec<f64> {
        self.phi
            .iter()
            .zip(&self.sub.boundary)
            .map(|(&p, &s)| if t == 1.0 { p } else { p + (1.0 - t) * (s - p) })
            .collect()
    }

    pub fn rhs(&self, n: usize, t: f64, b: f64) -> f64 {
        if t == 1.0 {
            b
        } else {
            t * b + (1.0 - t) * self.det_w_sub[n]
        }
    }
}

/// Node-wise `log det w − log[t·B(x, Du) + (1 − t)·det w̲]` in Ω; the boundary
/// part holds `u − g_t` (zero when the boundary values are set).
pub fn residual(
    ps: &ProblemSpec,
    grid: &Grid,
    u: &ScalarField,
    t: f64,
    hom: Option<&Homotopy>,
) -> Result<ScalarField, DiscretizeError> {
    let it = assemble_w(ps, grid, u)?;
    residual_of(ps, grid, &it, t, hom)
}

/// [`residual`] for an already assembled iterate.
pub fn residual_of(
    ps: &ProblemSpec,
    grid: &Grid,
    it: &EllipticIterate,
    t: f64,
    hom: Option<&Homotopy>,
) -> Result<ScalarField, DiscretizeError> {
    if t < 1.0 && hom.is_none() {
        return Err(DiscretizeError::MissingSubsolution);
    }
    let mut interior = Vec::with_capacity(grid.n_interior());
    for n in 0..grid.n_interior() {
        let xp = grid.interior_point(n);
        if it.min_eig[n] <= 0.0 {
            return Err(DiscretizeError::NotElliptic {
                node: n,
                x: [xp.x, xp.y],
                min_eig: it.min_eig[n],
            });
        }
        let b = if t > 0.0 {
            ps.b.value(&vec2(&xp), &vec2(&it.du[n]))?
        } else {
            0.0
        };
        let rhs = match hom {
            Some(h) => h.rhs(n, t, b),
            None => b,
        };
        if !(rhs > 0.0) {
            return Err(DiscretizeError::NonPositiveRhs {
                node: n,
                x: [xp.x, xp.y],
                value: rhs,
            });
        }
        interior.push(it.w[n].determinant().ln() - rhs.ln());
    }
    let target = match hom {
        Some(h) => h.boundary_values(t),
        None => grid.boundary_points().iter().map(|x| (ps.phi)(x)).collect(),
    };
    let boundary =
        it.u.boundary
            .iter()
            .zip(&target)
            .map(|(u, g)| u - g)
            .collect();
    Ok(ScalarField { interior, boundary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{spatial, ConstantMatrix, Domain, FnScalar, ZeroMatrix};
    use std::sync::Arc;

    fn ps(a: Arc<dyn crate::model::MatrixFunction>, phi: crate::model::Spatial) -> ProblemSpec {
        ProblemSpec::new(
            "t",
            Domain::unit_square(),
            a,
            Arc::new(FnScalar::constant(1.0)),
            phi,
        )
    }

    #[test]
    fn quadratics_are_exact() {
        for d in [
            Domain::unit_square(),
            Domain::unit_disc(),
            Domain::l_shape(),
        ] {
            let g = Grid::build(&d, 0.1).unwrap();
            let u = ScalarField::from_fn(&g, |x| x.x * x.x + x.y * x.y + 0.5 * x.x * x.y - x.y);
            let (du, d2u) = derivatives(&g, &u);
            for n in 0..g.n_interior() {
                let x = g.interior_point(n);
                let exact = P2::new(2.0 * x.x + 0.5 * x.y, 2.0 * x.y + 0.5 * x.x - 1.0);
                assert!((du[n] - exact).amax() < 1e-10, "{d:?} {x:?}");
                assert!(
                    (d2u[n] - M2::new(2.0, 0.5, 0.5, 2.0)).amax() < 1e-8,
                    "{d:?} {x:?}"
                );
            }
        }
    }

    #[test]
    fn boundary_fit_is_exact_on_cubics() {
        for d in [
            Domain::unit_square(),
            Domain::unit_disc(),
            Domain::l_shape(),
        ] {
            let g = Grid::build(&d, 0.1).unwrap();
            let u = ScalarField::from_fn(&g, |x| {
                x.x.powi(3) - 2.0 * x.x * x.y * x.y + x.y * x.y + x.x
            });
            let (du, d2u) = boundary_derivatives(&g, &u);
            for (b, x) in g.boundary_points().iter().enumerate() {
                let exact_du = P2::new(
                    3.0 * x.x * x.x - 2.0 * x.y * x.y + 1.0,
                    -4.0 * x.x * x.y + 2.0 * x.y,
                );
                let exact_d2 = M2::new(6.0 * x.x, -4.0 * x.y, -4.0 * x.y, -4.0 * x.x + 2.0);
                assert!((du[b] - exact_du).amax() < 1e-8, "{d:?} {x:?}");
                assert!((d2u[b] - exact_d2).amax() < 1e-6, "{d:?} {x:?}");
            }
        }
    }

    #[test]
    fn affine_has_zero_hessian() {
        let g = Grid::build(&Domain::unit_disc(), 0.125).unwrap();
        let u = ScalarField::from_fn(&g, |x| 3.0 * x.x - 2.0 * x.y + 1.0);
        let (du, d2u) = derivatives(&g, &u);
        for n in 0..g.n_interior() {
            assert!((du[n] - P2::new(3.0, -2.0)).amax() < 1e-11);
            assert!(d2u[n].amax() < 1e-9);
        }
    }

    #[test]
    fn hessian_error_is_second_order() {
        let err = |h: f64| {
            let d = Domain::Rectangle {
                lower: P2::new(-0.5, -0.5),
                upper: P2::new(0.5, 0.5),
            };
            let g = Grid::build(&d, h).unwrap();
            let u = ScalarField::from_fn(&g, |x| (0.5 * x.norm_squared()).exp());
            let (_, d2u) = derivatives(&g, &u);
            (0..g.n_interior())
                .map(|n| {
                    let x = g.interior_point(n);
                    let e = (0.5 * x.norm_squared()).exp();
                    let exact = e * M2::new(1.0 + x.x * x.x, x.x * x.y, x.x * x.y, 1.0 + x.y * x.y);
                    (d2u[n] - exact).amax()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(1.0 / 16.0) / err(1.0 / 32.0);
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn augmented_hessian_cases() {
        let g = Grid::build(&Domain::unit_square(), 0.125).unwrap();
        let sq = |c: f64| ScalarField::from_fn(&g, move |x| c * x.norm_squared());
        let zero = ps(Arc::new(ZeroMatrix::default()), spatial(|_| 0.0));
        let ident = ps(Arc::new(ConstantMatrix::identity(2)), spatial(|_| 0.0));
        let it = assemble_w(&zero, &g, &sq(1.0)).unwrap();
        assert!(
            it.elliptic
                && it
                    .w
                    .iter()
                    .all(|w| (w - 2.0 * M2::identity()).amax() < 1e-10)
        );
        let it = assemble_w(&ident, &g, &sq(1.0)).unwrap();
        assert!(it.elliptic && it.w.iter().all(|w| (w - M2::identity()).amax() < 1e-10));
        let it = assemble_w(&ident, &g, &sq(0.25)).unwrap();
        assert!(!it.elliptic);
        assert!((it.min_eigenvalue() + 0.5).abs() < 1e-10);
    }

    #[test]
    fn residual_vanishes_on_exact_quadratics() {
        let g = Grid::build(&Domain::unit_square(), 0.125).unwrap();
        let half = spatial(|x| 0.5 * x.norm_squared());
        let p = ps(Arc::new(ZeroMatrix::default()), half.clone());
        let r = residual(&p, &g, &ScalarField::sample(&g, &half), 1.0, None).unwrap();
        assert!(r.max_abs() < 1e-12);
        let full = spatial(|x| x.norm_squared());
        let p = ps(Arc::new(ConstantMatrix::identity(2)), full.clone());
        let r = residual(&p, &g, &ScalarField::sample(&g, &full), 1.0, None).unwrap();
        assert!(r.max_abs() < 1e-12);
    }

    #[test]
    fn homotopy_endpoint_is_exact() {
        let g = Grid::build(&Domain::unit_disc(), 0.1).unwrap();
        let p = ps(
            Arc::new(ZeroMatrix::default()),
            spatial(|x| x.norm_squared().exp()),
        );
        let sub = ScalarField::from_fn(&g, |x| 2.0 * x.norm_squared() + 0.3 * x.x);
        let hom = Homotopy::new(&p, &g, sub.clone()).unwrap();
        let r = residual(&p, &g, &sub, 0.0, Some(&hom)).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn non_elliptic_residual_names_the_node() {
        let g = Grid::build(&Domain::unit_square(), 0.125).unwrap();
        let p = ps(Arc::new(ZeroMatrix::default()), spatial(|_| 0.0));
        let u = ScalarField::from_fn(&g, |x| -x.norm_squared());
        let err = residual(&p, &g, &u, 1.0, None).unwrap_err();
        assert!(matches!(err, DiscretizeError::NotElliptic { node: 0, .. }));
    }
}
