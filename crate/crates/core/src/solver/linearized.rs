use super::SolverError;
use crate::discretize::{
    stencil_values, vec2, ArmEnd, EllipticIterate, Grid, Homotopy, ScalarField,
};
use crate::linalg::BandMatrix;
use crate::model::{eval_a, fd_grad_p, ProblemSpec};
use crate::{M2, P2};

/// Node-wise coefficients of `ℒ = F^{ij}D_{ij} + b^k D_k`.
#[derive(Clone, Debug)]
pub struct LinearizedCoefficients {
    /// `F = w⁻¹`.
    pub f: Vec<M2>,
    /// `b^k = −F^{ij} D_{p_k}A_{ij} − s·D_{p_k} log B`.
    pub drift: Vec<P2>,
}

impl LinearizedCoefficients {
    /// `ΣF^{ii}` per node.
    pub fn trace_f(&self) -> Vec<f64> {
        self.f.iter().map(|f| f.trace()).collect()
    }

    /// `ℒv` at interior nodes, using `v`'s boundary values.
    pub fn apply(&self, grid: &Grid, v: &ScalarField) -> Vec<f64> {
        (0..grid.n_interior())
            .map(|n| {
                let vals = stencil_values(grid, v, n);
                let st = grid.stencil(n);
                let d = |w: &[f64; 9]| w.iter().zip(&vals).map(|(a, b)| a * b).sum::<f64>();
                let f = &self.f[n];
                f[(0, 0)] * d(&st.dxx)
                    + 2.0 * f[(0, 1)] * d(&st.dxy)
                    + f[(1, 1)] * d(&st.dyy)
                    + self.drift[n].x * d(&st.dx)
                    + self.drift[n].y * d(&st.dy)
            })
            .collect()
    }
}

/// Coefficients of `ℒ` at an iterate for the continuation parameter `t`.
/// For `t < 1` the `B` term is weighted by `s = tB/(tB + (1 − t)det w̲)`.
pub fn linearized_coefficients(
    ps: &ProblemSpec,
    grid: &Grid,
    it: &EllipticIterate,
    t: f64,
    hom: Option<&Homotopy>,
    eps_ell: f64,
) -> Result<LinearizedCoefficients, SolverError> {
    let mut f = Vec::with_capacity(grid.n_interior());
    let mut drift = Vec::with_capacity(grid.n_interior());
    for n in 0..grid.n_interior() {
        if it.min_eig[n] < eps_ell {
            return Err(SolverError::NotElliptic {
                node: n,
                min_eig: it.min_eig[n],
                floor: eps_ell,
            });
        }
        let fi = it.w[n].try_inverse().ok_or(SolverError::NotElliptic {
            node: n,
            min_eig: it.min_eig[n],
            floor: eps_ell,
        })?;
        let fi = 0.5 * (fi + fi.transpose());
        let x = vec2(&grid.interior_point(n));
        let p = vec2(&it.du[n]);
        let mut b = P2::zeros();
        if !ps.a.p_independent() {
            let dp = eval_a(ps.a.as_ref(), &x, &p, 1)?.dp.expect("order 1");
            for k in 0..2 {
                let dk = &dp[k];
                b[k] -= fi[(0, 0)] * dk[(0, 0)]
                    + fi[(0, 1)] * (dk[(0, 1)] + dk[(1, 0)])
                    + fi[(1, 1)] * dk[(1, 1)];
            }
        }
        if t > 0.0 && !ps.b.p_independent() {
            let bv = ps.b.value(&x, &p)?;
            let s = match hom {
                Some(h) => t * bv / h.rhs(n, t, bv),
                None => 1.0,
            };
            let g = fd_grad_p(ps.b.as_ref(), &x, &p)?;
            b.x -= s * g[0] / bv;
            b.y -= s * g[1] / bv;
        }
        f.push(fi);
        drift.push(b);
    }
    Ok(LinearizedCoefficients { f, drift })
}

/// Banded Jacobian of the residual over interior nodes (boundary increments
/// are zero) with right-hand side `−residual`.
#[derive(Clone, Debug)]
pub struct LinearizedSystem {
    pub matrix: BandMatrix,
    pub rhs: Vec<f64>,
    pub coefficients: LinearizedCoefficients,
}

pub fn assemble_linearized(
    ps: &ProblemSpec,
    grid: &Grid,
    it: &EllipticIterate,
    residual: &ScalarField,
    t: f64,
    hom: Option<&Homotopy>,
    eps_ell: f64,
) -> Result<LinearizedSystem, SolverError> {
    let coefficients = linearized_coefficients(ps, grid, it, t, hom, eps_ell)?;
    let n = grid.n_interior();
    let bw = grid.bandwidth();
    let mut matrix = BandMatrix::zeros(n, bw, bw);
    for row in 0..n {
        let st = grid.stencil(row);
        let f = &coefficients.f[row];
        let b = &coefficients.drift[row];
        let weight = |k: usize| {
            f[(0, 0)] * st.dxx[k]
                + 2.0 * f[(0, 1)] * st.dxy[k]
                + f[(1, 1)] * st.dyy[k]
                + b.x * st.dx[k]
                + b.y * st.dy[k]
        };
        matrix.add(row, row, weight(0))?;
        for (a, arm) in grid.arms(row).iter().enumerate() {
            if let ArmEnd::Interior(col) = arm.end {
                matrix.add(row, col, weight(a + 1))?;
            }
        }
    }
    Ok(LinearizedSystem {
        matrix,
        rhs: residual.interior.iter().map(|r| -r).collect(),
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::assemble_w;
    use crate::model::{spatial, Domain, FnScalar, ZeroMatrix};
    use std::sync::Arc;

    fn standard() -> (ProblemSpec, Grid) {
        let ps = ProblemSpec::new(
            "ma",
            Domain::unit_disc(),
            Arc::new(ZeroMatrix::default()),
            Arc::new(FnScalar::constant(1.0)),
            spatial(|x| x.norm_squared()),
        );
        let g = Grid::build(&ps.domain, 0.1).unwrap();
        (ps, g)
    }

    #[test]
    fn scaled_laplacian_on_paraboloid() {
        let (ps, g) = standard();
        let u = ScalarField::from_fn(&g, |x| x.norm_squared());
        let it = assemble_w(&ps, &g, &u).unwrap();
        let c = linearized_coefficients(&ps, &g, &it, 1.0, None, 1e-10).unwrap();
        let delta = ScalarField::from_fn(&g, |x| x.x * x.x);
        for v in c.apply(&g, &delta) {
            assert!((v - 1.0).abs() < 1e-9);
        }
        let affine = ScalarField::from_fn(&g, |x| 2.0 * x.x - x.y + 3.0);
        for v in c.apply(&g, &affine) {
            assert!(v.abs() < 1e-9);
        }
    }

    #[test]
    fn matrix_rows_match_apply() {
        let (ps, g) = standard();
        let u = ScalarField::from_fn(&g, |x| x.norm_squared() + 0.2 * x.x.powi(3));
        let it = assemble_w(&ps, &g, &u).unwrap();
        let r = ScalarField::zeros(&g);
        let sys = assemble_linearized(&ps, &g, &it, &r, 1.0, None, 1e-10).unwrap();
        let mut delta = ScalarField::from_fn(&g, |x| (3.0 * x.x).sin() * x.y);
        delta.boundary.iter_mut().for_each(|v| *v = 0.0);
        let via_matrix = sys.matrix.mul_vec(&delta.interior);
        let via_apply = sys.coefficients.apply(&g, &delta);
        for (a, b) in via_matrix.iter().zip(&via_apply) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn non_elliptic_iterate_is_rejected() {
        let (ps, g) = standard();
        let u = ScalarField::from_fn(&g, |x| -x.norm_squared());
        let it = assemble_w(&ps, &g, &u).unwrap();
        assert!(matches!(
            linearized_coefficients(&ps, &g, &it, 1.0, None, 1e-10),
            Err(SolverError::NotElliptic { .. })
        ));
    }
}
