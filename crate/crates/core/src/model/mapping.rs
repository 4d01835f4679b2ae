use std::sync::Arc;

use super::cost::{CostMatrix, CostModel};
use super::problem::{ProblemSpec, ScalarFunction, Spatial};
use super::{Domain, MatrixFunction, ModelError, DET_FLOOR};
use crate::expr::Expr;
use crate::{Matrix, Vector, P2};

/// Mapping `Y(x, p)` of a prescribed Jacobian equation `|det DY(·, Du)| = ψ`.
///
/// `y_x()[(i, j)] = ∂Y_i/∂x_j`, likewise `y_p`. The defaults difference `y`.
pub trait GeneratingMap: Send + Sync {
    fn name(&self) -> String;

    fn y(&self, x: &Vector, p: &Vector) -> Result<Vector, ModelError>;

    fn y_x(&self, x: &Vector, p: &Vector) -> Result<Matrix, ModelError> {
        let h = 1e-6 * (1.0 + x.amax());
        jac(|z| self.y(z, p), x, h)
    }

    fn y_p(&self, x: &Vector, p: &Vector) -> Result<Matrix, ModelError> {
        let h = 1e-6 * (1.0 + p.amax());
        jac(|z| self.y(x, z), p, h)
    }

    /// Target density `ψ(x, p) > 0`.
    fn density(&self, x: &Vector, p: &Vector) -> Result<f64, ModelError>;
}

fn jac(
    f: impl Fn(&Vector) -> Result<Vector, ModelError>,
    x: &Vector,
    h: f64,
) -> Result<Matrix, ModelError> {
    let n = x.len();
    let mut m = Matrix::zeros(n, n);
    for k in 0..n {
        let mut z = x.clone();
        z[k] += h;
        let fwd = f(&z)?;
        z[k] -= 2.0 * h;
        m.set_column(k, &((fwd - f(&z)?) / (2.0 * h)));
    }
    Ok(m)
}

fn y_p_checked(
    gm: &dyn GeneratingMap,
    x: &Vector,
    p: &Vector,
    floor: f64,
) -> Result<(Matrix, f64), ModelError> {
    let yp = gm.y_p(x, p)?;
    let det = yp.determinant();
    if det.abs() < floor || !det.is_finite() {
        return Err(ModelError::MappingDegenerate {
            x: x.iter().copied().collect(),
            p: p.iter().copied().collect(),
            det: det.abs(),
        });
    }
    Ok((yp, det))
}

/// `A = −Y_p⁻¹ Y_x`.
pub struct MappingMatrix {
    pub map: Arc<dyn GeneratingMap>,
    pub det_floor: f64,
}

impl MatrixFunction for MappingMatrix {
    fn name(&self) -> String {
        self.map.name()
    }

    fn value(&self, x: &Vector, p: &Vector) -> Result<Matrix, ModelError> {
        let (yp, det) = y_p_checked(self.map.as_ref(), x, p, self.det_floor)?;
        let yx = self.map.y_x(x, p)?;
        let a = -yp.lu().solve(&yx).ok_or(ModelError::MappingDegenerate {
            x: x.iter().copied().collect(),
            p: p.iter().copied().collect(),
            det: det.abs(),
        })?;
        Ok(0.5 * (&a + a.transpose()))
    }
}

/// `B = |det Y_p|⁻¹ ψ`.
pub struct MappingB {
    pub map: Arc<dyn GeneratingMap>,
    pub det_floor: f64,
}

impl ScalarFunction for MappingB {
    fn value(&self, x: &Vector, p: &Vector) -> Result<f64, ModelError> {
        let (_, det) = y_p_checked(self.map.as_ref(), x, p, self.det_floor)?;
        Ok(self.map.density(x, p)? / det.abs())
    }
}

/// Mapping `Y` generated by a cost: `D_x c(x, Y) = p`, with
/// `Y_p = c_xy⁻¹` and `Y_x = −c_xy⁻¹ c_xx` by implicit differentiation.
pub struct CostMapping {
    pub inverse: CostMatrix,
    pub density: Arc<dyn ScalarFunction>,
}

impl CostMapping {
    pub fn new(cost: Arc<dyn CostModel>, density: Arc<dyn ScalarFunction>) -> Self {
        CostMapping {
            inverse: CostMatrix::new(cost),
            density,
        }
    }

    fn c_xy_inv(&self, x: &Vector, y: &Vector, p: &Vector) -> Result<Matrix, ModelError> {
        let cxy = self.inverse.cost.c_xy(x, y);
        let det = cxy.determinant();
        cxy.try_inverse().ok_or(ModelError::MappingDegenerate {
            x: x.iter().copied().collect(),
            p: p.iter().copied().collect(),
            det: det.abs(),
        })
    }
}

impl GeneratingMap for CostMapping {
    fn name(&self) -> String {
        self.inverse.cost.name()
    }

    fn y(&self, x: &Vector, p: &Vector) -> Result<Vector, ModelError> {
        self.inverse.y(x, p)
    }

    fn y_x(&self, x: &Vector, p: &Vector) -> Result<Matrix, ModelError> {
        let y = self.y(x, p)?;
        Ok(-self.c_xy_inv(x, &y, p)? * self.inverse.cost.c_xx(x, &y))
    }

    fn y_p(&self, x: &Vector, p: &Vector) -> Result<Matrix, ModelError> {
        let y = self.y(x, p)?;
        self.c_xy_inv(x, &y, p)
    }

    fn density(&self, x: &Vector, p: &Vector) -> Result<f64, ModelError> {
        self.density.value(x, p)
    }
}

/// Mapping given by expressions `y1, y2, psi` in `x1, x2, p1, p2`.
#[derive(Clone, Debug)]
pub struct ExprMapping {
    pub y1: Expr,
    pub y2: Expr,
    pub psi: Expr,
}

impl GeneratingMap for ExprMapping {
    fn name(&self) -> String {
        "custom-mapping".into()
    }

    fn y(&self, x: &Vector, p: &Vector) -> Result<Vector, ModelError> {
        let (xa, pa) = ([x[0], x[1]], [p[0], p[1]]);
        let y = Vector::from_column_slice(&[self.y1.eval(xa, pa), self.y2.eval(xa, pa)]);
        if y.iter().all(|v| v.is_finite()) {
            Ok(y)
        } else {
            Err(ModelError::eval(x, p, "non-finite mapping value"))
        }
    }

    fn density(&self, x: &Vector, p: &Vector) -> Result<f64, ModelError> {
        let v = self.psi.eval([x[0], x[1]], [p[0], p[1]]);
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(ModelError::eval(
                x,
                p,
                format!("density ψ = {v} is not positive"),
            ))
        }
    }
}

/// Builds `(A, B)` from a generating map. `det Y_p` is checked on a 7×7
/// grid over Ω crossed with gradients on the rings `|p| ∈ {¼, ½}`.
pub fn problem_from_mapping(
    gm: Arc<dyn GeneratingMap>,
    domain: Domain,
    phi: Spatial,
) -> Result<ProblemSpec, ModelError> {
    let (lo, hi) = domain.bounding_box();
    for i in 0..7 {
        for j in 0..7 {
            let xp = P2::new(
                lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / 7.0,
                lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / 7.0,
            );
            if !domain.contains(&xp) {
                continue;
            }
            let x = Vector::from_column_slice(&[xp.x, xp.y]);
            for r in [0.25, 0.5] {
                for k in 0..8 {
                    let th = std::f64::consts::TAU * k as f64 / 8.0;
                    let p = Vector::from_column_slice(&[r * th.cos(), r * th.sin()]);
                    y_p_checked(gm.as_ref(), &x, &p, DET_FLOOR)?;
                    if gm.density(&x, &p)? <= 0.0 {
                        return Err(ModelError::NonPositiveB {
                            x: x.iter().copied().collect(),
                            p: p.iter().copied().collect(),
                            value: gm.density(&x, &p)?,
                        });
                    }
                }
            }
        }
    }
    let name = gm.name();
    let a = Arc::new(MappingMatrix {
        map: gm.clone(),
        det_floor: DET_FLOOR,
    });
    let b = Arc::new(MappingB {
        map: gm,
        det_floor: DET_FLOOR,
    });
    Ok(ProblemSpec::new(name, domain, a, b, phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{spatial, FnScalar, SqrtCost};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn expr_map(y1: &str, y2: &str) -> Arc<dyn GeneratingMap> {
        Arc::new(ExprMapping {
            y1: y1.parse().unwrap(),
            y2: y2.parse().unwrap(),
            psi: "1 + x1^2".parse().unwrap(),
        })
    }

    #[test]
    fn constant_jacobian_mappings() {
        let x = Vector::from_column_slice(&[0.3, -0.1]);
        let p = Vector::from_column_slice(&[0.2, 0.4]);
        let ps = problem_from_mapping(
            expr_map("x1 - p1", "x2 - p2"),
            Domain::unit_disc(),
            spatial(|_| 0.0),
        )
        .unwrap();
        assert!((ps.a.value(&x, &p).unwrap() - Matrix::identity(2, 2)).amax() < 1e-9);
        assert!((ps.b.value(&x, &p).unwrap() - 1.09).abs() < 1e-9);
        let ps = problem_from_mapping(
            expr_map("-p1", "-p2"),
            Domain::unit_disc(),
            spatial(|_| 0.0),
        )
        .unwrap();
        assert!(ps.a.value(&x, &p).unwrap().amax() < 1e-9);
    }

    #[test]
    fn singular_mapping_is_rejected() {
        let err = problem_from_mapping(
            expr_map("x1 - p1", "x2 - p1"),
            Domain::unit_disc(),
            spatial(|_| 0.0),
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::MappingDegenerate { .. }));
    }

    #[test]
    fn cost_mapping_agrees_with_cost_matrix() {
        let cost: Arc<dyn CostModel> = Arc::new(SqrtCost);
        let gm = Arc::new(CostMapping::new(
            cost.clone(),
            Arc::new(FnScalar::constant(1.0)),
        ));
        let ps = problem_from_mapping(gm, Domain::unit_disc(), spatial(|_| 0.0)).unwrap();
        let direct = CostMatrix::new(cost);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = Vector::from_fn(2, |_, _| rng.gen_range(-0.7..0.7));
            let r: f64 = rng.gen_range(0.0..0.9);
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let p = Vector::from_column_slice(&[r * th.cos(), r * th.sin()]);
            let a1 = ps.a.value(&x, &p).unwrap();
            let a2 = direct.value(&x, &p).unwrap();
            assert!((a1 - a2).amax() < 1e-6);
        }
    }
}
