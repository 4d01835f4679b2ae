use std::sync::Arc;

use super::matrix::{eval_a, MatrixFunction};
use super::problem::{fd_grad_p, ProblemSpec, ScalarFunction, Spatial};
use super::{Domain, ModelError};
use crate::{Matrix, Vector, P2};

/// Diffeomorphism `ψ` of the plane with Jacobian `J_{ij} = ∂ψ_i/∂x_j`.
pub trait Diffeomorphism: Send + Sync {
    fn forward(&self, x: &Vector) -> Vector;

    fn inverse(&self, y: &Vector) -> Vector;

    fn jacobian(&self, x: &Vector) -> Matrix;

    /// `D²ψ_k` for each component `k`. Defaults to differences of the
    /// Jacobian.
    fn hessians(&self, x: &Vector) -> Vec<Matrix> {
        let n = x.len();
        let h = 1e-5 * (1.0 + x.amax());
        let mut out = vec![Matrix::zeros(n, n); n];
        for l in 0..n {
            let mut z = x.clone();
            z[l] += h;
            let fwd = self.jacobian(&z);
            z[l] -= 2.0 * h;
            let d = (fwd - self.jacobian(&z)) / (2.0 * h);
            for (k, hk) in out.iter_mut().enumerate() {
                for j in 0..n {
                    hk[(j, l)] = d[(k, j)];
                }
            }
        }
        for hk in &mut out {
            *hk = 0.5 * (&*hk + hk.transpose());
        }
        out
    }

    fn is_affine(&self) -> bool {
        false
    }
}

/// `ψ(x) = Mx + b`.
#[derive(Clone, Debug)]
pub struct AffineMap {
    pub m: Matrix,
    pub b: Vector,
    m_inv: Matrix,
}

impl AffineMap {
    pub fn new(m: Matrix, b: Vector) -> Result<Self, ModelError> {
        let det = m.determinant();
        let m_inv = m
            .clone()
            .try_inverse()
            .filter(|_| det.abs() > 1e-14)
            .ok_or(ModelError::NonInvertibleJacobian { x: vec![], det })?;
        Ok(AffineMap { m, b, m_inv })
    }

    pub fn scaling(s: f64) -> Result<Self, ModelError> {
        Self::new(Matrix::identity(2, 2) * s, Vector::zeros(2))
    }

    pub fn inverse_map(&self) -> AffineMap {
        AffineMap {
            m: self.m_inv.clone(),
            b: -&self.m_inv * &self.b,
            m_inv: self.m.clone(),
        }
    }
}

impl Diffeomorphism for AffineMap {
    fn forward(&self, x: &Vector) -> Vector {
        &self.m * x + &self.b
    }
    fn inverse(&self, y: &Vector) -> Vector {
        &self.m_inv * (y - &self.b)
    }
    fn jacobian(&self, _x: &Vector) -> Matrix {
        self.m.clone()
    }
    fn hessians(&self, x: &Vector) -> Vec<Matrix> {
        vec![Matrix::zeros(x.len(), x.len()); x.len()]
    }
    fn is_affine(&self) -> bool {
        true
    }
}

struct Frame {
    x: Vector,
    j: Matrix,
    j_inv: Matrix,
    det: f64,
}

fn frame(map: &dyn Diffeomorphism, y: &Vector) -> Result<Frame, ModelError> {
    let x = map.inverse(y);
    let j = map.jacobian(&x);
    let det = j.determinant();
    let j_inv = j
        .clone()
        .try_inverse()
        .filter(|_| det.abs() > 1e-14)
        .ok_or_else(|| ModelError::NonInvertibleJacobian {
            x: x.iter().copied().collect(),
            det,
        })?;
    Ok(Frame { x, j, j_inv, det })
}

/// `A′(y, q) = J⁻ᵀ[A(x, Jᵀq) − Σ_k q_k D²ψ_k(x)]J⁻¹` with `x = ψ⁻¹(y)`.
pub struct TransformedMatrix {
    pub inner: Arc<dyn MatrixFunction>,
    pub map: Arc<dyn Diffeomorphism>,
}

impl MatrixFunction for TransformedMatrix {
    fn name(&self) -> String {
        format!("transformed({})", self.inner.name())
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, y: &Vector, q: &Vector) -> Result<Matrix, ModelError> {
        let f = frame(self.map.as_ref(), y)?;
        let p = f.j.transpose() * q;
        let mut core = self.inner.value(&f.x, &p)?;
        if !self.map.is_affine() {
            for (k, hk) in self.map.hessians(&f.x).iter().enumerate() {
                core -= q[k] * hk;
            }
        }
        let out = f.j_inv.transpose() * core * &f.j_inv;
        Ok(0.5 * (&out + out.transpose()))
    }

    fn dp(&self, y: &Vector, q: &Vector) -> Option<Result<Vec<Matrix>, ModelError>> {
        Some((|| {
            let f = frame(self.map.as_ref(), y)?;
            let p = f.j.transpose() * q;
            let inner = eval_a(self.inner.as_ref(), &f.x, &p, 1)?.dp.unwrap();
            let hess = if self.map.is_affine() {
                None
            } else {
                Some(self.map.hessians(&f.x))
            };
            let n = q.len();
            Ok((0..n)
                .map(|m| {
                    let mut core = Matrix::zeros(n, n);
                    for (k, dk) in inner.iter().enumerate() {
                        core += f.j[(m, k)] * dk;
                    }
                    if let Some(h) = &hess {
                        core -= &h[m];
                    }
                    f.j_inv.transpose() * core * &f.j_inv
                })
                .collect())
        })())
    }

    fn dpp(&self, y: &Vector, q: &Vector) -> Option<Result<Vec<Matrix>, ModelError>> {
        Some((|| {
            let f = frame(self.map.as_ref(), y)?;
            let p = f.j.transpose() * q;
            let inner = eval_a(self.inner.as_ref(), &f.x, &p, 2)?.dpp.unwrap();
            let n = q.len();
            let mut out = Vec::with_capacity(n * n);
            for m in 0..n {
                for s in 0..n {
                    let mut core = Matrix::zeros(n, n);
                    for k in 0..n {
                        for l in 0..n {
                            core += f.j[(m, k)] * f.j[(s, l)] * &inner[k * n + l];
                        }
                    }
                    out.push(f.j_inv.transpose() * core * &f.j_inv);
                }
            }
            Ok(out)
        })())
    }

    fn p_independent(&self) -> bool {
        self.inner.p_independent() && self.map.is_affine()
    }
}

/// `B′(y, q) = (det J)⁻² B(x, Jᵀq)`.
pub struct TransformedScalar {
    pub inner: Arc<dyn ScalarFunction>,
    pub map: Arc<dyn Diffeomorphism>,
}

impl ScalarFunction for TransformedScalar {
    fn value(&self, y: &Vector, q: &Vector) -> Result<f64, ModelError> {
        let f = frame(self.map.as_ref(), y)?;
        let p = f.j.transpose() * q;
        Ok(self.inner.value(&f.x, &p)? / (f.det * f.det))
    }

    fn grad_p(&self, y: &Vector, q: &Vector) -> Option<Result<Vector, ModelError>> {
        Some((|| {
            let f = frame(self.map.as_ref(), y)?;
            let p = f.j.transpose() * q;
            let g = fd_grad_p(self.inner.as_ref(), &f.x, &p)?;
            Ok(&f.j * g / (f.det * f.det))
        })())
    }

    fn p_independent(&self) -> bool {
        self.inner.p_independent()
    }
}

fn pull_back(f: &Spatial, map: &Arc<dyn Diffeomorphism>) -> Spatial {
    let f = f.clone();
    let map = map.clone();
    Arc::new(move |y: &P2| {
        let x = map.inverse(&Vector::from_column_slice(&[y.x, y.y]));
        f(&P2::new(x[0], x[1]))
    })
}

/// Rewrites the problem in the coordinates `y = ψ(x)`; `v(y) = u(ψ⁻¹(y))`
/// solves the transformed problem iff `u` solves the original.
pub fn transform_problem(
    ps: &ProblemSpec,
    map: Arc<dyn Diffeomorphism>,
) -> Result<ProblemSpec, ModelError> {
    for s in ps.domain.boundary_polygon(64) {
        let x = Vector::from_column_slice(&[s.x, s.y]);
        let det = map.jacobian(&x).determinant();
        if det.abs() <= 1e-14 || !det.is_finite() {
            return Err(ModelError::NonInvertibleJacobian {
                x: vec![s.x, s.y],
                det,
            });
        }
    }
    Ok(ProblemSpec {
        name: format!("{} (transformed)", ps.name),
        domain: Domain::Mapped {
            base: Box::new(ps.domain.clone()),
            map: map.clone(),
        },
        a: Arc::new(TransformedMatrix {
            inner: ps.a.clone(),
            map: map.clone(),
        }),
        b: Arc::new(TransformedScalar {
            inner: ps.b.clone(),
            map: map.clone(),
        }),
        phi: pull_back(&ps.phi, &map),
        subsolution: ps.subsolution.as_ref().map(|s| pull_back(s, &map)),
        exact: ps.exact.as_ref().map(|s| pull_back(s, &map)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{spatial, ConstantMatrix, FnScalar, LogCostMatrix, ZeroMatrix};

    fn v(a: f64, b: f64) -> Vector {
        Vector::from_column_slice(&[a, b])
    }

    fn problem(a: Arc<dyn MatrixFunction>) -> ProblemSpec {
        ProblemSpec::new(
            "t",
            Domain::unit_disc(),
            a,
            Arc::new(FnScalar::new(|x, p| 1.0 + x[0] * x[0] + p[1] * p[1])),
            spatial(|x| x.norm_squared()),
        )
    }

    #[test]
    fn scaling_by_two() {
        let ps = ProblemSpec::new(
            "s",
            Domain::unit_disc(),
            Arc::new(ZeroMatrix::default()),
            Arc::new(FnScalar::constant(1.0)),
            spatial(|_| 0.0),
        );
        let t = transform_problem(&ps, Arc::new(AffineMap::scaling(2.0).unwrap())).unwrap();
        let (y, q) = (v(0.5, 0.3), v(0.7, -0.2));
        assert_eq!(t.a.value(&y, &q).unwrap(), Matrix::zeros(2, 2));
        assert_eq!(t.b.value(&y, &q).unwrap(), 1.0 / 16.0);
    }

    #[test]
    fn identity_is_exact() {
        let ps = problem(Arc::new(LogCostMatrix::default()));
        let id = AffineMap::new(Matrix::identity(2, 2), Vector::zeros(2)).unwrap();
        let t = transform_problem(&ps, Arc::new(id)).unwrap();
        let (x, p) = (v(0.2, 0.1), v(0.4, -0.9));
        assert_eq!(t.a.value(&x, &p).unwrap(), ps.a.value(&x, &p).unwrap());
        assert_eq!(t.b.value(&x, &p).unwrap(), ps.b.value(&x, &p).unwrap());
    }

    #[test]
    fn affine_round_trip() {
        let ps = problem(Arc::new(LogCostMatrix::default()));
        let map = AffineMap::new(
            Matrix::from_row_slice(2, 2, &[1.3, 0.4, -0.2, 0.9]),
            v(0.1, -0.3),
        )
        .unwrap();
        let inv = map.inverse_map();
        let there = transform_problem(&ps, Arc::new(map)).unwrap();
        let back = transform_problem(&there, Arc::new(inv)).unwrap();
        let (x, p) = (v(0.2, 0.1), v(0.4, -0.9));
        let a0 = ps.a.value(&x, &p).unwrap();
        assert!((back.a.value(&x, &p).unwrap() - &a0).amax() <= 1e-12 * (1.0 + a0.amax()));
        let b0 = ps.b.value(&x, &p).unwrap();
        assert!((back.b.value(&x, &p).unwrap() - b0).abs() <= 1e-12 * b0);
    }

    struct Bend;
    impl Diffeomorphism for Bend {
        fn forward(&self, x: &Vector) -> Vector {
            v(x[0], x[1] + 0.2 * x[0] * x[0])
        }
        fn inverse(&self, y: &Vector) -> Vector {
            v(y[0], y[1] - 0.2 * y[0] * y[0])
        }
        fn jacobian(&self, x: &Vector) -> Matrix {
            Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.4 * x[0], 1.0])
        }
    }

    #[test]
    fn curved_map_transforms_hessian() {
        // u = |x|² under y = (x1, x2 + 0.2x1²): check det(D²v − A′) = (det J)⁻²det(D²u − A)
        let ps = problem(Arc::new(ConstantMatrix::identity(2)));
        let t = transform_problem(&ps, Arc::new(Bend)).unwrap();
        let y = v(0.3, 0.25);
        let v_of = |z: &Vector| {
            let x = Bend.inverse(z);
            x.norm_squared()
        };
        let h = 1e-4;
        let mut hess = Matrix::zeros(2, 2);
        let mut grad = Vector::zeros(2);
        for i in 0..2 {
            let mut e = Vector::zeros(2);
            e[i] = h;
            grad[i] = (v_of(&(&y + &e)) - v_of(&(&y - &e))) / (2.0 * h);
            for j in 0..2 {
                let mut f = Vector::zeros(2);
                f[j] = h;
                hess[(i, j)] =
                    (v_of(&(&y + &e + &f)) - v_of(&(&y + &e - &f)) - v_of(&(&y - &e + &f))
                        + v_of(&(&y - &e - &f)))
                        / (4.0 * h * h);
            }
        }
        let lhs = (hess - t.a.value(&y, &grad).unwrap()).determinant();
        // original: D²u − I = I, det = 1; det J = 1
        assert!((lhs - 1.0).abs() < 1e-5, "{lhs}");
    }
}
