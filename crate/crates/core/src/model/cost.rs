use std::sync::{Arc, Mutex};

use super::{matrix::MatrixFunction, ModelError, DET_FLOOR};
use crate::{Matrix, Vector};

/// Cost function `c(x, y)` with its derivatives.
///
/// Only `c` is required; the default derivative methods use central
/// differences. `c_xy()[(i, j)] = ∂²c/∂x_i∂y_j`.
pub trait CostModel: Send + Sync {
    fn name(&self) -> String;

    fn c(&self, x: &Vector, y: &Vector) -> f64;

    fn c_x(&self, x: &Vector, y: &Vector) -> Vector {
        fd_grad(|z| self.c(z, y), x)
    }

    fn c_y(&self, x: &Vector, y: &Vector) -> Vector {
        fd_grad(|z| self.c(x, z), y)
    }

    fn c_xx(&self, x: &Vector, y: &Vector) -> Matrix {
        fd_jac(|z| self.c_x(z, y), x)
    }

    fn c_xy(&self, x: &Vector, y: &Vector) -> Matrix {
        fd_jac(|z| self.c_x(x, z), y)
    }

    /// Box in `y` where the inverse `Y(x, p)` is sought; its centre is the
    /// fallback Newton guess.
    fn working_box(&self, n: usize) -> (Vector, Vector) {
        (Vector::repeat(n, -10.0), Vector::repeat(n, 10.0))
    }
}

fn fd_grad(f: impl Fn(&Vector) -> f64, x: &Vector) -> Vector {
    let h = 1e-6 * (1.0 + x.amax());
    Vector::from_fn(x.len(), |k, _| {
        let mut z = x.clone();
        z[k] += h;
        let fwd = f(&z);
        z[k] -= 2.0 * h;
        (fwd - f(&z)) / (2.0 * h)
    })
}

fn fd_jac(f: impl Fn(&Vector) -> Vector, x: &Vector) -> Matrix {
    let h = 1e-5 * (1.0 + x.amax());
    let n = x.len();
    let mut m = Matrix::zeros(n, n);
    for k in 0..n {
        let mut z = x.clone();
        z[k] += h;
        let fwd = f(&z);
        z[k] -= 2.0 * h;
        m.set_column(k, &((fwd - f(&z)) / (2.0 * h)));
    }
    m
}

/// Newton settings for the inversion `D_x c(x, Y) = p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InversionConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub det_floor: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            tol: 1e-10,
            max_iter: 50,
            det_floor: DET_FLOOR,
        }
    }
}

fn to_vec(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Solves `D_x c(x, y) = p` for `y` by damped Newton from `y0`.
///
/// After reaching `cfg.tol` the iteration continues while the residual still
/// drops, so the result is accurate to roundoff.
pub fn solve_y(
    cm: &dyn CostModel,
    x: &Vector,
    p: &Vector,
    y0: &Vector,
    cfg: &InversionConfig,
) -> Result<Vector, ModelError> {
    let fail = |trace: Vec<f64>| ModelError::InversionFailed {
        x: to_vec(x),
        p: to_vec(p),
        trace,
    };
    let mut y = y0.clone();
    let mut r = cm.c_x(x, &y) - p;
    let mut rn = r.norm();
    let mut trace = vec![rn];
    let mut converged_at = None;
    for it in 0..cfg.max_iter {
        if rn <= cfg.tol && converged_at.is_none() {
            converged_at = Some(it);
        }
        if converged_at.is_some_and(|c| it >= c + 3) || rn == 0.0 {
            break;
        }
        let jac = cm.c_xy(x, &y);
        let step = match jac.clone().lu().solve(&(-&r)) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            // a singular Jacobian away from a root means the iteration escaped
            _ => return Err(fail(trace)),
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &y + alpha * &step;
            let rc = cm.c_x(x, &cand) - p;
            let rcn = rc.norm();
            if rcn.is_finite() && rcn < rn {
                y = cand;
                r = rc;
                rn = rcn;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        trace.push(rn);
        if !accepted {
            break;
        }
    }
    if rn > cfg.tol {
        return Err(fail(trace));
    }
    let det = cm.c_xy(x, &y).determinant().abs();
    if det < cfg.det_floor {
        return Err(ModelError::DegenerateCost {
            x: to_vec(x),
            y: to_vec(&y),
            det,
        });
    }
    Ok(y)
}

/// `A(x, p) = D²_x c(x, Y(x, p))`.
pub fn a_from_cost(
    cm: &dyn CostModel,
    x: &Vector,
    p: &Vector,
    y0: &Vector,
    cfg: &InversionConfig,
) -> Result<Matrix, ModelError> {
    let y = solve_y(cm, x, p, y0, cfg)?;
    Ok(cm.c_xx(x, &y))
}

/// Matrix function generated by a cost through numeric inversion.
///
/// The last successful `Y` is kept as the next initial guess, so sweeps over
/// neighbouring grid nodes follow one smooth branch; on failure the inversion
/// restarts from the working-box centre and from `x − p`.
pub struct CostMatrix {
    pub cost: Arc<dyn CostModel>,
    pub config: InversionConfig,
    warm: Mutex<Option<Vector>>,
}

impl CostMatrix {
    pub fn new(cost: Arc<dyn CostModel>) -> Self {
        CostMatrix {
            cost,
            config: InversionConfig::default(),
            warm: Mutex::new(None),
        }
    }

    pub fn with_config(mut self, config: InversionConfig) -> Self {
        self.config = config;
        self
    }

    pub fn clear_warm_start(&self) {
        *self.warm.lock().unwrap() = None;
    }

    /// `Y(x, p)` with the warm-start and fallback guesses.
    pub fn y(&self, x: &Vector, p: &Vector) -> Result<Vector, ModelError> {
        let (lo, hi) = self.cost.working_box(x.len());
        let mut guesses = Vec::with_capacity(3);
        if let Some(w) = self.warm.lock().unwrap().clone() {
            guesses.push(w);
        }
        guesses.push(0.5 * (lo + hi));
        guesses.push(x - p);
        let mut err = None;
        for g in &guesses {
            match solve_y(self.cost.as_ref(), x, p, g, &self.config) {
                Ok(y) => {
                    *self.warm.lock().unwrap() = Some(y.clone());
                    return Ok(y);
                }
                Err(e) => err = Some(e),
            }
        }
        Err(err.expect("at least one guess"))
    }
}

impl MatrixFunction for CostMatrix {
    fn name(&self) -> String {
        self.cost.name()
    }

    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &Vector, p: &Vector) -> Result<Matrix, ModelError> {
        let y = self.y(x, p)?;
        let m = self.cost.c_xx(x, &y);
        Ok(0.5 * (&m + m.transpose()))
    }
}

/// `c(x, y) = −x·y`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LinearCost;

impl CostModel for LinearCost {
    fn name(&self) -> String {
        "linear-cost".into()
    }
    fn c(&self, x: &Vector, y: &Vector) -> f64 {
        -x.dot(y)
    }
    fn c_x(&self, _x: &Vector, y: &Vector) -> Vector {
        -y
    }
    fn c_y(&self, x: &Vector, _y: &Vector) -> Vector {
        -x
    }
    fn c_xx(&self, x: &Vector, _y: &Vector) -> Matrix {
        Matrix::zeros(x.len(), x.len())
    }
    fn c_xy(&self, x: &Vector, _y: &Vector) -> Matrix {
        -Matrix::identity(x.len(), x.len())
    }
}

/// `c(x, y) = |x − y|²/2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct QuadraticCost;

impl CostModel for QuadraticCost {
    fn name(&self) -> String {
        "quadratic-cost".into()
    }
    fn c(&self, x: &Vector, y: &Vector) -> f64 {
        0.5 * (x - y).norm_squared()
    }
    fn c_x(&self, x: &Vector, y: &Vector) -> Vector {
        x - y
    }
    fn c_y(&self, x: &Vector, y: &Vector) -> Vector {
        y - x
    }
    fn c_xx(&self, x: &Vector, _y: &Vector) -> Matrix {
        Matrix::identity(x.len(), x.len())
    }
    fn c_xy(&self, x: &Vector, _y: &Vector) -> Matrix {
        -Matrix::identity(x.len(), x.len())
    }
}

fn sqrt_parts(x: &Vector, y: &Vector) -> (Vector, f64, Matrix) {
    let q = x - y;
    let c = (1.0 + q.norm_squared()).sqrt();
    let n = q.len();
    let hess = (Matrix::identity(n, n) - &q * q.transpose() / (c * c)) / c;
    (q, c, hess)
}

/// `c(x, y) = √(1 + |x − y|²)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SqrtCost;

impl CostModel for SqrtCost {
    fn name(&self) -> String {
        "sqrt-cost".into()
    }
    fn c(&self, x: &Vector, y: &Vector) -> f64 {
        (1.0 + (x - y).norm_squared()).sqrt()
    }
    fn c_x(&self, x: &Vector, y: &Vector) -> Vector {
        let (q, c, _) = sqrt_parts(x, y);
        q / c
    }
    fn c_y(&self, x: &Vector, y: &Vector) -> Vector {
        -self.c_x(x, y)
    }
    fn c_xx(&self, x: &Vector, y: &Vector) -> Matrix {
        sqrt_parts(x, y).2
    }
    fn c_xy(&self, x: &Vector, y: &Vector) -> Matrix {
        -sqrt_parts(x, y).2
    }
}

/// `c(x, y) = −√(1 + |x − y|²)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct NegSqrtCost;

impl CostModel for NegSqrtCost {
    fn name(&self) -> String {
        "neg-sqrt-cost".into()
    }
    fn c(&self, x: &Vector, y: &Vector) -> f64 {
        -(1.0 + (x - y).norm_squared()).sqrt()
    }
    fn c_x(&self, x: &Vector, y: &Vector) -> Vector {
        let (q, c, _) = sqrt_parts(x, y);
        -q / c
    }
    fn c_y(&self, x: &Vector, y: &Vector) -> Vector {
        -self.c_x(x, y)
    }
    fn c_xx(&self, x: &Vector, y: &Vector) -> Matrix {
        -sqrt_parts(x, y).2
    }
    fn c_xy(&self, x: &Vector, y: &Vector) -> Matrix {
        sqrt_parts(x, y).2
    }
}

/// `c(x, y) = log|x − y|`, defined off the diagonal.
#[derive(Clone, Copy, Debug, Default)]
pub struct LogCost;

impl LogCost {
    fn parts(x: &Vector, y: &Vector) -> (Vector, f64, Matrix) {
        let q = x - y;
        let r2 = q.norm_squared();
        let n = q.len();
        let hess = (Matrix::identity(n, n) - 2.0 * &q * q.transpose() / r2) / r2;
        (q, r2, hess)
    }
}

impl CostModel for LogCost {
    fn name(&self) -> String {
        "log-cost".into()
    }
    fn c(&self, x: &Vector, y: &Vector) -> f64 {
        (x - y).norm().ln()
    }
    fn c_x(&self, x: &Vector, y: &Vector) -> Vector {
        let (q, r2, _) = Self::parts(x, y);
        q / r2
    }
    fn c_y(&self, x: &Vector, y: &Vector) -> Vector {
        -self.c_x(x, y)
    }
    fn c_xx(&self, x: &Vector, y: &Vector) -> Matrix {
        Self::parts(x, y).2
    }
    fn c_xy(&self, x: &Vector, y: &Vector) -> Matrix {
        -Self::parts(x, y).2
    }
    fn working_box(&self, n: usize) -> (Vector, Vector) {
        // centre away from typical domains so the fallback guess is off the diagonal
        (Vector::repeat(n, -10.0), Vector::repeat(n, 30.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LogCostMatrix, SqrtCostMatrix};

    fn v(a: f64, b: f64) -> Vector {
        Vector::from_column_slice(&[a, b])
    }

    #[test]
    fn linear_and_quadratic_inversions() {
        let cfg = InversionConfig::default();
        let x = v(0.3, -0.2);
        let p = v(0.4, 0.1);
        let y = solve_y(&LinearCost, &x, &p, &v(1.0, 1.0), &cfg).unwrap();
        assert!((y - v(-0.4, -0.1)).norm() < 1e-14);
        let y = solve_y(&QuadraticCost, &x, &p, &v(1.0, 1.0), &cfg).unwrap();
        assert!((y - (&x - &p)).norm() < 1e-14);
        let a = a_from_cost(&LinearCost, &x, &p, &v(0.0, 0.0), &cfg).unwrap();
        assert_eq!(a, Matrix::zeros(2, 2));
        let a = a_from_cost(&QuadraticCost, &x, &p, &v(0.0, 0.0), &cfg).unwrap();
        assert_eq!(a, Matrix::identity(2, 2));
    }

    #[test]
    fn sqrt_cost_inversion_and_matrix() {
        let cfg = InversionConfig::default();
        let x = v(0.2, 0.1);
        let p = v(0.5, 0.0);
        let y = solve_y(&SqrtCost, &x, &p, &v(0.0, 0.0), &cfg).unwrap();
        let closed = &x - &p / (1.0 - p.norm_squared()).sqrt();
        assert!((&y - &closed).norm() < 1e-12);
        assert!((SqrtCost.c_x(&x, &closed) - &p).norm() <= 1e-10);
        let a = a_from_cost(&SqrtCost, &x, &p, &v(0.0, 0.0), &cfg).unwrap();
        let expected = SqrtCostMatrix::new().value(&x, &p).unwrap();
        assert!((a - expected).amax() < 1e-8);
    }

    #[test]
    fn log_cost_matrix_matches_closed_form() {
        let cm = CostMatrix::new(Arc::new(LogCost));
        for (a, b) in [(0.5, 0.2), (-0.3, 0.7), (1.2, -0.4)] {
            let x = v(0.1, 0.3);
            let p = v(a, b);
            let num = cm.value(&x, &p).unwrap();
            let exact = LogCostMatrix::default().value(&x, &p).unwrap();
            assert!((num - exact).amax() < 1e-9);
        }
    }

    #[test]
    fn neg_sqrt_inversion() {
        let cm = CostMatrix::new(Arc::new(NegSqrtCost));
        let x = v(0.1, 0.3);
        let p = v(0.3, -0.6);
        let num = cm.value(&x, &p).unwrap();
        let exact = SqrtCostMatrix::negated().value(&x, &p).unwrap();
        assert!((num - exact).amax() < 1e-9);
    }

    #[test]
    fn unreachable_gradient_reports_a1_failure() {
        let err = solve_y(
            &SqrtCost,
            &v(0.0, 0.0),
            &v(1.5, 0.0),
            &v(0.0, 0.0),
            &Default::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::InversionFailed { .. }), "{err}");
        assert!(err.to_string().contains("A1 violated"));
    }

    #[test]
    fn default_derivatives_by_differences() {
        struct Plain;
        impl CostModel for Plain {
            fn name(&self) -> String {
                "plain".into()
            }
            fn c(&self, x: &Vector, y: &Vector) -> f64 {
                (1.0 + (x - y).norm_squared()).sqrt()
            }
        }
        let (x, y) = (v(0.3, 0.1), v(-0.2, 0.5));
        assert!((Plain.c_xy(&x, &y) - SqrtCost.c_xy(&x, &y)).amax() < 1e-5);
        assert!((Plain.c_xx(&x, &y) - SqrtCost.c_xx(&x, &y)).amax() < 1e-5);
    }
}
