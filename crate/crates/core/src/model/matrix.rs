use std::sync::Arc;

use super::{fd_step, ModelError};
use crate::expr::Expr;
use crate::{Matrix, Vector};

/// Symmetric matrix function `A(x, p)`.
///
/// Derivative tensors are returned flattened: `dp()[k] = ∂A/∂p_k` and
/// `dpp()[k·n + l] = ∂²A/∂p_k∂p_l`. Implementations without closed forms
/// return `None` and [`eval_a`] falls back to finite differences.
pub trait MatrixFunction: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &Vector, p: &Vector) -> Result<Matrix, ModelError>;

    fn dp(&self, _x: &Vector, _p: &Vector) -> Option<Result<Vec<Matrix>, ModelError>> {
        None
    }

    fn dpp(&self, _x: &Vector, _p: &Vector) -> Option<Result<Vec<Matrix>, ModelError>> {
        None
    }

    /// `true` when `A` is known not to depend on `p`.
    fn p_independent(&self) -> bool {
        false
    }
}

/// Value and (optionally) first and second `p`-derivatives of `A`.
#[derive(Clone, Debug)]
pub struct AEval {
    pub a: Matrix,
    pub dp: Option<Vec<Matrix>>,
    pub dpp: Option<Vec<Matrix>>,
}

impl AEval {
    /// `A_{ij,kl} ξ_i ξ_j η_k η_l`.
    pub fn a3w_form(&self, xi: &Vector, eta: &Vector) -> f64 {
        let dpp = self.dpp.as_ref().expect("order-2 evaluation");
        let n = xi.len();
        let mut s = 0.0;
        for k in 0..n {
            for l in 0..n {
                s += eta[k] * eta[l] * dpp[k * n + l].dot(&(xi * xi.transpose()));
            }
        }
        s
    }
}

pub fn eval_a(
    mf: &dyn MatrixFunction,
    x: &Vector,
    p: &Vector,
    order: u8,
) -> Result<AEval, ModelError> {
    let a = mf.value(x, p)?;
    let n = a.nrows();
    let zero = |len| vec![Matrix::zeros(n, n); len];
    let dp = if order >= 1 {
        Some(if mf.p_independent() {
            zero(n)
        } else {
            match mf.dp(x, p) {
                Some(r) => r?,
                None => fd_dp(mf, x, p)?,
            }
        })
    } else {
        None
    };
    let dpp = if order >= 2 {
        Some(if mf.p_independent() {
            zero(n * n)
        } else {
            match mf.dpp(x, p) {
                Some(r) => r?,
                None => fd_dpp(mf, x, p)?,
            }
        })
    } else {
        None
    };
    Ok(AEval { a, dp, dpp })
}

fn shifted(p: &Vector, k: usize, s: f64) -> Vector {
    let mut q = p.clone();
    q[k] += s;
    q
}

/// Central second-order differences with step [`fd_step`].
pub fn fd_dp(mf: &dyn MatrixFunction, x: &Vector, p: &Vector) -> Result<Vec<Matrix>, ModelError> {
    let h = fd_step(p);
    (0..p.len())
        .map(|k| {
            let fwd = mf.value(x, &shifted(p, k, h))?;
            let bwd = mf.value(x, &shifted(p, k, -h))?;
            Ok((fwd - bwd) / (2.0 * h))
        })
        .collect()
}

/// Fourth-order central differences for `∂²A/∂p_k∂p_l`. The step is
/// `2e−3·(1 + |p|)`, which balances truncation against roundoff for a
/// fourth-order second-derivative stencil.
pub fn fd_dpp(mf: &dyn MatrixFunction, x: &Vector, p: &Vector) -> Result<Vec<Matrix>, ModelError> {
    let n = p.len();
    let h = 2e-3 * (1.0 + p.norm());
    let a0 = mf.value(x, p)?;
    let mut out = vec![Matrix::zeros(a0.nrows(), a0.ncols()); n * n];
    let w1 = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
    for k in 0..n {
        let f = |s: f64| mf.value(x, &shifted(p, k, s * h));
        let d2 =
            (-f(2.0)? + 16.0 * f(1.0)? - 30.0 * &a0 + 16.0 * f(-1.0)? - f(-2.0)?) / (12.0 * h * h);
        out[k * n + k] = d2;
        for l in 0..k {
            let mut m = Matrix::zeros(a0.nrows(), a0.ncols());
            for (sk, wk) in w1 {
                for (sl, wl) in w1 {
                    let q = shifted(&shifted(p, k, sk * h), l, sl * h);
                    m += wk * wl * mf.value(x, &q)?;
                }
            }
            m /= 144.0 * h * h;
            out[k * n + l] = m.clone();
            out[l * n + k] = m;
        }
    }
    Ok(out)
}

/// `A ≡ 0`: the standard Monge-Ampère equation.
#[derive(Clone, Debug)]
pub struct ZeroMatrix {
    pub n: usize,
}

impl Default for ZeroMatrix {
    fn default() -> Self {
        ZeroMatrix { n: 2 }
    }
}

impl MatrixFunction for ZeroMatrix {
    fn name(&self) -> String {
        "zero".into()
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, _x: &Vector, _p: &Vector) -> Result<Matrix, ModelError> {
        Ok(Matrix::zeros(self.n, self.n))
    }
    fn p_independent(&self) -> bool {
        true
    }
}

/// `A ≡ M` for a fixed symmetric matrix.
#[derive(Clone, Debug)]
pub struct ConstantMatrix {
    pub m: Matrix,
}

impl ConstantMatrix {
    pub fn identity(n: usize) -> Self {
        ConstantMatrix {
            m: Matrix::identity(n, n),
        }
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        ConstantMatrix {
            m: Matrix::identity(n, n) * s,
        }
    }
}

impl MatrixFunction for ConstantMatrix {
    fn name(&self) -> String {
        if self.m == Matrix::identity(self.m.nrows(), self.m.ncols()) {
            "const-I".into()
        } else {
            "constant".into()
        }
    }
    fn dim(&self) -> usize {
        self.m.nrows()
    }
    fn value(&self, _x: &Vector, _p: &Vector) -> Result<Matrix, ModelError> {
        Ok(self.m.clone())
    }
    fn p_independent(&self) -> bool {
        true
    }
}

/// `A = s·√(1 − |p|²)(I − p⊗p)`, the matrix generated by the cost
/// `s·√(1 + |x − y|²)`, with closed-form derivatives. Defined for `|p| < 1`.
#[derive(Clone, Debug)]
pub struct SqrtCostMatrix {
    pub sign: f64,
    pub n: usize,
}

impl SqrtCostMatrix {
    pub fn new() -> Self {
        SqrtCostMatrix { sign: 1.0, n: 2 }
    }

    pub fn negated() -> Self {
        SqrtCostMatrix { sign: -1.0, n: 2 }
    }

    fn g(&self, x: &Vector, p: &Vector) -> Result<f64, ModelError> {
        let s = 1.0 - p.norm_squared();
        if s <= 0.0 {
            return Err(ModelError::eval(x, p, "sqrt cost requires |p| < 1"));
        }
        Ok(s.sqrt())
    }
}

impl Default for SqrtCostMatrix {
    fn default() -> Self {
        Self::new()
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

impl MatrixFunction for SqrtCostMatrix {
    fn name(&self) -> String {
        if self.sign > 0.0 {
            "sqrt-cost".into()
        } else {
            "neg-sqrt-cost".into()
        }
    }
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &Vector, p: &Vector) -> Result<Matrix, ModelError> {
        let g = self.g(x, p)?;
        let n = p.len();
        Ok(Matrix::from_fn(n, n, |i, j| {
            self.sign * g * (delta(i, j) - p[i] * p[j])
        }))
    }

    fn dp(&self, x: &Vector, p: &Vector) -> Option<Result<Vec<Matrix>, ModelError>> {
        Some(self.g(x, p).map(|g| {
            let n = p.len();
            (0..n)
                .map(|k| {
                    let gk = -p[k] / g;
                    Matrix::from_fn(n, n, |i, j| {
                        self.sign
                            * (gk * (delta(i, j) - p[i] * p[j])
                                - g * (delta(i, k) * p[j] + p[i] * delta(j, k)))
                    })
                })
                .collect()
        }))
    }

    fn dpp(&self, x: &Vector, p: &Vector) -> Option<Result<Vec<Matrix>, ModelError>> {
        Some(self.g(x, p).map(|g| {
            let n = p.len();
            let mut out = Vec::with_capacity(n * n);
            for k in 0..n {
                for l in 0..n {
                    let gk = -p[k] / g;
                    let gl = -p[l] / g;
                    let gkl = -delta(k, l) / g - p[k] * p[l] / (g * g * g);
                    out.push(Matrix::from_fn(n, n, |i, j| {
                        self.sign
                            * (gkl * (delta(i, j) - p[i] * p[j])
                                - gk * (delta(i, l) * p[j] + p[i] * delta(j, l))
                                - gl * (delta(i, k) * p[j] + p[i] * delta(j, k))
                                - g * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k)))
                    }));
                }
            }
            out
        }))
    }
}

/// `A = |p|²I − 2p⊗p`, generated by the cost `log|x − y|`.
#[derive(Clone, Debug)]
pub struct LogCostMatrix {
    pub n: usize,
}

impl Default for LogCostMatrix {
    fn default() -> Self {
        LogCostMatrix { n: 2 }
    }
}

impl MatrixFunction for LogCostMatrix {
    fn name(&self) -> String {
        "log-cost".into()
    }
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, _x: &Vector, p: &Vector) -> Result<Matrix, ModelError> {
        let n = p.len();
        let p2 = p.norm_squared();
        Ok(Matrix::from_fn(n, n, |i, j| {
            p2 * delta(i, j) - 2.0 * p[i] * p[j]
        }))
    }

    fn dp(&self, _x: &Vector, p: &Vector) -> Option<Result<Vec<Matrix>, ModelError>> {
        let n = p.len();
        Some(Ok((0..n)
            .map(|k| {
                Matrix::from_fn(n, n, |i, j| {
                    2.0 * p[k] * delta(i, j) - 2.0 * (delta(i, k) * p[j] + p[i] * delta(j, k))
                })
            })
            .collect()))
    }

    fn dpp(&self, _x: &Vector, p: &Vector) -> Option<Result<Vec<Matrix>, ModelError>> {
        let n = p.len();
        let mut out = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                out.push(Matrix::from_fn(n, n, |i, j| {
                    2.0 * delta(k, l) * delta(i, j)
                        - 2.0 * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k))
                }));
            }
        }
        Some(Ok(out))
    }
}

/// 2×2 matrix function given by three expressions in `x1, x2, p1, p2`;
/// symmetric by construction (`a12` fills both off-diagonal slots).
#[derive(Clone, Debug)]
pub struct ExprMatrix {
    pub a11: Expr,
    pub a12: Expr,
    pub a22: Expr,
}

impl ExprMatrix {
    pub fn parse(a11: &str, a12: &str, a22: &str) -> Result<Self, crate::expr::ExprError> {
        Ok(ExprMatrix {
            a11: a11.parse()?,
            a12: a12.parse()?,
            a22: a22.parse()?,
        })
    }
}

impl MatrixFunction for ExprMatrix {
    fn name(&self) -> String {
        "custom-matrix".into()
    }

    fn value(&self, x: &Vector, p: &Vector) -> Result<Matrix, ModelError> {
        let (xa, pa) = ([x[0], x[1]], [p[0], p[1]]);
        let a11 = self.a11.eval(xa, pa);
        let a12 = self.a12.eval(xa, pa);
        let a22 = self.a22.eval(xa, pa);
        if !(a11.is_finite() && a12.is_finite() && a22.is_finite()) {
            return Err(ModelError::eval(x, p, "non-finite matrix entry"));
        }
        Ok(Matrix::from_row_slice(2, 2, &[a11, a12, a12, a22]))
    }

    fn p_independent(&self) -> bool {
        !(self.a11.uses_gradient() || self.a12.uses_gradient() || self.a22.uses_gradient())
    }
}

type MatrixFn = dyn Fn(&Vector, &Vector) -> Matrix + Send + Sync;

/// Matrix function from a closure. The closure's output is symmetrised.
#[derive(Clone)]
pub struct FnMatrix {
    name: String,
    n: usize,
    f: Arc<MatrixFn>,
}

impl FnMatrix {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        f: impl Fn(&Vector, &Vector) -> Matrix + Send + Sync + 'static,
    ) -> Self {
        FnMatrix {
            name: name.into(),
            n,
            f: Arc::new(f),
        }
    }
}

impl MatrixFunction for FnMatrix {
    fn name(&self) -> String {
        self.name.clone()
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &Vector, p: &Vector) -> Result<Matrix, ModelError> {
        let m = (self.f)(x, p);
        if m.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::eval(x, p, "non-finite matrix entry"));
        }
        Ok(0.5 * (&m + m.transpose()))
    }
}
