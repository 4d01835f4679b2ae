use std::fmt;
use std::sync::Arc;

use super::{fd_step, Domain, MatrixFunction, ModelError};
use crate::expr::Expr;
use crate::{Vector, P2};

/// Closed-form scalar field over the plane (boundary data, subsolutions,
/// manufactured solutions).
pub type Spatial = Arc<dyn Fn(&P2) -> f64 + Send + Sync>;

pub fn spatial(f: impl Fn(&P2) -> f64 + Send + Sync + 'static) -> Spatial {
    Arc::new(f)
}

/// Right-hand side `B(x, p) > 0`.
pub trait ScalarFunction: Send + Sync {
    fn value(&self, x: &Vector, p: &Vector) -> Result<f64, ModelError>;

    /// Closed-form `∇_p B`, when available.
    fn grad_p(&self, _x: &Vector, _p: &Vector) -> Option<Result<Vector, ModelError>> {
        None
    }

    fn p_independent(&self) -> bool {
        false
    }
}

/// `∇_p B` by central differences with step [`fd_step`].
pub fn fd_grad_p(f: &dyn ScalarFunction, x: &Vector, p: &Vector) -> Result<Vector, ModelError> {
    if f.p_independent() {
        return Ok(Vector::zeros(p.len()));
    }
    if let Some(g) = f.grad_p(x, p) {
        return g;
    }
    let h = fd_step(p);
    let mut g = Vector::zeros(p.len());
    for k in 0..p.len() {
        let mut q = p.clone();
        q[k] += h;
        let fwd = f.value(x, &q)?;
        q[k] -= 2.0 * h;
        let bwd = f.value(x, &q)?;
        g[k] = (fwd - bwd) / (2.0 * h);
    }
    Ok(g)
}

type ScalarFn = dyn Fn(&Vector, &Vector) -> f64 + Send + Sync;

/// Scalar function from a closure.
#[derive(Clone)]
pub struct FnScalar {
    f: Arc<ScalarFn>,
    p_independent: bool,
}

impl FnScalar {
    pub fn new(f: impl Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static) -> Self {
        FnScalar {
            f: Arc::new(f),
            p_independent: false,
        }
    }

    /// A function of `x` alone.
    pub fn of_x(f: impl Fn(&Vector) -> f64 + Send + Sync + 'static) -> Self {
        FnScalar {
            f: Arc::new(move |x, _| f(x)),
            p_independent: true,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::of_x(move |_| c)
    }
}

impl ScalarFunction for FnScalar {
    fn value(&self, x: &Vector, p: &Vector) -> Result<f64, ModelError> {
        let v = (self.f)(x, p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ModelError::eval(x, p, "non-finite B"))
        }
    }

    fn p_independent(&self) -> bool {
        self.p_independent
    }
}

/// Scalar function given by an expression in `x1, x2, p1, p2`.
#[derive(Clone, Debug)]
pub struct ExprScalar(pub Expr);

impl ScalarFunction for ExprScalar {
    fn value(&self, x: &Vector, p: &Vector) -> Result<f64, ModelError> {
        let v = self.0.eval([x[0], x[1]], [p[0], p[1]]);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ModelError::eval(
                x,
                p,
                format!("non-finite value of {}", self.0),
            ))
        }
    }

    fn p_independent(&self) -> bool {
        !self.0.uses_gradient()
    }
}

/// A complete Dirichlet problem `det(D²u − A(x, Du)) = B(x, Du)`, `u = φ` on ∂Ω.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: Domain,
    pub a: Arc<dyn MatrixFunction>,
    pub b: Arc<dyn ScalarFunction>,
    pub phi: Spatial,
    pub subsolution: Option<Spatial>,
    /// Known solution, for manufactured problems.
    pub exact: Option<Spatial>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("a", &self.a.name())
            .field("subsolution", &self.subsolution.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        a: Arc<dyn MatrixFunction>,
        b: Arc<dyn ScalarFunction>,
        phi: Spatial,
    ) -> Self {
        ProblemSpec {
            name: name.into(),
            domain,
            a,
            b,
            phi,
            subsolution: None,
            exact: None,
        }
    }

    pub fn with_subsolution(mut self, sub: Spatial) -> Self {
        self.subsolution = Some(sub);
        self
    }

    pub fn with_exact(mut self, exact: Spatial) -> Self {
        self.exact = Some(exact);
        self
    }

    /// `B` and `∇_p log B` at `(x, p)`.
    pub fn b_and_log_grad(&self, x: &Vector, p: &Vector) -> Result<(f64, Vector), ModelError> {
        let b = self.b.value(x, p)?;
        if b <= 0.0 {
            return Err(ModelError::NonPositiveB {
                x: x.iter().copied().collect(),
                p: p.iter().copied().collect(),
                value: b,
            });
        }
        let g = fd_grad_p(self.b.as_ref(), x, p)?;
        Ok((b, g / b))
    }

    /// Samples `B` on an `m × m` grid over Ω crossed with a square gradient
    /// box `[−r, r]²` of `m × m` points; returns the infimum, which must be
    /// positive.
    pub fn check_b_positive(&self, m: usize, r: f64) -> Result<f64, ModelError> {
        let (lo, hi) = self.domain.bounding_box();
        let lin = |a: f64, b: f64, i: usize| a + (b - a) * (i as f64 + 0.5) / m as f64;
        let mut inf = f64::INFINITY;
        let mut witness = (Vector::zeros(2), Vector::zeros(2));
        for i in 0..m {
            for j in 0..m {
                let xp = P2::new(lin(lo.x, hi.x, i), lin(lo.y, hi.y, j));
                if !self.domain.contains(&xp) {
                    continue;
                }
                let x = Vector::from_column_slice(&[xp.x, xp.y]);
                for k in 0..m {
                    for l in 0..m {
                        let p = Vector::from_column_slice(&[lin(-r, r, k), lin(-r, r, l)]);
                        let b = self.b.value(&x, &p)?;
                        if b < inf {
                            inf = b;
                            witness = (x.clone(), p);
                        }
                    }
                }
            }
        }
        if inf > 0.0 {
            Ok(inf)
        } else {
            Err(ModelError::NonPositiveB {
                x: witness.0.iter().copied().collect(),
                p: witness.1.iter().copied().collect(),
                value: inf,
            })
        }
    }
}
