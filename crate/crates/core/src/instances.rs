//! Manufactured problems with known solutions.
//!
//! All live on the centred square `[−½, ½]²`.

use std::sync::Arc;

use crate::model::{
    spatial, ConstantMatrix, CostMapping, CostModel, Domain, FnScalar, GeneratingMap, ProblemSpec,
    QuadraticCost, ScalarFunction, SqrtCost, SqrtCostMatrix, ZeroMatrix,
};
use crate::{Vector, P2};

/// `det D²u = (1 + |x|²)e^{|x|²}` with `u* = e^{|x|²/2}` and subsolution `u̲ = |x|²`.
pub fn manufactured_ma() -> ProblemSpec {
    let exact = spatial(|x| (0.5 * x.norm_squared()).exp());
    ProblemSpec::new(
        "manufactured-ma",
        Domain::centered_unit_square(),
        Arc::new(ZeroMatrix::default()),
        Arc::new(FnScalar::of_x(|x| {
            let r2 = x.norm_squared();
            (1.0 + r2) * r2.exp()
        })),
        exact.clone(),
    )
    .with_subsolution(spatial(|x| x.norm_squared()))
    .with_exact(exact)
}

/// `det D²u = 4` with the quadratic solution `u* = |x|²` and `u̲ = 1.1|x|² − 0.05`.
pub fn quadratic_ma() -> ProblemSpec {
    let exact = spatial(|x| x.norm_squared());
    ProblemSpec::new(
        "quadratic-ma",
        Domain::centered_unit_square(),
        Arc::new(ZeroMatrix::default()),
        Arc::new(FnScalar::constant(4.0)),
        exact.clone(),
    )
    .with_subsolution(spatial(|x| 1.1 * x.norm_squared() - 0.05))
    .with_exact(exact)
}

/// [`manufactured_ma`] on the unit disc, with `u̲ = 1.5|x|²`.
pub fn manufactured_ma_disc() -> ProblemSpec {
    let mut ps = manufactured_ma();
    ps.name = "manufactured-ma-disc".into();
    ps.domain = Domain::unit_disc();
    ps.with_subsolution(spatial(|x| 1.5 * x.norm_squared()))
}

/// A transport problem with its generating map and target density, so that
/// `|det DT| = ψ(x, Du)` for `T = Y(·, Du)`.
#[derive(Clone)]
pub struct TransportInstance {
    pub problem: ProblemSpec,
    pub cost: Arc<dyn CostModel>,
    pub map: Arc<dyn GeneratingMap>,
    pub density: Arc<dyn ScalarFunction>,
    /// `T* = Y(·, Du*)`.
    pub exact_map: Arc<dyn Fn(&P2) -> P2 + Send + Sync>,
}

/// Quadratic cost `|x − y|²/2` (`A ≡ I`), `B ≡ 1`, exact solution
/// `u̲ = u* = |x|²` and `T*(x) = −x`.
pub fn quadratic_transport() -> TransportInstance {
    let exact = spatial(|x| x.norm_squared());
    let density: Arc<dyn ScalarFunction> = Arc::new(FnScalar::constant(1.0));
    TransportInstance {
        problem: ProblemSpec::new(
            "quadratic-transport",
            Domain::centered_unit_square(),
            Arc::new(ConstantMatrix::identity(2)),
            density.clone(),
            exact.clone(),
        )
        .with_subsolution(exact.clone())
        .with_exact(exact),
        cost: Arc::new(QuadraticCost),
        map: Arc::new(CostMapping::new(Arc::new(QuadraticCost), density.clone())),
        density,
        exact_map: Arc::new(|x| -x),
    }
}

fn sqrt_exact_gradient(x: &P2) -> P2 {
    P2::new(1.2 * x.x + 0.05 * x.x.exp(), 1.2 * x.y)
}

/// `det(D²u* − A(x, Du*))` for the sqrt-cost instance, with
/// `A(p) = √(1 − |p|²)(I − p⊗p)`.
fn sqrt_rhs(x: &P2) -> f64 {
    let p = sqrt_exact_gradient(x);
    let s = (1.0 - p.norm_squared()).sqrt();
    let w11 = 1.2 + 0.05 * x.x.exp() - s * (1.0 - p.x * p.x);
    let w22 = 1.2 - s * (1.0 - p.y * p.y);
    let w12 = s * p.x * p.y;
    w11 * w22 - w12 * w12
}

/// Cost `√(1 + |x − y|²)` with the manufactured solution
/// `u* = 0.6|x|² + 0.05e^{x₁}` and subsolution `u̲ = u* + 0.05(|x|² − ½)`.
///
/// `B(x)` is `det(D²u* − A(x, Du*))`; the transport density is
/// `ψ(x, p) = B(x)·|det Y_p| = B(x)/(1 − |p|²)²`.
pub fn sqrt_transport() -> TransportInstance {
    let exact = spatial(|x| 0.6 * x.norm_squared() + 0.05 * x.x.exp());
    let b: Arc<dyn ScalarFunction> = Arc::new(FnScalar::of_x(|x| sqrt_rhs(&P2::new(x[0], x[1]))));
    let density: Arc<dyn ScalarFunction> = Arc::new(FnScalar::new(|x: &Vector, p: &Vector| {
        sqrt_rhs(&P2::new(x[0], x[1])) / (1.0 - p.norm_squared()).powi(2)
    }));
    TransportInstance {
        problem: ProblemSpec::new(
            "sqrt-transport",
            Domain::centered_unit_square(),
            Arc::new(SqrtCostMatrix::new()),
            b,
            exact.clone(),
        )
        .with_subsolution(spatial(|x| {
            0.6 * x.norm_squared() + 0.05 * x.x.exp() + 0.05 * (x.norm_squared() - 0.5)
        }))
        .with_exact(exact),
        cost: Arc::new(SqrtCost),
        map: Arc::new(CostMapping::new(Arc::new(SqrtCost), density.clone())),
        density,
        exact_map: Arc::new(|x| {
            let p = sqrt_exact_gradient(x);
            x - p / (1.0 - p.norm_squared()).sqrt()
        }),
    }
}

/// Names accepted by [`by_name`].
pub const INSTANCE_NAMES: &[&str] = &[
    "manufactured-ma",
    "manufactured-ma-disc",
    "quadratic-ma",
    "quadratic-transport",
    "sqrt-transport",
];

/// Transport instances carry their cost and map; see [`transport_by_name`].
pub fn by_name(name: &str) -> Option<ProblemSpec> {
    match name {
        "manufactured-ma" => Some(manufactured_ma()),
        "manufactured-ma-disc" => Some(manufactured_ma_disc()),
        "quadratic-ma" => Some(quadratic_ma()),
        "quadratic-transport" => Some(quadratic_transport().problem),
        "sqrt-transport" => Some(sqrt_transport().problem),
        _ => None,
    }
}

pub fn transport_by_name(name: &str) -> Option<TransportInstance> {
    match name {
        "quadratic-transport" => Some(quadratic_transport()),
        "sqrt-transport" => Some(sqrt_transport()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{eval_a, MatrixFunction};

    #[test]
    fn sqrt_rhs_matches_matrix_model() {
        let a = SqrtCostMatrix::new();
        for x in [P2::new(0.1, -0.3), P2::new(-0.5, 0.5), P2::new(0.5, 0.2)] {
            let p = sqrt_exact_gradient(&x);
            let am = eval_a(
                &a,
                &Vector::from_column_slice(&[x.x, x.y]),
                &Vector::from_column_slice(&[p.x, p.y]),
                0,
            )
            .unwrap()
            .a;
            let w = nalgebra::Matrix2::new(
                1.2 + 0.05 * x.x.exp() - am[(0, 0)],
                -am[(0, 1)],
                -am[(1, 0)],
                1.2 - am[(1, 1)],
            );
            assert!((w.determinant() - sqrt_rhs(&x)).abs() < 1e-14);
            assert!(w.symmetric_eigen().eigenvalues.min() > 0.0);
            assert_eq!(a.name(), "sqrt-cost");
        }
    }

    #[test]
    fn sqrt_density_matches_mapping_jacobian() {
        let inst = sqrt_transport();
        let x = Vector::from_column_slice(&[0.2, -0.1]);
        let p = Vector::from_column_slice(&[0.3, 0.4]);
        let det = inst.map.y_p(&x, &p).unwrap().determinant().abs();
        let b = inst.problem.b.value(&x, &p).unwrap();
        let psi = inst.density.value(&x, &p).unwrap();
        assert!((psi - b * det).abs() < 1e-9 * psi);
    }
}
