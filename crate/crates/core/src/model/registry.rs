//! Built-in models by name.
//!
//! | name             | `A(x, p)`                    | source                         |
//! |------------------|------------------------------|--------------------------------|
//! | `zero`           | `0`                          | standard Monge-Ampère          |
//! | `const-I`        | `I`                          | constant                       |
//! | `quadratic-cost` | `I`                          | `c = ½|x − y|²`, numeric `Y`   |
//! | `linear-cost`    | `0`                          | `c = −x·y`, numeric `Y`        |
//! | `sqrt-cost`      | `√(1−|p|²)(I − p⊗p)`         | `c = √(1 + |x − y|²)`          |
//! | `neg-sqrt-cost`  | `−√(1−|p|²)(I − p⊗p)`        | `c = −√(1 + |x − y|²)`         |
//! | `log-cost`       | `|p|²I − 2p⊗p`               | `c = log|x − y|`               |
//! | `custom-matrix`  | expressions `a11, a12, a22`  |                                |
//! | `custom-mapping` | `−Y_p⁻¹Y_x`                  | expressions `y1, y2, psi`      |
//!
//! Cost models use numeric inversion of `D_x c(x, Y) = p` unless
//! `closed-form = true` selects the closed-form matrix (where one exists).

use std::collections::BTreeMap;
use std::sync::Arc;

use super::cost::{
    CostMatrix, CostModel, LinearCost, LogCost, NegSqrtCost, QuadraticCost, SqrtCost,
};
use super::mapping::{CostMapping, ExprMapping, GeneratingMap, MappingB, MappingMatrix};
use super::matrix::{
    ConstantMatrix, ExprMatrix, LogCostMatrix, MatrixFunction, SqrtCostMatrix, ZeroMatrix,
};
use super::problem::{ExprScalar, ScalarFunction};
use super::{ModelError, DET_FLOOR};
use crate::expr::Expr;

pub const MODEL_NAMES: &[&str] = &[
    "zero",
    "const-I",
    "quadratic-cost",
    "linear-cost",
    "sqrt-cost",
    "neg-sqrt-cost",
    "log-cost",
    "custom-matrix",
    "custom-mapping",
];

/// Parameter keys each model accepts, besides `b` and `density`.
pub fn model_keys(name: &str) -> &'static [&'static str] {
    match name {
        "custom-matrix" => &["a11", "a12", "a22"],
        "custom-mapping" => &["y1", "y2"],
        "quadratic-cost" | "linear-cost" | "sqrt-cost" | "neg-sqrt-cost" | "log-cost" => {
            &["closed-form"]
        }
        _ => &[],
    }
}

/// Everything a named model contributes to a problem.
#[derive(Clone)]
pub struct ModelParts {
    pub a: Arc<dyn MatrixFunction>,
    /// `B`, either from the `b` expression or as `|det Y_p|⁻¹ψ` from `density`.
    pub b: Option<Arc<dyn ScalarFunction>>,
    pub cost: Option<Arc<dyn CostModel>>,
    pub mapping: Option<Arc<dyn GeneratingMap>>,
}

pub fn cost_by_name(name: &str) -> Option<Arc<dyn CostModel>> {
    Some(match name {
        "quadratic-cost" => Arc::new(QuadraticCost),
        "linear-cost" => Arc::new(LinearCost),
        "sqrt-cost" => Arc::new(SqrtCost),
        "neg-sqrt-cost" => Arc::new(NegSqrtCost),
        "log-cost" => Arc::new(LogCost),
        _ => return None,
    })
}

/// Closed-form `A` for a cost model, where one is implemented.
pub fn closed_form_matrix(name: &str) -> Option<Arc<dyn MatrixFunction>> {
    Some(match name {
        "quadratic-cost" => Arc::new(ConstantMatrix::identity(2)),
        "linear-cost" => Arc::new(ZeroMatrix::default()),
        "sqrt-cost" => Arc::new(SqrtCostMatrix::new()),
        "neg-sqrt-cost" => Arc::new(SqrtCostMatrix::negated()),
        "log-cost" => Arc::new(LogCostMatrix::default()),
        _ => return None,
    })
}

fn expr(model: &str, params: &BTreeMap<String, String>, key: &str) -> Result<Expr, ModelError> {
    let src = params.get(key).ok_or_else(|| ModelError::Config {
        model: model.into(),
        reason: format!("missing key {key:?}"),
    })?;
    src.parse().map_err(|e| ModelError::Config {
        model: model.into(),
        reason: format!("{key}: {e}"),
    })
}

pub fn build(name: &str, params: &BTreeMap<String, String>) -> Result<ModelParts, ModelError> {
    let allowed = model_keys(name);
    for key in params.keys() {
        if key != "b" && key != "density" && !allowed.contains(&key.as_str()) {
            return Err(ModelError::Config {
                model: name.into(),
                reason: format!("unknown parameter {key:?}"),
            });
        }
    }
    let b_expr = match params.get("b") {
        Some(_) => Some(Arc::new(ExprScalar(expr(name, params, "b")?)) as Arc<dyn ScalarFunction>),
        None => None,
    };
    let density = match params.get("density") {
        Some(_) => {
            Some(Arc::new(ExprScalar(expr(name, params, "density")?)) as Arc<dyn ScalarFunction>)
        }
        None => None,
    };
    if b_expr.is_some() && density.is_some() {
        return Err(ModelError::Config {
            model: name.into(),
            reason: "give either b or density, not both".into(),
        });
    }
    let mapping_b = |map: &Arc<dyn GeneratingMap>| -> Arc<dyn ScalarFunction> {
        Arc::new(MappingB {
            map: map.clone(),
            det_floor: DET_FLOOR,
        })
    };
    match name {
        "zero" | "const-I" | "custom-matrix" => {
            if density.is_some() {
                return Err(ModelError::Config {
                    model: name.into(),
                    reason: "density needs a cost or mapping model".into(),
                });
            }
            let a: Arc<dyn MatrixFunction> = match name {
                "zero" => Arc::new(ZeroMatrix::default()),
                "const-I" => Arc::new(ConstantMatrix::identity(2)),
                _ => Arc::new(ExprMatrix {
                    a11: expr(name, params, "a11")?,
                    a12: expr(name, params, "a12")?,
                    a22: expr(name, params, "a22")?,
                }),
            };
            Ok(ModelParts {
                a,
                b: b_expr,
                cost: None,
                mapping: None,
            })
        }
        "custom-mapping" => {
            let psi = params
                .get("density")
                .map(|_| expr(name, params, "density"))
                .transpose()?;
            let map: Arc<dyn GeneratingMap> = Arc::new(ExprMapping {
                y1: expr(name, params, "y1")?,
                y2: expr(name, params, "y2")?,
                psi: psi.unwrap_or_else(|| "1".parse().expect("literal")),
            });
            let b = match b_expr {
                Some(b) => Some(b),
                None => params.get("density").map(|_| mapping_b(&map)),
            };
            Ok(ModelParts {
                a: Arc::new(MappingMatrix {
                    map: map.clone(),
                    det_floor: DET_FLOOR,
                }),
                b,
                cost: None,
                mapping: Some(map),
            })
        }
        _ => {
            let cost = cost_by_name(name).ok_or_else(|| ModelError::UnknownModel(name.into()))?;
            let closed = match params.get("closed-form").map(String::as_str) {
                None | Some("false") => false,
                Some("true") => true,
                Some(other) => {
                    return Err(ModelError::Config {
                        model: name.into(),
                        reason: format!("closed-form must be true or false, got {other:?}"),
                    })
                }
            };
            let a: Arc<dyn MatrixFunction> = if closed {
                closed_form_matrix(name).expect("every cost has a closed form")
            } else {
                Arc::new(CostMatrix::new(cost.clone()))
            };
            let map: Arc<dyn GeneratingMap> = Arc::new(CostMapping::new(
                cost.clone(),
                density.unwrap_or_else(|| Arc::new(ExprScalar("1".parse().expect("literal")))),
            ));
            let b = match b_expr {
                Some(b) => Some(b),
                None => params.get("density").map(|_| mapping_b(&map)),
            };
            Ok(ModelParts {
                a,
                b,
                cost: Some(cost),
                mapping: Some(map),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Matrix, Vector};

    fn params(kv: &[(&str, &str)]) -> BTreeMap<String, String> {
        kv.iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn every_name_builds() {
        let extra = |n: &str| match n {
            "custom-matrix" => params(&[("a11", "1"), ("a12", "0"), ("a22", "1"), ("b", "1")]),
            "custom-mapping" => params(&[("y1", "x1 - p1"), ("y2", "x2 - p2"), ("density", "1")]),
            _ => params(&[("b", "1")]),
        };
        for name in MODEL_NAMES {
            let parts = build(name, &extra(name)).unwrap();
            assert!(parts.b.is_some(), "{name}");
        }
        assert!(matches!(
            build("nope", &params(&[])),
            Err(ModelError::UnknownModel(_))
        ));
    }

    #[test]
    fn quadratic_cost_is_constant() {
        let parts = build("quadratic-cost", &params(&[])).unwrap();
        for (a, b) in [(0.1, 0.2), (-0.5, 0.9), (2.0, -3.0)] {
            let x = Vector::from_column_slice(&[a, b]);
            let p = Vector::from_column_slice(&[b, a]);
            let m = parts.a.value(&x, &p).unwrap();
            assert!((m - Matrix::identity(2, 2)).amax() < 1e-10);
        }
    }

    #[test]
    fn unknown_parameter_rejected() {
        let err = build("zero", &params(&[("a11", "1")])).err().unwrap();
        assert!(err.to_string().contains("unknown parameter"));
    }
}
