use std::sync::Arc;

use crate::discretize::{vec2, EllipticIterate, Grid};
use crate::model::{GeneratingMap, ModelError, ScalarFunction};
use crate::{Vector, M2, P2};

/// `ψ(x, p) = B(x, p)·|det Y_p(x, p)|`, the density for which a solution of
/// the equation with right-hand side `B` satisfies `|det DT| = ψ`.
pub struct ImpliedDensity {
    pub map: Arc<dyn GeneratingMap>,
    pub b: Arc<dyn ScalarFunction>,
}

impl ScalarFunction for ImpliedDensity {
    fn value(&self, x: &Vector, p: &Vector) -> Result<f64, ModelError> {
        Ok(self.b.value(x, p)? * self.map.y_p(x, p)?.determinant().abs())
    }
}

/// `T = Y(x, Du)` at every interior node.
pub fn transport_map(
    map: &dyn GeneratingMap,
    grid: &Grid,
    it: &EllipticIterate,
) -> Result<Vec<P2>, ModelError> {
    (0..grid.n_interior())
        .map(|n| {
            let y = map.y(&vec2(&grid.interior_point(n)), &vec2(&it.du[n]))?;
            Ok(P2::new(y[0], y[1]))
        })
        .collect()
}

/// `|det DT| − ψ(x, Du)` at the interior nodes whose four axis neighbours are
/// interior.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportResidual {
    pub nodes: Vec<usize>,
    pub values: Vec<f64>,
    pub max_abs: f64,
}

impl TransportResidual {
    /// `(x, value)` pairs for output.
    pub fn rows<'a>(&'a self, grid: &'a Grid) -> impl Iterator<Item = (P2, f64)> + 'a {
        self.nodes
            .iter()
            .zip(&self.values)
            .map(|(&n, &v)| (grid.interior_point(n), v))
    }
}

/// `DT` by central differences of the mapped node positions.
pub fn transport_residual(
    map: &dyn GeneratingMap,
    density: &dyn ScalarFunction,
    grid: &Grid,
    it: &EllipticIterate,
) -> Result<TransportResidual, ModelError> {
    let t = transport_map(map, grid, it)?;
    let h2 = 2.0 * grid.h;
    let mut out = TransportResidual {
        nodes: Vec::new(),
        values: Vec::new(),
        max_abs: 0.0,
    };
    for n in 0..grid.n_interior() {
        let Some([e, w, no, s]) = grid.axis_neighbors(n) else {
            continue;
        };
        let c1 = (t[e] - t[w]) / h2;
        let c2 = (t[no] - t[s]) / h2;
        let dt = M2::from_columns(&[c1, c2]);
        let psi = density.value(&vec2(&grid.interior_point(n)), &vec2(&it.du[n]))?;
        let v = dt.determinant().abs() - psi;
        out.max_abs = out.max_abs.max(v.abs());
        out.nodes.push(n);
        out.values.push(v);
    }
    Ok(out)
}

/// `max_n |T(x_n) − T*(x_n)|` against a closed-form map.
pub fn map_error(
    map: &dyn GeneratingMap,
    grid: &Grid,
    it: &EllipticIterate,
    exact: &dyn Fn(&P2) -> P2,
) -> Result<f64, ModelError> {
    let t = transport_map(map, grid, it)?;
    Ok(t.iter()
        .enumerate()
        .map(|(n, y)| (y - exact(&grid.interior_point(n))).norm())
        .fold(0.0, f64::max))
}
