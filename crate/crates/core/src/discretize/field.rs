use std::io::{self, Write};

use super::{Grid, NodeKind};
use crate::model::Spatial;
use crate::P2;

/// Values at the interior nodes and boundary points of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            interior: vec![0.0; grid.n_interior()],
            boundary: vec![0.0; grid.n_boundary()],
        }
    }

    /// Samples a closed-form function at every stored node.
    pub fn sample(grid: &Grid, f: &Spatial) -> Self {
        Self::from_fn(grid, |x| f(x))
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&P2) -> f64) -> Self {
        ScalarField {
            interior: grid.interior_points().iter().map(&f).collect(),
            boundary: grid.boundary_points().iter().map(&f).collect(),
        }
    }

    /// `u̲ + a·g(x)` style updates: applies `f(x, value)` node-wise.
    pub fn map_with(&self, grid: &Grid, f: impl Fn(&P2, f64) -> f64) -> Self {
        ScalarField {
            interior: grid
                .interior_points()
                .iter()
                .zip(&self.interior)
                .map(|(x, &v)| f(x, v))
                .collect(),
            boundary: grid
                .boundary_points()
                .iter()
                .zip(&self.boundary)
                .map(|(x, &v)| f(x, v))
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.interior
            .iter()
            .chain(&self.boundary)
            .all(|v| v.is_finite())
    }

    /// Max-norm over all stored nodes.
    pub fn max_abs(&self) -> f64 {
        self.interior
            .iter()
            .chain(&self.boundary)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max-norm of the difference over all stored nodes.
    pub fn max_diff(&self, other: &ScalarField) -> f64 {
        self.interior
            .iter()
            .zip(&other.interior)
            .chain(self.boundary.iter().zip(&other.boundary))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Writes `x1,x2,value` rows: interior nodes first, then boundary points.
pub fn write_csv(grid: &Grid, field: &ScalarField, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "x1,x2,value")?;
    let rows = grid
        .interior_points()
        .iter()
        .zip(&field.interior)
        .chain(grid.boundary_points().iter().zip(&field.boundary));
    for (x, v) in rows {
        writeln!(out, "{},{},{}", x.x, x.y, v)?;
    }
    Ok(())
}

/// Legacy ASCII VTK structured points over the lattice. Exterior nodes get
/// value 0 and `mask` 0; interior nodes mask 1, boundary nodes mask 2.
pub fn write_vtk(
    grid: &Grid,
    field: &ScalarField,
    name: &str,
    mut out: impl Write,
) -> io::Result<()> {
    let (nx, ny, origin) = grid.lattice();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{name}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    writeln!(out, "DIMENSIONS {nx} {ny} 1")?;
    writeln!(out, "ORIGIN {} {} 0", origin.x, origin.y)?;
    writeln!(out, "SPACING {} {} 1", grid.h, grid.h)?;
    writeln!(out, "POINT_DATA {}", nx * ny)?;
    writeln!(out, "SCALARS {name} double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    let mut mask = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v, m) = match (grid.kind_at(i, j), grid.slot_at(i, j)) {
                (NodeKind::Interior, Some(s)) => (field.interior[s], 1),
                (NodeKind::Boundary, Some(s)) => (field.boundary[s], 2),
                _ => (0.0, 0),
            };
            writeln!(out, "{v}")?;
            mask.push(m);
        }
    }
    writeln!(out, "SCALARS mask int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for m in mask {
        writeln!(out, "{m}")?;
    }
    Ok(())
}
