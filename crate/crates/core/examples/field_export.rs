//! Solves on the L-shaped domain and writes the solution as CSV and legacy VTK
//! into the directory given as the first argument (default `out/l_shape`).

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use mongeampere::discretize::{write_csv, write_vtk, Grid, ScalarField};
use mongeampere::model::{spatial, Domain, FnScalar, ProblemSpec, ZeroMatrix};
use mongeampere::solver::{continuation_solve, SolverConfig};
use std::sync::Arc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| "out/l_shape".into());
    let mut ps = ProblemSpec::new(
        "l-shape",
        Domain::l_shape(),
        Arc::new(ZeroMatrix::default()),
        Arc::new(FnScalar::constant(1.0)),
        spatial(|x| x.norm_squared()),
    );
    ps.subsolution = Some(spatial(|x| x.norm_squared()));
    let grid = Grid::build(&ps.domain, 1.0 / 40.0)?;
    let sub = ScalarField::sample(&grid, ps.subsolution.as_ref().unwrap());
    let result = continuation_solve(&ps, &grid, &sub, &SolverConfig::default())?;

    fs::create_dir_all(&dir)?;
    write_csv(
        &grid,
        &result.iterate.u,
        BufWriter::new(File::create(dir.join("u.csv"))?),
    )?;
    write_vtk(
        &grid,
        &result.iterate.u,
        "u",
        BufWriter::new(File::create(dir.join("u.vtk"))?),
    )?;
    println!(
        "{:?} after {} steps; {} interior and {} boundary points written to {}",
        result.status,
        result.steps.len(),
        grid.n_interior(),
        grid.n_boundary(),
        dir.display()
    );
    Ok(())
}
