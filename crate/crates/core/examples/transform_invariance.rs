//! Rewrites a problem under an affine change of variables and checks that the
//! structure margins and the solution agree with the original ones.

use std::sync::Arc;

use mongeampere::conditions::check_structure;
use mongeampere::conditions::sampling::{p_disc, x_grid};
use mongeampere::discretize::{Grid, ScalarField};
use mongeampere::instances::manufactured_ma_disc;
use mongeampere::model::{transform_problem, AffineMap, Diffeomorphism};
use mongeampere::solver::{continuation_solve, SolverConfig};
use mongeampere::{Matrix, Vector, P2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ps = manufactured_ma_disc();
    let map = Arc::new(AffineMap::new(
        Matrix::from_row_slice(2, 2, &[1.2, 0.3, -0.1, 0.9]),
        Vector::from_column_slice(&[0.4, -0.2]),
    )?);
    let moved = transform_problem(&ps, map.clone())?;

    let xs = x_grid(&ps.domain, 5);
    let ps_samples = p_disc(1.0, 3, 12);
    let ys: Vec<P2> = xs
        .iter()
        .map(|x| {
            let y = map.forward(&Vector::from_column_slice(&[x.x, x.y]));
            P2::new(y[0], y[1])
        })
        .collect();
    println!(
        "structure (original)    {}",
        check_structure(ps.a.as_ref(), 0.0, &xs, &ps_samples)
    );
    println!(
        "structure (transformed) {}",
        check_structure(moved.a.as_ref(), 0.0, &ys, &ps_samples)
    );

    let cfg = SolverConfig::default();
    let grid = Grid::build(&moved.domain, 0.05)?;
    let sub = ScalarField::sample(
        &grid,
        moved.subsolution.as_ref().expect("u̲ is carried over"),
    );
    let result = continuation_solve(&moved, &grid, &sub, &cfg)?;
    let exact = ps.exact.as_ref().expect("instance has u");
    let err = grid
        .interior_points()
        .iter()
        .zip(&result.iterate.u.interior)
        .map(|(y, v)| {
            let x = map.inverse(&Vector::from_column_slice(&[y.x, y.y]));
            (v - exact(&P2::new(x[0], x[1]))).abs()
        })
        .fold(0.0, f64::max);
    println!(
        "max |v(y) − u(ψ⁻¹(y))| on {} nodes: {err:.3e}",
        grid.n_interior()
    );
    Ok(())
}
