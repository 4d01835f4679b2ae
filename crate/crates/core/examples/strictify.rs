//! `u̲ = |x|²/2` is a subsolution of `det D²u = 1` with no room to spare; adding
//! `a·e^{b x₁}` makes it strict for any `a > 0`.

use mongeampere::conditions::{check_subsolution, strictify, StrictifyMode};
use mongeampere::discretize::{Grid, ScalarField};
use mongeampere::model::{spatial, Domain, FnScalar, ProblemSpec, ZeroMatrix};
use std::sync::Arc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ps = ProblemSpec::new(
        "det D²u = 1",
        Domain::unit_disc(),
        Arc::new(ZeroMatrix::default()),
        Arc::new(FnScalar::constant(1.0)),
        spatial(|x| 0.5 * x.norm_squared()),
    );
    let grid = Grid::build(&ps.domain, 0.05)?;
    let sub = ScalarField::from_fn(&grid, |x| 0.5 * x.norm_squared());
    println!("a = 0        {}", check_subsolution(&ps, &grid, &sub, true));
    for a in [1e-3, 1e-2, 1e-1] {
        let s = strictify(&grid, &ps.domain, &sub, a, 2.0, StrictifyMode::X1);
        println!("a = {a:<8} {}", check_subsolution(&ps, &grid, &s, true));
    }
    Ok(())
}
