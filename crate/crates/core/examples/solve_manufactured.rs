//! Solves `det D²u = (1 + |x|²)e^{|x|²}` on `[−½, ½]²` with exact solution
//! `u = e^{|x|²/2}`, starting from the subsolution `u̲ = |x|²`, and prints the
//! continuation steps and the error.

use mongeampere::diagnostics::solution_error;
use mongeampere::discretize::{Grid, ScalarField};
use mongeampere::instances::manufactured_ma;
use mongeampere::solver::{continuation_solve, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ps = manufactured_ma();
    let grid = Grid::build(&ps.domain, 1.0 / 32.0)?;
    let sub = ScalarField::sample(&grid, ps.subsolution.as_ref().expect("instance has u̲"));
    let result = continuation_solve(&ps, &grid, &sub, &SolverConfig::default())?;

    println!(
        "{:>8} {:>8} {:>6} {:>12} {:>10}",
        "t", "dt", "iters", "residual", "accepted"
    );
    for s in &result.steps {
        println!(
            "{:>8.4} {:>8.4} {:>6} {:>12.3e} {:>10}",
            s.t, s.step, s.newton_iters, s.residual, s.accepted
        );
    }
    let exact = ScalarField::sample(&grid, ps.exact.as_ref().expect("instance has u"));
    println!("status        {:?}", result.status);
    println!(
        "max error     {:.3e}",
        solution_error(&result.iterate.u, &exact)
    );
    println!("min eig(w)    {:.4}", result.iterate.min_eigenvalue());
    Ok(())
}
