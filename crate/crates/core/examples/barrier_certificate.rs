//! Solves the manufactured problem on the unit disc and searches the `K`
//! ladder for a barrier certificate `ℒe^{K(u̲−u)} ≥ ε₁ΣF^{ii} − C`.

use mongeampere::conditions::barrier_search;
use mongeampere::discretize::{Grid, ScalarField};
use mongeampere::instances::manufactured_ma_disc;
use mongeampere::solver::{continuation_solve, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ps = manufactured_ma_disc();
    let grid = Grid::build(&ps.domain, 0.05)?;
    let sub = ScalarField::sample(&grid, ps.subsolution.as_ref().expect("instance has u̲"));
    let cfg = SolverConfig::default();
    let result = continuation_solve(&ps, &grid, &sub, &cfg)?;
    let eps_ell = result.iterate.ellipticity_floor(cfg.eps_ell_factor);

    let search = barrier_search(&ps, &grid, &result.iterate, &sub, 0.1, eps_ell)?;
    println!("{:>6} {:>12} {:>12} {:>6}", "K", "eps1", "C", "valid");
    for (k, eps1, c, valid) in &search.trace {
        println!("{k:>6} {eps1:>12.4e} {c:>12.4e} {valid:>6}");
    }
    match search.certificate {
        Some(cert) => println!(
            "certificate K = {}, ε₁ = {:.4}, C = {:.4}, min margin {:.3e}",
            cert.k,
            cert.eps1,
            cert.c,
            cert.min_margin()
        ),
        None => println!("no valid K on the ladder"),
    }
    Ok(())
}
