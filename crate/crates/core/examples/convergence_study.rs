//! Grid refinement on the manufactured problem: errors, observed orders and the
//! second-derivative and Pogorelov monitors, printed as CSV.

use mongeampere::diagnostics::{convergence_study, PogorelovParams};
use mongeampere::instances::manufactured_ma;
use mongeampere::solver::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ps = manufactured_ma();
    let hs = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let table = convergence_study(
        &ps,
        &hs,
        &SolverConfig::default(),
        PogorelovParams::default(),
    )?;
    print!("{}", table.csv());
    if let Some(f) = &table.failure {
        eprintln!("stopped: {f}");
    }
    Ok(())
}
