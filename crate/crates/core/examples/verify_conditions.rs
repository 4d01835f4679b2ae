//! Runs the structural checks on the two square-root cost models and the
//! logarithmic one. The `+` sign fails the regularity inequality; the witness
//! shows where.

use mongeampere::conditions::sampling::{p_disc, x_grid};
use mongeampere::conditions::{check_a0_eigenvalue, check_regularity, check_structure};
use mongeampere::model::{Domain, LogCostMatrix, MatrixFunction, SqrtCostMatrix};

fn main() {
    let domain = Domain::centered_unit_square();
    let xs = x_grid(&domain, 5);
    let ps = p_disc(0.8, 4, 16);
    let models: Vec<Box<dyn MatrixFunction>> = vec![
        Box::new(SqrtCostMatrix::new()),
        Box::new(SqrtCostMatrix::negated()),
        Box::new(LogCostMatrix::default()),
    ];
    for a in &models {
        println!("{}", a.name());
        for r in [
            check_regularity(a.as_ref(), &xs, &ps, 64),
            check_structure(a.as_ref(), 1.0, &xs, &ps),
            check_a0_eigenvalue(a.as_ref(), &domain, 32),
        ] {
            println!("  {r}");
        }
    }
}
