//! Inverts `D_x c(x, y) = p` for the built-in costs and compares the matrix
//! `A = D²_x c(x, Y(x, p))` with the closed forms where one exists.

use std::sync::Arc;

use mongeampere::model::{
    CostMatrix, CostModel, LogCost, LogCostMatrix, MatrixFunction, NegSqrtCost, QuadraticCost,
    SqrtCost, SqrtCostMatrix,
};
use mongeampere::Vector;

type Case = (Arc<dyn CostModel>, Option<Box<dyn MatrixFunction>>);

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = Vector::from_column_slice(&[0.1, -0.2]);
    let p = Vector::from_column_slice(&[0.3, 0.25]);
    let cases: Vec<Case> = vec![
        (Arc::new(QuadraticCost), None),
        (Arc::new(SqrtCost), Some(Box::new(SqrtCostMatrix::new()))),
        (
            Arc::new(NegSqrtCost),
            Some(Box::new(SqrtCostMatrix::negated())),
        ),
        (Arc::new(LogCost), Some(Box::new(LogCostMatrix::default()))),
    ];
    for (cost, closed) in cases {
        let inverse = CostMatrix::new(cost.clone());
        let y = inverse.y(&x, &p)?;
        let back = (cost.c_x(&x, &y) - &p).amax();
        let a = inverse.value(&x, &p)?;
        print!(
            "{:<14} Y = ({:+.6}, {:+.6})  |c_x − p| = {back:.1e}",
            cost.name(),
            y[0],
            y[1]
        );
        match closed {
            Some(m) => println!(
                "  |A − closed form| = {:.1e}",
                (&a - m.value(&x, &p)?).amax()
            ),
            None => println!("  A = {:?}", a.as_slice()),
        }
    }
    Ok(())
}
