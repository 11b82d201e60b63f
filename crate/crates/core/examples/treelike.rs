//! Tree-like stochastic process: solve for `Y = -X^{-1}` and recover `X` and
//! the transition matrix `T = X + I`.
//!
//! ```text
//! cargo run --example treelike
//! ```

use nalgebra::DMatrix;
use qve::models::make_treelike;
use qve::newton::newton;
use qve::SolveOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // One child, m = 1: y = 1 + y^2 / 16 ... has the double root y = 4.
    let t = make_treelike(
        DMatrix::from_element(1, 1, 0.5),
        vec![DMatrix::from_element(1, 1, 0.25)],
        vec![DMatrix::from_element(1, 1, 0.25)],
    )?;
    let opts = SolveOptions::default().with_tol(1e-30).with_accurate_residual();
    let r = newton(&t.problem, &opts)?;
    let (x, tm) = t.convert(&r.x)?;
    println!("scalar: y = {:.12}  X = {:.12}  T = {:.12}  ({} steps)", r.x[0], x[(0, 0)], tm[(0, 0)], r.iterations);

    // Two states, two children.
    let b = DMatrix::from_row_slice(2, 2, &[0.2, 0.1, 0.1, 0.2]);
    let a1 = DMatrix::from_row_slice(2, 2, &[0.1, 0.05, 0.05, 0.1]);
    let a2 = DMatrix::from_row_slice(2, 2, &[0.05, 0.05, 0.0, 0.1]);
    let d1 = DMatrix::from_row_slice(2, 2, &[0.3, 0.15, 0.2, 0.25]);
    let d2 = DMatrix::from_row_slice(2, 2, &[0.15, 0.3, 0.25, 0.2]);
    let t = make_treelike(b, vec![a1, a2], vec![d1, d2])?;
    let r = newton(&t.problem, &SolveOptions::default())?;
    let (x, tm) = t.convert(&r.x)?;
    println!("two states: {} after {} steps", r.status, r.iterations);
    for (name, m) in [("X", &x), ("T", &tm)] {
        for row in m.row_iter() {
            println!("  {name}  {:>10.6}  {:>10.6}", row[0], row[1]);
        }
    }
    Ok(())
}
