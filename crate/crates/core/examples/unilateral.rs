//! A quasi-birth-death queue: `X = A + BX + CX^2` solved by logarithmic
//! reduction, cyclic reduction and vectorized Newton.
//!
//! ```text
//! cargo run --example unilateral
//! ```

use nalgebra::DMatrix;
use qve::models::{make_e4, unvec};
use qve::newton::newton;
use qve::unilateral::{graeffe_step_check, solve_cr, solve_lr};
use qve::SolveOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Rows of A + B + C sum to one; the downward drift makes it recurrent.
    let a = DMatrix::from_row_slice(3, 3, &[0.20, 0.10, 0.05, 0.10, 0.25, 0.05, 0.05, 0.05, 0.30]);
    let b = DMatrix::from_row_slice(3, 3, &[0.30, 0.05, 0.05, 0.05, 0.30, 0.05, 0.05, 0.05, 0.20]);
    let c = DMatrix::from_row_slice(3, 3, &[0.15, 0.05, 0.05, 0.10, 0.05, 0.05, 0.10, 0.10, 0.10]);
    let (vector, uni) = make_e4(a, b, c)?;
    let opts = SolveOptions::default();

    let lr = solve_lr(&uni, &opts)?;
    let cr = solve_cr(&uni, &opts)?;
    let nt = newton(&vector, &opts)?;
    let xn = unvec(&nt.x, 3, 3)?;

    for (name, r) in [("lr", &lr.residuals), ("cr", &cr.residuals), ("newton", &nt.residuals)] {
        let last = r.last().copied().unwrap_or(f64::NAN);
        println!("{name:<7} {} steps, final residual {last:.2e}", r.len() - 1);
    }
    for row in lr.x.row_iter() {
        println!("  X  {:.12}  {:.12}  {:.12}   row sum {:.12}", row[0], row[1], row[2], row.sum());
    }
    println!("|lr - cr|     = {:.2e}", (&lr.x - &cr.x).amax());
    println!("|lr - newton| = {:.2e}", (&lr.x - &xn).amax());
    println!("squaring-step defect {:.2e}", graeffe_step_check(&uni, &lr.x)?);
    Ok(())
}
