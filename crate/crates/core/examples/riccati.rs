//! Nonsymmetric algebraic Riccati equation `XCX + B - AX - XD = 0` from a
//! fluid queue, solved in vectorized form.
//!
//! ```text
//! cargo run --example riccati
//! ```

use nalgebra::DMatrix;
use qve::models::{make_e3, nare_residual};
use qve::newton::newton;
use qve::solver::Method;
use qve::SolveOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Every row of [[D, -C], [-B, A]] has off-diagonal mass 3, so a diagonal
    // of 3 + shift gives a nonsingular M-matrix for shift > 0 and a singular
    // irreducible one for shift = 0.
    let a = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
    let d = a.clone();
    let b = DMatrix::from_element(2, 2, 1.0);
    let c = DMatrix::from_element(2, 2, 1.0);
    for (label, shift) in [("nonsingular", 1.5), ("critical", 1.0)] {
        let id = DMatrix::<f64>::identity(2, 2);
        let e3 = make_e3(&a + &id * shift, b.clone(), c.clone(), &d + &id * shift)?;
        // Near a double root only Newton with compensated residuals gets
        // past sqrt(eps); the others stop at the default tolerance.
        let accurate = SolveOptions::default().with_tol(1e-28).with_accurate_residual();
        let plain = SolveOptions::default().with_maxit(20_000);
        println!("{label}: critical = {}", e3.critical);
        for m in [Method::Newton, Method::ModifiedNewton, Method::FixedPoint] {
            let opts = if e3.critical && m == Method::Newton { &accurate } else { &plain };
            let r = m.run(&e3.problem, opts)?;
            let x = e3.unvec(&r.x)?;
            let res = nare_residual(&(&a + &id * shift), &b, &c, &(&d + &id * shift), &x).amax();
            println!("  {:<8} {:>6} steps  {}  matrix residual {res:.2e}", m.to_string(), r.iterations, r.status);
        }
        let x = e3.unvec(&newton(&e3.problem, &accurate)?.x)?;
        for row in x.row_iter() {
            println!("    {:.15}  {:.15}", row[0], row[1]);
        }
    }
    Ok(())
}
