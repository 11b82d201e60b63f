//! Positivity pattern and reduction on a problem where plain Newton breaks
//! down because the minimal solution has a zero entry.
//!
//! ```text
//! cargo run --example positivity -- [k]
//! ```

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use qve::bilinear::DenseTensor;
use qve::newton::newton;
use qve::oracle::brute_support;
use qve::positivity::{positivity_pattern, solve_with_reduction};
use qve::{Method, QveProblem, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k: f64 = std::env::args().nth(1).map_or(Ok(10.0), |s| s.parse())?;
    // x1 = 1/2 + x1^2/2,  x2 = k x1 x2: minimal solution (1, 0). At x* the
    // second row of F' is 1 - k x1 < 0, so Newton's matrix is not an M-matrix.
    let mut b = DenseTensor::zeros(2);
    b.set(0, 0, 0, 0.5);
    b.set(0, 1, 1, k);
    let p = QveProblem::new(
        DMatrix::identity(2, 2),
        DVector::from_vec(vec![0.5, 0.0]),
        Arc::new(b),
    )?;

    let pat = positivity_pattern(&p);
    println!("support {:?}, brute force {:?}", pat.support, brute_support(&p)?);
    for (t, ins) in &pat.trace {
        println!("  from {t:?}: {ins:?}");
    }

    let direct = newton(&p, &SolveOptions::default())?;
    println!("direct newton: {} at x = {:?}", direct.status, direct.x.as_slice());

    // The reduced problem has a double root, so use compensated residuals.
    let opts = SolveOptions::default().with_tol(1e-30).with_accurate_residual();
    let r = solve_with_reduction(&p, Method::Newton, &opts)?;
    println!(
        "reduced newton: {} after {} steps, x = {:?}, eliminated {:?}",
        r.status,
        r.iterations,
        r.x.as_slice(),
        r.eliminated
    );
    Ok(())
}
