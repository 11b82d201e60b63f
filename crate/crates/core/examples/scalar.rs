//! The scalar equation `x = a + x^2/2` in its three regimes.
//!
//! ```text
//! cargo run --example scalar
//! ```

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use qve::bilinear::DenseTensor;
use qve::iterations::fixed_point;
use qve::newton::newton;
use qve::oracle::{oracle_minimal, scalar_roots};
use qve::{QveError, QveProblem, SolveOptions};

fn scalar(a: f64) -> Result<QveProblem, QveError> {
    let mut b = DenseTensor::zeros(1);
    b.set(0, 0, 0, 0.5);
    QveProblem::new(DMatrix::identity(1, 1), DVector::from_element(1, a), Arc::new(b))
}

fn main() -> Result<(), QveError> {
    let opts = SolveOptions::default();

    // Two simple roots 1/2 and 3/2; the minimal one is 1/2.
    let p = scalar(0.375)?;
    let fp = fixed_point(&p, &opts)?;
    let nt = newton(&p, &opts)?;
    println!("a = 3/8: closed form {:?}", scalar_roots(1.0, 0.375, 0.5));
    println!("  fixed point: x = {:.15} after {} steps", fp.x[0], fp.iterations);
    println!("  newton:      x = {:.15} after {} steps", nt.x[0], nt.iterations);
    for (k, r) in nt.residuals.iter().enumerate() {
        println!("    {k}  {r:.3e}");
    }

    // Double root at 1. Newton turns linear with ratio 1/2.
    let p = scalar(0.5)?;
    let nt = newton(&p, &opts.clone().with_tol(1e-30).with_accurate_residual().with_maxit(60).recording())?;
    println!("a = 1/2 (critical): newton x = {:.15}, {} steps, {}", nt.x[0], nt.iterations, nt.status);
    let errs: Vec<f64> = nt.iterates.unwrap_or_default().iter().map(|x| 1.0 - x[0]).collect();
    for w in errs.windows(2).take(8) {
        println!("    error ratio {:.4}", w[1] / w[0]);
    }

    // No real root: fixed point runs past the divergence guard.
    let p = scalar(0.625)?;
    let fp = fixed_point(&p, &opts.clone().with_maxit(100_000))?;
    println!("a = 5/8: fixed point {}", fp.status);
    match oracle_minimal(&p, 1e-14) {
        Err(e) => println!("  oracle: {e}"),
        Ok(s) => println!("  oracle unexpectedly found {}", s.x),
    }
    Ok(())
}
