//! Functional iterations on a random Markovian binary tree instance.
//!
//! Compares the splittings `depth`, `order` and a blend, each with and without
//! the Jacobi split of `M`, plus their Gauss-Seidel variants.
//!
//! ```text
//! cargo run --example splittings -- [seed]
//! ```

use qve::bench::{generate, GenSpec};
use qve::iterations::{functional_iteration, gauss_seidel_iteration, Splitting, SplittingSpec};
use qve::SolveOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(3), |s| s.parse())?;
    let mut spec = GenSpec::new("e1", 6, seed);
    spec.scale = 0.95;
    let p = generate(&spec)?.build()?.problem;
    let opts = SolveOptions::default().with_tol(1e-11).with_maxit(20_000);

    println!("{:<20} {:>8} {:>8}", "splitting", "plain", "gs");
    for name in ["depth", "blend:0.5", "order", "order-swap", "depth+jacobi", "order+jacobi"] {
        let s = Splitting::from_spec(&p, &name.parse::<SplittingSpec>()?)?;
        let plain = functional_iteration(&p, &s, None, &opts)?;
        let gs = gauss_seidel_iteration(&p, &s, None, &opts)?;
        println!("{name:<20} {:>8} {:>8}", plain.iterations, gs.iterations);
    }
    Ok(())
}
