//! Newton and modified Newton on the transport-model family, in both the
//! direct and the Schur-complement form.
//!
//! ```text
//! cargo run --example newton_variants -- [m] [alpha] [c]
//! ```

use qve::models::lu_family;
use qve::newton::{modified_newton, modified_newton_cr_form, newton, newton_cr_form};
use qve::SolveOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let m = args.first().map_or(Ok(32), |s| s.parse())?;
    let alpha = args.get(1).map_or(Ok(0.001), |s| s.parse())?;
    let c = args.get(2).map_or(Ok(0.999), |s| s.parse())?;
    let e2 = lu_family(m, alpha, c)?;
    let p = &e2.problem;
    let opts = SolveOptions::default();

    let runs = [
        ("newton", newton(p, &opts)?),
        ("newton-cr", newton_cr_form(p, &opts)?),
        ("mnewton", modified_newton(p, &opts)?),
        ("mnewton-cr", modified_newton_cr_form(p, &opts)?),
    ];
    let rows = runs.iter().map(|(_, r)| r.residuals.len()).max().unwrap_or(0);
    print!("iter");
    for (name, _) in &runs {
        print!("\t{name:>12}");
    }
    println!();
    for k in 0..rows {
        print!("{k}");
        for (_, r) in &runs {
            match r.residuals.get(k) {
                Some(v) => print!("\t{v:>12.3e}"),
                None => print!("\t{:>12}", "-"),
            }
        }
        println!();
    }
    let (u, v) = e2.split(&runs[0].1.x);
    println!("max u = {:.6}, max v = {:.6}", u.max(), v.max());
    let dev = (&runs[0].1.x - &runs[1].1.x).amax();
    println!("newton vs newton-cr max deviation {dev:.2e}");
    Ok(())
}
