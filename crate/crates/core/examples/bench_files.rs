//! Problem files end to end: generate, write, read back, run and compare.
//!
//! ```text
//! cargo run --example bench_files -- [model] [size] [seed]
//! ```

use qve::bench::{compare, generate, pattern_dump, run, GenSpec, ProblemFile, RunSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let model = args.first().map_or("e4", |s| s.as_str());
    let size = args.get(1).map_or(Ok(2), |s| s.parse())?;
    let seed = args.get(2).map_or(Ok(7), |s| s.parse())?;

    let file = generate(&GenSpec::new(model, size, seed))?;
    let path = std::env::temp_dir().join(format!("qve-{model}-{size}-{seed}.json"));
    std::fs::write(&path, file.to_canonical())?;
    println!("wrote {}", path.display());

    let back = ProblemFile::read(&path)?;
    assert_eq!(back.to_canonical(), file.to_canonical());
    let loaded = back.build()?;
    print!("{}", pattern_dump(&loaded)?);

    let out = run(&loaded, &RunSpec::parse("newton", None)?, false)?;
    print!("{}", out.table);
    println!("exit code {}", out.exit_code);

    let mut ids = vec!["newton", "mnewton", "gs", "funit"];
    if model == "e4" {
        ids.extend(["lr", "cr"]);
    }
    let specs = ids.iter().map(|s| RunSpec::parse(s, Some("order"))).collect::<Result<Vec<_>, _>>()?;
    print!("{}", compare(&loaded, &specs));
    Ok(())
}
