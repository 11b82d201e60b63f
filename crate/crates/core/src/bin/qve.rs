#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use qve::bench::{self, BenchError, GenSpec, Loaded, ProblemFile, RunSpec};
use qve::problem::SUPERSOLUTION_TOL;

/// Solvers and benchmarks for quadratic vector equations.
#[derive(Parser)]
#[command(name = "qve", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Solve a problem file and print the residual history.
    Run {
        file: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        /// Solver id: fp1, funit, gs, newton, newton-cr, mnewton, mnewton-cr, lr, cr.
        #[arg(long, default_value = "newton")]
        solver: String,
        /// Include an elapsed-time column.
        #[arg(long)]
        time: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several solvers and print their histories side by side.
    Compare {
        file: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        /// Solver ids, repeated or comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = ["newton".to_string(), "mnewton".to_string()])]
        solver: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random instance with a supersolution certificate.
    Gen {
        /// Model tag: generic, e1, e2, e3, e4, treelike.
        model: String,
        /// Problem size (n, or the block size m for matrix models).
        #[arg(long, default_value_t = 4)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Distance to the solvability boundary, in (0, 1].
        #[arg(long, default_value_t = 0.9)]
        scale: f64,
        /// Fraction of nonzero coefficients, in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the positivity pattern of the minimal solution.
    Pattern {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a file parses, builds and satisfies its expected block.
    Validate { file: PathBuf },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    maxit: usize,
    /// Splitting for funit and gs: order, order-swap, depth, blend:t, each with optional +jacobi.
    #[arg(long)]
    splitting: Option<String>,
    /// Drop coordinates where the minimal solution vanishes before solving.
    #[arg(long)]
    reduce: bool,
    /// Evaluate residuals in double-double arithmetic.
    #[arg(long)]
    accurate: bool,
    /// Accepted for symmetry with `gen`; solvers are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

impl SolveArgs {
    fn spec(&self, solver: &str) -> Result<RunSpec, BenchError> {
        let mut spec = RunSpec::parse(solver, self.splitting.as_deref())?;
        spec.opts = spec.opts.with_tol(self.tol).with_maxit(self.maxit);
        if self.accurate {
            spec.opts = spec.opts.with_accurate_residual();
        }
        spec.opts.validate()?;
        spec.reduce = self.reduce;
        Ok(spec)
    }
}

fn load(path: &Path) -> Result<(ProblemFile, Loaded), BenchError> {
    let file = ProblemFile::read(path)?;
    let loaded = file.build()?;
    Ok((file, loaded))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), BenchError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| BenchError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn validate(path: &Path) -> Result<String, BenchError> {
    let (file, loaded) = load(path)?;
    let p = &loaded.problem;
    let mut report = format!("ok: {} problem, n = {}\n", file.model.tag(), p.dim());
    for w in p.warnings() {
        report.push_str(&format!("warning: {w}\n"));
    }
    let Some(exp) = &file.expected else {
        return Ok(report);
    };
    if let Some(y) = &exp.supersolution {
        let y = DVector::from_vec(y.clone());
        if !p.check_supersolution(&y, SUPERSOLUTION_TOL)? {
            let worst = p.residual(&y)?.min();
            return Err(BenchError::Io(format!("supersolution certificate fails: min F(y) = {worst:e}")));
        }
        report.push_str("supersolution: ok\n");
    }
    if let Some(x) = &exp.x {
        let x = DVector::from_vec(x.clone());
        let r = p.residual(&x)?.amax();
        if !(r <= 1e-9) {
            return Err(BenchError::Io(format!("expected x has residual {r:e}")));
        }
        report.push_str(&format!("expected x: residual {r:e}\n"));
    }
    Ok(report)
}

fn main_inner(cli: Cli) -> Result<i32, BenchError> {
    match cli.verb {
        Verb::Run {
            file,
            solve,
            solver,
            time,
            out,
        } => {
            let (_, l) = load(&file)?;
            let spec = solve.spec(&solver)?;
            let r = bench::run(&l, &spec, time)?;
            emit(&r.table, out.as_deref())?;
            Ok(r.exit_code)
        }
        Verb::Compare { file, solve, solver, out } => {
            let (_, l) = load(&file)?;
            let specs = solver.iter().map(|s| solve.spec(s)).collect::<Result<Vec<_>, _>>()?;
            emit(&bench::compare(&l, &specs), out.as_deref())?;
            Ok(0)
        }
        Verb::Gen {
            model,
            size,
            seed,
            scale,
            density,
            out,
        } => {
            let spec = GenSpec {
                model,
                size,
                seed,
                scale,
                density,
            };
            let f = bench::generate(&spec)?;
            emit(&f.to_canonical(), out.as_deref())?;
            Ok(0)
        }
        Verb::Pattern { file, out } => {
            let (_, l) = load(&file)?;
            emit(&bench::pattern_dump(&l)?, out.as_deref())?;
            Ok(0)
        }
        Verb::Validate { file } => {
            print!("{}", validate(&file)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // Usage errors share exit code 1 with parse errors; 2 means breakdown.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
