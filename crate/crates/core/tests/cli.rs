use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qve")).args(args).output().expect("spawn qve")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qve-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Residual column of a run table.
fn residuals(table: &str) -> Vec<f64> {
    table
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split('\t').nth(1).unwrap().parse().unwrap())
        .collect()
}

const SCALAR: &str = r#"{"model": {"format": "generic", "m": [[1.0]], "a": [0.375], "b": [[[0.5]]]}}"#;

const TWO_ENTRY: &str = r#"{"model": {"format": "generic",
    "m": [[1.0, 0.0], [0.0, 1.0]],
    "a": [0.5, 0.0],
    "b": [[[0.5, 0.0], [0.0, 10.0]], [[0.0, 0.0], [0.0, 0.0]]]}}"#;

#[test]
fn scalar_newton_converges() {
    let f = write("scalar.json", SCALAR);
    let o = qve(&["run", arg(&f), "--solver", "newton"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = residuals(&stdout(&o));
    assert!(*r.last().unwrap() <= 1e-12);
    assert!(r.len() <= 7, "{r:?}");
    let out = stdout(&o);
    let x: f64 = out.lines().find(|l| l.starts_with("# x:")).unwrap()[4..].trim().parse().unwrap();
    assert!((x - 0.5).abs() <= 1e-14);
}

#[test]
fn time_column_is_optional() {
    let f = write("scalar-time.json", SCALAR);
    let o = qve(&["run", arg(&f), "--time"]);
    assert!(stdout(&o).contains("iter\tresidual\telapsed_s"));
    let a = qve(&["run", arg(&f), "--solver", "mnewton"]);
    let b = qve(&["run", arg(&f), "--solver", "mnewton"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn e4_lr_and_cr() {
    let g = qve(&["gen", "e4", "--size", "2", "--seed", "7"]);
    assert_eq!(g.status.code(), Some(0));
    let f = write("e4.json", &stdout(&g));
    for solver in ["lr", "cr", "newton"] {
        let o = qve(&["run", arg(&f), "--solver", solver]);
        assert_eq!(o.status.code(), Some(0), "{solver}: {}", stderr(&o));
        assert!(*residuals(&stdout(&o)).last().unwrap() <= 1e-10, "{solver}");
    }
}

#[test]
fn lr_needs_e4() {
    let f = write("scalar-lr.json", SCALAR);
    let o = qve(&["run", arg(&f), "--solver", "lr"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("e4"));
}

#[test]
fn invalid_zmatrix_names_entry() {
    let f = write(
        "badz.json",
        r#"{"model": {"format": "generic", "m": [[1.0, 0.5], [0.0, 1.0]], "a": [0.1, 0.1],
            "b": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]}}"#,
    );
    let o = qve(&["run", arg(&f)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("(0,1)"), "{}", stderr(&o));
}

#[test]
fn parse_error_reports_position() {
    let f = write("broken.json", "{\n  \"model\": {\n    \"format\": \"e2\",\n");
    let o = qve(&["validate", arg(&f)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
    let o = qve(&["run", "/nonexistent/problem.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qve(&["run"]).status.code(), Some(1));
    assert_eq!(qve(&["frobnicate"]).status.code(), Some(1));
    let f = write("scalar-usage.json", SCALAR);
    assert_eq!(qve(&["run", arg(&f), "--solver", "bogus"]).status.code(), Some(1));
    assert_eq!(qve(&["run", arg(&f), "--tol", "-1"]).status.code(), Some(1));
    assert_eq!(qve(&["--help"]).status.code(), Some(0));
}

#[test]
fn maxit_exits_three() {
    let f = write("scalar-maxit.json", SCALAR);
    let o = qve(&["run", arg(&f), "--solver", "fp1", "--maxit", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("# status: maxit"));
}

#[test]
fn breakdown_exits_two_and_reduction_rescues() {
    let f = write("two-entry.json", TWO_ENTRY);
    let o = qve(&["run", arg(&f), "--solver", "newton"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("breakdown"));
    let o = qve(&["run", arg(&f), "--solver", "newton", "--reduce", "--accurate", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("# eliminated: 1"));
    let x = stdout(&o);
    let x = x.lines().find(|l| l.starts_with("# x:")).unwrap();
    let vals: Vec<f64> = x[4..].split_whitespace().map(|v| v.parse().unwrap()).collect();
    assert!((vals[0] - 1.0).abs() <= 1e-12 && vals[1] == 0.0, "{vals:?}");
}

#[test]
fn pattern_dump() {
    let f = write("two-entry-pattern.json", TWO_ENTRY);
    let o = qve(&["pattern", arg(&f)]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("support\t0\n"), "{s}");
    assert!(s.contains("eliminated\t1\n"));
    assert!(s.contains("agree"));
}

#[test]
fn gen_is_deterministic_and_certified() {
    for model in ["generic", "e1", "e2", "e3", "e4", "treelike"] {
        let a = qve(&["gen", model, "--size", "3", "--seed", "5"]);
        let b = qve(&["gen", model, "--size", "3", "--seed", "5"]);
        assert_eq!(a.status.code(), Some(0), "{model}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{model}");
        let f = write(&format!("gen-{model}.json"), &stdout(&a));
        let v = qve(&["validate", arg(&f)]);
        assert_eq!(v.status.code(), Some(0), "{model}: {}", stderr(&v));
        assert!(stdout(&v).contains("supersolution: ok"));
    }
    let out = write("gen-out.json", "");
    let o = qve(&["gen", "e2", "--size", "4", "--seed", "1", "--scale", "0.1", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(std::fs::read_to_string(&out).unwrap().contains("\"supersolution\""));
}

#[test]
fn gen_scalar_records_root() {
    let o = qve(&["gen", "generic", "--size", "1", "--seed", "3"]);
    let s = stdout(&o);
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    let x = v["expected"]["x"][0].as_f64().unwrap();
    let f = write("gen-scalar.json", &s);
    let r = stdout(&qve(&["run", arg(&f)]));
    let line = r.lines().find(|l| l.starts_with("# x:")).unwrap();
    let got: f64 = line[4..].trim().parse().unwrap();
    assert!((got - x).abs() <= 1e-12);
}

#[test]
fn gen_rejects_infeasible_knobs() {
    let o = qve(&["gen", "e4", "--scale", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = qve(&["gen", "e7"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_catches_false_certificate() {
    let f = write(
        "false-cert.json",
        r#"{"model": {"format": "generic", "m": [[1.0]], "a": [0.375], "b": [[[0.5]]]},
            "expected": {"supersolution": [0.25]}}"#,
    );
    let o = qve(&["validate", arg(&f)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("supersolution"));
}

#[test]
fn compare_newton_variants_on_e2() {
    let g = qve(&["gen", "e2", "--size", "6", "--seed", "2", "--scale", "0.95"]);
    let f = write("e2.json", &stdout(&g));
    let o = qve(&["compare", arg(&f), "--solver", "newton,mnewton", "--solver", "fp1"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let mut lines = s.lines();
    assert_eq!(lines.next().unwrap(), "iter\tnewton\tmnewton\tfp1\tmnewton<=newton");
    let rows: Vec<&str> = lines.filter(|l| !l.starts_with('#')).collect();
    assert!(rows.iter().all(|l| !l.ends_with("fail")), "{s}");
    assert!(s.contains("# mnewton: converged"));
}

#[test]
fn compare_splittings_on_e1() {
    let g = qve(&["gen", "e1", "--size", "5", "--seed", "4"]);
    let f = write("e1.json", &stdout(&g));
    let o = qve(&[
        "compare",
        arg(&f),
        "--solver",
        "funit[depth],funit[blend:0.5],funit[order]",
        "--tol",
        "1e-10",
        "--maxit",
        "10000",
    ]);
    let s = stdout(&o);
    let steps = |label: &str| -> usize {
        let line = s.lines().find(|l| l.starts_with(&format!("# {label}: converged"))).unwrap();
        line.split_whitespace().rev().nth(1).unwrap().parse().unwrap()
    };
    let (d, b, o) = (steps("funit[depth]"), steps("funit[blend:0.5]"), steps("funit[order]"));
    assert!(o <= b && b <= d, "{o} {b} {d}");
}

#[test]
fn compare_records_failures_inline() {
    let f = write("scalar-compare.json", SCALAR);
    let o = qve(&["compare", arg(&f), "--solver", "newton,lr"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# lr: error"));
}

#[test]
fn out_flag_writes_report() {
    let f = write("scalar-out.json", SCALAR);
    let out = write("report.tsv", "");
    let o = qve(&["run", arg(&f), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("# solver=newton"));
}
