//! Deterministic random instances with a checked supersolution.
//!
//! Knobs: `size` (n for `generic`/`e1`, m for the matrix formats), `scale` in
//! `(0, 1]` (how close the instance is to the solvability boundary) and
//! `density` in `(0, 1]` (fraction of nonzero coefficients).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bilinear::DenseTensor;
use crate::error::QveError;
use crate::newton::newton;
use crate::oracle::scalar_roots;
use crate::problem::{QveProblem, SUPERSOLUTION_TOL};
use crate::report::SolveOptions;

use super::file::{rows, Expected, ModelSpec, ProblemFile};

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub model: String,
    pub size: usize,
    pub seed: u64,
    pub scale: f64,
    pub density: f64,
}

impl GenSpec {
    pub fn new(model: &str, size: usize, seed: u64) -> Self {
        Self {
            model: model.to_string(),
            size,
            seed,
            scale: 0.9,
            density: 1.0,
        }
    }

    fn validate(&self) -> Result<(), QveError> {
        if self.size == 0 || !(self.scale > 0.0 && self.scale <= 1.0) || !(self.density > 0.0 && self.density <= 1.0) {
            return Err(QveError::Invalid(format!(
                "need size >= 1, 0 < scale <= 1, 0 < density <= 1 (size={}, scale={}, density={})",
                self.size, self.scale, self.density
            )));
        }
        Ok(())
    }
}

struct Draw {
    rng: ChaCha8Rng,
    density: f64,
}

impl Draw {
    /// Uniform in `[0.1, 1)` with probability `density`, else zero.
    fn entry(&mut self) -> f64 {
        if self.rng.random::<f64>() < self.density {
            self.rng.random_range(0.1..1.0)
        } else {
            0.0
        }
    }

    fn matrix(&mut self, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| self.entry())
    }

    /// Nonnegative matrix whose row `i` sums to `mass[i]`. Rows that came out
    /// empty get their mass on a random column.
    fn rows_with_mass(&mut self, mass: &[f64]) -> DMatrix<f64> {
        let m = mass.len();
        let mut x = self.matrix(m, m);
        for i in 0..m {
            let s: f64 = x.row(i).sum();
            if s == 0.0 {
                let j = self.rng.random_range(0..m);
                x[(i, j)] = mass[i];
            } else {
                x.row_mut(i).scale_mut(mass[i] / s);
            }
        }
        x
    }
}

fn generic(d: &mut Draw, n: usize, scale: f64) -> ModelSpec {
    // Z-matrix with positive row sums r = Me; a and b(e, e) then share at most
    // scale * r, so F(e) >= (1 - scale) r >= 0.
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if i != j {
                let v = 0.5 * d.entry() / n as f64;
                m[(i, j)] = -v;
                off += v;
            }
        }
        m[(i, i)] = off + d.rng.random_range(0.5..1.5);
    }
    let r = m.column_sum();
    let mut a = DVector::from_fn(n, |_, _| d.entry());
    let mut t = DenseTensor::from_fn(n, |_, _, _| d.entry());
    if a.iter().all(|&v| v == 0.0) {
        a[0] = 0.5;
    }
    let e = DVector::from_element(n, 1.0);
    let be = crate::bilinear::BilinearMap::apply(&t, &e, &e);
    let theta: f64 = d.rng.random_range(0.3..0.7);
    let ra = a.component_div(&r).max();
    let rb = be.component_div(&r).max();
    a *= scale * theta / ra;
    if rb > 0.0 {
        t = t.scaled(scale * (1.0 - theta) / rb);
    }
    ModelSpec::Generic {
        m: rows(&m),
        a: a.as_slice().to_vec(),
        b: t.to_nested(),
    }
}

fn e1(d: &mut Draw, n: usize, scale: f64) -> ModelSpec {
    // a + b(e, e) = e with b(e, e)_k = scale * u_k, u_k in [0.3, 1).
    let mut t = DenseTensor::from_fn(n, |_, _, _| d.entry());
    let mut a = DVector::zeros(n);
    for k in 0..n {
        let share = scale * d.rng.random_range(0.3..1.0);
        let mut mass = 0.0;
        for i in 0..n {
            for j in 0..n {
                mass += t.get(i, j, k);
            }
        }
        if mass == 0.0 {
            t.set(k, k, k, 1.0);
            mass = 1.0;
        }
        for i in 0..n {
            for j in 0..n {
                t.set(i, j, k, t.get(i, j, k) * share / mass);
            }
        }
        a[k] = 1.0 - share;
    }
    ModelSpec::E1 {
        a: a.as_slice().to_vec(),
        b: t.to_nested(),
        normalized: true,
    }
}

fn e2(d: &mut Draw, m: usize, scale: f64) -> ModelSpec {
    // Max row sum scale/4 keeps u = 1 + rho u^2 solvable.
    let target = scale / 4.0;
    let mut p = d.matrix(m, m);
    let mut pt = d.matrix(m, m);
    let s = p.column_sum().max().max(pt.column_sum().max());
    if s > 0.0 {
        p *= target / s;
        pt *= target / s;
    }
    ModelSpec::E2 {
        p: rows(&p),
        pt: rows(&pt),
    }
}

fn e3(d: &mut Draw, m: usize, scale: f64) -> ModelSpec {
    // [[D, -C], [-B, A]] = sI - P with s = max row sum(P) / scale.
    let n = 2 * m;
    let p = d.matrix(n, n);
    let s = p.column_sum().max().max(1e-3) / scale;
    let big = DMatrix::identity(n, n) * s - &p;
    let dd = big.view((0, 0), (m, m)).into_owned();
    let c = -big.view((0, m), (m, m)).into_owned();
    let b = -big.view((m, 0), (m, m)).into_owned();
    let a = big.view((m, m), (m, m)).into_owned();
    ModelSpec::E3 {
        a: rows(&a),
        b: rows(&b),
        c: rows(&c),
        d: rows(&dd),
    }
}

fn e4(d: &mut Draw, m: usize, scale: f64) -> ModelSpec {
    // Stochastic rows; the up/down mass ratio is `scale`, so the drift points
    // down and the process is positive recurrent for scale < 1.
    let mut ma = vec![0.0; m];
    let mut mb = vec![0.0; m];
    let mut mc = vec![0.0; m];
    for i in 0..m {
        mb[i] = d.rng.random_range(0.1..0.4);
        let rest = 1.0 - mb[i];
        ma[i] = rest / (1.0 + scale);
        mc[i] = rest - ma[i];
    }
    ModelSpec::E4 {
        a: rows(&d.rows_with_mass(&ma)),
        b: rows(&d.rows_with_mass(&mb)),
        c: rows(&d.rows_with_mass(&mc)),
    }
}

fn treelike(d: &mut Draw, m: usize, scale: f64) -> ModelSpec {
    // Two children. Each row splits into B, sum A_i and D_j with the A mass
    // below the D mass by the factor `scale`.
    let mut mb = vec![0.0; m];
    let mut ma = vec![0.0; m];
    let mut md = vec![0.0; m];
    for i in 0..m {
        mb[i] = d.rng.random_range(0.1..0.4);
        let rest = 1.0 - mb[i];
        md[i] = rest / (1.0 + scale);
        ma[i] = rest - md[i];
    }
    let half: Vec<f64> = ma.iter().map(|v| v / 2.0).collect();
    let a1 = d.rows_with_mass(&half);
    let a2: Vec<f64> = ma.iter().zip(&half).map(|(t, h)| t - h).collect();
    let a2 = d.rows_with_mass(&a2);
    let b = d.rows_with_mass(&mb);
    let d1 = d.rows_with_mass(&md);
    let d2 = d.rows_with_mass(&md);
    ModelSpec::Treelike {
        b: rows(&b),
        a: vec![rows(&a1), rows(&a2)],
        d: vec![rows(&d1), rows(&d2)],
    }
}

/// Finds `y >= 0` with `F(y) >= 0`: first multiples of `e`, then a point just
/// above an approximate solution `x^` along `F'(x^)^{-1} e`.
pub fn find_supersolution(p: &QveProblem) -> Option<DVector<f64>> {
    let n = p.dim();
    let e = DVector::from_element(n, 1.0);
    let ok = |y: &DVector<f64>| {
        y.iter().all(|&v| v >= 0.0) && p.residual(y).map(|r| r.min() >= 0.0).unwrap_or(false)
    };
    for k in -60..=60 {
        let y = &e * 10f64.powf(k as f64 / 20.0);
        if ok(&y) {
            return Some(y);
        }
    }
    let r = newton(p, &SolveOptions::default()).ok()?;
    if !r.status.is_converged() {
        return None;
    }
    let jac = p.derivative(&r.x).ok()?;
    let dir = crate::mmatrix::solve_general(&jac, &DMatrix::from_column_slice(n, 1, e.as_slice()))
        .ok()?
        .column(0)
        .into_owned();
    if dir.iter().any(|&v| !(v >= 0.0)) {
        return None;
    }
    let mut c = 1e-2;
    for _ in 0..30 {
        let y = &r.x + &dir * c;
        if ok(&y) {
            return Some(y);
        }
        c /= 4.0;
    }
    None
}

/// Generates an instance, checks that it builds and records a supersolution
/// (and, for scalar generic instances, the closed-form minimal root).
pub fn generate(spec: &GenSpec) -> Result<ProblemFile, QveError> {
    spec.validate()?;
    let mut d = Draw {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        density: spec.density,
    };
    let (n, s) = (spec.size, spec.scale);
    let model = match spec.model.as_str() {
        "generic" => generic(&mut d, n, s),
        "e1" => e1(&mut d, n, s),
        "e2" => e2(&mut d, n, s),
        "e3" => e3(&mut d, n, s),
        "e4" => e4(&mut d, n, s),
        "treelike" => treelike(&mut d, n, s),
        other => return Err(QveError::Invalid(format!("unknown model '{other}'"))),
    };
    let mut file = ProblemFile {
        model,
        expected: None,
    };
    let loaded = file.build()?;
    let p = &loaded.problem;
    let y = find_supersolution(p).ok_or_else(|| {
        let worst = p.residual(&DVector::from_element(p.dim(), 1.0)).map(|r| r.min()).unwrap_or(f64::NAN);
        QveError::Invalid(format!(
            "no supersolution certificate found (min F(e) = {worst:e}); lower --scale"
        ))
    })?;
    debug_assert!(p.check_supersolution(&y, SUPERSOLUTION_TOL).unwrap_or(false));
    let mut expected = Expected {
        x: None,
        supersolution: Some(y.as_slice().to_vec()),
    };
    if let ModelSpec::Generic { m, a, b } = &file.model {
        if a.len() == 1 {
            expected.x = scalar_roots(m[0][0], a[0], b[0][0][0]).map(|x| vec![x]);
        }
    }
    file.expected = Some(expected);
    Ok(file)
}
