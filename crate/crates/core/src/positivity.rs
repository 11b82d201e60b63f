//! Support of the minimal solution and the reduction to its nonzero coordinates.
//!
//! Iterates of every method stay between `0` and `x*`, so coordinates where
//! `x*` vanishes can be dropped. On the remaining coordinates the matrices to
//! invert keep their M-matrix property even when they lose it on the full space.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::bilinear::{unit, Bilinear, Projected};
use crate::error::Result;
use crate::mmatrix::inverse_pattern;
use crate::problem::QveProblem;
use crate::report::{SolveOptions, SolveReport, Status};
use crate::solver::Method;

/// The set `S = {i : x*_i > 0}` together with an audit trail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositivityPattern {
    /// Sorted indices of the support.
    pub support: Vec<usize>,
    /// `(t, inserted)`: the indices that entered `S` because of `t`. The first
    /// entry has `t = None` and lists the support of `M^{-1} a`.
    pub trace: Vec<(Option<usize>, Vec<usize>)>,
    pub pops: usize,
    pub minv_applications: usize,
}

impl PositivityPattern {
    pub fn contains(&self, i: usize) -> bool {
        self.support.binary_search(&i).is_ok()
    }

    pub fn is_full(&self, n: usize) -> bool {
        self.support.len() == n
    }
}

/// Positivity pattern of `M^{-1} v` from the pattern of `v`.
fn apply_pattern(minv: &[Vec<bool>], v: &[bool]) -> Vec<bool> {
    minv.iter()
        .map(|row| row.iter().zip(v).any(|(&m, &x)| m && x))
        .collect()
}

/// Computes the support of the minimal solution in pattern arithmetic: the
/// structure of `M^{-1}` is taken from graph reachability and the structure of
/// `b(e_S, e_t) + b(e_t, e_S)` from a nonnegative evaluation, which has no
/// cancellation. Unchecked indices are processed in FIFO order.
pub fn positivity_pattern(p: &QveProblem) -> PositivityPattern {
    let n = p.dim();
    let minv = inverse_pattern(p.m());
    let a: Vec<bool> = p.a().iter().map(|&v| v > 0.0).collect();
    let seed = apply_pattern(&minv, &a);
    let mut in_s = seed.clone();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| seed[i]).collect();
    let mut pat = PositivityPattern {
        support: Vec::new(),
        trace: vec![(None, queue.iter().copied().collect())],
        pops: 0,
        minv_applications: 1,
    };
    let mut count = queue.len();
    while count < n {
        let Some(t) = queue.pop_front() else { break };
        pat.pops += 1;
        let e_s = DVector::from_iterator(n, in_s.iter().map(|&s| if s { 1.0 } else { 0.0 }));
        let e_t = unit(n, t);
        let v = p.b().apply(&e_s, &e_t) + p.b().apply(&e_t, &e_s);
        let v: Vec<bool> = v.iter().map(|&x| x > 0.0).collect();
        let u = apply_pattern(&minv, &v);
        pat.minv_applications += 1;
        let inserted: Vec<usize> = (0..n).filter(|&i| u[i] && !in_s[i]).collect();
        for &i in &inserted {
            in_s[i] = true;
            queue.push_back(i);
        }
        count += inserted.len();
        pat.trace.push((Some(t), inserted));
    }
    pat.support = (0..n).filter(|&i| in_s[i]).collect();
    pat
}

/// The problem restricted to the coordinates in `keep`:
/// `M^ = Pi M Pi^T`, `a^ = Pi a`, `b^(x, y) = Pi b(Pi^T x, Pi^T y)`.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    pub keep: Vec<usize>,
    pub n: usize,
    /// `None` when `keep` is empty, in which case `x* = 0`.
    pub problem: Option<QveProblem>,
}

impl ReducedProblem {
    /// `Pi^T x`: puts `x` back into `R^n` with zeros elsewhere.
    pub fn embed(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(self.n);
        for (r, &i) in self.keep.iter().enumerate() {
            full[i] = x[r];
        }
        full
    }

    pub fn eliminated(&self) -> Vec<usize> {
        (0..self.n).filter(|i| self.keep.binary_search(i).is_err()).collect()
    }
}

pub fn reduce_problem(p: &QveProblem, pat: &PositivityPattern) -> Result<ReducedProblem> {
    let n = p.dim();
    let keep = pat.support.clone();
    let problem = if keep.is_empty() {
        None
    } else if keep.len() == n {
        Some(p.clone())
    } else {
        let k = keep.len();
        let m = DMatrix::from_fn(k, k, |r, c| p.m()[(keep[r], keep[c])]);
        let a = DVector::from_iterator(k, keep.iter().map(|&i| p.a()[i]));
        let b: Bilinear = std::sync::Arc::new(Projected::new(p.b().clone(), keep.clone()));
        let mut q = QveProblem::new(m, a, b)?;
        for w in p.warnings() {
            q = q.with_warning(w);
        }
        Some(q)
    };
    Ok(ReducedProblem { keep, n, problem })
}

/// Pattern, reduction, solve and embedding. Iterates and `x` are embedded in
/// `R^n`; `residuals` are those of the reduced problem, which agree with the
/// full residual at `x*`.
pub fn solve_with_reduction(p: &QveProblem, method: Method, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let pat = positivity_pattern(p);
    let red = reduce_problem(p, &pat)?;
    let eliminated = red.eliminated();
    let Some(q) = red.problem.as_ref() else {
        return Ok(SolveReport {
            x: DVector::zeros(p.dim()),
            status: Status::Converged,
            iterations: 0,
            residuals: vec![0.0],
            times: vec![0.0],
            iterates: opts.record_history.then(|| vec![DVector::zeros(p.dim())]),
            violations: Vec::new(),
            warnings: p.warnings().to_vec(),
            eliminated,
        });
    };
    let mut r = method.run(q, opts)?;
    r.x = red.embed(&r.x);
    if let Some(h) = r.iterates.as_mut() {
        for x in h.iter_mut() {
            *x = red.embed(x);
        }
    }
    r.eliminated = eliminated;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilinear::DenseTensor;
    use crate::iterations::SplittingSpec;
    use crate::newton::newton;
    use crate::problem::tests::two_entry;

    fn chain() -> QveProblem {
        let mut t = DenseTensor::zeros(3);
        t.set(0, 0, 1, 0.2);
        t.set(1, 1, 2, 0.3);
        QveProblem::new(
            DMatrix::identity(3, 3),
            DVector::from_vec(vec![0.5, 0.0, 0.0]),
            t.into_shared(),
        )
        .unwrap()
    }

    #[test]
    fn full_seed() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let p = QveProblem::new(
            m,
            DVector::from_vec(vec![1.0, 0.0]),
            DenseTensor::zeros(2).into_shared(),
        )
        .unwrap();
        let pat = positivity_pattern(&p);
        assert_eq!(pat.support, vec![0, 1]);
        assert_eq!(pat.pops, 0);
        let red = reduce_problem(&p, &pat).unwrap();
        assert_eq!(red.problem.unwrap().m(), p.m());
    }

    #[test]
    fn two_entry_support() {
        let p = two_entry(10.0);
        let pat = positivity_pattern(&p);
        assert_eq!(pat.support, vec![0]);
        assert_eq!(pat.trace, vec![(None, vec![0]), (Some(0), vec![])]);
    }

    #[test]
    fn chain_grows_one_at_a_time() {
        let pat = positivity_pattern(&chain());
        assert_eq!(pat.support, vec![0, 1, 2]);
        assert_eq!(
            pat.trace,
            vec![(None, vec![0]), (Some(0), vec![1]), (Some(1), vec![2])]
        );
        assert!(pat.pops <= 3 && pat.minv_applications <= 4);
    }

    #[test]
    fn reduction_rescues_newton() {
        let p = two_entry(10.0);
        assert!(newton(&p, &SolveOptions::default()).unwrap().status.is_breakdown());
        let red = reduce_problem(&p, &positivity_pattern(&p)).unwrap();
        let q = red.problem.as_ref().unwrap();
        assert_eq!(q.dim(), 1);
        assert_eq!(q.a()[0], 0.5);
        // The reduced problem x = 1/2 + x^2/2 has a double root at 1.
        let sublinear = SolveOptions::default().with_tol(1e-8).with_maxit(100_000);
        let cases = [
            (Method::Newton, SolveOptions::default(), 1e-5),
            (Method::ModifiedNewton, SolveOptions::default(), 1e-5),
            (Method::Functional(SplittingSpec::ORDER_SWAPPED), sublinear, 1e-3),
        ];
        for (method, opts, err) in cases {
            let r = solve_with_reduction(&p, method, &opts).unwrap();
            assert!(r.status.is_converged(), "{method}");
            assert_eq!(r.eliminated, vec![1]);
            assert_eq!(r.x[1], 0.0);
            assert!((r.x[0] - 1.0).abs() < err, "{method}: {}", r.x);
        }
        let opts = SolveOptions::default().with_tol(1e-30).with_accurate_residual();
        let r = solve_with_reduction(&p, Method::Newton, &opts).unwrap();
        assert!(r.status.is_converged());
        assert!((r.x[0] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn empty_support_returns_zero() {
        let p = QveProblem::new(
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            DenseTensor::from_fn(2, |_, _, _| 1.0).into_shared(),
        )
        .unwrap();
        let r = solve_with_reduction(&p, Method::Newton, &SolveOptions::default()).unwrap();
        assert_eq!(r.x, DVector::zeros(2));
        assert_eq!(r.eliminated, vec![0, 1]);
        assert!(r.status.is_converged());
    }

    #[test]
    fn full_support_matches_direct_solve() {
        let p = chain();
        let direct = newton(&p, &SolveOptions::default()).unwrap();
        let reduced = solve_with_reduction(&p, Method::Newton, &SolveOptions::default()).unwrap();
        assert_eq!(direct.x, reduced.x);
        assert_eq!(direct.iterations, reduced.iterations);
        assert!(reduced.eliminated.is_empty());
    }
}
