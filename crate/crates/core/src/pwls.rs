//! The piecewise linear system `x⁺ + T x = b`.
//!
//! [`newton_solve`] runs the semi-smooth Newton iteration
//! `[diag(sgn(x_k⁺)) + T] x_{k+1} = b`. The remaining functions are the
//! independent checks around it: a contraction fixed-point solver, an
//! exhaustive enumerator over sign patterns, and predicates for the
//! convergence hypotheses (`‖T⁻¹‖ < 1`, `‖T⁻¹‖ < 1/2`, rows with definite
//! sign).

use crate::error::{Error, Result};
use crate::linalg::{dot, inv_spectral_norm, lu_factor, norm2, DenseMatrix};
use crate::newton::{self, PatternSystem};

pub use crate::newton::{Cycle, SignPattern, SolveReport, SolveStatus, SolverOptions, Stopping};

/// Largest dimension accepted by the exhaustive routines (2ⁿ patterns).
pub const MAX_ENUMERATION_DIM: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct PwlsProblem {
    t: DenseMatrix,
    b: Vec<f64>,
}

impl PwlsProblem {
    pub fn new(t: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if !t.is_square() {
            return Err(Error::NotSquare {
                rows: t.rows(),
                cols: t.cols(),
            });
        }
        if b.len() != t.rows() {
            return Err(Error::DimensionMismatch {
                expected: t.rows(),
                found: b.len(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("b"));
        }
        Ok(Self { t, b })
    }

    pub fn t(&self) -> &DenseMatrix {
        &self.t
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `diag(s) + T`
    pub fn newton_matrix(&self, pattern: &SignPattern) -> DenseMatrix {
        let mut m = self.t.clone();
        for (i, &on) in pattern.bits().iter().enumerate() {
            if on {
                m[(i, i)] += 1.0;
            }
        }
        m
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// Splits `x = x⁺ − x⁻` into its positive and negative parts.
pub fn positive_part(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    x.iter().map(|&v| (v.max(0.0), (-v).max(0.0))).unzip()
}

pub fn sign_pattern(x: &[f64]) -> SignPattern {
    SignPattern::of(x)
}

/// `F(x) = x⁺ + T x − b`
pub fn residual(p: &PwlsProblem, x: &[f64]) -> Result<Vec<f64>> {
    p.check_len(x)?;
    Ok(residual_unchecked(p, x))
}

fn residual_unchecked(p: &PwlsProblem, x: &[f64]) -> Vec<f64> {
    (0..p.dim())
        .map(|i| x[i].max(0.0) + dot(p.t.row(i), x) - p.b[i])
        .collect()
}

/// One Newton step from `x`. Fails with [`Error::Singular`] when
/// `diag(sgn(x⁺)) + T` is singular.
pub fn newton_step(p: &PwlsProblem, x: &[f64]) -> Result<Vec<f64>> {
    p.check_len(x)?;
    step_from_pattern(p, &SignPattern::of(x))
}

fn step_from_pattern(p: &PwlsProblem, pattern: &SignPattern) -> Result<Vec<f64>> {
    let lu = lu_factor(&p.newton_matrix(pattern))?;
    lu.solve(&p.b)
}

impl PatternSystem for PwlsProblem {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn step(&self, pattern: &SignPattern) -> Result<Vec<f64>> {
        step_from_pattern(self, pattern)
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        residual_unchecked(self, x)
    }

    fn rhs_norm(&self) -> f64 {
        crate::linalg::norm_inf(&self.b)
    }
}

/// Semi-smooth Newton iteration from `x0`.
///
/// Numerical failures (singular Newton matrix, cycling, iteration cap) are
/// reported through [`SolveReport::status`]; `Err` is reserved for malformed
/// input.
pub fn newton_solve(p: &PwlsProblem, x0: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    newton::run(p, x0, opts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Stop once `‖x_{k+1} − x_k‖ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 10_000,
        }
    }
}

/// Iterates the contraction `x ← T⁻¹(b − x⁺)`.
///
/// Requires `‖T⁻¹‖ < 1`, which is checked up front.
pub fn fixed_point_solve(
    p: &PwlsProblem,
    x0: &[f64],
    opts: &FixedPointOptions,
) -> Result<SolveReport> {
    p.check_len(x0)?;
    let inv_norm = match inv_spectral_norm(&p.t) {
        Ok(v) => v,
        Err(Error::Singular) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    if inv_norm >= 1.0 {
        return Err(Error::NotContractive(inv_norm));
    }
    let lu = lu_factor(&p.t)?;

    let mut x = x0.to_vec();
    let mut patterns = vec![SignPattern::of(&x)];
    let mut status = SolveStatus::MaxIterations;
    for _ in 0..opts.max_iter {
        let rhs: Vec<f64> = p.b.iter().zip(&x).map(|(b, v)| b - v.max(0.0)).collect();
        let next = lu.solve(&rhs)?;
        let step = norm2(&crate::linalg::sub(&next, &x));
        x = next;
        patterns.push(SignPattern::of(&x));
        if step <= opts.tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    let r = residual_unchecked(p, &x);
    Ok(SolveReport {
        status,
        solution: status.is_converged().then(|| x.clone()),
        iterations: patterns.len() - 1,
        final_residual_norm: crate::linalg::norm_inf(&r),
        last_iterate: x,
        iterate_trace: None,
        pattern_trace: patterns,
        cycle: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    pub solutions: Vec<Vec<f64>>,
    /// Patterns whose Newton matrix is singular; these may hide whole
    /// families of solutions and are not searched.
    pub singular_patterns: Vec<SignPattern>,
}

/// Brute force over all 2ⁿ sign patterns.
///
/// A pattern `s` contributes the solution of `[diag(s) + T] x = b` when that
/// solution reproduces `s` exactly (`x_i > 0` iff `s_i = 1`).
pub fn enumerate_solutions(p: &PwlsProblem) -> Result<Enumeration> {
    let n = p.dim();
    guard_size(n)?;
    let mut out = Enumeration {
        solutions: Vec::new(),
        singular_patterns: Vec::new(),
    };
    for mask in 0..(1u64 << n) {
        let pattern = SignPattern::from_mask(mask, n);
        let lu = lu_factor(&p.newton_matrix(&pattern))?;
        if lu.is_singular() {
            out.singular_patterns.push(pattern);
            continue;
        }
        let x = lu.solve(&p.b)?;
        if SignPattern::of(&x) == pattern {
            out.solutions.push(x);
        }
    }
    Ok(out)
}

fn guard_size(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_DIM {
        return Err(Error::TooLarge {
            n,
            max: MAX_ENUMERATION_DIM,
        });
    }
    Ok(())
}

/// Norm conditions behind existence/uniqueness and the linear rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// `‖T⁻¹‖`, infinite for singular `T`.
    pub inv_norm: f64,
    /// `‖T⁻¹‖ < 1`: unique solution for every `b`.
    pub existence_ok: bool,
    /// `‖T⁻¹‖ < 1/2`: Q-linear convergence from any start.
    pub rate_ok: bool,
    pub contraction_modulus: f64,
    /// `‖T⁻¹‖ / (1 − ‖T⁻¹‖)`, when `existence_ok`.
    pub predicted_rate: Option<f64>,
}

impl ConditionReport {
    pub fn from_inv_norm(inv_norm: f64) -> Self {
        let existence_ok = inv_norm < 1.0;
        Self {
            inv_norm,
            existence_ok,
            rate_ok: inv_norm < 0.5,
            contraction_modulus: inv_norm,
            predicted_rate: existence_ok.then(|| inv_norm / (1.0 - inv_norm)),
        }
    }
}

pub fn check_conditions(p: &PwlsProblem) -> ConditionReport {
    let inv_norm = inv_spectral_norm(&p.t).unwrap_or(f64::INFINITY);
    ConditionReport::from_inv_norm(inv_norm)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefiniteSignClassification {
    pub has_definite_sign_rows: bool,
    /// Rows that are entrywise nonnegative (zero rows included). 0-based.
    pub plus: Vec<usize>,
    /// Rows that are entrywise nonpositive and not zero. 0-based.
    pub minus: Vec<usize>,
}

/// Checks that every row is entirely `≥ 0` or entirely `≤ 0`. Entries within
/// `1e-14 · max|M|` of zero count as zero.
pub fn definite_sign_rows(m: &DenseMatrix) -> DefiniteSignClassification {
    let zero = 1e-14 * m.max_abs();
    let mut out = DefiniteSignClassification {
        has_definite_sign_rows: true,
        plus: Vec::new(),
        minus: Vec::new(),
    };
    for i in 0..m.rows() {
        let row = m.row(i);
        if row.iter().all(|&v| v >= -zero) {
            out.plus.push(i);
        } else if row.iter().all(|&v| v <= zero) {
            out.minus.push(i);
        } else {
            out.has_definite_sign_rows = false;
        }
    }
    out
}

/// True iff for every supplied pattern `s` the matrix `diag(s) + T` is
/// invertible and its inverse has rows with definite sign. `None` checks all
/// 2ⁿ patterns.
pub fn check_finite_termination_hypothesis(
    p: &PwlsProblem,
    patterns: Option<&[SignPattern]>,
) -> Result<bool> {
    let n = p.dim();
    let check = |pattern: &SignPattern| -> Result<bool> {
        if pattern.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: pattern.len(),
            });
        }
        let m = p.newton_matrix(pattern);
        if lu_factor(&m)?.is_singular() {
            return Ok(false);
        }
        Ok(definite_sign_rows(&m.inverse()?).has_definite_sign_rows)
    };
    match patterns {
        Some(list) => {
            for s in list {
                if !check(s)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        None => {
            guard_size(n)?;
            for mask in 0..(1u64 << n) {
                if !check(&SignPattern::from_mask(mask, n))? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_example() -> PwlsProblem {
        let t = DenseMatrix::from_rows(&[[-2.0, 3.0], [-1.0, 1.0]]).unwrap();
        PwlsProblem::new(t, vec![-5.0, -3.0]).unwrap()
    }

    fn two_zero_example() -> PwlsProblem {
        PwlsProblem::new(DenseMatrix::from_diag(&[-1.0, 1.0]), vec![0.0, 2.0]).unwrap()
    }

    fn diagonal_example() -> PwlsProblem {
        PwlsProblem::new(DenseMatrix::identity(2).scaled(3.0), vec![4.0, -3.0]).unwrap()
    }

    fn pattern(bits: &[u8]) -> SignPattern {
        SignPattern::new(bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn positive_part_examples() {
        assert_eq!(
            positive_part(&[2.0, 0.0, -5.0]),
            (vec![2.0, 0.0, 0.0], vec![0.0, 0.0, 5.0])
        );
        assert_eq!(positive_part(&[0.0, 0.0]), (vec![0.0, 0.0], vec![0.0, 0.0]));
        assert_eq!(
            positive_part(&[-3.0, 3.0]),
            (vec![0.0, 3.0], vec![3.0, 0.0])
        );
    }

    #[test]
    fn sign_pattern_examples() {
        assert_eq!(sign_pattern(&[2.0, 0.0, -5.0]), pattern(&[1, 0, 0]));
        assert_eq!(sign_pattern(&[4.0, 1.0]), pattern(&[1, 1]));
        assert_eq!(sign_pattern(&[-1.0, -2.0]), pattern(&[0, 0]));
        assert_eq!(format!("{}", pattern(&[1, 0, 1])), "(1,0,1)");
    }

    #[test]
    fn residual_examples() {
        assert_eq!(
            residual(&cycle_example(), &[2.0, -1.0]).unwrap(),
            vec![0.0, 0.0]
        );
        let p = two_zero_example();
        assert_eq!(residual(&p, &[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(residual(&p, &[0.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(residual(&p, &[0.0, 0.0]).unwrap(), vec![0.0, -2.0]);
        assert!(residual(&p, &[0.0]).is_err());
    }

    #[test]
    fn newton_step_examples() {
        let p = cycle_example();
        assert_eq!(newton_step(&p, &[4.0, 1.0]).unwrap(), vec![-1.0, -2.0]);
        assert_eq!(newton_step(&p, &[-1.0, -2.0]).unwrap(), vec![4.0, 1.0]);
        assert_eq!(
            newton_step(&diagonal_example(), &[1.0, -1.0]).unwrap(),
            vec![1.0, -1.0]
        );
        assert_eq!(
            newton_step(&two_zero_example(), &[1.0, 1.0]),
            Err(Error::Singular)
        );
    }

    #[test]
    fn newton_solve_cycles_on_example() {
        let p = cycle_example();
        let r = newton_solve(&p, &[1.0, 1.0], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Cycled);
        let cycle = r.cycle.unwrap();
        assert_eq!(cycle.period, 2);
        assert_eq!(cycle.points, vec![vec![-1.0, -2.0], vec![4.0, 1.0]]);
        assert!(r.solution.is_none());
        assert_eq!(r.pattern_trace.len(), r.iterations + 1);
    }

    #[test]
    fn newton_solve_from_stated_start_converges() {
        // x0 = [-3, 3] has pattern (0,1) and leads to the solution in two steps.
        let p = cycle_example();
        let opts = SolverOptions::default().with_trace(true);
        let r = newton_solve(&p, &[-3.0, 3.0], &opts).unwrap();
        let trace = r.iterate_trace.unwrap();
        assert_eq!(trace[1], vec![1.0, -1.0]);
        assert_eq!(trace[2], vec![2.0, -1.0]);
        assert!(r.status.is_converged());
    }

    #[test]
    fn newton_solve_diagonal() {
        let r = newton_solve(&diagonal_example(), &[9.0, 9.0], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::ConvergedExact);
        assert_eq!(r.solution.unwrap(), vec![1.0, -1.0]);
        assert!(r.iterations <= 3);
    }

    #[test]
    fn newton_solve_reports_singular_jacobian() {
        let r = newton_solve(&two_zero_example(), &[5.0, 5.0], &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::SingularJacobian);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.pattern_trace.len(), 1);
    }

    #[test]
    fn newton_solve_known_solution_mode() {
        let p = diagonal_example();
        let opts = SolverOptions::known_solution(vec![1.0, -1.0], 1e-6);
        let r = newton_solve(&p, &[9.0, 9.0], &opts).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert_eq!(r.iterations, 2);

        // A wrong reference is never met; the stationary iterate runs to the cap.
        let opts = SolverOptions::known_solution(vec![5.0, 5.0], 1e-6).with_max_iter(7);
        let r = newton_solve(&p, &[9.0, 9.0], &opts).unwrap();
        assert_eq!(r.status, SolveStatus::MaxIterations);
        assert_eq!(r.iterations, 7);
        assert_eq!(r.last_iterate, vec![1.0, -1.0]);
    }

    #[test]
    fn newton_solve_input_errors() {
        let p = diagonal_example();
        assert!(newton_solve(&p, &[1.0], &SolverOptions::default()).is_err());
        let opts = SolverOptions::default().with_max_iter(0);
        assert!(newton_solve(&p, &[1.0, 1.0], &opts).is_err());
        let opts = SolverOptions::known_solution(vec![1.0], 1e-6);
        assert!(newton_solve(&p, &[1.0, 1.0], &opts).is_err());
    }

    #[test]
    fn fixed_point_examples() {
        let r = fixed_point_solve(
            &diagonal_example(),
            &[0.0, 0.0],
            &FixedPointOptions::default(),
        )
        .unwrap();
        let x = r.solution.unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] + 1.0).abs() < 1e-12);

        match fixed_point_solve(&cycle_example(), &[0.0, 0.0], &FixedPointOptions::default()) {
            Err(Error::NotContractive(v)) => assert!((v - 3.8644).abs() < 1e-3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn enumerate_two_zero_example() {
        let e = enumerate_solutions(&two_zero_example()).unwrap();
        assert_eq!(e.solutions, vec![vec![0.0, 1.0]]);
        assert_eq!(e.singular_patterns.len(), 2);
        assert!(e.singular_patterns.contains(&pattern(&[1, 1])));
        assert!(e.singular_patterns.contains(&pattern(&[1, 0])));
    }

    #[test]
    fn enumerate_unique_examples() {
        let e = enumerate_solutions(&cycle_example()).unwrap();
        assert_eq!(e.solutions.len(), 1);
        let x = &e.solutions[0];
        assert!((x[0] - 2.0).abs() < 1e-14 && (x[1] + 1.0).abs() < 1e-14);
        assert!(e.singular_patterns.is_empty());

        let e = enumerate_solutions(&diagonal_example()).unwrap();
        assert_eq!(e.solutions, vec![vec![1.0, -1.0]]);
    }

    #[test]
    fn enumerate_size_guard() {
        let p = PwlsProblem::new(DenseMatrix::identity(21), vec![0.0; 21]).unwrap();
        assert_eq!(
            enumerate_solutions(&p),
            Err(Error::TooLarge { n: 21, max: 20 })
        );
        assert!(check_finite_termination_hypothesis(&p, None).is_err());
    }

    #[test]
    fn condition_examples() {
        let c = check_conditions(&diagonal_example());
        assert!((c.inv_norm - 1.0 / 3.0).abs() < 1e-12);
        assert!(c.existence_ok && c.rate_ok);
        assert!((c.predicted_rate.unwrap() - 0.5).abs() < 1e-12);

        let c = check_conditions(&cycle_example());
        assert!((c.inv_norm - 3.8644).abs() < 1e-3);
        assert!(!c.existence_ok && !c.rate_ok && c.predicted_rate.is_none());

        let c = check_conditions(&two_zero_example());
        assert!((c.inv_norm - 1.0).abs() < 1e-12);
        assert!(!c.existence_ok);

        let singular = PwlsProblem::new(DenseMatrix::zeros(2, 2), vec![1.0, 1.0]).unwrap();
        let c = check_conditions(&singular);
        assert!(c.inv_norm.is_infinite() && !c.existence_ok && !c.rate_ok);
    }

    #[test]
    fn definite_sign_examples() {
        let ms = [
            [[-2.0, -3.0, -1.0], [1.0, 1.0, 2.0], [5.0, 2.0, 1.0]],
            [[2.0, 3.0, 1.0], [1.0, 1.0, 2.0], [5.0, 2.0, 1.0]],
            [[-2.0, -3.0, -1.0], [-1.0, -1.0, -2.0], [-5.0, -2.0, -1.0]],
        ];
        for m in &ms {
            assert!(definite_sign_rows(&DenseMatrix::from_rows(m).unwrap()).has_definite_sign_rows);
        }
        let mixed = DenseMatrix::from_rows(&[[1.0, -1.0], [0.0, 1.0]]).unwrap();
        assert!(!definite_sign_rows(&mixed).has_definite_sign_rows);

        let c = definite_sign_rows(&DenseMatrix::from_diag(&[-2.0, 5.0]));
        assert!(c.has_definite_sign_rows);
        assert_eq!(c.minus, vec![0]);
        assert_eq!(c.plus, vec![1]);
    }

    #[test]
    fn finite_termination_hypothesis_examples() {
        assert!(check_finite_termination_hypothesis(&diagonal_example(), None).unwrap());
        assert!(!check_finite_termination_hypothesis(&cycle_example(), None).unwrap());
        assert!(!check_finite_termination_hypothesis(&two_zero_example(), None).unwrap());
        // Sampled mode only looks at what it is given.
        let ok = [pattern(&[0, 1])];
        assert!(check_finite_termination_hypothesis(&two_zero_example(), Some(&ok)).unwrap());
    }
}
