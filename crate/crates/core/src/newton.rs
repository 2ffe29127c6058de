//! Iteration driver shared by the piecewise linear and QP Newton methods.
//!
//! Both iterations have the property that the next iterate is a function of
//! the current sign pattern only. The driver exploits that for exact
//! termination (a pattern repeated on consecutive steps) and exact cycle
//! detection (a pattern repeated non-consecutively).

use std::collections::HashMap;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{norm2, norm_inf, sub};

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL_F: f64 = 1e-10;

/// Sign of the positive part of a vector: `bits[i]` is set iff `x[i] > 0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SignPattern(Vec<bool>);

impl SignPattern {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn of(x: &[f64]) -> Self {
        Self(x.iter().map(|&v| v > 0.0).collect())
    }

    /// Pattern whose bit `i` is bit `i` of `mask`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self((0..n).map(|i| (mask >> i) & 1 == 1).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn count_active(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

impl fmt::Debug for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, &b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", u8::from(b))?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for SignPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter().map(|&b| u8::from(b)))
    }
}

/// When the Newton iteration declares success.
#[derive(Debug, Clone, PartialEq)]
pub enum Stopping {
    /// `‖F(x)‖∞ ≤ tol_f (1 + ‖b‖∞)`, plus exact termination on a repeated pattern.
    Residual { tol_f: f64 },
    /// `‖u − x‖ < tol_x (1 + ‖u‖)` against a known solution `u`. This is the
    /// only success test in this mode; a stationary iterate that misses it
    /// keeps iterating until the iteration cap.
    KnownSolution { reference: Vec<f64>, tol_x: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    pub stopping: Stopping,
    /// Keep every iterate in the report.
    pub record_iterates: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self::residual(DEFAULT_TOL_F)
    }
}

impl SolverOptions {
    pub fn residual(tol_f: f64) -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            stopping: Stopping::Residual { tol_f },
            record_iterates: false,
        }
    }

    pub fn known_solution(reference: Vec<f64>, tol_x: f64) -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            stopping: Stopping::KnownSolution { reference, tol_x },
            record_iterates: false,
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_trace(mut self, record: bool) -> Self {
        self.record_iterates = record;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SolveStatus {
    Converged,
    ConvergedExact,
    Cycled,
    MaxIterations,
    SingularJacobian,
}

impl SolveStatus {
    pub fn is_converged(self) -> bool {
        matches!(self, Self::Converged | Self::ConvergedExact)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::ConvergedExact => "converged_exact",
            Self::Cycled => "cycled",
            Self::MaxIterations => "max_iterations",
            Self::SingularJacobian => "singular_jacobian",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A detected cycle: `pattern_trace[start] == pattern_trace[start + period]`,
/// so the iterates `x[start+1] ..= x[start+period]` repeat forever.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cycle {
    pub start: usize,
    pub period: usize,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub solution: Option<Vec<f64>>,
    pub iterations: usize,
    /// `‖F(x_last)‖∞`
    pub final_residual_norm: f64,
    pub last_iterate: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterate_trace: Option<Vec<Vec<f64>>>,
    pub pattern_trace: Vec<SignPattern>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Cycle>,
}

impl SolveReport {
    /// `‖u − x_last‖ / (1 + ‖u‖)`
    pub fn relative_error(&self, reference: &[f64]) -> f64 {
        norm2(&sub(reference, &self.last_iterate)) / (1.0 + norm2(reference))
    }
}

/// A piecewise linear system seen through its pattern-driven Newton map.
pub(crate) trait PatternSystem {
    fn dim(&self) -> usize;
    /// Newton successor of any point carrying `pattern`.
    fn step(&self, pattern: &SignPattern) -> Result<Vec<f64>>;
    fn residual(&self, x: &[f64]) -> Vec<f64>;
    /// `‖b‖∞` of the right-hand side, used to scale the residual test.
    fn rhs_norm(&self) -> f64;
}

pub(crate) fn run<S: PatternSystem>(
    sys: &S,
    x0: &[f64],
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let n = sys.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.len(),
        });
    }
    if opts.max_iter == 0 {
        return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
    }
    if let Stopping::KnownSolution { reference, .. } = &opts.stopping {
        if reference.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: reference.len(),
            });
        }
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("starting point"));
    }

    let rhs_scale = 1.0 + sys.rhs_norm();
    let accept = |x: &[f64], r: &[f64]| match &opts.stopping {
        Stopping::Residual { tol_f } => norm_inf(r) <= tol_f * rhs_scale,
        Stopping::KnownSolution { reference, tol_x } => {
            norm2(&sub(reference, x)) < tol_x * (1.0 + norm2(reference))
        }
    };
    let exact_repeat_stops = matches!(opts.stopping, Stopping::Residual { .. });

    let mut iterates = vec![x0.to_vec()];
    let mut patterns = vec![SignPattern::of(x0)];
    let mut seen: HashMap<SignPattern, usize> = HashMap::new();
    seen.insert(patterns[0].clone(), 0);

    let finish = |status: SolveStatus,
                  iterates: Vec<Vec<f64>>,
                  patterns: Vec<SignPattern>,
                  residual: Vec<f64>,
                  cycle: Option<Cycle>| {
        let last = iterates.last().cloned().unwrap_or_default();
        SolveReport {
            status,
            solution: status.is_converged().then(|| last.clone()),
            iterations: patterns.len() - 1,
            final_residual_norm: norm_inf(&residual),
            last_iterate: last,
            iterate_trace: opts.record_iterates.then_some(iterates),
            pattern_trace: patterns,
            cycle,
        }
    };

    let r0 = sys.residual(x0);
    if accept(x0, &r0) {
        return Ok(finish(SolveStatus::Converged, iterates, patterns, r0, None));
    }

    for k in 1..=opts.max_iter {
        let x = match sys.step(&patterns[k - 1]) {
            Ok(x) => x,
            Err(Error::Singular) => {
                let r = sys.residual(&iterates[k - 1]);
                return Ok(finish(
                    SolveStatus::SingularJacobian,
                    iterates,
                    patterns,
                    r,
                    None,
                ));
            }
            Err(e) => return Err(e),
        };
        let pattern = SignPattern::of(&x);
        let r = sys.residual(&x);
        let repeated = pattern == patterns[k - 1];
        let earlier = if repeated {
            None
        } else {
            seen.get(&pattern).copied()
        };
        seen.entry(pattern.clone()).or_insert(k);
        iterates.push(x);
        patterns.push(pattern);

        if exact_repeat_stops && repeated {
            return Ok(finish(
                SolveStatus::ConvergedExact,
                iterates,
                patterns,
                r,
                None,
            ));
        }
        if accept(&iterates[k], &r) {
            return Ok(finish(SolveStatus::Converged, iterates, patterns, r, None));
        }
        if let Some(start) = earlier {
            let cycle = Cycle {
                start,
                period: k - start,
                points: iterates[start + 1..=k].to_vec(),
            };
            return Ok(finish(
                SolveStatus::Cycled,
                iterates,
                patterns,
                r,
                Some(cycle),
            ));
        }
    }

    let r = sys.residual(iterates.last().expect("at least x0"));
    Ok(finish(
        SolveStatus::MaxIterations,
        iterates,
        patterns,
        r,
        None,
    ))
}
