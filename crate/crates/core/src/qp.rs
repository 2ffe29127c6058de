//! Nonnegatively constrained convex QP and projection onto simplicial cones.
//!
//! The QP `min ½xᵀQx + xᵀb̃ + c, x ≥ 0` is solved through the equation
//! `[Q − I] x⁺ + x = −b̃`: if `x*` solves it then `(x*)⁺` is optimal. The
//! Newton iteration for that equation is
//! `x_{k+1} = −([Q − I] diag(sgn(x_k⁺)) + I)⁻¹ b̃`, whose matrix is
//! nonsingular for every pattern when `Q` is positive definite.

use crate::error::{Error, Result};
use crate::linalg::{dot, lu_factor, norm_inf, sym_eig, DenseMatrix};
use crate::newton::{self, PatternSystem, SignPattern, SolveReport, SolverOptions};
use crate::pwls::{positive_part, PwlsProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    q: DenseMatrix,
    b_tilde: Vec<f64>,
    c: f64,
}

impl QpProblem {
    /// `q` is replaced by its symmetric part `½(Q + Qᵀ)`, which leaves the
    /// objective unchanged.
    pub fn new(q: DenseMatrix, b_tilde: Vec<f64>, c: f64) -> Result<Self> {
        let q = q.symmetrized()?;
        if b_tilde.len() != q.rows() {
            return Err(Error::DimensionMismatch {
                expected: q.rows(),
                found: b_tilde.len(),
            });
        }
        if b_tilde.iter().any(|v| !v.is_finite()) || !c.is_finite() {
            return Err(Error::NonFinite("QP data"));
        }
        Ok(Self { q, b_tilde, c })
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    pub fn b_tilde(&self) -> &[f64] {
        &self.b_tilde
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn dim(&self) -> usize {
        self.b_tilde.len()
    }

    /// Smallest eigenvalue of `Q` is positive. Costs a full eigendecomposition.
    pub fn is_positive_definite(&self) -> Result<bool> {
        let e = sym_eig(&self.q)?;
        Ok(e.values.last().is_none_or(|&v| v > 0.0))
    }

    /// `‖Q − I‖₂`, the quantity in the linear-rate condition `‖Q − I‖ < 1/2`.
    pub fn distance_to_identity(&self) -> Result<f64> {
        crate::linalg::spectral_norm(
            &self.q.shifted(-1.0),
            crate::linalg::POWER_TOL,
            crate::linalg::POWER_MAX_ITER,
        )
    }

    /// `1 + ‖b̃‖∞ + ‖Q‖∞`
    pub fn kkt_scale(&self) -> f64 {
        1.0 + norm_inf(&self.b_tilde) + self.q.inf_norm()
    }

    /// `[Q − I] diag(s) + I`: column `j` is column `j` of `Q` when `s_j = 1`
    /// and the unit vector `e_j` otherwise.
    pub fn newton_matrix(&self, pattern: &SignPattern) -> DenseMatrix {
        let n = self.dim();
        let mut m = DenseMatrix::identity(n);
        for j in (0..n).filter(|&j| pattern.is_active(j)) {
            for i in 0..n {
                m[(i, j)] = self.q[(i, j)];
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

    /// `[Q − I] x⁺ + x + b̃`
    pub fn equation_residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        Ok(self.residual_unchecked(x))
    }

    fn residual_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let (xp, _) = positive_part(x);
        (0..self.dim())
            .map(|i| dot(self.q.row(i), &xp) - xp[i] + x[i] + self.b_tilde[i])
            .collect()
    }
}

impl PatternSystem for QpProblem {
    fn dim(&self) -> usize {
        self.b_tilde.len()
    }

    fn step(&self, pattern: &SignPattern) -> Result<Vec<f64>> {
        let lu = lu_factor(&self.newton_matrix(pattern))?;
        let mut x = lu.solve(&self.b_tilde)?;
        x.iter_mut().for_each(|v| *v = -*v);
        Ok(x)
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.residual_unchecked(x)
    }

    fn rhs_norm(&self) -> f64 {
        norm_inf(&self.b_tilde)
    }
}

/// Semi-smooth Newton for `[Q − I] x⁺ + x = −b̃`. On convergence the report's
/// solution is `x*`; the QP minimizer is [`recover_qp_solution`] of it.
pub fn qp_newton_solve(q: &QpProblem, x0: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    newton::run(q, x0, opts)
}

/// `(x*)⁺`
pub fn recover_qp_solution(x_star: &[f64]) -> Vec<f64> {
    positive_part(x_star).0
}

/// Violations of `x ≥ 0`, `Qx + b̃ ≥ 0`, `⟨Qx + b̃, x⟩ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResidual {
    pub primal_violation: f64,
    pub dual_violation: f64,
    pub complementarity: f64,
}

impl KktResidual {
    pub fn max(&self) -> f64 {
        self.primal_violation
            .max(self.dual_violation)
            .max(self.complementarity)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

fn negative_violation(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, &x| m.max((-x).max(0.0)))
}

pub fn kkt_residual(q: &QpProblem, x: &[f64]) -> Result<KktResidual> {
    q.check_len(x)?;
    let mut grad = q.q.matvec(x)?;
    grad.iter_mut().zip(&q.b_tilde).for_each(|(g, b)| *g += b);
    Ok(KktResidual {
        primal_violation: negative_violation(x),
        dual_violation: negative_violation(&grad),
        complementarity: dot(&grad, x).abs(),
    })
}

/// `½xᵀQx + xᵀb̃ + c`
pub fn qp_objective(q: &QpProblem, x: &[f64]) -> Result<f64> {
    q.check_len(x)?;
    let qx = q.q.matvec(x)?;
    Ok(0.5 * dot(x, &qx) + dot(x, &q.b_tilde) + q.c)
}

/// The equivalent piecewise linear system `x⁺ + T x = b` with
/// `T = [Q − I]⁻¹`, `b = −T b̃`.
pub fn qp_to_pwls(q: &QpProblem) -> Result<PwlsProblem> {
    let shifted = q.q.shifted(-1.0);
    if lu_factor(&shifted)?.is_singular() {
        return Err(Error::EquivalenceUnavailable);
    }
    let t = shifted.inverse()?;
    let mut b = t.matvec(&q.b_tilde)?;
    b.iter_mut().for_each(|v| *v = -*v);
    PwlsProblem::new(t, b)
}

/// `max(‖y − Qx − b̃‖∞, ‖min(x,0)‖∞, ‖min(y,0)‖∞, |⟨x,y⟩|)`
pub fn lcp_residual(q: &QpProblem, x: &[f64], y: &[f64]) -> Result<f64> {
    q.check_len(x)?;
    q.check_len(y)?;
    let qx = q.q.matvec(x)?;
    let eq = (0..q.dim())
        .map(|i| (y[i] - qx[i] - q.b_tilde[i]).abs())
        .fold(0.0, f64::max);
    Ok(eq
        .max(negative_violation(x))
        .max(negative_violation(y))
        .max(dot(x, y).abs()))
}

/// Projection target `z` and generator matrix `A` of the cone `A ℝⁿ₊`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeInstance {
    a: DenseMatrix,
    z: Vec<f64>,
}

impl ConeInstance {
    pub fn new(a: DenseMatrix, z: Vec<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if z.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: z.len(),
            });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("z"));
        }
        if lu_factor(&a)?.is_singular() {
            return Err(Error::Singular);
        }
        Ok(Self { a, z })
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// `Q = AᵀA`, `b̃ = −Aᵀz`, `c = zᵀz / 2`.
    pub fn to_qp(&self) -> Result<QpProblem> {
        let q = self.a.transpose().matmul(&self.a)?;
        let mut b = self.a.tr_matvec(&self.z)?;
        b.iter_mut().for_each(|v| *v = -*v);
        QpProblem::new(q, b, 0.5 * dot(&self.z, &self.z))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ProjectionOptions {
    /// Starting point; zero when absent.
    pub start: Option<Vec<f64>>,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone)]
pub struct ConeProjection {
    /// Nonnegative coefficients with `projection = A v`.
    pub v: Vec<f64>,
    pub projection: Vec<f64>,
    pub kkt: KktResidual,
    pub report: SolveReport,
}

/// Projects `z` onto `A ℝⁿ₊`. Solver failures are left in `report.status`;
/// `v` is then the positive part of the last iterate.
pub fn cone_projection(ci: &ConeInstance, opts: &ProjectionOptions) -> Result<ConeProjection> {
    let qp = ci.to_qp()?;
    let x0 = opts.start.clone().unwrap_or_else(|| vec![0.0; qp.dim()]);
    let report = qp_newton_solve(&qp, &x0, &opts.solver)?;
    let v = recover_qp_solution(&report.last_iterate);
    let projection = ci.a.matvec(&v)?;
    let kkt = kkt_residual(&qp, &v)?;
    Ok(ConeProjection {
        v,
        projection,
        kkt,
        report,
    })
}
