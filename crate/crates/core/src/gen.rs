//! Seeded random instances with planted solutions.
//!
//! QP instances follow the usual recipe for `[Q − I] x⁺ + x = −b̃` test sets:
//! `Q = U (I + (β/σ) Σ) Uᵀ` where `U Σ Uᵀ` is the eigendecomposition of
//! `BᵀB` for a random nonsingular `B` and `σ` its largest eigenvalue, so that
//! `‖Q − I‖ = β` exactly. A planted `u` fixes `b̃ = −([Q − I] u⁺ + u)`.
//!
//! Streams are ChaCha8 keyed by the configured seed, with one stream per
//! instance index, so batches can be generated in any order or in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, lu_factor, sym_eig, DenseMatrix};
use crate::pwls::PwlsProblem;
use crate::qp::QpProblem;

pub const DEFAULT_VALUE_BOUND: f64 = 1e6;
pub const MAX_SINGULAR_DRAWS: usize = 10;

/// Random stream for instance `index` of the batch keyed by `seed`.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n: usize,
    pub beta_low: f64,
    pub beta_high: f64,
    /// Entries of `B`, `u` and `x0` are uniform on `[-value_bound, value_bound]`.
    pub value_bound: f64,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(n: usize, beta_low: f64, beta_high: f64, seed: u64) -> Self {
        Self {
            n,
            beta_low,
            beta_high,
            value_bound: DEFAULT_VALUE_BOUND,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        if !(self.beta_low >= 0.0 && self.beta_low < self.beta_high && self.beta_high.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "beta interval [{}, {}) must be nonempty and nonnegative",
                self.beta_low, self.beta_high
            )));
        }
        if !(self.value_bound > 0.0 && self.value_bound.is_finite()) {
            return Err(Error::InvalidConfig("value_bound must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub qp: QpProblem,
    pub known_solution: Vec<f64>,
    pub start: Vec<f64>,
    pub beta: f64,
}

pub fn random_vector<R: Rng + ?Sized>(n: usize, bound: f64, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-bound..=bound)).collect()
}

pub fn random_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    bound: f64,
    rng: &mut R,
) -> DenseMatrix {
    DenseMatrix::new(rows, cols, random_vector(rows * cols, bound, rng))
        .expect("finite entries of the right length")
}

/// Random orthogonal matrix: eigenvectors of a random symmetric matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseMatrix {
    let g = random_matrix(n, n, 1.0, rng);
    let s = DenseMatrix::new(
        n,
        n,
        (0..n * n)
            .map(|k| g.as_slice()[k] + g[(k % n, k / n)])
            .collect(),
    )
    .expect("finite");
    sym_eig(&s).expect("symmetric by construction").vectors
}

/// `U diag(eigenvalues) Uᵀ` for a random orthogonal `U`.
pub fn make_symmetric_with_spectrum<R: Rng + ?Sized>(
    eigenvalues: &[f64],
    rng: &mut R,
) -> DenseMatrix {
    let u = random_orthogonal(eigenvalues.len(), rng);
    conjugate(&u, eigenvalues)
}

fn conjugate(u: &DenseMatrix, diag: &[f64]) -> DenseMatrix {
    let n = diag.len();
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|k| u[(i, k)] * diag[k] * u[(j, k)]).sum();
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Symmetric positive definite `Q` with `‖Q − I‖ = beta` and spectrum in
/// `[1, 1 + beta]`.
pub fn make_spd_matrix<R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> Result<DenseMatrix> {
    if n == 0 || beta.is_nan() || beta <= 0.0 || !beta.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "need n >= 1 and beta > 0, got n={n}, beta={beta}"
        )));
    }
    let b = draw_nonsingular(n, DEFAULT_VALUE_BOUND, rng)?;
    let gram = b.transpose().matmul(&b)?.symmetrized()?;
    let eig = sym_eig(&gram)?;
    let sigma = eig.values[0];
    let shifted: Vec<f64> = eig.values.iter().map(|&s| 1.0 + beta / sigma * s).collect();
    Ok(conjugate(&eig.vectors, &shifted))
}

/// Generator `A` of a random simplicial cone with `AᵀA = Q`, `Q` from
/// [`make_spd_matrix`]: `A = R Q^{1/2}` for a random orthogonal `R`.
pub fn make_cone_matrix<R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> Result<DenseMatrix> {
    let q = make_spd_matrix(n, beta, rng)?;
    let eig = sym_eig(&q)?;
    let roots: Vec<f64> = eig.values.iter().map(|v| v.max(0.0).sqrt()).collect();
    let root = conjugate(&eig.vectors, &roots);
    random_orthogonal(n, rng).matmul(&root)
}

fn draw_nonsingular<R: Rng + ?Sized>(n: usize, bound: f64, rng: &mut R) -> Result<DenseMatrix> {
    for _ in 0..MAX_SINGULAR_DRAWS {
        let b = random_matrix(n, n, bound, rng);
        if !lu_factor(&b)?.is_singular() {
            return Ok(b);
        }
    }
    Err(Error::SingularDraws(MAX_SINGULAR_DRAWS))
}

pub fn make_instance<R: Rng + ?Sized>(
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<GeneratedInstance> {
    cfg.validate()?;
    let beta = loop {
        let b = rng.gen_range(cfg.beta_low..cfg.beta_high);
        if b > 0.0 {
            break b;
        }
    };
    let q = make_spd_matrix(cfg.n, beta, rng)?;
    let u = random_vector(cfg.n, cfg.value_bound, rng);
    let start = random_vector(cfg.n, cfg.value_bound, rng);

    // b̃ = −([Q − I] u⁺ + u)
    let up: Vec<f64> = u.iter().map(|v| v.max(0.0)).collect();
    let b_tilde: Vec<f64> = (0..cfg.n)
        .map(|i| -(dot(q.row(i), &up) - up[i] + u[i]))
        .collect();

    Ok(GeneratedInstance {
        qp: QpProblem::new(q, b_tilde, 0.0)?,
        known_solution: u,
        start,
        beta,
    })
}

/// `count` instances; instance `i` is drawn from [`instance_rng`]`(cfg.seed, i)`.
pub fn make_batch(cfg: &GeneratorConfig, count: usize) -> Result<Vec<GeneratedInstance>> {
    (0..count)
        .map(|i| make_instance(cfg, &mut instance_rng(cfg.seed, i as u64)))
        .collect()
}

/// Random `x⁺ + T x = b` with `‖T⁻¹‖ = inv_norm` exactly (up to rounding).
///
/// `T⁻¹ = U diag(s) Vᵀ` with orthogonal `U`, `V` and singular values `s` in
/// `[inv_norm / 5, inv_norm]`, the largest pinned to `inv_norm`.
pub fn make_pwls_with_inv_norm<R: Rng + ?Sized>(
    n: usize,
    inv_norm: f64,
    b_bound: f64,
    rng: &mut R,
) -> Result<PwlsProblem> {
    if n == 0 || inv_norm.is_nan() || inv_norm <= 0.0 {
        return Err(Error::InvalidConfig("need n >= 1 and inv_norm > 0".into()));
    }
    let u = random_orthogonal(n, rng);
    let v = random_orthogonal(n, rng);
    let mut s: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(0.2 * inv_norm..=inv_norm))
        .collect();
    s[0] = inv_norm;
    // T = V diag(1/s) Uᵀ
    let mut t = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            t[(i, j)] = (0..n).map(|k| v[(i, k)] * u[(j, k)] / s[k]).sum();
        }
    }
    PwlsProblem::new(t, random_vector(n, b_bound, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm_inf, spectral_norm, POWER_MAX_ITER, POWER_TOL};

    #[test]
    fn spd_matrix_has_requested_distance_to_identity() {
        let mut rng = instance_rng(1, 0);
        for &(n, beta) in &[(1, 0.3), (5, 0.01), (12, 0.49), (20, 7.5)] {
            let q = make_spd_matrix(n, beta, &mut rng).unwrap();
            let d = spectral_norm(&q.shifted(-1.0), POWER_TOL, POWER_MAX_ITER).unwrap();
            assert!((d - beta).abs() <= 1e-6 * beta, "n={n} beta={beta} got {d}");
            let e = sym_eig(&q).unwrap();
            assert!(e.values[0] <= 1.0 + beta + 1e-9);
            assert!(*e.values.last().unwrap() >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn tiny_beta_collapses_to_identity() {
        let q = make_spd_matrix(6, 1e-12, &mut instance_rng(2, 0)).unwrap();
        let diff = q.shifted(-1.0);
        assert!(diff.max_abs() <= 1e-11);
    }

    #[test]
    fn instance_is_deterministic_and_planted() {
        let cfg = GeneratorConfig::new(5, 0.0, 0.5, 7);
        let a = make_instance(&cfg, &mut instance_rng(7, 0)).unwrap();
        let b = make_instance(&cfg, &mut instance_rng(7, 0)).unwrap();
        assert_eq!(a.qp, b.qp);
        assert_eq!(a.known_solution, b.known_solution);
        assert_eq!(a.start, b.start);
        assert!(a.beta > 0.0 && a.beta < 0.5);

        let r = a.qp.equation_residual(&a.known_solution).unwrap();
        assert!(norm_inf(&r) <= 1e-8 * (1.0 + norm_inf(a.qp.b_tilde())));
    }

    #[test]
    fn batch_behaviour() {
        let cfg = GeneratorConfig::new(4, 0.0, 0.5, 99);
        assert!(make_batch(&cfg, 0).unwrap().is_empty());
        let x = make_batch(&cfg, 3).unwrap();
        let y = make_batch(&cfg, 3).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(a.qp, b.qp);
            assert_eq!(a.start, b.start);
        }
        assert_ne!(x[0].known_solution, x[1].known_solution);
    }

    #[test]
    fn config_validation() {
        assert!(GeneratorConfig::new(0, 0.0, 0.5, 1).validate().is_err());
        assert!(GeneratorConfig::new(3, 0.5, 0.5, 1).validate().is_err());
        let mut cfg = GeneratorConfig::new(3, 0.0, 0.5, 1);
        cfg.value_bound = 0.0;
        assert!(cfg.validate().is_err());
        assert!(make_spd_matrix(3, 0.0, &mut instance_rng(0, 0)).is_err());
    }

    #[test]
    fn cone_matrix_has_prescribed_gram() {
        let mut rng = instance_rng(6, 0);
        let a = make_cone_matrix(7, 0.3, &mut rng).unwrap();
        let g = a.transpose().matmul(&a).unwrap();
        let d = spectral_norm(&g.shifted(-1.0), POWER_TOL, POWER_MAX_ITER).unwrap();
        assert!((d - 0.3).abs() < 1e-9, "{d}");
    }

    #[test]
    fn pwls_generator_pins_inverse_norm() {
        let mut rng = instance_rng(5, 0);
        let p = make_pwls_with_inv_norm(9, 0.37, 1.0, &mut rng).unwrap();
        let got = crate::linalg::inv_spectral_norm(p.t()).unwrap();
        assert!((got - 0.37).abs() < 1e-9, "{got}");
    }
}
