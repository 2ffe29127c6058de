//! Dense real linear algebra kernels.
//!
//! Everything here works on small-to-moderate dense matrices stored row-major:
//! LU factorization with partial pivoting (and transposed solves), spectral
//! norm estimation by power iteration, and cyclic Jacobi for symmetric
//! eigenproblems.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Relative pivot threshold below which an LU factorization is flagged singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-12;

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;

const JACOBI_RTOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 30;
const SYMMETRY_RTOL: f64 = 1e-12;

/// Row-major dense matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(nrows, ncols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `M x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x, self.cols)?;
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `Mᵀ x`
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x, self.rows)?;
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// Returns `self + d I`.
    pub fn shifted(&self, d: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] += d;
        }
        m
    }

    /// `½ (M + Mᵀ)`
    pub fn symmetrized(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(self.not_square());
        }
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        Ok(s)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute difference between `M[i][j]` and `M[j][i]`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Explicit inverse, column by column through one LU factorization.
    pub fn inverse(&self) -> Result<Self> {
        let lu = lu_factor(self)?;
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = lu.solve(&e)?;
            for (i, v) in col.into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        Ok(inv)
    }

    fn check_len(&self, x: &[f64], expected: usize) -> Result<()> {
        if x.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn not_square(&self) -> Error {
        Error::NotSquare {
            rows: self.rows,
            cols: self.cols,
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `a - b`, elementwise.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Packed LU factors of a square matrix, `P M = L U`.
///
/// `L` is unit lower triangular and stored below the diagonal; `U` occupies
/// the diagonal and above. Row `i` of `P M` is row `perm[i]` of `M`.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
    singular: bool,
}

/// Factorizes a square matrix with partial pivoting.
///
/// A pivot smaller than `SINGULAR_PIVOT_RTOL * max|M|` sets the singular flag;
/// factorization still runs to completion so the flag is the only outcome.
pub fn lu_factor(m: &DenseMatrix) -> Result<LuFactors> {
    if !m.is_square() {
        return Err(m.not_square());
    }
    let n = m.rows;
    let threshold = SINGULAR_PIVOT_RTOL * m.max_abs();
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut singular = false;

    for k in 0..n {
        let (p, pivot_abs) = (k..n)
            .map(|i| (i, a[(i, k)].abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if pivot_abs == 0.0 || pivot_abs < threshold {
            singular = true;
            continue;
        }
        if p != k {
            for j in 0..n {
                a.data.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot = a[(k, k)];
        for i in (k + 1)..n {
            let l = a[(i, k)] / pivot;
            a[(i, k)] = l;
            if l == 0.0 {
                continue;
            }
            let (upper, lower) = a.data.split_at_mut(i * n);
            let row_k = &upper[k * n + k + 1..k * n + n];
            let row_i = &mut lower[k + 1..n];
            for (x, &u) in row_i.iter_mut().zip(row_k) {
                *x -= l * u;
            }
        }
    }

    Ok(LuFactors {
        lu: a,
        perm,
        singular,
    })
}

/// Solves `M x = rhs` with previously computed factors.
pub fn lu_solve(f: &LuFactors, rhs: &[f64]) -> Result<Vec<f64>> {
    f.solve(rhs)
}

impl LuFactors {
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Unit lower triangular factor.
    pub fn l(&self) -> DenseMatrix {
        let n = self.dim();
        let mut l = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..i {
                l[(i, j)] = self.lu[(i, j)];
            }
        }
        l
    }

    /// Upper triangular factor.
    pub fn u(&self) -> DenseMatrix {
        let n = self.dim();
        let mut u = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                u[(i, j)] = self.lu[(i, j)];
            }
        }
        u
    }

    /// Solves `M x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check(rhs)?;
        let n = self.dim();
        let a = &self.lu;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let s = dot(&a.row(i)[..i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&a.row(i)[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / a[(i, i)];
        }
        Ok(x)
    }

    /// Solves `Mᵀ x = rhs`.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check(rhs)?;
        let n = self.dim();
        let a = &self.lu;
        // Uᵀ w = rhs
        let mut w = rhs.to_vec();
        for i in 0..n {
            w[i] /= a[(i, i)];
            let wi = w[i];
            for (wj, &u) in w[i + 1..].iter_mut().zip(&a.row(i)[i + 1..]) {
                *wj -= u * wi;
            }
        }
        // Lᵀ t = w
        for i in (0..n).rev() {
            let ti = w[i];
            for (wj, &l) in w[..i].iter_mut().zip(&a.row(i)[..i]) {
                *wj -= l * ti;
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        Ok(x)
    }

    fn check(&self, rhs: &[f64]) -> Result<()> {
        if self.singular {
            return Err(Error::Singular);
        }
        if rhs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rhs.len(),
            });
        }
        Ok(())
    }
}

fn power_start(n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * (1.0 + i as f64).sin()).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// Power iteration on a symmetric positive semidefinite operator.
///
/// `apply` maps a unit vector `v` to `(vᵀ A v, A v)`. Returns the dominant
/// eigenvalue of `A` once the Rayleigh quotient changes by at most `tol`
/// relative.
fn power_iteration<F>(n: usize, tol: f64, max_iter: usize, mut apply: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if n == 0 {
        return Ok(0.0);
    }
    let mut v = power_start(n);
    let mut prev = f64::NAN;
    for _ in 0..max_iter {
        let (rho, mut next) = apply(&v)?;
        if !rho.is_finite() {
            return Err(Error::NonFinite("power iteration"));
        }
        let nn = norm2(&next);
        if rho == 0.0 || nn == 0.0 {
            return Ok(0.0);
        }
        if (rho - prev).abs() <= tol * rho {
            return Ok(rho);
        }
        prev = rho;
        next.iter_mut().for_each(|x| *x /= nn);
        v = next;
    }
    Err(Error::IterationLimit(max_iter))
}

/// Largest singular value `‖M‖₂`, by power iteration on `MᵀM`.
pub fn spectral_norm(m: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let rho = power_iteration(m.cols, tol, max_iter, |v| {
        let w = m.matvec(v)?;
        Ok((dot(&w, &w), m.tr_matvec(&w)?))
    })?;
    Ok(rho.sqrt())
}

/// `‖M⁻¹‖₂` without forming the inverse: power iteration on `M⁻ᵀM⁻¹` through
/// LU solves.
pub fn inv_spectral_norm(m: &DenseMatrix) -> Result<f64> {
    inv_spectral_norm_with(m, POWER_TOL, POWER_MAX_ITER)
}

/// Same as [`inv_spectral_norm`] with explicit power-iteration settings.
///
/// A nearly repeated largest singular value of `M⁻¹` can stall the power
/// iteration; when the budget runs out the result falls back to
/// `1 / √λ_min(MᵀM)` from the Jacobi eigensolver.
pub fn inv_spectral_norm_with(m: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let lu = lu_factor(m)?;
    if lu.is_singular() {
        return Err(Error::Singular);
    }
    let rho = power_iteration(m.rows, tol, max_iter, |v| {
        let y = lu.solve(v)?;
        Ok((dot(&y, &y), lu.solve_transpose(&y)?))
    });
    match rho {
        Ok(rho) => Ok(rho.sqrt()),
        Err(Error::IterationLimit(_)) => {
            let gram = m.transpose().matmul(m)?.symmetrized()?;
            let smallest = sym_eig(&gram)?.values.last().copied().unwrap_or(0.0);
            if smallest > 0.0 {
                Ok(1.0 / smallest.sqrt())
            } else {
                Err(Error::Singular)
            }
        }
        Err(e) => Err(e),
    }
}

/// Eigendecomposition `S = W Λ Wᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: DenseMatrix,
}

/// Cyclic-by-row Jacobi eigensolver for symmetric matrices.
pub fn sym_eig(s: &DenseMatrix) -> Result<SymEigen> {
    if !s.is_square() {
        return Err(s.not_square());
    }
    let asym = s.max_asymmetry();
    if asym > SYMMETRY_RTOL * s.max_abs() {
        return Err(Error::Asymmetric(asym));
    }
    let n = s.rows;
    let mut a = s.symmetrized()?;
    let mut w = DenseMatrix::identity(n);
    let stop = JACOBI_RTOL * s.frobenius_norm();

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(&mut a, &mut w, p, q, c, sn);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, dst)] = w[(i, src)];
        }
    }
    Ok(SymEigen { values, vectors })
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let mut sum = 0.0;
    for i in 0..a.rows {
        for (j, v) in a.row(i).iter().enumerate() {
            if i != j {
                sum += v * v;
            }
        }
    }
    sum.sqrt()
}

/// `A ← JᵀAJ`, `W ← WJ` for the plane rotation in (p, q).
fn rotate(a: &mut DenseMatrix, w: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let wkp = w[(k, p)];
        let wkq = w[(k, q)];
        w[(k, p)] = c * wkp - s * wkq;
        w[(k, q)] = s * wkp + c * wkq;
    }
}
