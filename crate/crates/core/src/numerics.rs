//! Dense complex linear-algebra kernel: norms, factorizations, solves,
//! least squares and rank decisions. Everything else in the crate funnels
//! its matrix work through this module.
//!
//! Matrices are dense, row-major and immutable in practice; all functions
//! return fresh values. Rank-revealing work goes through a one-sided
//! Jacobi SVD: it delivers high relative accuracy on the small dense
//! matrices this crate works with, and keeps every threshold decision in
//! one place. Square well-conditioned systems additionally have a pivoted
//! LU fast path whose results are always verified by a residual check.

use crate::error::{Error, Result};

pub type Complex64 = num_complex::Complex<f64>;

/// Relative threshold below which a singular value counts as zero when
/// deciding invertibility: a square matrix is invertible iff
/// `sigma_min > tol * sigma_max`.
pub const DEFAULT_INVERT_TOL: f64 = 1e-8;

/// Relative rank cutoff used by minimum-norm least squares.
const PINV_REL_TOL: f64 = 1e-12;

/// Orthogonality target of the Jacobi sweep, relative to the column norms.
const JACOBI_TOL: f64 = 2e-15;

const JACOBI_MAX_SWEEPS: usize = 64;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn from_data(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch(format!(
                "add {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "mul {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == czero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Copies `self` into the top-left corner of a `rows x cols` zero matrix.
    /// Truncates in a dimension where the target is smaller.
    pub fn resized(&self, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| {
            if i < self.rows && j < self.cols {
                self.get(i, j)
            } else {
                czero()
            }
        })
    }

    pub fn sub_matrix(&self, row0: usize, row1: usize, col0: usize, col1: usize) -> Self {
        Self::from_fn(row1 - row0, col1 - col0, |i, j| {
            self.get(row0 + i, col0 + j)
        })
    }

    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "hstack {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j)
            } else {
                other.get(i, j - self.cols)
            }
        }))
    }

    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::ShapeMismatch(format!(
                "vstack {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self.get(i, j)
            } else {
                other.get(i - self.rows, j)
            }
        }))
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn from_columns(rows: usize, columns: &[Vec<Complex64>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j) * v[j])
                    .sum::<Complex64>()
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Bounding box (rows, cols) of the nonzero entries.
    fn nonzero_box(&self) -> (usize, usize) {
        let mut rows = 0;
        let mut cols = 0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.data[i * self.cols + j] != czero() {
                    rows = rows.max(i + 1);
                    cols = cols.max(j + 1);
                }
            }
        }
        (rows, cols)
    }
}

// ---------------------------------------------------------------------
// one-sided Jacobi SVD

struct JacobiOutcome {
    /// Orthogonalized columns, scaled by their singular values.
    columns: Vec<Vec<Complex64>>,
    /// Accumulated right factor W with M = (columns) W^H, when requested.
    v_columns: Option<Vec<Vec<Complex64>>>,
    sigma: Vec<f64>,
}

fn gram(x: &[Complex64], y: &[Complex64]) -> (f64, f64, Complex64) {
    let mut xx = 0.0;
    let mut yy = 0.0;
    let mut xy = czero();
    for (a, b) in x.iter().zip(y) {
        xx += a.norm_sqr();
        yy += b.norm_sqr();
        xy += a.conj() * b;
    }
    (xx, yy, xy)
}

fn rotate_columns(cols: &mut [Vec<Complex64>], p: usize, q: usize, c: f64, s: f64, phi: Complex64) {
    let (head, tail) = cols.split_at_mut(q);
    let x = &mut head[p];
    let y = &mut tail[0];
    let phic = phi.conj();
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let xa = *a;
        let yb = *b;
        *a = xa * c - yb * phic * s;
        *b = xa * phi * s + yb * c;
    }
}

/// One-sided Jacobi on a matrix with rows >= cols: right rotations make the
/// columns mutually orthogonal; their norms are the singular values.
fn jacobi_core(m: &ComplexMatrix, want_v: bool) -> JacobiOutcome {
    let cols = m.cols();
    let mut a: Vec<Vec<Complex64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Option<Vec<Vec<Complex64>>> = want_v.then(|| {
        (0..cols)
            .map(|j| {
                let mut e = vec![czero(); cols];
                e[j] = Complex64::new(1.0, 0.0);
                e
            })
            .collect()
    });

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (app, aqq, apq) = gram(&a[p], &a[q]);
                if app == 0.0 || aqq == 0.0 {
                    continue;
                }
                let gabs = apq.norm();
                if gabs <= JACOBI_TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (2.0 * gabs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let phi = apq / gabs;
                rotate_columns(&mut a, p, q, c, s, phi);
                if let Some(vc) = v.as_mut() {
                    rotate_columns(vc, p, q, c, s, phi);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let sigma: Vec<f64> = a.iter().map(|col| vec_norm(col)).collect();
    JacobiOutcome {
        columns: a,
        v_columns: v,
        sigma,
    }
}

/// Thin SVD (U, sigma, V^H) with factors jointly sorted by descending
/// singular value. U has orthonormal columns wherever sigma is nonzero;
/// zero-sigma columns of U are zero.
fn svd_parts(m: &ComplexMatrix) -> (ComplexMatrix, Vec<f64>, ComplexMatrix) {
    if m.is_empty() {
        return (
            ComplexMatrix::zeros(m.rows(), 0),
            Vec::new(),
            ComplexMatrix::zeros(0, m.cols()),
        );
    }
    if m.rows() < m.cols() {
        let (u, s, vh) = svd_parts(&m.adjoint());
        return (vh.adjoint(), s, u.adjoint());
    }
    let out = jacobi_core(m, true);
    let k = m.cols();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| out.sigma[b].partial_cmp(&out.sigma[a]).unwrap());
    let sigma: Vec<f64> = order.iter().map(|&j| out.sigma[j]).collect();
    let u = ComplexMatrix::from_fn(m.rows(), k, |i, j| {
        let col = &out.columns[order[j]];
        let s = sigma[j];
        if s > 0.0 {
            col[i] / s
        } else {
            czero()
        }
    });
    let v_cols = out.v_columns.expect("v requested");
    // rows of V^H are the conjugated V columns
    let vh = ComplexMatrix::from_fn(k, k, |i, j| v_cols[order[i]][j].conj());
    (u, sigma, vh)
}

/// All singular values, sorted descending.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let work = if m.rows() < m.cols() {
        m.adjoint()
    } else {
        m.clone()
    };
    let out = jacobi_core(&work, false);
    let mut s = out.sigma;
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Largest singular value. Empty matrices have norm zero. The all-zero
/// boundary is trimmed first, and single nonzero rows or columns short-cut
/// to a Euclidean norm.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let (rows, cols) = m.nonzero_box();
    if rows == 0 {
        return 0.0;
    }
    let t = m.sub_matrix(0, rows, 0, cols);
    if cols == 1 || rows == 1 {
        return t.frobenius_norm();
    }
    singular_values(&t).first().copied().unwrap_or(0.0)
}

/// Euclidean norm of a coordinate vector.
pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------
// pivoted LU, the fast path for square well-conditioned systems

struct LuFactors {
    /// Combined L (unit lower) and U, row-major.
    lu: ComplexMatrix,
    /// Row permutation: pivot row chosen for each elimination step.
    perm: Vec<usize>,
}

fn lu_factor(m: &ComplexMatrix) -> Result<LuFactors> {
    if m.rows() != m.cols() {
        return Err(Error::ShapeMismatch("LU needs a square matrix".into()));
    }
    let n = m.rows();
    let mut lu = m.clone();
    let mut perm = Vec::with_capacity(n);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_mag = lu.get(k, k).norm();
        for i in k + 1..n {
            let mag = lu.get(i, k).norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = i;
            }
        }
        if pivot_mag <= 1e-14 * scale {
            return Err(Error::Singular);
        }
        if pivot_row != k {
            for j in 0..n {
                let a = lu.get(k, j);
                let b = lu.get(pivot_row, j);
                lu.set(k, j, b);
                lu.set(pivot_row, j, a);
            }
        }
        perm.push(pivot_row);
        let pivot = lu.get(k, k);
        for i in k + 1..n {
            let factor = lu.get(i, k) / pivot;
            lu.set(i, k, factor);
            if factor != czero() {
                for j in k + 1..n {
                    let v = lu.get(i, j) - factor * lu.get(k, j);
                    lu.set(i, j, v);
                }
            }
        }
    }
    Ok(LuFactors { lu, perm })
}

impl LuFactors {
    fn solve(&self, b: &ComplexMatrix) -> ComplexMatrix {
        let n = self.lu.rows();
        let mut x = b.clone();
        for (k, &p) in self.perm.iter().enumerate() {
            if p != k {
                for j in 0..x.cols() {
                    let a = x.get(k, j);
                    let c = x.get(p, j);
                    x.set(k, j, c);
                    x.set(p, j, a);
                }
            }
        }
        // forward substitution with unit lower factor
        for i in 1..n {
            for k in 0..i {
                let f = self.lu.get(i, k);
                if f != czero() {
                    for j in 0..x.cols() {
                        let v = x.get(i, j) - f * x.get(k, j);
                        x.set(i, j, v);
                    }
                }
            }
        }
        // back substitution
        for i in (0..n).rev() {
            for k in i + 1..n {
                let f = self.lu.get(i, k);
                if f != czero() {
                    for j in 0..x.cols() {
                        let v = x.get(i, j) - f * x.get(k, j);
                        x.set(i, j, v);
                    }
                }
            }
            let d = self.lu.get(i, i);
            for j in 0..x.cols() {
                let v = x.get(i, j) / d;
                x.set(i, j, v);
            }
        }
        x
    }
}

/// Fast square solve with a verified residual: falls back on an error when
/// the factorization breaks down or the residual exceeds `tol * |B|`.
pub(crate) fn lu_solve(m: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    let factors = lu_factor(m)?;
    let x = factors.solve(b);
    let residual = m.mul(&x)?.sub(b)?.frobenius_norm();
    let bnorm = b.frobenius_norm();
    if bnorm > 0.0 && residual > tol * bnorm {
        return Err(Error::Singular);
    }
    Ok(x)
}

pub(crate) fn lu_inverse(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    lu_solve(m, &ComplexMatrix::identity(m.rows()), tol)
}

/// Square solve through the LU fast path, falling back to the SVD route
/// (and its singular-value threshold semantics) when the factorization or
/// its residual check fails.
pub(crate) fn solve_fast(m: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    if m.rows() == m.cols() && m.rows() == b.rows() {
        if let Ok(x) = lu_solve(m, b, (tol * 1e-2).max(1e-12)) {
            return Ok(x);
        }
    }
    solve(m, b, tol)
}

pub(crate) fn inverse_fast(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    solve_fast(m, &ComplexMatrix::identity(m.rows()), tol)
}

/// Invertibility at the `sigma_min > tol * sigma_max` threshold, certified
/// cheaply when possible: a constructive inverse with residual delta gives
/// sigma_min >= (1 - delta) / |M^-1|_F and sigma_max <= |M|_F. Falls back
/// to exact singular values.
pub(crate) fn certify_invertible(m: &ComplexMatrix, tol: f64) -> bool {
    if m.rows() != m.cols() {
        return false;
    }
    if m.rows() == 0 {
        return true;
    }
    if let Ok(inv) = lu_inverse(m, 1e-10) {
        if let Ok(prod) = m.mul(&inv) {
            if let Ok(defect) = prod.sub(&ComplexMatrix::identity(m.rows())) {
                let delta = defect.frobenius_norm();
                if delta < 0.5 {
                    let smin_lower = (1.0 - delta) / inv.frobenius_norm().max(f64::MIN_POSITIVE);
                    let smax_upper = m.frobenius_norm();
                    if smin_lower > tol * smax_upper {
                        return true;
                    }
                }
            }
        }
    }
    is_invertible(m, tol)
}

// ---------------------------------------------------------------------
// SVD-backed public operations

/// Solves `M X = B` for square `M`. Fails with `Singular` when the smallest
/// singular value is at most `tol * sigma_max`, or when the residual of the
/// computed solution exceeds `tol * |B|`.
pub fn solve(m: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    if m.rows() != m.cols() {
        return Err(Error::ShapeMismatch(format!(
            "solve needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if m.rows() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "solve: {}x{} vs rhs {}x{}",
            m.rows(),
            m.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if m.rows() == 0 {
        return Ok(ComplexMatrix::zeros(0, b.cols()));
    }
    let (u, sigma, vt) = svd_parts(m);
    let smax = sigma.first().copied().unwrap_or(0.0);
    let smin = sigma.last().copied().unwrap_or(0.0);
    if smax == 0.0 || smin <= tol * smax {
        return Err(Error::Singular);
    }
    let x = apply_pinv(&u, &sigma, &vt, b, 0.0)?;
    let residual = m.mul(&x)?.sub(b)?.frobenius_norm();
    let bnorm = b.frobenius_norm();
    if bnorm > 0.0 && residual > tol * bnorm {
        return Err(Error::Singular);
    }
    Ok(x)
}

/// Inverse of a square matrix, through [`solve`].
pub fn inverse(m: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix> {
    solve(m, &ComplexMatrix::identity(m.rows()), tol)
}

pub fn is_invertible(m: &ComplexMatrix, tol: f64) -> bool {
    if m.rows() != m.cols() || m.rows() == 0 {
        return m.rows() == m.cols() && m.rows() == 0;
    }
    let sigma = singular_values(m);
    let smax = sigma[0];
    let smin = *sigma.last().unwrap();
    smax > 0.0 && smin > tol * smax
}

/// Minimum-norm minimizer of the Frobenius norm of `M X - B`.
pub fn least_squares(m: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if m.rows() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "least_squares: {}x{} vs rhs {}x{}",
            m.rows(),
            m.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if m.cols() == 0 || m.rows() == 0 {
        return Ok(ComplexMatrix::zeros(m.cols(), b.cols()));
    }
    let (u, sigma, vt) = svd_parts(m);
    apply_pinv(&u, &sigma, &vt, b, PINV_REL_TOL)
}

/// `V diag(1/sigma_i) U^H B`, dropping singular values at or below
/// `rel_tol * sigma_max`.
fn apply_pinv(
    u: &ComplexMatrix,
    sigma: &[f64],
    vt: &ComplexMatrix,
    b: &ComplexMatrix,
    rel_tol: f64,
) -> Result<ComplexMatrix> {
    let smax = sigma.first().copied().unwrap_or(0.0);
    let mut y = u.adjoint().mul(b)?;
    for (i, &s) in sigma.iter().enumerate() {
        let inv = if smax > 0.0 && s > rel_tol * smax {
            Complex64::new(1.0 / s, 0.0)
        } else {
            czero()
        };
        for j in 0..y.cols() {
            let v = y.get(i, j) * inv;
            y.set(i, j, v);
        }
    }
    vt.adjoint().mul(&y)
}

/// Orthonormal columns spanning the numerical column space: left singular
/// vectors whose singular value exceeds `tol * sigma_max`.
pub fn column_space_basis(m: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    if m.is_empty() {
        return ComplexMatrix::zeros(m.rows(), 0);
    }
    let (u, sigma, _) = svd_parts(m);
    let smax = sigma.first().copied().unwrap_or(0.0);
    let rank = sigma
        .iter()
        .filter(|&&s| s > tol * smax && smax > 0.0)
        .count();
    u.sub_matrix(0, u.rows(), 0, rank)
}

/// Range basis of a verified idempotent: its nonzero singular values are
/// at least one, so an absolute cut at one half separates them from noise
/// even when the matrix is numerically zero.
pub fn idempotent_range_basis(p: &ComplexMatrix) -> ComplexMatrix {
    if p.is_empty() {
        return ComplexMatrix::zeros(p.rows(), 0);
    }
    let (u, sigma, _) = svd_parts(p);
    let rank = sigma.iter().filter(|&&s| s > 0.5).count();
    u.sub_matrix(0, u.rows(), 0, rank)
}

/// Orthonormal basis of the numerical null space: right singular vectors
/// whose singular value is at most `tol * sigma_max`.
pub fn null_space_basis(m: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    if m.cols() == 0 {
        return ComplexMatrix::zeros(0, 0);
    }
    if m.rows() == 0 {
        return ComplexMatrix::identity(m.cols());
    }
    // the thin SVD of a wide matrix misses null directions; zero-padding
    // the rows to square leaves the null space unchanged
    let m = if m.rows() < m.cols() {
        m.resized(m.cols(), m.cols())
    } else {
        m.clone()
    };
    let (_, sigma, vt) = svd_parts(&m);
    let smax = sigma.first().copied().unwrap_or(0.0);
    let rank = sigma
        .iter()
        .filter(|&&s| s > tol * smax && smax > 0.0)
        .count();
    let v = vt.adjoint();
    v.sub_matrix(0, v.rows(), rank, v.cols())
}

// ---------------------------------------------------------------------
// seeded random constructors, used by test batteries and experiments

/// Uniformly random matrix with entries in the complex unit box, from the
/// caller's seeded generator.
pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Random matrix with entries on the dyadic grid `k / 2^12`, `|k| <= 2^12`.
/// Sums and differences of such entries are exact in f64, which keeps
/// round-trip identities bitwise.
pub fn random_dyadic_matrix(rows: usize, cols: usize, rng: &mut impl rand::Rng) -> ComplexMatrix {
    let scale = (2.0f64).powi(-12);
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(
            rng.random_range(-4096..=4096) as f64 * scale,
            rng.random_range(-4096..=4096) as f64 * scale,
        )
    })
}

pub fn random_unit_vector(n: usize, rng: &mut impl rand::Rng) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = vec_norm(&v);
        if norm > 1e-3 {
            return v.iter().map(|z| z / norm).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn svd_reconstruction_error(m: &ComplexMatrix) -> f64 {
        let (u, sigma, vt) = svd_parts(m);
        let k = sigma.len();
        let mut us = u.clone();
        for (j, &sj) in sigma.iter().enumerate().take(k) {
            for i in 0..us.rows() {
                let v = us.get(i, j) * c(sj, 0.0);
                us.set(i, j, v);
            }
        }
        us.mul(&vt).unwrap().sub(m).unwrap().max_abs()
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..60 {
            let rows = rng.random_range(1..14);
            let cols = rng.random_range(1..14);
            let m = random_matrix(rows, cols, &mut rng);
            let scale = m.max_abs().max(1.0);
            assert!(svd_reconstruction_error(&m) <= 1e-13 * scale);
            // orthonormality of both factors on the nonzero part
            let (u, sigma, vt) = svd_parts(&m);
            let rank = sigma.iter().filter(|&&s| s > 1e-12).count();
            let uh = u.sub_matrix(0, rows, 0, rank);
            let g = uh.adjoint().mul(&uh).unwrap();
            assert!(g.sub(&ComplexMatrix::identity(rank)).unwrap().max_abs() <= 1e-13);
            let g2 = vt.mul(&vt.adjoint()).unwrap();
            assert!(
                g2.sub(&ComplexMatrix::identity(vt.rows()))
                    .unwrap()
                    .max_abs()
                    <= 1e-13
            );
        }
    }

    #[test]
    fn svd_handles_oblique_idempotents() {
        // non-orthogonal projectors have clustered singular values at one;
        // the factors must still reconstruct the matrix
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..40 {
            let n = rng.random_range(2..12);
            let r = rng.random_range(1..n);
            // P = A (B A)^-1 B with A n x r, B r x n random: idempotent
            let a = random_matrix(n, r, &mut rng);
            let b = random_matrix(r, n, &mut rng);
            let ba = b.mul(&a).unwrap();
            let ba_inv = match inverse(&ba, 1e-8) {
                Ok(x) => x,
                Err(_) => continue,
            };
            let p = a.mul(&ba_inv).unwrap().mul(&b).unwrap();
            let idem = p.mul(&p).unwrap().sub(&p).unwrap().max_abs();
            if idem > 1e-10 {
                continue;
            }
            assert!(svd_reconstruction_error(&p) <= 1e-12 * p.max_abs().max(1.0));
            // range basis is fixed by p pointwise
            let basis = idempotent_range_basis(&p);
            assert_eq!(basis.cols(), r);
            let fixed = p.mul(&basis).unwrap().sub(&basis).unwrap().max_abs();
            assert!(fixed <= 1e-10, "range not fixed: {fixed:e}");
        }
    }

    #[test]
    fn svd_reconstructs_dense_256() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(256, 256, &mut rng);
        let err = svd_reconstruction_error(&m);
        let scale = singular_values(&m)[0];
        assert!(
            err <= 1e-12 * scale,
            "reconstruction error {err:e} at scale {scale:e}"
        );
    }

    #[test]
    fn spectral_norm_exact_on_phased_permutation_512() {
        // a diagonal matrix conjugated by phased permutations is exactly
        // known: its singular values are the diagonal moduli
        let n = 512;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut diag: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..9.0)).collect();
        let smax = diag.iter().copied().fold(0.0, f64::max);
        let mut left: Vec<usize> = (0..n).collect();
        let mut right: Vec<usize> = (0..n).collect();
        // Fisher-Yates with the seeded generator
        for i in (1..n).rev() {
            left.swap(i, rng.random_range(0..=i));
            right.swap(i, rng.random_range(0..=i));
        }
        let mut m = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            let phase = Complex64::from_polar(1.0, rng.random_range(-3.0..3.0));
            m.set(left[j], right[j], phase * c(diag[j], 0.0));
        }
        diag.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let got = spectral_norm(&m);
        assert!((got - smax).abs() <= 1e-12 * smax);
    }

    #[test]
    fn spectral_norm_identity_and_zero() {
        assert_eq!(spectral_norm(&ComplexMatrix::identity(3)), 1.0);
        assert_eq!(spectral_norm(&ComplexMatrix::zeros(5, 2)), 0.0);
        assert_eq!(spectral_norm(&ComplexMatrix::zeros(0, 0)), 0.0);
    }

    #[test]
    fn spectral_norm_diagonal_is_max_modulus() {
        // singular values of a diagonal matrix are the entry moduli
        let mut m = ComplexMatrix::zeros(2, 2);
        m.set(0, 0, c(3.0, 0.0));
        m.set(1, 1, c(0.0, 4.0));
        assert!((spectral_norm(&m) - 4.0).abs() < 1e-12 * 4.0);
    }

    #[test]
    fn solve_identity_and_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = random_matrix(4, 3, &mut rng);
        let x = solve(&ComplexMatrix::identity(4), &b, 1e-8).unwrap();
        assert!(x.sub(&b).unwrap().frobenius_norm() < 1e-12);

        let two = ComplexMatrix::identity(4).scale(c(2.0, 0.0));
        let x = solve(&two, &ComplexMatrix::identity(4), 1e-8).unwrap();
        let expected = ComplexMatrix::identity(4).scale(c(0.5, 0.0));
        assert!(x.sub(&expected).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn solve_rank_deficient_is_singular() {
        let mut m = ComplexMatrix::zeros(3, 3);
        m.set(0, 0, c(1.0, 0.0));
        m.set(1, 1, c(1.0, 0.0));
        let b = ComplexMatrix::identity(3);
        assert!(matches!(solve(&m, &b, 1e-8), Err(Error::Singular)));
    }

    #[test]
    fn lu_solve_matches_svd_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..40 {
            let n = rng.random_range(1..12);
            let m = random_matrix(n, n, &mut rng);
            let b = random_matrix(n, 2, &mut rng);
            // either route may reject an ill-conditioned draw
            if let (Ok(x1), Ok(x2)) = (lu_solve(&m, &b, 1e-8), solve(&m, &b, 1e-8)) {
                assert!(x1.sub(&x2).unwrap().max_abs() <= 1e-8 * x2.max_abs().max(1.0));
            }
        }
        assert!(matches!(
            lu_solve(
                &ComplexMatrix::zeros(3, 3),
                &ComplexMatrix::identity(3),
                1e-8
            ),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn least_squares_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = random_matrix(5, 2, &mut rng);
        let x = least_squares(&ComplexMatrix::identity(5), &b).unwrap();
        assert!(x.sub(&b).unwrap().frobenius_norm() < 1e-12);

        let zero = ComplexMatrix::zeros(5, 4);
        let x = least_squares(&zero, &b).unwrap();
        assert_eq!(x.frobenius_norm(), 0.0);
    }

    #[test]
    fn least_squares_recovers_consistent_overdetermined() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_matrix(8, 3, &mut rng);
        let x0 = random_matrix(3, 2, &mut rng);
        let b = m.mul(&x0).unwrap();
        let x = least_squares(&m, &b).unwrap();
        assert!(x.sub(&x0).unwrap().frobenius_norm() < 1e-9);
        let residual = m.mul(&x).unwrap().sub(&b).unwrap().frobenius_norm();
        assert!(residual < 1e-10);
    }

    #[test]
    fn column_space_basis_ranks() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        // rank-1 outer product
        let u = random_matrix(6, 1, &mut rng);
        let v = random_matrix(1, 4, &mut rng);
        let m = u.mul(&v).unwrap();
        assert_eq!(column_space_basis(&m, 1e-8).cols(), 1);

        assert_eq!(
            column_space_basis(&ComplexMatrix::identity(5), 1e-8).cols(),
            5
        );

        // forced rank r by construction
        let r = 3;
        let a = random_matrix(7, r, &mut rng);
        let b = random_matrix(r, 6, &mut rng);
        let m = a.mul(&b).unwrap();
        let q = column_space_basis(&m, 1e-8);
        assert_eq!(q.cols(), r);
        // orthonormality
        let gram = q.adjoint().mul(&q).unwrap();
        let defect = gram.sub(&ComplexMatrix::identity(r)).unwrap();
        assert!(spectral_norm(&defect) <= 1e-10);
    }

    #[test]
    fn null_space_of_zero_and_full_rank() {
        assert_eq!(
            null_space_basis(&ComplexMatrix::zeros(3, 4), 1e-8).cols(),
            4
        );
        assert_eq!(
            null_space_basis(&ComplexMatrix::identity(4), 1e-8).cols(),
            0
        );
        // wide matrix: null space dimension is cols - rank
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let m = random_matrix(3, 7, &mut rng);
        let ns = null_space_basis(&m, 1e-8);
        assert_eq!(ns.cols(), 4);
        assert!(spectral_norm(&m.mul(&ns).unwrap()) <= 1e-12 * spectral_norm(&m));
    }

    #[test]
    fn adjoint_preserves_spectral_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let rows = rng.random_range(1..12);
            let cols = rng.random_range(1..12);
            let m = random_matrix(rows, cols, &mut rng);
            let a = spectral_norm(&m);
            let b = spectral_norm(&m.adjoint());
            assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        }
    }

    #[test]
    fn solve_then_multiply_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let n = rng.random_range(1..12);
            let m = random_matrix(n, n, &mut rng);
            let b = random_matrix(n, rng.random_range(1..4), &mut rng);
            match solve(&m, &b, 1e-8) {
                Ok(x) => {
                    let res = m.mul(&x).unwrap().sub(&b).unwrap().frobenius_norm();
                    assert!(res <= 1e-10 * b.frobenius_norm().max(1e-300));
                }
                Err(Error::Singular) => {}
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
    }

    #[test]
    fn from_data_rejects_nan() {
        let r = ComplexMatrix::from_data(1, 1, vec![c(f64::NAN, 0.0)]);
        assert!(matches!(r, Err(Error::NonFinite)));
    }
}
