//! Small dense real matrices plus the Lyapunov and game-Riccati solvers
//! behind every analytic gain in the crate.
//!
//! Matrices are row-major and always finite. Heavy factorizations (LU,
//! Schur, SVD) are delegated to `nalgebra`; everything else is plain loops,
//! which is plenty for the n <= 10 systems this crate targets.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::LinalgError;

/// Real parts at or above this value are treated as not strictly stable.
pub const HURWITZ_MARGIN: f64 = -1e-10;

const NEWTON_MAX_ITERS: usize = 200;
const SIGN_MAX_ITERS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Mat {
    /// Builds a matrix from row-major entries, rejecting empty shapes,
    /// length mismatches, and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyShape);
        }
        if rows * cols != data.len() {
            return Err(LinalgError::EntryCount {
                rows,
                cols,
                len: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(LinalgError::RaggedRows);
        }
        Self::new(nrows, ncols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix shape must be non-empty");
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
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn column(v: &[f64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
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

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Matrix-vector product; panics on a length mismatch.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| dot(self.row(i), v))
            .collect()
    }

    /// `selfᵀ·v` without forming the transpose.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tr_mul_vec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn symmetrize(&self) -> Self {
        (self + &self.transpose()).scale(0.5)
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == 0.0))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.is_square()
            && (self - &self.transpose()).frobenius() <= rel_tol * self.frobenius().max(f64::MIN_POSITIVE)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn to_na(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_na(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }

    /// Inverse via LU with partial pivoting.
    pub fn inverse(&self) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare(self.rows, self.cols));
        }
        let inv = self.to_na().try_inverse().ok_or(LinalgError::Singular)?;
        let out = Self::from_na(&inv);
        if !out.is_finite() {
            return Err(LinalgError::Singular);
        }
        Ok(out)
    }

    /// Eigenvalues of a general real square matrix.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        assert!(self.is_square(), "eigenvalues of a non-square matrix");
        let schur = nalgebra::linalg::Schur::new(self.to_na());
        schur.complex_eigenvalues().iter().copied().collect()
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        let sym = self.symmetrize().to_na();
        let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_hurwitz(&self) -> bool {
        self.spectral_abscissa() < HURWITZ_MARGIN
    }

    /// True when every eigenvalue of the symmetric part is strictly positive.
    pub fn is_positive_definite(&self) -> bool {
        self.is_square() && self.symmetric_eigenvalues()[0] > 0.0
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!(self.shape(), rhs.shape(), "add dimension mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!(self.shape(), rhs.shape(), "sub dimension mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Mat {
    type Output = Mat;
    fn neg(self) -> Mat {
        self.scale(-1.0)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// `v ↦ vᵀ·W·v` for a square `W`.
pub fn quad_form(w: &Mat, v: &[f64]) -> f64 {
    dot(v, &w.mul_vec(v))
}

/// Solves `A·X + X·Aᵀ + Qs = 0` by vectorization:
/// `(I ⊗ A + A ⊗ I)·vec(X) = −vec(Qs)` with column-stacked `vec`.
pub fn lyap_solve(a: &Mat, qs: &Mat) -> Result<Mat, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare(a.rows, a.cols));
    }
    let n = a.rows;
    if qs.shape() != (n, n) {
        return Err(LinalgError::DimensionMismatch {
            expected: (n, n),
            found: qs.shape(),
        });
    }
    let nn = n * n;
    // Entry (i, j) of X lives at index j*n + i of vec(X).
    let mut kron = DMatrix::<f64>::zeros(nn, nn);
    for j in 0..n {
        for i in 0..n {
            let row = j * n + i;
            // (A·X)_{ij} = Σ_k A_{ik} X_{kj}
            for k in 0..n {
                kron[(row, j * n + k)] += a[(i, k)];
            }
            // (X·Aᵀ)_{ij} = Σ_k X_{ik} A_{jk}
            for k in 0..n {
                kron[(row, k * n + i)] += a[(j, k)];
            }
        }
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(nn);
    for j in 0..n {
        for i in 0..n {
            rhs[j * n + i] = -qs[(i, j)];
        }
    }

    let lu = kron.full_piv_lu();
    let u_diag: Vec<f64> = lu.u().diagonal().iter().map(|d| d.abs()).collect();
    let max_pivot = u_diag.iter().copied().fold(0.0, f64::max);
    let min_pivot = u_diag.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max_pivot > 0.0) || min_pivot <= 1e-13 * max_pivot {
        return Err(LinalgError::SingularSylvester);
    }
    let sol = lu.solve(&rhs).ok_or(LinalgError::SingularSylvester)?;

    let mut x = Mat::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            x[(i, j)] = sol[j * n + i];
        }
    }
    if !x.is_finite() {
        return Err(LinalgError::SingularSylvester);
    }
    Ok(x.symmetrize())
}

/// Residual `A·P + P·Aᵀ + Qn − P·M·P` of the game algebraic Riccati equation.
pub fn gare_residual(a: &Mat, m: &Mat, qn: &Mat, p: &Mat) -> Mat {
    let ap = a * p;
    let pmp = &(p * m) * p;
    &(&(&ap + &ap.transpose()) + qn) - &pmp
}

/// Diagnostics collected while solving the GARE.
#[derive(Debug, Clone)]
pub struct GareReport {
    pub p: Mat,
    pub residual: f64,
    pub iterations: usize,
    /// Residual Frobenius norm after each Newton step.
    pub residual_history: Vec<f64>,
    pub init: GareInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GareInit {
    Zero,
    ScaledIdentity(u32),
    SignFunction,
}

/// Solves `A·P + P·Aᵀ + Qn − P·M·P = 0` for the stabilizing solution.
pub fn gare_solve(a: &Mat, m: &Mat, qn: &Mat) -> Result<Mat, LinalgError> {
    gare_solve_report(a, m, qn).map(|r| r.p)
}

/// Newton–Kleinman iteration from a stabilizing start:
/// `(A − P_k·M)·P_{k+1} + P_{k+1}·(A − P_k·M)ᵀ + Qn + P_k·M·P_k = 0`.
pub fn gare_solve_report(a: &Mat, m: &Mat, qn: &Mat) -> Result<GareReport, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare(a.rows, a.cols));
    }
    let n = a.rows;
    for mat in [m, qn] {
        if mat.shape() != (n, n) {
            return Err(LinalgError::DimensionMismatch {
                expected: (n, n),
                found: mat.shape(),
            });
        }
    }
    let m = m.symmetrize();
    let qn = qn.symmetrize();
    let scale = 1.0 + qn.frobenius();
    let accept = 1e-9 * scale;
    let target = 1e-13 * scale;

    let (mut p, init) = stabilizing_init(a, &m, &qn)?;
    let mut history = Vec::new();
    let mut best: Option<(Mat, f64)> = None;
    let mut iterations = 0;

    for _ in 0..NEWTON_MAX_ITERS {
        iterations += 1;
        let closed = a - &(&p * &m);
        let rhs = &qn + &(&(&p * &m) * &p);
        let next = match lyap_solve(&closed, &rhs) {
            Ok(x) => x,
            Err(_) => break,
        };
        p = next.symmetrize();
        let res = gare_residual(a, &m, &qn, &p).frobenius();
        history.push(res);
        if !res.is_finite() {
            break;
        }
        let improved = best.as_ref().is_none_or(|(_, r)| res < *r);
        if improved {
            best = Some((p.clone(), res));
        }
        if res <= target {
            break;
        }
        // Converged to rounding level: further steps only shuffle noise.
        if history.len() >= 3 && res <= accept && !improved {
            break;
        }
    }

    let (p, residual) = best.ok_or(LinalgError::NewtonDiverged {
        residual: f64::NAN,
        reason: "no Newton step produced a finite iterate",
    })?;
    if residual > accept {
        return Err(LinalgError::NewtonDiverged {
            residual,
            reason: "residual did not contract below tolerance",
        });
    }
    if !(a - &(&p * &m)).is_hurwitz() {
        return Err(LinalgError::NewtonDiverged {
            residual,
            reason: "converged solution is not stabilizing",
        });
    }
    if !p.is_positive_definite() {
        return Err(LinalgError::NewtonDiverged {
            residual,
            reason: "converged solution is not positive definite",
        });
    }
    Ok(GareReport {
        p,
        residual,
        iterations,
        residual_history: history,
        init,
    })
}

fn stabilizing_init(a: &Mat, m: &Mat, qn: &Mat) -> Result<(Mat, GareInit), LinalgError> {
    let n = a.rows;
    if a.is_hurwitz() {
        return Ok((Mat::zeros(n, n), GareInit::Zero));
    }
    for k in 0..=16u32 {
        let p0 = Mat::identity(n).scale(f64::from(1u32 << k));
        if (a - &(&p0 * m)).is_hurwitz() {
            return Ok((p0, GareInit::ScaledIdentity(k)));
        }
    }
    if let Some(p0) = sign_function_estimate(a, m, qn) {
        if (a - &(&p0 * m)).is_hurwitz() {
            return Ok((p0, GareInit::SignFunction));
        }
    }
    Err(LinalgError::NoStabilizingInit)
}

/// Stable-subspace estimate of the GARE solution from the matrix sign of
/// the Hamiltonian `[[Aᵀ, −M], [−Qn, −A]]`, computed by the scaled Newton
/// iteration `Z ← (cZ + (cZ)⁻¹)/2`.
fn sign_function_estimate(a: &Mat, m: &Mat, qn: &Mat) -> Option<Mat> {
    let n = a.rows;
    let at = a.transpose();
    let mut z = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            z[(i, j)] = at[(i, j)];
            z[(i, n + j)] = -m[(i, j)];
            z[(n + i, j)] = -qn[(i, j)];
            z[(n + i, n + j)] = -a[(i, j)];
        }
    }
    let dim = 2.0 * n as f64;
    for _ in 0..SIGN_MAX_ITERS {
        let inv = z.clone().try_inverse()?;
        let det = z.determinant().abs();
        let c = if det > 0.0 && det.is_finite() {
            det.powf(-1.0 / dim)
        } else {
            1.0
        };
        let next = (&z * c + &inv * (1.0 / c)) * 0.5;
        let delta = (&next - &z).norm() / next.norm();
        z = next;
        if delta < 1e-13 {
            break;
        }
    }
    // Stable subspace = null(S + I): [S12; S22 + I]·P = −[S11 + I; S21].
    let mut lhs = DMatrix::<f64>::zeros(2 * n, n);
    let mut rhs = DMatrix::<f64>::zeros(2 * n, n);
    for i in 0..2 * n {
        for j in 0..n {
            lhs[(i, j)] = z[(i, n + j)] + if i == n + j { 1.0 } else { 0.0 };
            rhs[(i, j)] = -(z[(i, j)] + if i == j { 1.0 } else { 0.0 });
        }
    }
    let svd = lhs.svd(true, true);
    let sol = svd.solve(&rhs, 1e-12).ok()?;
    let p = Mat::from_na(&sol).symmetrize();
    p.is_finite().then_some(p)
}
