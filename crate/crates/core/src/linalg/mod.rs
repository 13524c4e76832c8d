//! Dense complex matrix primitives.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Every external layout (JSON,
//! reports) is row-major; `vec` is column-stacking, so `vec(A)[j*d + i] = A[i, j]`.
//! All superoperator code depends on that convention.

mod dense;
mod schur;

pub use schur::{ComplexSchur, SylvesterError};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Relative tolerance. Comparisons against a quantity of size `s` use
/// `eps * max(1, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub eps: f64,
}

impl Tolerance {
    pub const DEFAULT_EPS: f64 = 1e-8;

    pub fn new(eps: f64) -> Result<Self> {
        if eps.is_nan() || eps < 0.0 || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be a finite nonnegative number, got {eps}"
            )));
        }
        Ok(Tolerance { eps })
    }

    /// Absolute threshold for a quantity whose natural scale is `scale`.
    #[inline]
    pub fn bound(&self, scale: f64) -> f64 {
        self.eps * scale.max(1.0)
    }

    pub fn scaled(&self, factor: f64) -> Tolerance {
        Tolerance { eps: self.eps * factor }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps: Self::DEFAULT_EPS }
    }
}

/// Matrix unit `E_ij`: 1 at row `i`, column `j`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(i, j)] = ONE;
    m
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
}

pub fn diag(entries: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_column_slice(entries))
}

pub fn frobenius(a: &ComplexMatrix) -> f64 {
    a.norm()
}

fn check_same_shape(a: &ComplexMatrix, b: &ComplexMatrix, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "{what}: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

fn check_square(a: &ComplexMatrix, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what}: expected a square matrix, got {:?}",
            a.shape()
        )));
    }
    Ok(a.nrows())
}

/// Hilbert-Schmidt pairing `Tr(A* B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    check_same_shape(a, b, "hs_inner")?;
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn is_hermitian(a: &ComplexMatrix, tol: Tolerance) -> bool {
    a.is_square() && (a - a.adjoint()).norm() <= tol.bound(a.norm())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
/// Only the lower triangle is trusted; callers check Hermiticity.
pub fn eigh(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = a.nrows();
    debug_assert!(a.is_square(), "eigh needs a square matrix, got {n}x{}", a.ncols());
    dense::hermitian_eigen(&(a + a.adjoint()).scale(0.5))
}

/// Smallest eigenvalue of a Hermitian matrix together with its eigenvector.
pub fn min_eigenpair(a: &ComplexMatrix) -> (f64, ComplexVector) {
    let (values, vectors) = eigh(a);
    (values[0], vectors.column(0).into_owned())
}

pub fn is_psd(a: &ComplexMatrix, tol: Tolerance) -> Result<bool> {
    check_square(a, "is_psd")?;
    if !is_hermitian(a, tol) {
        return Err(Error::Contract(format!(
            "is_psd requires a Hermitian matrix; anti-Hermitian part has norm {:e}",
            (a - a.adjoint()).norm() / 2.0
        )));
    }
    let (values, _) = eigh(a);
    let spectral = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(values[0] >= -tol.bound(spectral))
}

/// Partial transpose on the right tensor factor of an operator on `C^dl ⊗ C^dr`:
/// each `dr × dr` block is transposed in place.
pub fn partial_transpose(m: &ComplexMatrix, dl: usize, dr: usize) -> Result<ComplexMatrix> {
    let n = dl * dr;
    if m.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "partial_transpose: {:?} is not {n}x{n} for factors {dl}⊗{dr}",
            m.shape()
        )));
    }
    Ok(ComplexMatrix::from_fn(n, n, |row, col| {
        let (a, b) = (row / dr, row % dr);
        let (cc, e) = (col / dr, col % dr);
        m[(a * dr + e, cc * dr + b)]
    }))
}

/// Column-stacking vectorization.
pub fn vec(a: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(a.as_slice())
}

pub fn unvec(v: &ComplexVector, d: usize) -> Result<ComplexMatrix> {
    if v.len() != d * d {
        return Err(Error::Dimension(format!(
            "unvec: length {} is not {d}²",
            v.len()
        )));
    }
    Ok(ComplexMatrix::from_column_slice(d, d, v.as_slice()))
}

/// `unvec` with the dimension inferred from the length.
pub fn unvec_square(v: &ComplexVector) -> Result<ComplexMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::Dimension(format!(
            "unvec: length {} is not a perfect square",
            v.len()
        )));
    }
    unvec(v, d)
}

fn stack_columns(mats: &[ComplexMatrix]) -> ComplexMatrix {
    let n = mats[0].len();
    let mut out = ComplexMatrix::zeros(n, mats.len());
    for (k, m) in mats.iter().enumerate() {
        out.column_mut(k).copy_from_slice(m.as_slice());
    }
    out
}

/// HS-orthonormal basis of `span(mats)`. The rank cut is `eps * s_max` on
/// the singular values of the stacked vectorizations.
pub fn orthonormal_span(mats: &[ComplexMatrix], tol: Tolerance) -> Result<Vec<ComplexMatrix>> {
    let Some(first) = mats.first() else {
        return Ok(Vec::new());
    };
    for m in mats {
        check_same_shape(first, m, "orthonormal_span")?;
    }
    let (rows, cols) = first.shape();
    let stacked = stack_columns(mats);
    let f = dense::svd(&stacked);
    let s_max = f.s.first().copied().unwrap_or(0.0);
    if s_max == 0.0 {
        return Ok(Vec::new());
    }
    let cut = tol.eps * s_max;
    Ok(f.s
        .iter()
        .take_while(|&&s| s > cut)
        .enumerate()
        .map(|(k, _)| ComplexMatrix::from_column_slice(rows, cols, f.u.column(k).as_slice()))
        .collect())
}

/// Orthonormal basis of the right nullspace of `a`: singular values at most
/// `eps * max(1, s_max)` count as zero.
pub fn nullspace(a: &ComplexMatrix, tol: Tolerance) -> Vec<ComplexVector> {
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    let f = dense::svd(a);
    let cut = tol.bound(f.s.first().copied().unwrap_or(0.0));
    (0..n)
        .filter(|&k| f.s.get(k).is_none_or(|&s| s <= cut))
        .map(|k| f.v.column(k).into_owned())
        .collect()
}

/// Frobenius norm of the component of `x` orthogonal to the span of an
/// HS-orthonormal `basis`.
pub fn span_residual(basis: &[ComplexMatrix], x: &ComplexMatrix) -> f64 {
    let mut r = x.clone();
    for b in basis {
        let coeff: C64 = b.iter().zip(x.iter()).map(|(p, q)| p.conj() * q).sum();
        r -= b * coeff;
    }
    r.norm()
}

/// Tensor product `a ⊗ b` with `a` as the left (outer block) factor.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Conjugate each element.
pub fn conj(a: &ComplexMatrix) -> ComplexMatrix {
    a.map(|z| z.conj())
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.trace()
}

/// Isometry onto the range of a (numerically) rank-`r` projection.
pub fn range_isometry(p: &ComplexMatrix, tol: Tolerance) -> ComplexMatrix {
    let (values, vectors) = eigh(p);
    let cols: Vec<usize> = (0..values.len())
        .filter(|&k| values[k] > 0.5 + tol.eps)
        .collect();
    ComplexMatrix::from_fn(p.nrows(), cols.len(), |i, k| vectors[(i, cols[k])])
}
