//! Dense Hermitian matrices over `Complex64`.
//!
//! Everything downstream (metrics, their inverses, Ricci tensors and the
//! diastasis coefficient blocks) is stored as a [`HermitianMatrix`]. The
//! conjugate symmetry is enforced once, on construction, so that eigenvalues
//! are real and the symmetric eigen-solver applies.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`HermitianMatrix::new`] before symmetrizing.
pub const HERMITIAN_ASYMMETRY_TOL: f64 = 1e-12;

/// Relative factor of the default PSD threshold `1e-10 * (1 + max |entry|)`.
pub const DEFAULT_PSD_RELATIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: DMatrix<Complex64>,
}

/// Outcome of a positive-semidefiniteness test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdVerdict {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    /// Count of eigenvalues above `tolerance`; a numeric rank, not an exact one.
    pub numeric_rank: usize,
    pub tolerance: f64,
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl HermitianMatrix {
    /// Checked constructor: the input must be Hermitian up to
    /// `1e-12 * max |entry|`; the residual asymmetry is then averaged away.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        let scale = max_abs(&m);
        let asym = max_abs(&(&m - m.adjoint()));
        if asym > HERMITIAN_ASYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) && asym > 0.0 {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        Ok(Self::symmetrize(m))
    }

    /// `(M + M*) / 2` without any asymmetry check. Used for finite-difference
    /// output, whose asymmetry is at the level of the stencil error.
    pub fn symmetrize(m: DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "square matrix required");
        assert!(m.nrows() > 0, "empty matrix");
        let adj = m.adjoint();
        let mut inner = (m + adj) * Complex64::new(0.5, 0.0);
        for i in 0..inner.nrows() {
            inner[(i, i)].im = 0.0;
        }
        Self { inner }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        Self::new(DMatrix::from_fn(dim, dim, f))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(*d, 0.0);
        }
        Self::symmetrize(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self::symmetrize(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::symmetrize(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.inner[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.inner
    }

    pub fn max_abs_entry(&self) -> f64 {
        max_abs(&self.inner)
    }

    /// Max-norm of `self - other`.
    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        max_abs(&(&self.inner - &other.inner))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { inner: &self.inner * Complex64::new(alpha, 0.0) }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &HermitianMatrix) -> Self {
        Self { inner: &self.inner + &other.inner * Complex64::new(alpha, 0.0) }
    }

    /// Congruence `D M D` with a positive real diagonal `D`.
    pub fn congruence_diagonal(&self, diag: &[f64]) -> Self {
        let n = self.dim();
        Self::symmetrize(DMatrix::from_fn(n, n, |i, j| self.inner[(i, j)] * diag[i] * diag[j]))
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let x = DVector::from_column_slice(v);
        (&self.inner * x).iter().copied().collect()
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.dim();
        let eig = SymmetricEigen::try_new(self.inner.clone(), f64::EPSILON, 1000 * n.max(8))
            .ok_or(Error::EigenNonConvergence { dim: n })?;
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    pub fn default_psd_tolerance(&self) -> f64 {
        DEFAULT_PSD_RELATIVE_TOL * (1.0 + self.max_abs_entry())
    }
}

/// Serialized as a list of rows of `[re, im]` pairs.
impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let mut rows = serializer.serialize_seq(Some(n))?;
        for i in 0..n {
            let row: Vec<[f64; 2]> = (0..n).map(|j| [self.inner[(i, j)].re, self.inner[(i, j)].im]).collect();
            rows.serialize_element(&row)?;
        }
        rows.end()
    }
}

pub fn determinant(m: &HermitianMatrix) -> Complex64 {
    m.as_matrix().clone().determinant()
}

pub fn psd_check(m: &HermitianMatrix, tolerance: f64) -> Result<PsdVerdict> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidInput(format!("PSD tolerance must be positive, got {tolerance}")));
    }
    let ev = m.eigenvalues()?;
    let min_eigenvalue = ev[0];
    Ok(PsdVerdict {
        is_psd: min_eigenvalue >= -tolerance,
        min_eigenvalue,
        numeric_rank: ev.iter().filter(|&&l| l > tolerance).count(),
        tolerance,
    })
}

/// Solves `M x = rhs` for positive definite `M` (Cholesky plus one step of
/// iterative refinement).
pub fn solve_hermitian(m: &HermitianMatrix, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = m.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
    }
    let not_pd = || {
        let min_eigenvalue = m.eigenvalues().map(|ev| ev[0]).unwrap_or(f64::NAN);
        Error::NotPositiveDefinite { min_eigenvalue }
    };
    let chol = Cholesky::new(m.as_matrix().clone()).ok_or_else(not_pd)?;
    // The complex factorization happily takes square roots of negative pivots.
    let pivots_ok = chol.l_dirty().diagonal().iter().all(|d| d.re > 0.0 && d.im.abs() <= 1e-12 * d.re);
    if !pivots_ok {
        return Err(not_pd());
    }
    let b = DVector::from_column_slice(rhs);
    let mut x = chol.solve(&b);
    let r = &b - m.as_matrix() * &x;
    x += chol.solve(&r);
    Ok(x.iter().copied().collect())
}

/// `M^{-1} B` column by column.
pub fn solve_hermitian_matrix(m: &HermitianMatrix, b: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = m.dim();
    let mut out = DMatrix::zeros(n, b.ncols());
    for j in 0..b.ncols() {
        let col: Vec<Complex64> = b.column(j).iter().copied().collect();
        let x = solve_hermitian(m, &col)?;
        for i in 0..n {
            out[(i, j)] = x[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn determinant_of_identity_and_diagonal() {
        assert_eq!(determinant(&HermitianMatrix::identity(2)), c(1.0));
        let m = HermitianMatrix::from_real_diagonal(&[0.75f64.powi(-2), 0.75f64.powi(-1)]);
        let d = determinant(&m);
        assert!((d.re - 0.75f64.powi(-3)).abs() < 1e-12);
        assert!((d.re - 2.370_370_370_370_37).abs() < 1e-12);
        assert!(d.im.abs() <= 1e-12 * d.norm());
    }

    #[test]
    fn psd_examples() {
        let v = psd_check(&HermitianMatrix::from_real_diagonal(&[1.5, 0.0]), 1e-10).unwrap();
        assert!(v.is_psd);
        assert_eq!(v.numeric_rank, 1);

        let v = psd_check(&HermitianMatrix::from_real_diagonal(&[1.5, -1.5]), 1e-10).unwrap();
        assert!(!v.is_psd);
        assert!((v.min_eigenvalue + 1.5).abs() < 1e-14);

        let v = psd_check(&HermitianMatrix::zeros(3), 1e-10).unwrap();
        assert!(v.is_psd);
        assert_eq!(v.numeric_rank, 0);
    }

    #[test]
    fn psd_rejects_nonpositive_tolerance() {
        assert!(psd_check(&HermitianMatrix::identity(1), 0.0).is_err());
    }

    #[test]
    fn solve_examples() {
        let x = solve_hermitian(&HermitianMatrix::identity(2), &[c(1.0), c(2.0)]).unwrap();
        assert_eq!(x, vec![c(1.0), c(2.0)]);
        let x = solve_hermitian(&HermitianMatrix::from_real_diagonal(&[2.0, 4.0]), &[c(2.0), c(4.0)]).unwrap();
        assert!((x[0] - c(1.0)).norm() < 1e-15 && (x[1] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn solve_rejects_indefinite() {
        let err = solve_hermitian(&HermitianMatrix::from_real_diagonal(&[1.0, -2.0]), &[c(1.0), c(1.0)]).unwrap_err();
        match err {
            Error::NotPositiveDefinite { min_eigenvalue } => assert!((min_eigenvalue + 2.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn new_rejects_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.5), c(0.0), c(1.0)]);
        assert!(matches!(HermitianMatrix::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn complex_hermitian_eigenvalues() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3.
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[c(2.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), c(2.0)],
        );
        let ev = HermitianMatrix::new(m).unwrap().eigenvalues().unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }
}
