//! Hermitian matrix kernel: positivity tests, Loewner order, principal
//! square roots and Cholesky-backed solves.
//!
//! Every comparison in the crate funnels through [`min_eigenvalue`] of a
//! difference, so there is exactly one code path deciding `A <= B`.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{NehariError, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative tolerance for accepting a matrix as Hermitian.
const HERMITIAN_TOL: f64 = 1e-12;
/// Relative slack below zero tolerated by [`principal_sqrt`].
const PSD_TOL: f64 = 1e-12;

pub(crate) fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `(m + m*) / 2`.
pub(crate) fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `I_copies ⊗ block` as a dense block-diagonal matrix.
pub(crate) fn kron_identity(block: &CMatrix, copies: usize) -> CMatrix {
    let (r, c) = block.shape();
    let mut out = CMatrix::zeros(r * copies, c * copies);
    for k in 0..copies {
        out.view_mut((k * r, k * c), (r, c)).copy_from(block);
    }
    out
}

/// Dense complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(CMatrix);

impl ComplexMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(NehariError::Input(format!(
                "matrix must be non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !all_finite(&m) {
            return Err(NehariError::Input("matrix has non-finite entries".into()));
        }
        Ok(Self(m))
    }

    /// Builds from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(NehariError::Input(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Self::new(CMatrix::from_row_slice(rows, cols, entries))
    }

    /// Builds a real matrix from rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(NehariError::Input("ragged rows".into()));
        }
        let entries: Vec<C64> = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| C64::new(x, 0.0)))
            .collect();
        Self::from_row_major(r, c, &entries)
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(CMatrix::zeros(rows, cols))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub(crate) fn from_raw(m: CMatrix) -> Self {
        Self(m)
    }
}

/// Square matrix equal to its conjugate transpose.
///
/// Construction symmetrizes to `(a + a*)/2` after checking that the
/// deviation is rounding noise.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(NehariError::Input(format!(
                "Hermitian matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !all_finite(&m) {
            return Err(NehariError::Input("matrix has non-finite entries".into()));
        }
        let dev = max_abs(&(&m - m.adjoint()));
        let tol = HERMITIAN_TOL * (1.0 + max_abs(&m));
        if dev > tol {
            return Err(NehariError::Input(format!(
                "matrix is not Hermitian (deviation {dev:e} > {tol:e})"
            )));
        }
        Ok(Self(symmetrize(&m)))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_rows(rows)?.into_inner())
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::new(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self(CMatrix::identity(n, n).scale(s))
    }

    /// Symmetrizes a matrix that is Hermitian by construction (products of
    /// the form `X A X*`, sums of such), skipping the deviation check.
    pub(crate) fn from_hermitian_product(m: CMatrix) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(symmetrize(&m))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    /// `I_copies ⊗ self`.
    pub fn kron_identity(&self, copies: usize) -> Self {
        Self(kron_identity(&self.0, copies))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    /// `x · self · x*`.
    pub fn congruence(&self, x: &CMatrix) -> Self {
        Self::from_hermitian_product(x * &self.0 * x.adjoint())
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(self)
    }
}

/// Strong positivity margin `δ > 0` in `a > δ I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivityMargin(f64);

impl PositivityMargin {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(NehariError::Input(format!(
                "positivity margin must be finite and > 0, got {delta}"
            )));
        }
        Ok(Self(delta))
    }

    pub fn delta(self) -> f64 {
        self.0
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &HermitianMatrix) -> f64 {
    SymmetricEigen::new(a.0.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `min_eigenvalue(a) > δ`.
pub fn is_strongly_positive(a: &HermitianMatrix, margin: PositivityMargin) -> bool {
    min_eigenvalue(a) > margin.0
}

/// `a <= b` in the Loewner order, i.e. `min_eigenvalue(b - a) >= -tol`.
pub fn loewner_leq(a: &HermitianMatrix, b: &HermitianMatrix, tol: f64) -> Result<bool> {
    if a.order() != b.order() {
        return Err(NehariError::Input(format!(
            "order mismatch in Loewner comparison: {} vs {}",
            a.order(),
            b.order()
        )));
    }
    if !(tol >= 0.0) {
        return Err(NehariError::Input(format!(
            "tolerance must be >= 0, got {tol}"
        )));
    }
    Ok(min_eigenvalue(&b.sub(a)) >= -tol)
}

/// Principal (positive semidefinite) square root.
///
/// Eigenvalues down to `-1e-12 · (1 + spectral radius)` are clamped to zero.
pub fn principal_sqrt(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = SymmetricEigen::new(a.0.clone());
    let radius = eig
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, l| acc.max(l.abs()));
    let min = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let tol = PSD_TOL * (1.0 + radius);
    if min < -tol {
        return Err(NehariError::NotPsd { min_eig: min, tol });
    }
    let v = &eig.eigenvectors;
    let roots = eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    let s = v * CMatrix::from_diagonal(&roots) * v.adjoint();
    Ok(HermitianMatrix::from_hermitian_product(s))
}

/// Solves `a x = b` for strongly positive `a` through a Cholesky factor.
pub fn solve_strongly_positive(
    a: &HermitianMatrix,
    b: &ComplexMatrix,
    margin: PositivityMargin,
) -> Result<ComplexMatrix> {
    if a.order() != b.rows() {
        return Err(NehariError::Input(format!(
            "solve shape mismatch: order {} vs {} right-hand-side rows",
            a.order(),
            b.rows()
        )));
    }
    Ok(ComplexMatrix(solve_raw(a, &b.0, margin)?))
}

/// Checked Cholesky factorization; the positivity test goes through the
/// eigenvalue path like every other comparison.
pub(crate) fn factor_strongly_positive(
    a: &HermitianMatrix,
    margin: PositivityMargin,
) -> Result<Cholesky<C64, nalgebra::Dyn>> {
    let min_eig = min_eigenvalue(a);
    if !(min_eig > margin.0) {
        return Err(NehariError::Precondition {
            min_eig,
            margin: margin.0,
        });
    }
    Cholesky::new(a.0.clone()).ok_or(NehariError::Precondition {
        min_eig,
        margin: margin.0,
    })
}

pub(crate) fn solve_raw(
    a: &HermitianMatrix,
    b: &CMatrix,
    margin: PositivityMargin,
) -> Result<CMatrix> {
    Ok(factor_strongly_positive(a, margin)?.solve(b))
}
