//! Block-Hankel assembly: `Γ = {γ_{j+k-1}}`, its 2×2 block split and the
//! Gram blocks of `Γ*Γ`.

use crate::error::{NehariError, Result};
use crate::linalg::{CMatrix, ComplexMatrix, HermitianMatrix};

/// Finitely supported sequence `γ_1..γ_K` of square `m×m` blocks; `γ_k = 0`
/// for `k > K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSequence {
    block_dim: usize,
    coefficients: Vec<ComplexMatrix>,
}

impl CoefficientSequence {
    pub fn new(coefficients: Vec<ComplexMatrix>) -> Result<Self> {
        let first = coefficients
            .first()
            .ok_or_else(|| NehariError::Input("coefficient sequence must be non-empty".into()))?;
        let m = first.rows();
        for (k, c) in coefficients.iter().enumerate() {
            if c.rows() != m || c.cols() != m {
                return Err(NehariError::Input(format!(
                    "coefficient {k} is {}x{}, expected {m}x{m}",
                    c.rows(),
                    c.cols()
                )));
            }
        }
        Ok(Self {
            block_dim: m,
            coefficients,
        })
    }

    /// Scalar sequence with real entries.
    pub fn from_real_scalars(values: &[f64]) -> Result<Self> {
        values
            .iter()
            .map(|&v| ComplexMatrix::from_real_rows(&[&[v]]))
            .collect::<Result<Vec<_>>>()
            .and_then(Self::new)
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Support length `K`.
    pub fn support_len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[ComplexMatrix] {
        &self.coefficients
    }

    /// `γ_k` with 1-based index; zero beyond the support.
    pub fn gamma(&self, k: usize) -> CMatrix {
        match k.checked_sub(1).and_then(|i| self.coefficients.get(i)) {
            Some(c) => c.as_matrix().clone(),
            None => CMatrix::zeros(self.block_dim, self.block_dim),
        }
    }

    /// Smallest block order that is exact for this sequence and still admits
    /// the 2×2 partition: `max(K, 2)`.
    pub fn default_block_order(&self) -> usize {
        self.support_len().max(2)
    }

    /// Truncates at `n`, partitions and forms the Gram blocks in one go.
    pub fn gram_blocks(&self, n: usize) -> Result<(TruncatedHankel, GramBlocks)> {
        let h = build_truncated_hankel(self, n)?;
        let g = gram_blocks(&partition(&h)?);
        Ok((h, g))
    }
}

/// Dense `Nm×Nm` truncation of the block-Hankel operator.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedHankel {
    block_order: usize,
    block_dim: usize,
    matrix: CMatrix,
}

impl TruncatedHankel {
    pub fn block_order(&self) -> usize {
        self.block_order
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Block `(j, k)`, 1-based.
    pub fn block(&self, j: usize, k: usize) -> CMatrix {
        let m = self.block_dim;
        self.matrix
            .view(((j - 1) * m, (k - 1) * m), (m, m))
            .into_owned()
    }
}

/// `Γ = [[γ₁, B_r], [B_c, Γ₁]]` where `Γ₁` is the trailing block submatrix
/// (block `(j,k)` of `Γ₁` is `γ_{j+k+1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct HankelPartition {
    block_dim: usize,
    inner_order: usize,
    pub gamma1: CMatrix,
    /// `m × (N-1)m` block row `[γ₂, …, γ_N]`.
    pub b_row: CMatrix,
    /// `(N-1)m × m` block column.
    pub b_col: CMatrix,
    /// `(N-1)m × (N-1)m`.
    pub gamma1_shifted: CMatrix,
}

impl HankelPartition {
    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn inner_order(&self) -> usize {
        self.inner_order
    }

    pub fn reassemble(&self) -> CMatrix {
        let m = self.block_dim;
        let n = m * (self.inner_order + 1);
        let mut out = CMatrix::zeros(n, n);
        out.view_mut((0, 0), (m, m)).copy_from(&self.gamma1);
        out.view_mut((0, m), (m, n - m)).copy_from(&self.b_row);
        out.view_mut((m, 0), (n - m, m)).copy_from(&self.b_col);
        out.view_mut((m, m), (n - m, n - m))
            .copy_from(&self.gamma1_shifted);
        out
    }
}

/// Hermitian blocks of `Γ*Γ = [[A₁₁, A₁₂], [A₁₂*, A₂₂]]`.
///
/// Also used for the reduced problems produced by kernel reduction, which
/// share the same shape (`m×m`, `m×(N-1)m`, `(N-1)m×(N-1)m`).
#[derive(Debug, Clone, PartialEq)]
pub struct GramBlocks {
    pub a11: HermitianMatrix,
    pub a12: ComplexMatrix,
    pub a22: HermitianMatrix,
    block_dim: usize,
    inner_order: usize,
}

impl GramBlocks {
    pub fn from_parts(
        a11: HermitianMatrix,
        a12: ComplexMatrix,
        a22: HermitianMatrix,
    ) -> Result<Self> {
        let m = a11.order();
        if a12.rows() != m || a12.cols() != a22.order() || !a22.order().is_multiple_of(m) {
            return Err(NehariError::Input(format!(
                "inconsistent Gram block shapes: A11 {m}x{m}, A12 {}x{}, A22 order {}",
                a12.rows(),
                a12.cols(),
                a22.order()
            )));
        }
        Ok(Self {
            block_dim: m,
            inner_order: a22.order() / m,
            a11,
            a12,
            a22,
        })
    }

    /// Scalar blocks `(A₁₁, A₁₂, A₂₂)` with inner order 1.
    pub fn scalar(a11: f64, a12: f64, a22: f64) -> Result<Self> {
        Self::from_parts(
            HermitianMatrix::from_real_rows(&[&[a11]])?,
            ComplexMatrix::from_real_rows(&[&[a12]])?,
            HermitianMatrix::from_real_rows(&[&[a22]])?,
        )
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn inner_order(&self) -> usize {
        self.inner_order
    }

    /// `1 + ‖A₁₁‖_F + ‖A₂₂‖_F`, the reference magnitude for tolerances.
    pub fn scale(&self) -> f64 {
        1.0 + self.a11.frobenius_norm() + self.a22.frobenius_norm()
    }

    /// Reassembled `[[A₁₁, A₁₂], [A₁₂*, A₂₂]]`.
    pub fn assemble(&self) -> HermitianMatrix {
        let m = self.block_dim;
        let n = m + self.a22.order();
        let mut out = CMatrix::zeros(n, n);
        out.view_mut((0, 0), (m, m)).copy_from(self.a11.as_matrix());
        out.view_mut((0, m), (m, n - m))
            .copy_from(self.a12.as_matrix());
        out.view_mut((m, 0), (n - m, m))
            .copy_from(&self.a12.as_matrix().adjoint());
        out.view_mut((m, m), (n - m, n - m))
            .copy_from(self.a22.as_matrix());
        HermitianMatrix::from_hermitian_product(out)
    }
}

/// Dense truncation with block `(j,k) = γ_{j+k-1}`.
pub fn build_truncated_hankel(coeffs: &CoefficientSequence, n: usize) -> Result<TruncatedHankel> {
    if n < 1 {
        return Err(NehariError::Input("block order must be at least 1".into()));
    }
    let m = coeffs.block_dim();
    let mut matrix = CMatrix::zeros(n * m, n * m);
    for j in 1..=n {
        for k in 1..=n {
            let idx = j + k - 1;
            if idx <= coeffs.support_len() {
                matrix
                    .view_mut(((j - 1) * m, (k - 1) * m), (m, m))
                    .copy_from(&coeffs.gamma(idx));
            }
        }
    }
    Ok(TruncatedHankel {
        block_order: n,
        block_dim: m,
        matrix,
    })
}

pub fn partition(h: &TruncatedHankel) -> Result<HankelPartition> {
    if h.block_order < 2 {
        return Err(NehariError::PartitionUndefined(h.block_order));
    }
    let m = h.block_dim;
    let n = h.matrix.nrows();
    Ok(HankelPartition {
        block_dim: m,
        inner_order: h.block_order - 1,
        gamma1: h.matrix.view((0, 0), (m, m)).into_owned(),
        b_row: h.matrix.view((0, m), (m, n - m)).into_owned(),
        b_col: h.matrix.view((m, 0), (n - m, m)).into_owned(),
        gamma1_shifted: h.matrix.view((m, m), (n - m, n - m)).into_owned(),
    })
}

/// `A₁₁ = γ₁*γ₁ + B_c*B_c`, `A₁₂ = γ₁*B_r + B_c*Γ₁`, `A₂₂ = Γ₁*Γ₁ + B_r*B_r`.
pub fn gram_blocks(p: &HankelPartition) -> GramBlocks {
    let g1a = p.gamma1.adjoint();
    let bca = p.b_col.adjoint();
    let a11 = &g1a * &p.gamma1 + &bca * &p.b_col;
    let a12 = &g1a * &p.b_row + &bca * &p.gamma1_shifted;
    let a22 = p.gamma1_shifted.adjoint() * &p.gamma1_shifted + p.b_row.adjoint() * &p.b_row;
    let g = GramBlocks {
        a11: HermitianMatrix::from_hermitian_product(a11),
        a12: ComplexMatrix::from_raw(a12),
        a22: HermitianMatrix::from_hermitian_product(a22),
        block_dim: p.block_dim,
        inner_order: p.inner_order,
    };
    debug_assert!({
        let full = p.reassemble();
        let direct = full.adjoint() * &full;
        (g.assemble().as_matrix() - &direct).norm() <= 1e-12 * (1.0 + direct.norm())
    });
    g
}

/// `Γ*Γ`.
pub fn gram_full(h: &TruncatedHankel) -> HermitianMatrix {
    HermitianMatrix::from_hermitian_product(h.matrix.adjoint() * &h.matrix)
}
