//! Feasibility of a given deviation bound `ρ`: `Γ*Γ ≤ I ⊗ ρ²`, decided
//! directly or through the Schur complement on the leading block.

use serde::Serialize;

use crate::error::{NehariError, Result};
use crate::hankel::{build_truncated_hankel, gram_full, CoefficientSequence, GramBlocks};
use crate::linalg::{
    is_strongly_positive, min_eigenvalue, principal_sqrt, solve_raw, CMatrix, ComplexMatrix,
    HermitianMatrix, PositivityMargin,
};
use crate::solver::{map_with_info, shifted, SolverConfig};

/// Verdicts whose margin is within `BOUNDARY_TOL · scale` of zero carry the
/// boundary flag.
pub const BOUNDARY_TOL: f64 = 1e-8;

/// Strongly positive `ρ` with cached `ρ²`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationBound {
    rho: HermitianMatrix,
    rho_sq: HermitianMatrix,
}

impl DeviationBound {
    pub fn new(rho: HermitianMatrix) -> Result<Self> {
        let rho_sq = HermitianMatrix::from_hermitian_product(rho.as_matrix() * rho.as_matrix());
        Self::checked(rho, rho_sq)
    }

    /// Bound whose square is `rho_sq` (`ρ` is its principal root).
    pub fn from_rho_sq(rho_sq: HermitianMatrix) -> Result<Self> {
        let rho = principal_sqrt(&rho_sq)?;
        Self::checked(rho, rho_sq)
    }

    fn checked(rho: HermitianMatrix, rho_sq: HermitianMatrix) -> Result<Self> {
        let floor = 1e-12 * (1.0 + rho.frobenius_norm());
        let min = min_eigenvalue(&rho);
        if !(min > floor) {
            return Err(NehariError::Input(format!(
                "deviation bound is not strongly positive (min eigenvalue {min:e})"
            )));
        }
        Ok(Self { rho, rho_sq })
    }

    pub fn rho(&self) -> &HermitianMatrix {
        &self.rho
    }

    pub fn rho_sq(&self) -> &HermitianMatrix {
        &self.rho_sq
    }

    pub fn order(&self) -> usize {
        self.rho.order()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FeasibilityMethod {
    Direct,
    Schur,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    /// Signed minimum eigenvalue of the tested difference.
    pub margin: f64,
    /// `|margin|` fell inside the tolerance band.
    pub boundary: bool,
    pub method: FeasibilityMethod,
}

impl FeasibilityVerdict {
    fn from_margin(margin: f64, tol: f64, method: FeasibilityMethod) -> Self {
        Self {
            feasible: margin >= -tol,
            margin,
            boundary: margin.abs() < tol,
            method,
        }
    }
}

/// Result of the Schur route, which only applies when `R² − A₂₂ ≫ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SchurOutcome {
    Verdict(FeasibilityVerdict),
    NotApplicable {
        /// `min λ((I ⊗ ρ²) − A₂₂)`.
        min_eig: f64,
    },
}

impl SchurOutcome {
    pub fn verdict(&self) -> Option<&FeasibilityVerdict> {
        match self {
            Self::Verdict(v) => Some(v),
            Self::NotApplicable { .. } => None,
        }
    }
}

fn check_dims(coeffs: &CoefficientSequence, bound: &DeviationBound) -> Result<()> {
    if coeffs.block_dim() != bound.order() {
        return Err(NehariError::Input(format!(
            "bound has order {}, coefficients are {}x{}",
            bound.order(),
            coeffs.block_dim(),
            coeffs.block_dim()
        )));
    }
    Ok(())
}

/// Tolerance scale shared by both routes: `1 + ‖A₁₁‖_F + ‖A₂₂‖_F`.
pub fn instance_scale(coeffs: &CoefficientSequence) -> Result<f64> {
    Ok(coeffs.gram_blocks(coeffs.default_block_order())?.1.scale())
}

/// `min λ((I_N ⊗ ρ²) − Γ*Γ)` at the exact truncation `N = K`.
pub fn feasibility_direct(
    coeffs: &CoefficientSequence,
    bound: &DeviationBound,
    _cfg: &SolverConfig,
) -> Result<FeasibilityVerdict> {
    check_dims(coeffs, bound)?;
    let n = coeffs.support_len();
    let h = build_truncated_hankel(coeffs, n)?;
    let diff = bound.rho_sq().kron_identity(n).sub(&gram_full(&h));
    let margin = min_eigenvalue(&diff);
    let tol = BOUNDARY_TOL * instance_scale(coeffs)?;
    Ok(FeasibilityVerdict::from_margin(
        margin,
        tol,
        FeasibilityMethod::Direct,
    ))
}

/// `ρ² ≥ A₁₁ + A₁₂((I ⊗ ρ²) − A₂₂)⁻¹A₁₂*`, valid when `(I ⊗ ρ²) − A₂₂ ≫ δ`.
pub fn feasibility_schur(
    g: &GramBlocks,
    bound: &DeviationBound,
    cfg: &SolverConfig,
) -> Result<SchurOutcome> {
    if g.block_dim() != bound.order() {
        return Err(NehariError::Input(format!(
            "bound has order {}, Gram blocks have block dimension {}",
            bound.order(),
            g.block_dim()
        )));
    }
    let scale = g.scale();
    let margin = cfg.margin(scale);
    let gap = shifted(bound.rho_sq(), g);
    if !is_strongly_positive(&gap, margin) {
        return Ok(SchurOutcome::NotApplicable {
            min_eig: min_eigenvalue(&gap),
        });
    }
    let (image, _) = map_with_info(bound.rho_sq(), g, margin)?;
    let diff_margin = min_eigenvalue(&bound.rho_sq().sub(&image));
    Ok(SchurOutcome::Verdict(FeasibilityVerdict::from_margin(
        diff_margin,
        BOUNDARY_TOL * scale,
        FeasibilityMethod::Schur,
    )))
}

/// `γ_k ↦ γ_k ρ⁻¹`; `(coeffs, ρ)` is feasible iff `(normalized, I)` is.
pub fn normalize_coefficients(
    coeffs: &CoefficientSequence,
    bound: &DeviationBound,
) -> Result<CoefficientSequence> {
    check_dims(coeffs, bound)?;
    let m = coeffs.block_dim();
    let floor = PositivityMargin::new(f64::EPSILON * (1.0 + bound.rho().frobenius_norm()))?;
    let rho_inv = solve_raw(bound.rho(), &CMatrix::identity(m, m), floor)?;
    coeffs
        .coefficients()
        .iter()
        .map(|c| ComplexMatrix::new(c.as_matrix() * &rho_inv))
        .collect::<Result<Vec<_>>>()
        .and_then(CoefficientSequence::new)
}

/// `λ_max(Γ*Γ)` at `N = K`: the squared Hankel norm and the reference value
/// of `ρ²_min` for scalar symbols.
pub fn scalar_aak_oracle(coeffs: &CoefficientSequence) -> Result<f64> {
    if coeffs.block_dim() != 1 {
        return Err(NehariError::NotApplicable(format!(
            "scalar oracle needs block dimension 1, got {}",
            coeffs.block_dim()
        )));
    }
    let h = build_truncated_hankel(coeffs, coeffs.support_len())?;
    Ok(gram_full(&h).max_eigenvalue())
}
