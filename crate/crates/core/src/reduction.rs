//! Kernel reduction for instances where `A₁₂A₁₂*` is singular.
//!
//! The fixed-point map `F` is first normalized by `q₀ = A₁₁^{1/2}`:
//!
//! ```text
//! G(q²) = I + U ((I ⊗ q²) − D)⁻¹ U*,   U = q₀⁻¹ A₁₂ Q₀⁻¹,   D = Q₀⁻¹ A₂₂ Q₀⁻¹
//! ```
//!
//! with `F(q₀ q² q₀) = q₀ G(q²) q₀`. On `ker U*` every value of `G` is the
//! identity, so the fixed point is `diag(q₁₁², I_d)` in the
//! `(ker U*)^⊥ ⊕ ker U*` basis. Eliminating the kernel coordinates of every
//! inner copy by a block Schur step leaves a map of the same shape on the
//! complement, which is solved recursively until its coupling is either
//! zero or of full row rank.

use nalgebra::SVD;

use crate::error::{NehariError, Result};
use crate::hankel::GramBlocks;
use crate::linalg::{
    factor_strongly_positive, is_strongly_positive, kron_identity, min_eigenvalue, principal_sqrt,
    solve_raw, CMatrix, ComplexMatrix, HermitianMatrix,
};
use crate::solver::{
    classify, map_with_info, precondition_check, solve_rho_min, verify_bracketing,
    ConvergenceResult, IterateRecord, SolveStatus, SolverConfig, ZERO_COUPLING_TOL,
};

/// Relative singular-value cliff separating `ker U*` from its complement.
pub const RANK_TOL: f64 = 1e-10;
/// Relative agreement required between the reduced map and the full map.
const REDUCTION_CHECK_TOL: f64 = 1e-10;

/// The normalized map `G`.
#[derive(Debug, Clone)]
pub struct NormalizedMap {
    /// `m × (N−1)m`.
    pub u: CMatrix,
    pub d_mat: HermitianMatrix,
    /// `A₁₁^{1/2}`.
    pub q0: HermitianMatrix,
    pub q0_inv: CMatrix,
    inner_order: usize,
}

impl NormalizedMap {
    pub fn block_dim(&self) -> usize {
        self.q0.order()
    }

    pub fn inner_order(&self) -> usize {
        self.inner_order
    }

    /// `(I, U, D)` as Gram-shaped blocks.
    pub fn as_gram_blocks(&self) -> GramBlocks {
        GramBlocks::from_parts(
            HermitianMatrix::identity(self.block_dim()),
            ComplexMatrix::from_raw(self.u.clone()),
            self.d_mat.clone(),
        )
        .expect("normalized blocks have consistent shapes")
    }

    /// `G(q²)`.
    pub fn apply(&self, q_sq: &HermitianMatrix) -> Result<HermitianMatrix> {
        let g = self.as_gram_blocks();
        map_with_info(q_sq, &g, SolverConfig::default().margin(g.scale())).map(|(v, _)| v)
    }

    /// `q₀ q² q₀`: G-coordinates back to F-coordinates.
    pub fn to_original(&self, q_sq: &HermitianMatrix) -> HermitianMatrix {
        q_sq.congruence(self.q0.as_matrix())
    }

    /// `q₀⁻¹ q² q₀⁻¹`.
    pub fn to_normalized(&self, q_sq: &HermitianMatrix) -> HermitianMatrix {
        q_sq.congruence(&self.q0_inv)
    }
}

/// Orthonormal split `C^m = (ker U*)^⊥ ⊕ ker U*` and the components of `U*`
/// in that split, with every inner copy rotated by the same basis.
#[derive(Debug, Clone)]
pub struct KernelSplit {
    pub d_ker: usize,
    /// `m × d`.
    pub basis_ker: CMatrix,
    /// `m × (m−d)`.
    pub basis_coker: CMatrix,
    /// `(m−d) × (N−1)(m−d)`: coupling onto the complement coordinates.
    pub u1: CMatrix,
    /// `(m−d) × (N−1)d`: coupling onto the kernel coordinates.
    pub u2: CMatrix,
    /// Unitary `(N−1)m` change of basis on the inner space: all complement
    /// coordinates first (copy-major), then all kernel coordinates.
    pub rotation: CMatrix,
}

impl KernelSplit {
    /// `V_c q₁₁² V_c* + V_k V_k*`.
    pub fn assemble(&self, q11_sq: &HermitianMatrix) -> HermitianMatrix {
        let vc = &self.basis_coker;
        let vk = &self.basis_ker;
        HermitianMatrix::from_hermitian_product(
            vc * q11_sq.as_matrix() * vc.adjoint() + vk * vk.adjoint(),
        )
    }

    /// `[V_c V_k]* q² [V_c V_k]`.
    pub fn in_split_basis(&self, q_sq: &HermitianMatrix) -> CMatrix {
        let v = self.basis();
        v.adjoint() * q_sq.as_matrix() * v
    }

    fn basis(&self) -> CMatrix {
        let m = self.basis_ker.nrows();
        let c = self.basis_coker.ncols();
        let mut v = CMatrix::zeros(m, m);
        v.view_mut((0, 0), (m, c)).copy_from(&self.basis_coker);
        v.view_mut((0, c), (m, m - c)).copy_from(&self.basis_ker);
        v
    }
}

/// The reduced map `G₁(q₁₁²) = Â₁₁ + Â₁₂((I ⊗ q₁₁²) − Â₂₂)⁻¹Â₁₂*`.
#[derive(Debug, Clone)]
pub struct ReducedBlocks {
    pub a11_hat: HermitianMatrix,
    pub a12_hat: CMatrix,
    pub a22_hat: HermitianMatrix,
    pub d11: CMatrix,
    pub d12: CMatrix,
    pub d22: CMatrix,
    /// `[[I, 0], [(I − d₂₂)⁻¹ d₁₂*, I]]`.
    pub t_factor: CMatrix,
}

impl ReducedBlocks {
    pub fn as_gram_blocks(&self) -> GramBlocks {
        GramBlocks::from_parts(
            self.a11_hat.clone(),
            ComplexMatrix::from_raw(self.a12_hat.clone()),
            self.a22_hat.clone(),
        )
        .expect("reduced blocks have consistent shapes")
    }

    /// `G₁(q₁₁²)`.
    pub fn apply(&self, q11_sq: &HermitianMatrix) -> Result<HermitianMatrix> {
        let g = self.as_gram_blocks();
        map_with_info(q11_sq, &g, SolverConfig::default().margin(g.scale())).map(|(v, _)| v)
    }
}

/// Local config for normalized levels: the caller's absolute `delta` is
/// meaningless after the congruence, so the relative default applies.
fn normalized_config(cfg: &SolverConfig) -> SolverConfig {
    SolverConfig {
        delta: None,
        ..*cfg
    }
}

pub fn normalize_to_g(g: &GramBlocks, cfg: &SolverConfig) -> Result<NormalizedMap> {
    let margin = cfg.margin(g.scale());
    if !is_strongly_positive(&g.a11, margin) {
        return Err(NehariError::Normalization {
            min_eig: min_eigenvalue(&g.a11),
            margin: margin.delta(),
        });
    }
    let m = g.block_dim();
    let inner = g.inner_order();
    let q0 = principal_sqrt(&g.a11)?;
    let q0_inv = solve_raw(&q0, &CMatrix::identity(m, m), margin_for_sqrt(&q0))?;
    let big_inv = kron_identity(&q0_inv, inner);
    let u = &q0_inv * g.a12.as_matrix() * &big_inv;
    let d_mat = g.a22.congruence(&big_inv);

    let local = normalized_config(cfg);
    let d_margin = local.margin(1.0 + (m as f64).sqrt() + d_mat.frobenius_norm());
    let gap = HermitianMatrix::identity(d_mat.order()).sub(&d_mat);
    let gap_min = min_eigenvalue(&gap);
    if !(gap_min > d_margin.delta()) {
        return Err(NehariError::Precondition {
            min_eig: gap_min,
            margin: d_margin.delta(),
        });
    }
    Ok(NormalizedMap {
        u,
        d_mat,
        q0,
        q0_inv,
        inner_order: inner,
    })
}

fn margin_for_sqrt(q0: &HermitianMatrix) -> crate::linalg::PositivityMargin {
    // q0 is strongly positive whenever A₁₁ is; only rule out exact zeros here.
    let floor = f64::EPSILON * (1.0 + q0.frobenius_norm());
    crate::linalg::PositivityMargin::new(floor).expect("positive floor")
}

pub fn kernel_split(nm: &NormalizedMap, rank_tol: f64) -> Result<KernelSplit> {
    if !(rank_tol.is_finite() && rank_tol > 0.0) {
        return Err(NehariError::Input(format!(
            "rank_tol must be > 0, got {rank_tol}"
        )));
    }
    let m = nm.block_dim();
    let inner = nm.inner_order();
    let svd = SVD::new(nm.u.clone(), true, false);
    let left = svd.u.as_ref().expect("left singular vectors requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().copied().fold(0.0_f64, f64::max);

    let (mut ker_cols, mut coker_cols) = (Vec::new(), Vec::new());
    for (j, &s) in sigma.iter().enumerate() {
        if sigma_max == 0.0 || s <= rank_tol * sigma_max {
            ker_cols.push(j);
        } else {
            coker_cols.push(j);
        }
    }
    let pick = |cols: &[usize]| {
        let mut out = CMatrix::zeros(m, cols.len());
        for (dst, &src) in cols.iter().enumerate() {
            out.set_column(dst, &left.column(src));
        }
        out
    };
    let basis_ker = pick(&ker_cols);
    let basis_coker = pick(&coker_cols);
    let d = ker_cols.len();
    let c = m - d;

    let mut rotation = CMatrix::zeros(inner * m, inner * m);
    for k in 0..inner {
        rotation
            .view_mut((k * m, k * c), (m, c))
            .copy_from(&basis_coker);
        rotation
            .view_mut((k * m, inner * c + k * d), (m, d))
            .copy_from(&basis_ker);
    }
    // rows: rotated inner coordinates; columns: coker part of C^m
    let u_star_rot = rotation.adjoint() * nm.u.adjoint() * &basis_coker;
    let u1 = u_star_rot.rows(0, inner * c).adjoint();
    let u2 = u_star_rot.rows(inner * c, inner * d).adjoint();
    Ok(KernelSplit {
        d_ker: d,
        basis_ker,
        basis_coker,
        u1,
        u2,
        rotation,
    })
}

pub fn reduce_map(nm: &NormalizedMap, split: &KernelSplit) -> Result<ReducedBlocks> {
    let m = nm.block_dim();
    let d = split.d_ker;
    if d == 0 || d >= m {
        return Err(NehariError::Input(format!(
            "reduction needs 0 < d < m, got d = {d}, m = {m}"
        )));
    }
    let inner = nm.inner_order();
    let c = m - d;
    let p = inner * c;
    let q = inner * d;
    let d_rot = split.rotation.adjoint() * nm.d_mat.as_matrix() * &split.rotation;
    let d11 = d_rot.view((0, 0), (p, p)).into_owned();
    let d12 = d_rot.view((0, p), (p, q)).into_owned();
    let d22 = d_rot.view((p, p), (q, q)).into_owned();

    let gap = HermitianMatrix::from_hermitian_product(CMatrix::identity(q, q) - &d22);
    let local = normalized_config(&SolverConfig::default());
    let margin = local.margin(1.0 + nm.d_mat.frobenius_norm());
    let chol =
        factor_strongly_positive(&gap, margin).map_err(|_| NehariError::ReductionBreakdown {
            min_eig: min_eigenvalue(&gap),
            margin: margin.delta(),
        })?;
    let x_u = chol.solve(&split.u2.adjoint());
    let x_d = chol.solve(&d12.adjoint());

    let a11_hat =
        HermitianMatrix::from_hermitian_product(CMatrix::identity(c, c) + &split.u2 * &x_u);
    let a12_hat = &split.u1 + &split.u2 * &x_d;
    let a22_hat = HermitianMatrix::from_hermitian_product(&d11 + &d12 * &x_d);

    let mut t_factor = CMatrix::identity(p + q, p + q);
    t_factor.view_mut((p, 0), (q, p)).copy_from(&x_d);

    let reduced = ReducedBlocks {
        a11_hat,
        a12_hat,
        a22_hat,
        d11,
        d12,
        d22,
        t_factor,
    };
    let probe = reduced.a11_hat.clone();
    let rel_err = reduction_mismatch(nm, split, &reduced, &probe)?;
    if rel_err > REDUCTION_CHECK_TOL {
        return Err(NehariError::ReductionMismatch { rel_err });
    }
    Ok(reduced)
}

/// Relative Frobenius gap between `G₁(q₁₁²)` and the complement block of
/// `G` evaluated at `diag(q₁₁², I_d)`.
pub fn reduction_mismatch(
    nm: &NormalizedMap,
    split: &KernelSplit,
    reduced: &ReducedBlocks,
    q11_sq: &HermitianMatrix,
) -> Result<f64> {
    let reduced_value = reduced.apply(q11_sq)?;
    let full = nm.apply(&split.assemble(q11_sq))?;
    let vc = &split.basis_coker;
    let compressed = vc.adjoint() * full.as_matrix() * vc;
    let diff = (&compressed - reduced_value.as_matrix()).norm();
    Ok(diff / (1.0 + compressed.norm()))
}

struct LevelOutcome {
    status: SolveStatus,
    q_sq: Option<HermitianMatrix>,
    lower: Option<HermitianMatrix>,
    upper: Option<HermitianMatrix>,
    history: Vec<IterateRecord>,
    iterations: usize,
    kernel_dims: Vec<usize>,
}

impl LevelOutcome {
    fn from_result(r: ConvergenceResult) -> Self {
        Self {
            status: r.status,
            q_sq: r.rho_sq_min,
            lower: r.lower_limit,
            upper: r.upper_limit,
            history: r.history,
            iterations: r.iterations,
            kernel_dims: r.kernel_dims,
        }
    }

    fn map(self, f: impl Fn(&HermitianMatrix) -> HermitianMatrix) -> Self {
        Self {
            q_sq: self.q_sq.as_ref().map(&f),
            lower: self.lower.as_ref().map(&f),
            upper: self.upper.as_ref().map(&f),
            history: self
                .history
                .into_iter()
                .map(|r| IterateRecord {
                    q_sq: f(&r.q_sq),
                    ..r
                })
                .collect(),
            ..self
        }
    }
}

fn solve_level(g: &GramBlocks, cfg: &SolverConfig, depth: usize) -> Result<LevelOutcome> {
    if depth > g.block_dim() + 1 {
        return Err(NehariError::State(
            "kernel reduction failed to terminate".into(),
        ));
    }
    if g.a12.frobenius_norm() <= ZERO_COUPLING_TOL * g.scale() {
        return Ok(LevelOutcome::from_result(solve_rho_min(g, cfg)?));
    }
    let nm = normalize_to_g(g, cfg)?;
    let split = kernel_split(&nm, RANK_TOL)?;
    let local = normalized_config(cfg);
    let m = g.block_dim();
    let mut outcome = if split.d_ker == 0 || split.d_ker == m {
        LevelOutcome::from_result(solve_rho_min(&nm.as_gram_blocks(), &local)?)
            .map(|q| nm.to_original(q))
    } else {
        let reduced = reduce_map(&nm, &split)?;
        let inner = solve_level(&reduced.as_gram_blocks(), &local, depth + 1)?;
        inner.map(|q| nm.to_original(&split.assemble(q)))
    };
    outcome.kernel_dims.insert(0, split.d_ker);
    Ok(outcome)
}

/// Solves through normalization and recursive kernel splitting, then maps
/// the fixed point back with `ρ² = q₀ q_G² q₀`.
pub fn solve_with_reduction(g: &GramBlocks, cfg: &SolverConfig) -> Result<ConvergenceResult> {
    cfg.validate()?;
    let theorem_path = classify(g, cfg);
    let precondition_min_eig = min_eigenvalue(&crate::solver::shifted(&g.a11, g));
    if !precondition_check(g, cfg) {
        return Ok(ConvergenceResult {
            status: SolveStatus::PreconditionFailed,
            rho_sq_min: None,
            lower_limit: None,
            upper_limit: None,
            iterations: 0,
            theorem_path,
            history: Vec::new(),
            bracketing_verified: false,
            precondition_min_eig,
            kernel_dims: Vec::new(),
        });
    }
    let outcome = solve_level(g, cfg, 0)?;
    let bracketing_verified = verify_bracketing(&outcome.history, g, cfg.mono_tol * g.scale())?;
    Ok(ConvergenceResult {
        status: outcome.status,
        rho_sq_min: outcome.q_sq,
        lower_limit: outcome.lower,
        upper_limit: outcome.upper,
        iterations: outcome.iterations,
        theorem_path,
        history: outcome.history,
        bracketing_verified,
        precondition_min_eig,
        kernel_dims: outcome.kernel_dims,
    })
}
