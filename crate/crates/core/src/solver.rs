//! Successive approximation for the minimal deviation bound.
//!
//! Starting from `q₀² = A₁₁`, iterate
//!
//! ```text
//! q²_{n+1} = A₁₁ + A₁₂ ((I ⊗ q²_n) − A₂₂)⁻¹ A₁₂*
//! ```
//!
//! The map is antitone, so even iterates rise and odd iterates fall in the
//! Loewner order. When both subsequences meet, the common limit is `ρ²_min`.
//! If they stall apart the run reports [`SolveStatus::GapPositive`] with
//! both limits instead of averaging them.

use serde::Serialize;

use crate::error::{NehariError, Result};
use crate::hankel::{gram_full, GramBlocks, TruncatedHankel};
use crate::linalg::{
    factor_strongly_positive, is_strongly_positive, loewner_leq, min_eigenvalue, HermitianMatrix,
    PositivityMargin,
};
use crate::reduction;

/// Relative size below which `A₁₂` is treated as exactly zero.
pub const ZERO_COUPLING_TOL: f64 = 1e-14;
/// Upper bound on the singularity witness for a minimal solution, relative
/// to the problem scale.
pub const SINGULARITY_TOL: f64 = 1e-6;
/// Acceptable fixed-point residual relative to the problem scale.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Absolute strong-positivity margin. `None` means `1e-9 · scale`.
    pub delta: Option<f64>,
    pub fix_tol: f64,
    pub step_tol: f64,
    pub max_iter: usize,
    pub mono_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta: None,
            fix_tol: 1e-12,
            step_tol: 1e-12,
            max_iter: 10_000,
            mono_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if let Some(d) = self.delta {
            if !positive(d) {
                return Err(NehariError::Input(format!("delta must be > 0, got {d}")));
            }
        }
        if !positive(self.fix_tol) || !positive(self.step_tol) || !positive(self.mono_tol) {
            return Err(NehariError::Input("tolerances must be > 0".into()));
        }
        if self.max_iter < 1 {
            return Err(NehariError::Input("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Strong-positivity margin for a problem of the given scale.
    pub fn margin(&self, scale: f64) -> PositivityMargin {
        let delta = self.delta.unwrap_or(1e-9 * scale);
        PositivityMargin::new(delta).unwrap_or_else(|_| {
            PositivityMargin::new(f64::MIN_POSITIVE).expect("positive constant")
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    GapPositive,
    PreconditionFailed,
    MaxIterations,
}

/// Which uniqueness argument covers an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TheoremPath {
    /// `A₁₂A₁₂*` strongly positive: the direct iteration has a unique limit.
    Theorem24,
    /// `A₁₂A₁₂*` singular but nonzero: solved through kernel reduction.
    Theorem25Reduction,
    /// `A₁₂ = 0`: `ρ²_min = A₁₁`.
    TrivialA12Zero,
}

/// One entry of an iteration trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub n: usize,
    pub q_sq: HermitianMatrix,
    /// `min λ((I ⊗ q²_n) − A₂₂)`.
    pub min_eig_shifted: f64,
    /// `‖q²_n − q²_{n−1}‖_F`, zero for `n = 0`.
    pub step_norm: f64,
    /// `‖F(q²_n) − q²_n‖_F`.
    pub residual_estimate: f64,
}

impl IterateRecord {
    pub fn parity(&self) -> &'static str {
        if self.n.is_multiple_of(2) {
            "even"
        } else {
            "odd"
        }
    }
}

/// Trajectory of one run.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub n: usize,
    pub q_sq: HermitianMatrix,
    pub history: Vec<IterateRecord>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceResult {
    pub status: SolveStatus,
    pub rho_sq_min: Option<HermitianMatrix>,
    /// Limit of the even iterates.
    pub lower_limit: Option<HermitianMatrix>,
    /// Limit of the odd iterates.
    pub upper_limit: Option<HermitianMatrix>,
    pub iterations: usize,
    pub theorem_path: TheoremPath,
    pub history: Vec<IterateRecord>,
    /// Whether the alternating bracketing was confirmed over the history.
    pub bracketing_verified: bool,
    /// `min λ((I ⊗ A₁₁) − A₂₂)` at the start.
    pub precondition_min_eig: f64,
    /// Kernel dimensions split off at each reduction level (empty on the
    /// direct path).
    pub kernel_dims: Vec<usize>,
}

impl ConvergenceResult {
    pub fn is_converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Post-hoc validation of a candidate `ρ²_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub fixed_point_residual: f64,
    /// `min λ((I_N ⊗ ρ²) − Γ*Γ)`.
    pub feasibility_margin: f64,
    /// Same eigenvalue; near zero exactly when `ρ²` is minimal.
    pub singularity_witness: f64,
    pub strongly_positive: bool,
}

impl Certificate {
    /// Residual, feasibility, singularity and positivity all within the
    /// acceptance tolerances for a problem of the given scale.
    pub fn is_valid(&self, scale: f64, mono_tol: f64) -> bool {
        self.fixed_point_residual <= RESIDUAL_TOL * scale
            && self.feasibility_margin >= -mono_tol * scale
            && self.singularity_witness <= SINGULARITY_TOL * scale
            && self.strongly_positive
    }
}

/// `(I ⊗ q²) − A₂₂`.
pub(crate) fn shifted(q_sq: &HermitianMatrix, g: &GramBlocks) -> HermitianMatrix {
    q_sq.kron_identity(g.inner_order()).sub(&g.a22)
}

/// Evaluates the fixed-point map and returns it along with
/// `min λ((I ⊗ q²) − A₂₂)`.
pub(crate) fn map_with_info(
    q_sq: &HermitianMatrix,
    g: &GramBlocks,
    margin: PositivityMargin,
) -> Result<(HermitianMatrix, f64)> {
    if q_sq.order() != g.block_dim() {
        return Err(NehariError::Input(format!(
            "iterate has order {}, expected {}",
            q_sq.order(),
            g.block_dim()
        )));
    }
    let s = shifted(q_sq, g);
    let min_eig = min_eigenvalue(&s);
    let chol =
        factor_strongly_positive(&s, margin).map_err(|_| NehariError::IterationBreakdown {
            min_eig,
            margin: margin.delta(),
        })?;
    let a12 = g.a12.as_matrix();
    let x = chol.solve(&a12.adjoint());
    let next = g.a11.as_matrix() + a12 * x;
    Ok((HermitianMatrix::from_hermitian_product(next), min_eig))
}

/// One step of the successive approximation.
pub fn iterate_once(
    q_sq: &HermitianMatrix,
    g: &GramBlocks,
    cfg: &SolverConfig,
) -> Result<HermitianMatrix> {
    map_with_info(q_sq, g, cfg.margin(g.scale())).map(|(q, _)| q)
}

/// `(I ⊗ A₁₁) − A₂₂ ≫ δ` and `A₁₁ ≫ δ`.
pub fn precondition_check(g: &GramBlocks, cfg: &SolverConfig) -> bool {
    let margin = cfg.margin(g.scale());
    is_strongly_positive(&shifted(&g.a11, g), margin) && is_strongly_positive(&g.a11, margin)
}

pub fn classify(g: &GramBlocks, cfg: &SolverConfig) -> TheoremPath {
    let scale = g.scale();
    if g.a12.frobenius_norm() <= ZERO_COUPLING_TOL * scale {
        return TheoremPath::TrivialA12Zero;
    }
    let a12 = g.a12.as_matrix();
    let gram = HermitianMatrix::from_hermitian_product(a12 * a12.adjoint());
    if is_strongly_positive(&gram, cfg.margin(scale)) {
        TheoremPath::Theorem24
    } else {
        TheoremPath::Theorem25Reduction
    }
}

/// Direct iteration from `q₀² = A₁₁`.
pub fn solve_rho_min(g: &GramBlocks, cfg: &SolverConfig) -> Result<ConvergenceResult> {
    solve_rho_min_from(g, &g.a11, cfg)
}

/// Direct iteration from an arbitrary admissible starting point.
pub fn solve_rho_min_from(
    g: &GramBlocks,
    q0_sq: &HermitianMatrix,
    cfg: &SolverConfig,
) -> Result<ConvergenceResult> {
    cfg.validate()?;
    let scale = g.scale();
    let margin = cfg.margin(scale);
    let theorem_path = classify(g, cfg);
    let precondition_min_eig = min_eigenvalue(&shifted(&g.a11, g));

    let start_ok = precondition_check(g, cfg)
        && is_strongly_positive(&shifted(q0_sq, g), margin)
        && q0_sq.order() == g.block_dim();
    if !start_ok {
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

    let mut state = IterateState {
        n: 0,
        q_sq: q0_sq.clone(),
        history: Vec::new(),
    };
    let (mut next, min_eig0) = map_with_info(q0_sq, g, margin)?;
    state.history.push(IterateRecord {
        n: 0,
        q_sq: q0_sq.clone(),
        min_eig_shifted: min_eig0,
        step_norm: 0.0,
        residual_estimate: next.sub(q0_sq).frobenius_norm(),
    });

    let mut status = SolveStatus::MaxIterations;
    while state.n < cfg.max_iter {
        let prev = std::mem::replace(&mut state.q_sq, next);
        state.n += 1;
        let step = state.q_sq.sub(&prev).frobenius_norm();
        let (after, min_eig) = map_with_info(&state.q_sq, g, margin)?;
        let residual = after.sub(&state.q_sq).frobenius_norm();
        state.history.push(IterateRecord {
            n: state.n,
            q_sq: state.q_sq.clone(),
            min_eig_shifted: min_eig,
            step_norm: step,
            residual_estimate: residual,
        });
        let size = 1.0 + state.q_sq.frobenius_norm();
        if step <= cfg.step_tol * (1.0 + prev.frobenius_norm()) && residual <= cfg.fix_tol * size {
            status = SolveStatus::Converged;
            break;
        }
        if state.n >= 3 && stalled_two_cycle(&state.history, &after, cfg.step_tol, size) {
            status = SolveStatus::GapPositive;
            break;
        }
        next = after;
    }

    let (lower, upper) = parity_limits(&state.history, q0_sq, cfg.mono_tol * scale)?;
    let bracketing_verified = verify_bracketing(&state.history, g, cfg.mono_tol * scale)?;
    Ok(ConvergenceResult {
        rho_sq_min: (status == SolveStatus::Converged).then(|| state.q_sq.clone()),
        status,
        lower_limit: Some(lower),
        upper_limit: Some(upper),
        iterations: state.n,
        theorem_path,
        history: state.history,
        bracketing_verified,
        precondition_min_eig,
        kernel_dims: Vec::new(),
    })
}

/// Both parity subsequences have stopped moving while consecutive iterates
/// stay apart.
fn stalled_two_cycle(
    history: &[IterateRecord],
    after: &HermitianMatrix,
    step_tol: f64,
    size: f64,
) -> bool {
    let n = history.len();
    let tol = step_tol * size;
    let odd_or_even_a = after.sub(&history[n - 2].q_sq).frobenius_norm();
    let odd_or_even_b = history[n - 1]
        .q_sq
        .sub(&history[n - 3].q_sq)
        .frobenius_norm();
    odd_or_even_a <= tol && odd_or_even_b <= tol && history[n - 1].step_norm > 1e3 * tol
}

/// Returns `(lower, upper)`: the last iterates of the rising and falling
/// subsequences.
fn parity_limits(
    history: &[IterateRecord],
    q0_sq: &HermitianMatrix,
    tol: f64,
) -> Result<(HermitianMatrix, HermitianMatrix)> {
    let last_of = |parity: usize| {
        history
            .iter()
            .rev()
            .find(|r| r.n % 2 == parity)
            .map(|r| r.q_sq.clone())
            .unwrap_or_else(|| q0_sq.clone())
    };
    let (even, odd) = (last_of(0), last_of(1));
    if history.len() < 2 {
        return Ok((even.clone(), even));
    }
    if loewner_leq(&history[0].q_sq, &history[1].q_sq, tol)? {
        Ok((even, odd))
    } else {
        Ok((odd, even))
    }
}

/// Checks the alternating bracketing over a whole history. The direction is
/// taken from the first step, so warm starts from above are handled too.
pub fn verify_bracketing(history: &[IterateRecord], g: &GramBlocks, tol: f64) -> Result<bool> {
    if history.len() < 2 {
        return Ok(true);
    }
    let rising_even = loewner_leq(&history[0].q_sq, &history[1].q_sq, tol)?;
    for w in history.windows(3) {
        let (a, c) = (&w[0], &w[2]);
        let even = a.n % 2 == 0;
        let ok = if even == rising_even {
            loewner_leq(&a.q_sq, &c.q_sq, tol)?
        } else {
            loewner_leq(&c.q_sq, &a.q_sq, tol)?
        };
        if !ok {
            return Ok(false);
        }
    }
    let last = &history[history.len() - 1];
    let before = &history[history.len() - 2];
    let (lo, hi) = if last.n.is_multiple_of(2) == rising_even {
        (last, before)
    } else {
        (before, last)
    };
    if !loewner_leq(&lo.q_sq, &hi.q_sq, tol)? {
        return Ok(false);
    }
    // Every iterate dominates A₁₁.
    for r in history.iter().skip(1) {
        if !loewner_leq(&g.a11, &r.q_sq, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Dispatches by [`classify`]: direct iteration for the trivial and
/// full-rank cases, kernel reduction otherwise.
pub fn solve(g: &GramBlocks, cfg: &SolverConfig) -> Result<ConvergenceResult> {
    match classify(g, cfg) {
        TheoremPath::Theorem24 | TheoremPath::TrivialA12Zero => solve_rho_min(g, cfg),
        TheoremPath::Theorem25Reduction => reduction::solve_with_reduction(g, cfg),
    }
}

/// Certifies a converged result.
pub fn certify(
    result: &ConvergenceResult,
    h: &TruncatedHankel,
    g: &GramBlocks,
    cfg: &SolverConfig,
) -> Result<Certificate> {
    match (&result.status, &result.rho_sq_min) {
        (SolveStatus::Converged, Some(rho_sq)) => certify_candidate(rho_sq, h, g, cfg),
        (status, _) => Err(NehariError::State(format!(
            "cannot certify a run with status {status:?}"
        ))),
    }
}

/// Certificate for an arbitrary candidate `ρ²`. The residual is infinite
/// when `(I ⊗ ρ²) − A₂₂` is not strongly positive.
pub fn certify_candidate(
    rho_sq: &HermitianMatrix,
    h: &TruncatedHankel,
    g: &GramBlocks,
    cfg: &SolverConfig,
) -> Result<Certificate> {
    if h.block_dim() != g.block_dim()
        || h.block_order() != g.inner_order() + 1
        || rho_sq.order() != g.block_dim()
    {
        return Err(NehariError::Input(
            "truncation, Gram blocks and candidate have inconsistent shapes".into(),
        ));
    }
    let margin = cfg.margin(g.scale());
    let fixed_point_residual = match map_with_info(rho_sq, g, margin) {
        Ok((image, _)) => image.sub(rho_sq).frobenius_norm(),
        Err(NehariError::IterationBreakdown { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let diff = rho_sq.kron_identity(h.block_order()).sub(&gram_full(h));
    let feasibility_margin = min_eigenvalue(&diff);
    Ok(Certificate {
        fixed_point_residual,
        feasibility_margin,
        singularity_witness: feasibility_margin,
        strongly_positive: is_strongly_positive(rho_sq, margin),
    })
}
