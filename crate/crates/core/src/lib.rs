//! Minimal matrix deviation bounds for the matrix-valued Nehari problem.
//!
//! Given finitely many square Fourier blocks `γ_1..γ_K`, the crate forms
//! the block-Hankel operator `Γ`, splits `Γ*Γ` into `A₁₁, A₁₂, A₂₂` and
//! computes `ρ²_min`, the fixed point of
//!
//! ```text
//! q² = A₁₁ + A₁₂ ((I ⊗ q²) − A₂₂)⁻¹ A₁₂*
//! ```
//!
//! by successive approximation, falling back to a kernel reduction when
//! `A₁₂A₁₂*` is singular. Results come with a certificate (fixed-point
//! residual and the singularity of `(I ⊗ ρ²_min) − Γ*Γ`), and feasibility
//! of any given bound can be decided by two independent routes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod feasibility;
pub mod hankel;
pub mod io;
pub mod linalg;
pub mod reduction;
pub mod solver;

pub use error::{NehariError, Result};
pub use feasibility::{
    feasibility_direct, feasibility_schur, normalize_coefficients, scalar_aak_oracle,
    DeviationBound, FeasibilityMethod, FeasibilityVerdict, SchurOutcome,
};
pub use hankel::{
    build_truncated_hankel, gram_blocks, gram_full, partition, CoefficientSequence, GramBlocks,
    HankelPartition, TruncatedHankel,
};
pub use linalg::{
    is_strongly_positive, loewner_leq, min_eigenvalue, principal_sqrt, solve_strongly_positive,
    ComplexMatrix, HermitianMatrix, PositivityMargin, C64,
};
pub use reduction::{
    kernel_split, normalize_to_g, reduce_map, solve_with_reduction, KernelSplit, NormalizedMap,
    ReducedBlocks,
};
pub use solver::{
    certify, certify_candidate, classify, iterate_once, precondition_check, solve, solve_rho_min,
    solve_rho_min_from, Certificate, ConvergenceResult, IterateRecord, IterateState, SolveStatus,
    SolverConfig, TheoremPath,
};
