//! Instance files, seeded instance generation, run reports and traces.
//!
//! Instances are JSON documents:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "dim": 1,
//!   "coefficients": [ [[[2, 0]]], [[[1, 0]]] ],
//!   "rho": [[[2.5, 0]]],
//!   "solver": { "delta": 1e-9, "tol": 1e-12, "max_iter": 500 }
//! }
//! ```
//!
//! Matrices are row-major lists of rows; every entry is a `[re, im]` pair.
//! `rho` and `solver` are optional.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NehariError, Result};
use crate::feasibility::{
    feasibility_direct, feasibility_schur, scalar_aak_oracle, DeviationBound, FeasibilityVerdict,
    SchurOutcome,
};
use crate::hankel::CoefficientSequence;
use crate::linalg::{principal_sqrt, CMatrix, ComplexMatrix, HermitianMatrix, C64};
use crate::solver::{
    certify, precondition_check, solve, Certificate, ConvergenceResult, IterateRecord, SolveStatus,
    SolverConfig, TheoremPath,
};

pub const FORMAT_VERSION: i64 = 1;

pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const INFEASIBLE: i32 = 1;
    pub const PRECONDITION: i32 = 2;
    pub const INPUT: i32 = 3;
    pub const NONCONVERGENCE: i32 = 4;
}

/// Row-major matrix of `[re, im]` pairs.
pub type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

impl SolverOverrides {
    pub fn apply(&self, mut cfg: SolverConfig) -> SolverConfig {
        if let Some(d) = self.delta {
            cfg.delta = Some(d);
        }
        if let Some(t) = self.tol {
            cfg.fix_tol = t;
            cfg.step_tol = t;
        }
        if let Some(n) = self.max_iter {
            cfg.max_iter = n;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub format_version: i64,
    pub coefficients: CoefficientSequence,
    pub rho: Option<HermitianMatrix>,
    pub solver: Option<SolverOverrides>,
}

impl InstanceFile {
    pub fn new(coefficients: CoefficientSequence) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            coefficients,
            rho: None,
            solver: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.coefficients.block_dim()
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver
            .map(|o| o.apply(SolverConfig::default()))
            .unwrap_or_default()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    format_version: i64,
    dim: usize,
    coefficients: Vec<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    solver: Option<SolverOverrides>,
}

fn parse_err(path: impl Into<String>, message: impl Into<String>) -> NehariError {
    NehariError::Parse {
        path: path.into(),
        message: message.into(),
    }
}

pub fn to_raw(m: &CMatrix) -> RawMatrix {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

fn from_raw(raw: &RawMatrix, dim: usize, path: &str) -> Result<CMatrix> {
    let cols = raw.first().map_or(0, Vec::len);
    if raw.len() != dim || raw.iter().any(|r| r.len() != dim) {
        let shape = if raw.iter().all(|r| r.len() == cols) {
            format!("{}x{}", raw.len(), cols)
        } else {
            "ragged".to_string()
        };
        return Err(parse_err(
            path,
            format!("expected {dim}x{dim} matrix, got {shape}"),
        ));
    }
    let mut out = CMatrix::zeros(dim, dim);
    for (i, row) in raw.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            if !(re.is_finite() && im.is_finite()) {
                return Err(parse_err(format!("{path}[{i}][{j}]"), "non-finite entry"));
            }
            out[(i, j)] = C64::new(re, im);
        }
    }
    Ok(out)
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| parse_err("<document>", e.to_string()))?;
    let version = value
        .get("format_version")
        .ok_or_else(|| parse_err("format_version", "missing field"))?;
    let version = version
        .as_i64()
        .ok_or_else(|| parse_err("format_version", "expected an integer"))?;
    if version != FORMAT_VERSION {
        return Err(NehariError::Version(version));
    }
    let raw: RawInstance =
        serde_json::from_value(value).map_err(|e| parse_err("<instance>", e.to_string()))?;
    if raw.dim < 1 {
        return Err(parse_err("dim", "must be at least 1"));
    }
    if raw.coefficients.is_empty() {
        return Err(parse_err(
            "coefficients",
            "at least one coefficient is required",
        ));
    }
    let coefficients = raw
        .coefficients
        .iter()
        .enumerate()
        .map(|(k, c)| {
            from_raw(c, raw.dim, &format!("coefficients[{k}]")).map(ComplexMatrix::from_raw)
        })
        .collect::<Result<Vec<_>>>()?;
    let rho = raw
        .rho
        .as_ref()
        .map(|r| {
            from_raw(r, raw.dim, "rho")
                .and_then(|m| HermitianMatrix::new(m).map_err(|e| parse_err("rho", e.to_string())))
        })
        .transpose()?;
    if let Some(s) = &raw.solver {
        let check = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(parse_err(
                format!("solver.{name}"),
                "must be finite and > 0",
            )),
            _ => Ok(()),
        };
        check("delta", s.delta)?;
        check("tol", s.tol)?;
        if s.max_iter == Some(0) {
            return Err(parse_err("solver.max_iter", "must be at least 1"));
        }
    }
    Ok(InstanceFile {
        format_version: raw.format_version,
        coefficients: CoefficientSequence::new(coefficients)?,
        rho,
        solver: raw.solver,
    })
}

pub fn emit_instance(instance: &InstanceFile) -> String {
    let raw = RawInstance {
        format_version: instance.format_version,
        dim: instance.dim(),
        coefficients: instance
            .coefficients
            .coefficients()
            .iter()
            .map(|c| to_raw(c.as_matrix()))
            .collect(),
        rho: instance.rho.as_ref().map(|r| to_raw(r.as_matrix())),
        solver: instance.solver,
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("instance serializes");
    s.push('\n');
    s
}

pub fn read_instance(path: &Path) -> Result<InstanceFile> {
    parse_instance(&fs::read_to_string(path)?)
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Seeded random instance that passes the start precondition.
///
/// `γ₂..γ_K` have entries uniform in the complex unit disk scaled by `1/k`;
/// `γ₁ = dominance · (1 + Σ‖γ_j‖_F) · I`, grown by 1.5× until the
/// precondition holds.
pub fn generate_instance(m: usize, k: usize, seed: u64, dominance: f64) -> Result<InstanceFile> {
    if m < 1 || k < 1 {
        return Err(NehariError::Input(
            "dim and support must be at least 1".into(),
        ));
    }
    if !(dominance.is_finite() && dominance >= 1.0) {
        return Err(NehariError::Input(format!(
            "dominance must be >= 1, got {dominance}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tail: Vec<CMatrix> = (2..=k)
        .map(|_| {
            CMatrix::from_fn(m, m, |_, _| {
                let r = rng.random::<f64>().sqrt();
                let theta = std::f64::consts::TAU * rng.random::<f64>();
                C64::from_polar(r, theta) / k as f64
            })
        })
        .collect();
    let c = 1.0 + tail.iter().map(|g| g.norm()).sum::<f64>();
    let mut lead = dominance * c;
    let cfg = SolverConfig::default();
    for _ in 0..200 {
        let mut blocks = vec![ComplexMatrix::from_raw(CMatrix::identity(m, m).scale(lead))];
        blocks.extend(tail.iter().cloned().map(ComplexMatrix::from_raw));
        let coeffs = CoefficientSequence::new(blocks)?;
        let (_, g) = coeffs.gram_blocks(coeffs.default_block_order())?;
        if precondition_check(&g, &cfg) {
            return Ok(InstanceFile::new(coeffs));
        }
        lead *= 1.5;
    }
    Err(NehariError::State(
        "generator failed to reach the precondition".into(),
    ))
}

#[derive(Debug, Clone, Default)]
pub struct SolveFlags {
    pub delta: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub trace: Option<PathBuf>,
    /// Also write every iterate to `<trace>.matrices.json`.
    pub verbose: bool,
    /// Block order override; the default is `max(K, 2)`.
    pub block_order: Option<usize>,
}

impl SolveFlags {
    pub fn config(&self, instance: &InstanceFile) -> SolverConfig {
        SolverOverrides {
            delta: self.delta,
            tol: self.tol,
            max_iter: self.max_iter,
        }
        .apply(instance.solver_config())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: SolveStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_sq_min: Option<RawMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_min: Option<RawMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    pub iterations: usize,
    pub theorem_path: TheoremPath,
    pub kernel_dims: Vec<usize>,
    pub block_order: usize,
    pub scale: f64,
    pub precondition_min_eig: f64,
    pub bracketing_verified: bool,
    pub wall_time_ms: f64,
    pub config: SolverConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip)]
    pub result: Option<ConvergenceResult>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        status_exit_code(self.status)
    }
}

pub fn status_exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Converged => exit_code::SUCCESS,
        SolveStatus::PreconditionFailed => exit_code::PRECONDITION,
        SolveStatus::GapPositive | SolveStatus::MaxIterations => exit_code::NONCONVERGENCE,
    }
}

pub fn run_solve(instance: &InstanceFile, flags: &SolveFlags) -> Result<RunReport> {
    let started = Instant::now();
    let cfg = flags.config(instance);
    cfg.validate()?;
    let n = flags
        .block_order
        .unwrap_or_else(|| instance.coefficients.default_block_order());
    let (h, g) = instance.coefficients.gram_blocks(n)?;
    let result = solve(&g, &cfg)?;
    let certificate = match result.status {
        SolveStatus::Converged => Some(certify(&result, &h, &g, &cfg)?),
        _ => None,
    };
    let rho_min = result.rho_sq_min.as_ref().map(principal_sqrt).transpose()?;
    let message = match result.status {
        SolveStatus::Converged => None,
        SolveStatus::PreconditionFailed => Some(format!(
            "precondition (I ⊗ A11) − A22 ≫ 0 violated: min eigenvalue {:.6e} does not exceed delta {:.6e}",
            result.precondition_min_eig,
            cfg.margin(g.scale()).delta()
        )),
        SolveStatus::GapPositive => Some("even and odd iterates converged to different limits".into()),
        SolveStatus::MaxIterations => Some(format!("no convergence within {} iterations", cfg.max_iter)),
    };
    if let Some(path) = &flags.trace {
        write_trace(path, &result.history)?;
        if flags.verbose {
            write_trace_matrices(&matrices_sidecar(path), &result.history)?;
        }
    }
    Ok(RunReport {
        status: result.status,
        rho_sq_min: result.rho_sq_min.as_ref().map(|m| to_raw(m.as_matrix())),
        rho_min: rho_min.as_ref().map(|m| to_raw(m.as_matrix())),
        certificate,
        iterations: result.iterations,
        theorem_path: result.theorem_path,
        kernel_dims: result.kernel_dims.clone(),
        block_order: n,
        scale: g.scale(),
        precondition_min_eig: result.precondition_min_eig,
        bracketing_verified: result.bracketing_verified,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        config: cfg,
        message,
        result: Some(result),
    })
}

pub const TRACE_HEADER: &str = "n,parity,min_eig_shifted,step_norm,residual_estimate";

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn format_trace(history: &[IterateRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in history {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n,
            r.parity(),
            sci(r.min_eig_shifted),
            sci(r.step_norm),
            sci(r.residual_estimate)
        ));
    }
    out
}

pub fn write_trace(path: &Path, history: &[IterateRecord]) -> Result<()> {
    write_atomic(path, format_trace(history).as_bytes())
}

pub fn matrices_sidecar(trace: &Path) -> PathBuf {
    let mut p = trace.as_os_str().to_owned();
    p.push(".matrices.json");
    PathBuf::from(p)
}

#[derive(Serialize, Deserialize)]
struct TraceMatrix {
    n: usize,
    q_sq: RawMatrix,
}

pub fn write_trace_matrices(path: &Path, history: &[IterateRecord]) -> Result<()> {
    let rows: Vec<TraceMatrix> = history
        .iter()
        .map(|r| TraceMatrix {
            n: r.n,
            q_sq: to_raw(r.q_sq.as_matrix()),
        })
        .collect();
    let text = serde_json::to_string(&rows).expect("trace serializes");
    write_atomic(path, text.as_bytes())
}

/// Reads the iterates recorded in a matrices sidecar.
pub fn read_trace_matrices(path: &Path) -> Result<Vec<HermitianMatrix>> {
    let rows: Vec<TraceMatrix> = serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| parse_err(path.display().to_string(), e.to_string()))?;
    rows.iter()
        .map(|r| {
            let dim = r.q_sq.len();
            HermitianMatrix::new(from_raw(&r.q_sq, dim, &format!("q_sq[{}]", r.n))?)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub feasible: bool,
    pub direct: FeasibilityVerdict,
    pub schur: SchurOutcome,
}

impl CheckReport {
    pub fn exit_code(&self) -> i32 {
        if self.feasible {
            exit_code::SUCCESS
        } else {
            exit_code::INFEASIBLE
        }
    }
}

/// Decides feasibility of the instance's `rho` by both routes; the direct
/// route is authoritative.
pub fn run_check(instance: &InstanceFile, flags: &SolveFlags) -> Result<CheckReport> {
    let rho = instance
        .rho
        .clone()
        .ok_or_else(|| NehariError::Input("instance has no rho; check needs one".into()))?;
    let bound = DeviationBound::new(rho)?;
    let cfg = flags.config(instance);
    cfg.validate()?;
    let direct = feasibility_direct(&instance.coefficients, &bound, &cfg)?;
    let (_, g) = instance
        .coefficients
        .gram_blocks(instance.coefficients.default_block_order())?;
    let schur = feasibility_schur(&g, &bound, &cfg)?;
    Ok(CheckReport {
        feasible: direct.feasible,
        direct,
        schur,
    })
}

pub fn run_oracle(instance: &InstanceFile) -> Result<f64> {
    scalar_aak_oracle(&instance.coefficients)
}

/// Maps library errors onto CLI exit codes.
pub fn error_exit_code(e: &NehariError) -> i32 {
    match e {
        NehariError::Precondition { .. } => exit_code::PRECONDITION,
        _ => exit_code::INPUT,
    }
}
