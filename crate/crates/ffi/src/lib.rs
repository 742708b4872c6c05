//! C ABI for `nehari-core`.
//!
//! Instances and results are opaque handles created by the library and
//! released with the matching `*_free` function. Every fallible call returns
//! a [`NehariCode`]; on failure a message is available from
//! [`nehari_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use nehari_core::io::{parse_instance, run_check, run_solve, InstanceFile, RunReport, SolveFlags};
use nehari_core::{
    CoefficientSequence, ComplexMatrix, HermitianMatrix, NehariError, SolveStatus, C64,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NehariCode {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Precondition = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    NoSolution = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NehariSolveStatus {
    Converged = 0,
    GapPositive = 1,
    PreconditionFailed = 2,
    MaxIterations = 3,
}

/// Solver overrides. Non-positive values keep the defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NehariOptions {
    pub delta: f64,
    pub tol: f64,
    pub max_iter: usize,
}

/// Opaque instance handle.
pub struct NehariInstance {
    inner: InstanceFile,
}

/// Opaque solve result handle.
pub struct NehariResult {
    report: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn code_for(e: &NehariError) -> NehariCode {
    match e {
        NehariError::Parse { .. } | NehariError::Version(_) => NehariCode::Parse,
        NehariError::Precondition { .. } => NehariCode::Precondition,
        NehariError::Input(_)
        | NehariError::NotPsd { .. }
        | NehariError::PartitionUndefined(_)
        | NehariError::State(_)
        | NehariError::NotApplicable(_)
        | NehariError::Io(_) => NehariCode::InvalidArgument,
        _ => NehariCode::Numerical,
    }
}

fn fail(e: NehariError) -> NehariCode {
    let code = code_for(&e);
    set_error(e.to_string());
    code
}

fn guard(f: impl FnOnce() -> NehariCode) -> NehariCode {
    clear_error();
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_error("internal panic");
        NehariCode::Panic
    })
}

/// Reads `len` complex values from split real/imaginary arrays. A null
/// `im` means all imaginary parts are zero.
unsafe fn read_complex(re: *const f64, im: *const f64, len: usize) -> Vec<C64> {
    let re = slice::from_raw_parts(re, len);
    if im.is_null() {
        re.iter().map(|&x| C64::new(x, 0.0)).collect()
    } else {
        let im = slice::from_raw_parts(im, len);
        re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect()
    }
}

/// Parses a JSON instance document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nehari_instance_from_json(
    json: *const c_char,
    out: *mut *mut NehariInstance,
) -> NehariCode {
    guard(|| {
        if json.is_null() || out.is_null() {
            set_error("null pointer argument");
            return NehariCode::NullPointer;
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("instance text is not UTF-8");
                return NehariCode::Parse;
            }
        };
        match parse_instance(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(NehariInstance { inner }));
                NehariCode::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Builds an instance from `support` blocks of size `dim x dim`, stored
/// block after block, each row-major. `im` may be null for real data.
///
/// # Safety
/// `re` (and `im` when non-null) must hold `support * dim * dim` values;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nehari_instance_from_coefficients(
    dim: usize,
    support: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut NehariInstance,
) -> NehariCode {
    guard(|| {
        if re.is_null() || out.is_null() {
            set_error("null pointer argument");
            return NehariCode::NullPointer;
        }
        if dim == 0 || support == 0 {
            set_error("dim and support must be positive");
            return NehariCode::InvalidArgument;
        }
        let block = dim * dim;
        let values = read_complex(re, im, block * support);
        let blocks: Result<Vec<_>, _> = values
            .chunks(block)
            .map(|c| ComplexMatrix::from_row_major(dim, dim, c))
            .collect();
        match blocks.and_then(CoefficientSequence::new) {
            Ok(coefficients) => {
                *out = Box::into_raw(Box::new(NehariInstance {
                    inner: InstanceFile::new(coefficients),
                }));
                NehariCode::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Block dimension `m`, or 0 for a null handle.
///
/// # Safety
/// `instance` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nehari_instance_dim(instance: *const NehariInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.dim())
}

/// # Safety
/// `instance` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nehari_instance_free(instance: *mut NehariInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Solves for the minimal bound. A result handle is produced whenever the
/// solver ran, including non-converged runs; inspect
/// [`nehari_result_status`]. `options` may be null.
///
/// # Safety
/// `instance` must be a live handle, `options` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn nehari_solve(
    instance: *const NehariInstance,
    options: *const NehariOptions,
    out: *mut *mut NehariResult,
) -> NehariCode {
    guard(|| {
        let Some(inst) = instance.as_ref() else {
            set_error("null instance");
            return NehariCode::NullPointer;
        };
        if out.is_null() {
            set_error("null output pointer");
            return NehariCode::NullPointer;
        }
        let mut flags = SolveFlags::default();
        if let Some(o) = options.as_ref() {
            flags.delta = (o.delta > 0.0).then_some(o.delta);
            flags.tol = (o.tol > 0.0).then_some(o.tol);
            flags.max_iter = (o.max_iter > 0).then_some(o.max_iter);
        }
        match run_solve(&inst.inner, &flags) {
            Ok(report) => {
                if let Some(msg) = &report.message {
                    set_error(msg.clone());
                }
                *out = Box::into_raw(Box::new(NehariResult { report }));
                NehariCode::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nehari_result_status(result: *const NehariResult) -> NehariSolveStatus {
    match result.as_ref().map(|r| r.report.status) {
        Some(SolveStatus::Converged) => NehariSolveStatus::Converged,
        Some(SolveStatus::GapPositive) => NehariSolveStatus::GapPositive,
        Some(SolveStatus::MaxIterations) => NehariSolveStatus::MaxIterations,
        _ => NehariSolveStatus::PreconditionFailed,
    }
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nehari_result_iterations(result: *const NehariResult) -> usize {
    result.as_ref().map_or(0, |r| r.report.iterations)
}

/// Fixed-point residual of the certificate, or NaN when there is none.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nehari_result_residual(result: *const NehariResult) -> f64 {
    result
        .as_ref()
        .and_then(|r| r.report.certificate.as_ref())
        .map_or(f64::NAN, |c| c.fixed_point_residual)
}

/// Copies rho^2_min row-major into `re`/`im` (each of length `len`, at
/// least `m * m`). `im` may be null.
///
/// # Safety
/// `result` must be a live handle; buffers must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn nehari_result_rho_sq(
    result: *const NehariResult,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> NehariCode {
    guard(|| {
        let Some(r) = result.as_ref() else {
            set_error("null result");
            return NehariCode::NullPointer;
        };
        if re.is_null() {
            set_error("null output buffer");
            return NehariCode::NullPointer;
        }
        let Some(rows) = &r.report.rho_sq_min else {
            set_error(
                r.report
                    .message
                    .clone()
                    .unwrap_or_else(|| "no converged solution".into()),
            );
            return NehariCode::NoSolution;
        };
        let flat: Vec<[f64; 2]> = rows.iter().flatten().copied().collect();
        if len < flat.len() {
            set_error(format!("buffer holds {len} values, need {}", flat.len()));
            return NehariCode::BufferTooSmall;
        }
        let re = slice::from_raw_parts_mut(re, flat.len());
        for (dst, [a, _]) in re.iter_mut().zip(&flat) {
            *dst = *a;
        }
        if !im.is_null() {
            let im = slice::from_raw_parts_mut(im, flat.len());
            for (dst, [_, b]) in im.iter_mut().zip(&flat) {
                *dst = *b;
            }
        }
        NehariCode::Ok
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nehari_result_free(result: *mut NehariResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Decides whether the bound `rho` (the bound itself, not its square;
/// Hermitian, `m x m`, row-major) is
/// feasible. Writes 1 or 0 to `feasible` and the eigenvalue margin to
/// `margin` (may be null).
///
/// # Safety
/// `instance` must be a live handle; `rho_re` (and `rho_im` when non-null)
/// must hold `m * m` values; `feasible` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nehari_check(
    instance: *const NehariInstance,
    rho_re: *const f64,
    rho_im: *const f64,
    feasible: *mut c_int,
    margin: *mut f64,
) -> NehariCode {
    guard(|| {
        let Some(inst) = instance.as_ref() else {
            set_error("null instance");
            return NehariCode::NullPointer;
        };
        if rho_re.is_null() || feasible.is_null() {
            set_error("null pointer argument");
            return NehariCode::NullPointer;
        }
        let m = inst.inner.dim();
        let entries = read_complex(rho_re, rho_im, m * m);
        let rho = ComplexMatrix::from_row_major(m, m, &entries)
            .and_then(|c| HermitianMatrix::new(c.into_inner()));
        let mut with_rho = inst.inner.clone();
        with_rho.rho = match rho {
            Ok(r) => Some(r),
            Err(e) => return fail(e),
        };
        match run_check(&with_rho, &SolveFlags::default()) {
            Ok(report) => {
                *feasible = c_int::from(report.feasible);
                if let Some(m) = margin.as_mut() {
                    *m = report.direct.margin;
                }
                NehariCode::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn nehari_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nehari_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
