//! C ABI over `mvcert`. Objects cross the boundary as opaque handles that the
//! caller frees with the matching `*_free`. Every fallible call returns an
//! [`MvcertStatus`]; the message of the last failure on the calling thread is
//! available through [`mvcert_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mvcert::bounds::{informed_seeger_bound, seeger_bound, InformedInputs};
use mvcert::config::RunConfig;
use mvcert::dirichlet::{kl_dirichlet, DirichletParams};
use mvcert::risk::{exact_empirical_risk, mc_relaxed_risk, McConfig, RiskValue};
use mvcert::specfun::{kl_inverse, reg_inc_beta};
use mvcert::train::{self, RunOutput};
use mvcert::voters::ErrorMatrix;
use mvcert::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MvcertStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    DimensionMismatch = 4,
    Convergence = 5,
    Numeric = 6,
    Config = 7,
    Io = 8,
    Parse = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Dirichlet distribution over voter weightings.
pub struct MvcertDirichlet(DirichletParams);

/// Examples × voters table of mistakes.
pub struct MvcertErrorMatrix(ErrorMatrix);

/// A trained run with its report.
pub struct MvcertRun {
    config: RunConfig,
    output: RunOutput,
    report_json: String,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> MvcertStatus {
    match e {
        Error::Domain { .. } | Error::Empty(_) | Error::IndexSet(_) => MvcertStatus::Domain,
        Error::DimensionMismatch { .. } => MvcertStatus::DimensionMismatch,
        Error::Convergence { .. } => MvcertStatus::Convergence,
        Error::Numeric(_) => MvcertStatus::Numeric,
        Error::Config { .. } | Error::MissingArtifact(_) => MvcertStatus::Config,
        Error::Io(_) => MvcertStatus::Io,
        Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => MvcertStatus::Parse,
    }
}

struct Fail(MvcertStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MvcertStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MvcertStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MvcertStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MvcertStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(MvcertStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

/// Copies `text` NUL-terminated into `buf`; `needed` receives the size including the NUL.
unsafe fn copy_out(text: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Result<(), Fail> {
    let size = text.len() + 1;
    if !needed.is_null() {
        needed.write(size);
    }
    if buf.is_null() || len < size {
        return Err(Fail(MvcertStatus::BufferTooSmall, format!("buffer of {len} bytes, need {size}")));
    }
    ptr::copy_nonoverlapping(text.as_ptr(), buf as *mut u8, text.len());
    buf.add(text.len()).write(0);
    Ok(())
}

/// NUL-terminated library version; static storage.
#[no_mangle]
pub extern "C" fn mvcert_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the last error message of this thread into `buf`.
///
/// # Safety
/// `buf` must hold `len` writable bytes or be null; `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn mvcert_last_error_message(buf: *mut c_char, len: usize, needed: *mut usize) -> MvcertStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match copy_out(&msg, buf, len, needed) {
        Ok(()) => MvcertStatus::Ok,
        Err(Fail(s, _)) => s,
    }
}

/// # Safety
/// `alpha` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvcert_dirichlet_new(alpha: *const f64, len: usize, out: *mut *mut MvcertDirichlet) -> MvcertStatus {
    guard(|| {
        let a = slice(alpha, len, "alpha")?;
        let d = DirichletParams::new(a.to_vec())?;
        put(out, Box::into_raw(Box::new(MvcertDirichlet(d))), "out")
    })
}

/// # Safety
/// `d` must come from [`mvcert_dirichlet_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mvcert_dirichlet_free(d: *mut MvcertDirichlet) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Builds an error matrix from `n * m` row-major bytes (nonzero = mistake).
///
/// # Safety
/// `entries` must point to `n * m` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvcert_error_matrix_new(entries: *const u8, n: usize, m: usize, out: *mut *mut MvcertErrorMatrix) -> MvcertStatus {
    guard(|| {
        let size = n
            .checked_mul(m)
            .ok_or_else(|| Fail(MvcertStatus::InvalidArgument, "n * m overflows".into()))?;
        let bits: Vec<bool> = slice(entries, size, "entries")?.iter().map(|&b| b != 0).collect();
        let e = ErrorMatrix::from_flat(n, m, &bits)?;
        put(out, Box::into_raw(Box::new(MvcertErrorMatrix(e))), "out")
    })
}

/// # Safety
/// `e` must come from [`mvcert_error_matrix_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mvcert_error_matrix_free(e: *mut MvcertErrorMatrix) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

unsafe fn write_risk(r: RiskValue, value: *mut f64, grad: *mut f64, grad_len: usize) -> Result<(), Fail> {
    if !grad.is_null() {
        let g = r.gradient.unwrap_or_default();
        if grad_len != g.len() {
            return Err(Fail(
                MvcertStatus::DimensionMismatch,
                format!("gradient buffer holds {grad_len} values, need {}", g.len()),
            ));
        }
        ptr::copy_nonoverlapping(g.as_ptr(), grad, g.len());
    }
    put(value, r.value, "value")
}

/// Exact expected risk of the stochastic majority vote. `grad` may be null;
/// otherwise it receives the α-gradient and must hold `grad_len` = M doubles.
///
/// # Safety
/// Handles must be live; `value` writable; `grad` null or `grad_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mvcert_exact_risk(
    alpha: *const MvcertDirichlet,
    errs: *const MvcertErrorMatrix,
    value: *mut f64,
    grad: *mut f64,
    grad_len: usize,
) -> MvcertStatus {
    guard(|| {
        let a = &deref(alpha, "alpha")?.0;
        let e = &deref(errs, "errs")?.0;
        write_risk(exact_empirical_risk(a, e, !grad.is_null())?, value, grad, grad_len)
    })
}

/// Monte-Carlo relaxed risk with `draws` samples and sigmoid slope `slope`.
///
/// # Safety
/// As for [`mvcert_exact_risk`].
#[no_mangle]
pub unsafe extern "C" fn mvcert_mc_risk(
    alpha: *const MvcertDirichlet,
    errs: *const MvcertErrorMatrix,
    draws: usize,
    slope: f64,
    seed: u64,
    value: *mut f64,
    grad: *mut f64,
    grad_len: usize,
) -> MvcertStatus {
    guard(|| {
        let a = &deref(alpha, "alpha")?.0;
        let e = &deref(errs, "errs")?.0;
        let cfg = McConfig { draws, slope };
        let r = mc_relaxed_risk(a, e, cfg, &mut mvcert::rng::stream(seed), !grad.is_null())?;
        write_risk(r, value, grad, grad_len)
    })
}

/// KL(post ‖ prior) between Dirichlet distributions.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvcert_kl_dirichlet(post: *const MvcertDirichlet, prior: *const MvcertDirichlet, out: *mut f64) -> MvcertStatus {
    guard(|| {
        let kl = kl_dirichlet(&deref(post, "post")?.0, &deref(prior, "prior")?.0)?;
        put(out, kl, "out")
    })
}

/// kl⁻¹(q, ε): largest p with kl(q ‖ p) ≤ ε.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvcert_kl_inverse(q: f64, eps: f64, out: *mut f64) -> MvcertStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&q) || !(eps >= 0.0) {
            return Err(Fail(MvcertStatus::Domain, format!("kl inverse needs q in [0, 1] and eps >= 0, got ({q}, {eps})")));
        }
        put(out, kl_inverse(q, eps), "out")
    })
}

/// Regularized incomplete beta function I_x(a, b).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvcert_reg_inc_beta(x: f64, a: f64, b: f64, out: *mut f64) -> MvcertStatus {
    guard(|| put(out, reg_inc_beta(x, a, b)?, "out"))
}

/// Seeger certificate kl⁻¹(risk, (kl + ln(2√n/δ))/n).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvcert_seeger_bound(risk: f64, kl: f64, n: usize, delta: f64, out: *mut f64) -> MvcertStatus {
    guard(|| put(out, seeger_bound(risk, kl, n, delta)?, "out"))
}

/// Certificate of the informed-prior mixture over two data halves of sizes `m` and `n − m`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mvcert_informed_bound(
    risk_first: f64,
    risk_second: f64,
    kl_gt: f64,
    kl_le: f64,
    n: usize,
    m: usize,
    p: f64,
    delta: f64,
    out: *mut f64,
) -> MvcertStatus {
    guard(|| {
        let inp = InformedInputs {
            risk_first,
            risk_second,
            kl_gt,
            kl_le,
            n,
            m,
            p,
            delta,
        };
        put(out, informed_seeger_bound(&inp)?, "out")
    })
}

/// Trains a run from TOML config text (empty text gives the defaults).
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mvcert_train(config_toml: *const c_char, out: *mut *mut MvcertRun) -> MvcertStatus {
    guard(|| {
        let config = RunConfig::from_toml_str(str_arg(config_toml, "config_toml")?)?;
        let output = train::run(&config)?;
        let report_json = serde_json::to_string_pretty(&output.report).map_err(Error::from)?;
        let run = MvcertRun {
            config,
            output,
            report_json,
        };
        put(out, Box::into_raw(Box::new(run)), "out")
    })
}

/// # Safety
/// `run` must come from [`mvcert_train`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mvcert_run_free(run: *mut MvcertRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be live; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn mvcert_run_summary(run: *const MvcertRun, certificate: *mut f64, test_error: *mut f64) -> MvcertStatus {
    guard(|| {
        let r = &deref(run, "run")?.output.report;
        put(certificate, r.bound.certificate, "certificate")?;
        put(test_error, r.test_error, "test_error")
    })
}

/// Copies the JSON report into `buf`. With a null or short buffer the call
/// fails with `BUFFER_TOO_SMALL` and `needed` still receives the size.
///
/// # Safety
/// `run` must be live; `buf` null or `len` writable bytes; `needed` null or writable.
#[no_mangle]
pub unsafe extern "C" fn mvcert_run_report_json(run: *const MvcertRun, buf: *mut c_char, len: usize, needed: *mut usize) -> MvcertStatus {
    guard(|| copy_out(&deref(run, "run")?.report_json, buf, len, needed))
}

/// Writes the run artifacts into directory `dir`.
///
/// # Safety
/// `run` must be live; `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn mvcert_run_write(run: *const MvcertRun, dir: *const c_char) -> MvcertStatus {
    guard(|| {
        let r = deref(run, "run")?;
        train::write_artifacts(Path::new(str_arg(dir, "dir")?), &r.config, &r.output)?;
        Ok(())
    })
}
