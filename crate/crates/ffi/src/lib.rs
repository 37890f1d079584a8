//! C interface to the `dsfc` synthesis and verification pipeline.
//!
//! Objects cross the boundary as opaque handles created by a `*_from_*` or
//! producing call and released with the matching `*_free`. Every fallible
//! function returns a [`DsfcStatus`]; on failure [`dsfc_last_error`] holds a
//! message for the calling thread. Strings returned through `char **` are
//! owned by the caller and released with [`dsfc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dsfc::cli::config::{parse_config, Resolved};
use dsfc::cli::gains::GainsFile;
use dsfc::cli::verification_report;
use dsfc::lmi::Certificate;
use dsfc::model::ControllerGains;
use dsfc::predictor::predictor_init;
use dsfc::solver::backend_from_env;
use dsfc::synthesis::{self, Prepared};
use dsfc::verify::{spectral_abscissa, ClosedLoop};
use dsfc::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsfcStatus {
    DsfcOk = 0,
    /// A required pointer argument was null.
    DsfcErrNull = 1,
    /// Malformed configuration, gains or argument.
    DsfcErrConfig = 2,
    DsfcErrDimension = 3,
    DsfcErrInfeasible = 4,
    DsfcErrSolver = 5,
    DsfcErrIo = 6,
    /// Output buffer too small.
    DsfcErrBuffer = 7,
    DsfcErrNumeric = 8,
    DsfcErrPanic = 9,
}

/// Plant, basis, supply rate and algorithm settings.
pub struct DsfcProblem {
    resolved: Resolved,
    prep: Prepared,
}

/// Controller gains, optionally with γ and a certificate.
pub struct DsfcGains {
    gains: ControllerGains,
    gamma: Option<f64>,
    certificate: Option<Certificate>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(e: &Error) -> DsfcStatus {
    match e {
        Error::Dimension(_) => DsfcStatus::DsfcErrDimension,
        Error::Infeasible(_) => DsfcStatus::DsfcErrInfeasible,
        Error::Solver(_) => DsfcStatus::DsfcErrSolver,
        Error::Io(_) => DsfcStatus::DsfcErrIo,
        Error::Domain(_) | Error::NotPositiveDefinite(_) => DsfcStatus::DsfcErrNumeric,
        _ => DsfcStatus::DsfcErrConfig,
    }
}

/// Runs `f`, recording errors and panics.
fn guard<F>(f: F) -> DsfcStatus
where
    F: FnOnce() -> Result<(), (DsfcStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DsfcStatus::DsfcOk
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            DsfcStatus::DsfcErrPanic
        }
    }
}

fn lift(e: Error) -> (DsfcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DsfcStatus, String) {
    (DsfcStatus::DsfcErrNull, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (DsfcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (DsfcStatus::DsfcErrConfig, format!("`{what}` is not valid UTF-8")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (DsfcStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (DsfcStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn problem_from_text(text: &str) -> Result<Box<DsfcProblem>, Error> {
    let resolved = parse_config(text)?.resolve()?;
    let prep = Prepared::new(&resolved.plant, &resolved.spec, &resolved.supply, None)?;
    Ok(Box::new(DsfcProblem { resolved, prep }))
}

/// Message of the last failed call on this thread (empty after a success).
/// Valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn dsfc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dsfc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed before.
#[no_mangle]
pub unsafe extern "C" fn dsfc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a problem from a JSON run configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsfc_problem_from_json(json: *const c_char, out: *mut *mut DsfcProblem) -> DsfcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        *out = Box::into_raw(problem_from_text(text).map_err(lift)?);
        Ok(())
    })
}

/// Builds a problem from a JSON run configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsfc_problem_from_file(path: *const c_char, out: *mut *mut DsfcProblem) -> DsfcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(|e| lift(Error::Io(e)))?;
        *out = Box::into_raw(problem_from_text(&text).map_err(lift)?);
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dsfc_problem_free(problem: *mut DsfcProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// State, input, disturbance, output and basis dimensions. Any output
/// pointer may be null.
///
/// # Safety
/// `problem` must be a live handle; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn dsfc_problem_dims(
    problem: *const DsfcProblem,
    n: *mut usize,
    p: *mut usize,
    q: *mut usize,
    m: *mut usize,
    d: *mut usize,
) -> DsfcStatus {
    guard(|| {
        let pr = handle(problem, "problem")?;
        let plant = &pr.prep.plant;
        let vals = [plant.n(), plant.p(), plant.q(), plant.m(), pr.prep.spec.dim()];
        for (ptr, v) in [n, p, q, m, d].into_iter().zip(vals) {
            if let Some(slot) = ptr.as_mut() {
                *slot = v;
            }
        }
        Ok(())
    })
}

/// Predictor-based starting gains (no γ, no certificate).
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsfc_predictor_seed(problem: *const DsfcProblem, out: *mut *mut DsfcGains) -> DsfcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let pr = handle(problem, "problem")?;
        let alg = &pr.resolved.algorithm;
        let seed = predictor_init(&pr.prep.plant, &pr.prep.spec, &pr.prep.gram, alg.k.as_ref(), alg.x.as_ref())
            .map_err(lift)?;
        *out = Box::into_raw(Box::new(DsfcGains {
            gains: seed.gains,
            gamma: None,
            certificate: None,
        }));
        Ok(())
    })
}

/// Full synthesis. `max_iter < 0` keeps the configured iteration cap.
/// The solver backend follows `DSFC_SDP_BACKEND`.
///
/// # Safety
/// `problem` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsfc_synthesize(
    problem: *const DsfcProblem,
    max_iter: i64,
    out: *mut *mut DsfcGains,
) -> DsfcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let pr = handle(problem, "problem")?;
        let mut cfg = pr.resolved.algorithm.clone();
        if max_iter >= 0 {
            cfg.max_iter = max_iter as usize;
        }
        let backend = backend_from_env().map_err(lift)?;
        let res = synthesis::run(&pr.prep, &cfg, backend.as_ref()).map_err(lift)?;
        *out = Box::into_raw(Box::new(DsfcGains {
            gains: res.gains,
            gamma: res.gamma_final,
            certificate: Some(res.certificate),
        }));
        Ok(())
    })
}

/// Reads gains in the JSON format written by `dsfc synthesize`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsfc_gains_from_json(json: *const c_char, out: *mut *mut DsfcGains) -> DsfcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let file = GainsFile::parse(str_arg(json, "json")?).map_err(lift)?;
        let gains = file.gains().map_err(lift)?;
        let certificate = file
            .certificate
            .as_ref()
            .map(|c| c.certificate())
            .transpose()
            .map_err(lift)?;
        *out = Box::into_raw(Box::new(DsfcGains {
            gains,
            gamma: file.gamma,
            certificate,
        }));
        Ok(())
    })
}

/// Serializes gains to JSON; release the result with [`dsfc_string_free`].
///
/// # Safety
/// `gains` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsfc_gains_to_json(gains: *const DsfcGains, out: *mut *mut c_char) -> DsfcStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let g = handle(gains, "gains")?;
        let text = GainsFile::from_gains(&g.gains, g.gamma, g.certificate.as_ref())
            .to_json()
            .map_err(lift)?;
        *out = c_string(text);
        Ok(())
    })
}

/// # Safety
/// `gains` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dsfc_gains_free(gains: *mut DsfcGains) {
    if !gains.is_null() {
        drop(Box::from_raw(gains));
    }
}

/// Certified γ, or NaN when the gains carry none.
///
/// # Safety
/// `gains` must be a live handle and `gamma` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dsfc_gains_gamma(gains: *const DsfcGains, gamma: *mut f64) -> DsfcStatus {
    guard(|| {
        let out = out_ptr(gamma, "gamma")?;
        *out = handle(gains, "gains")?.gamma.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Rows and columns of the stacked gain `[K1 K2 K3]`.
///
/// # Safety
/// `gains` must be a live handle; `rows` and `cols` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dsfc_gains_shape(gains: *const DsfcGains, rows: *mut usize, cols: *mut usize) -> DsfcStatus {
    guard(|| {
        let g = handle(gains, "gains")?;
        let k = g.gains.stacked();
        *out_ptr(rows, "rows")? = k.nrows();
        *out_ptr(cols, "cols")? = k.ncols();
        Ok(())
    })
}

/// Copies `[K1 K2 K3]` row-major into `buf` of `len` doubles.
///
/// # Safety
/// `gains` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn dsfc_gains_copy(gains: *const DsfcGains, buf: *mut f64, len: usize) -> DsfcStatus {
    guard(|| {
        let g = handle(gains, "gains")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let k = g.gains.stacked();
        let need = k.nrows() * k.ncols();
        if len < need {
            return Err((
                DsfcStatus::DsfcErrBuffer,
                format!("buffer holds {len} values, {need} needed"),
            ));
        }
        let dst = std::slice::from_raw_parts_mut(buf, need);
        for i in 0..k.nrows() {
            for j in 0..k.ncols() {
                dst[i * k.ncols() + j] = k[(i, j)];
            }
        }
        Ok(())
    })
}

/// Rightmost characteristic root of the closed loop over the configured
/// discretization sizes.
///
/// # Safety
/// Handles must be live; `abscissa` valid; `converged` may be null.
#[no_mangle]
pub unsafe extern "C" fn dsfc_spectral_abscissa(
    problem: *const DsfcProblem,
    gains: *const DsfcGains,
    abscissa: *mut f64,
    converged: *mut c_int,
) -> DsfcStatus {
    guard(|| {
        let pr = handle(problem, "problem")?;
        let g = handle(gains, "gains")?;
        let out = out_ptr(abscissa, "abscissa")?;
        let cl = ClosedLoop::from_gains(&pr.prep.aug, &pr.prep.spec, &pr.prep.gram, &g.gains).map_err(lift)?;
        let rep = spectral_abscissa(&cl, &pr.resolved.verify.n_list).map_err(lift)?;
        *out = rep.estimate;
        if let Some(c) = converged.as_mut() {
            *c = c_int::from(rep.converged);
        }
        Ok(())
    })
}

/// Spectrum, dissipation and L2 checks. A certificate is computed by a
/// fixed-gain solve when the gains carry none. `report` (may be null)
/// receives the JSON report.
///
/// # Safety
/// Handles must be live; `passed` valid; `report` null or valid.
#[no_mangle]
pub unsafe extern "C" fn dsfc_verify(
    problem: *const DsfcProblem,
    gains: *const DsfcGains,
    seed: u64,
    passed: *mut c_int,
    report: *mut *mut c_char,
) -> DsfcStatus {
    guard(|| {
        let pr = handle(problem, "problem")?;
        let g = handle(gains, "gains")?;
        let passed = out_ptr(passed, "passed")?;
        if let Some(r) = report.as_mut() {
            *r = ptr::null_mut();
        }
        let (cert, gamma) = match &g.certificate {
            Some(c) => (Some(c.clone()), g.gamma),
            None => {
                let backend = backend_from_env().map_err(lift)?;
                let (_, it) = synthesis::certify(&pr.prep, &g.gains.stacked(), &pr.resolved.algorithm, backend.as_ref())
                    .map_err(lift)?;
                match it {
                    Some(it) => (Some(it.certificate), it.gamma),
                    None => (None, None),
                }
            }
        };
        let (rep, _) = verification_report(
            &pr.prep,
            &pr.resolved.verify,
            &g.gains,
            cert.as_ref().map(|c| (c, gamma)),
            pr.resolved.step(),
            seed,
        )
        .map_err(lift)?;
        *passed = c_int::from(rep.passed);
        if let Some(r) = report.as_mut() {
            let text = serde_json::to_string_pretty(&rep).map_err(|e| lift(Error::Json(e)))?;
            *r = c_string(text);
        }
        Ok(())
    })
}
