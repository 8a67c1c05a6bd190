//! C ABI over the overflow detector and repairer.
//!
//! Handles are opaque: create them with `ovg_session_new` and `ovg_analyze`,
//! release them with the matching `_free` function. Every fallible call
//! returns an [`OvgStatus`]; on failure `ovg_last_error` gives a message for
//! the calling thread. Strings returned through out-parameters are owned by
//! the caller and released with `ovg_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ovguard::analysis::{analyze_ast, parse_source, AnalysisConfig, AnalysisError, FileAnalysis};
use ovguard::config::{ConfigError, RunConfig};
use ovguard::repair::{
    apply_candidates, generate_repairs, revalidate, RepairCandidate, RepairConfig, RepairError,
    ValidationStatus,
};
use ovguard::solver::{SolverBackend, SolverError};
use ovguard::symexec::ExecError;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OvgStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The C source did not parse.
    Parse = 3,
    /// The configured solver could not be run.
    SolverUnavailable = 4,
    /// The configuration text was rejected.
    Config = 5,
    /// Analysis failed for another reason.
    Analysis = 6,
    /// Repair generation or insertion failed.
    Repair = 7,
    /// An index was past the end of a list.
    OutOfRange = 8,
    /// An internal panic was caught at the boundary.
    Panic = 9,
}

/// Settings shared by analyses and repairs.
pub struct OvgSession {
    config: RunConfig,
    repair: RepairConfig,
    solver: SolverBackend,
}

/// Detection result for one source text.
pub struct OvgAnalysis {
    source: String,
    file: String,
    config: AnalysisConfig,
    result: FileAnalysis,
}

struct Failure(OvgStatus, String);

type Outcome<T> = Result<T, Failure>;

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let status = match &e {
            AnalysisError::Frontend(_) => OvgStatus::Parse,
            AnalysisError::Exec(ExecError::Solver(SolverError::Unavailable(_))) => OvgStatus::SolverUnavailable,
            _ => OvgStatus::Analysis,
        };
        Failure(status, e.to_string())
    }
}

impl From<RepairError> for Failure {
    fn from(e: RepairError) -> Self {
        match e {
            RepairError::Analysis(a) => Failure::from(a),
            e if e.is_fatal() => Failure(OvgStatus::SolverUnavailable, e.to_string()),
            e => Failure(OvgStatus::Repair, e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let status = match e {
            ConfigError::MissingSolver(_) => OvgStatus::SolverUnavailable,
            _ => OvgStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

/// Run `f`, recording any failure or panic for `ovg_last_error`.
fn guard(f: impl FnOnce() -> Outcome<()>) -> OvgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => OvgStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal error: {message}"));
            OvgStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(OvgStatus::NullArgument, format!("`{name}` is null"))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(OvgStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Outcome<()> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

fn json<T: serde::Serialize>(value: &T) -> Outcome<*mut c_char> {
    serde_json::to_string(value)
        .map(owned_string)
        .map_err(|e| Failure(OvgStatus::Analysis, e.to_string()))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ovg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ovg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Create a session. `config_toml` may be null for the defaults; relative
/// paths inside it resolve against the current directory.
///
/// # Safety
/// `config_toml` is null or a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ovg_session_new(config_toml: *const c_char, out: *mut *mut OvgSession) -> OvgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = if config_toml.is_null() {
            RunConfig::default()
        } else {
            RunConfig::parse(text(config_toml, "config_toml")?, Path::new("ovguard.toml"))?
        };
        config.validate()?;
        let session = OvgSession {
            repair: config.repair()?,
            solver: config.solver(),
            config,
        };
        put(out, Box::into_raw(Box::new(session)), "out")
    })
}

/// # Safety
/// `session` is null or was returned by `ovg_session_new` and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ovg_session_free(session: *mut OvgSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Analyze `source`, reported under the name `file`.
///
/// # Safety
/// `session` is a live session; `source` and `file` are NUL-terminated;
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ovg_analyze(
    session: *const OvgSession,
    source: *const c_char,
    file: *const c_char,
    out: *mut *mut OvgAnalysis,
) -> OvgStatus {
    guard(|| {
        let session = session.as_ref().ok_or_else(|| null("session"))?;
        let source = text(source, "source")?.to_string();
        let file = text(file, "file")?.to_string();
        if out.is_null() {
            return Err(null("out"));
        }
        let config = session.config.analysis();
        let ast = parse_source(&source, &file)?;
        let result = analyze_ast(&ast, &source, &config, &session.solver)?;
        let analysis = OvgAnalysis {
            source,
            file,
            config,
            result,
        };
        put(out, Box::into_raw(Box::new(analysis)), "out")
    })
}

/// # Safety
/// `analysis` is null or was returned by `ovg_analyze` and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ovg_analysis_free(analysis: *mut OvgAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// Number of reports, or 0 for a null handle.
///
/// # Safety
/// `analysis` is null or a live analysis.
#[no_mangle]
pub unsafe extern "C" fn ovg_analysis_report_count(analysis: *const OvgAnalysis) -> usize {
    analysis.as_ref().map_or(0, |a| a.result.reports.len())
}

/// Source line of report `index`.
///
/// # Safety
/// `analysis` is a live analysis; `line` is writable.
#[no_mangle]
pub unsafe extern "C" fn ovg_analysis_report_line(
    analysis: *const OvgAnalysis,
    index: usize,
    line: *mut u32,
) -> OvgStatus {
    guard(|| {
        let a = analysis.as_ref().ok_or_else(|| null("analysis"))?;
        let report = a.result.reports.get(index).ok_or_else(|| {
            Failure(
                OvgStatus::OutOfRange,
                format!("report {index} of {}", a.result.reports.len()),
            )
        })?;
        put(line, report.line, "line")
    })
}

/// All reports as a JSON array.
///
/// # Safety
/// `analysis` is a live analysis; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ovg_analysis_reports_json(analysis: *const OvgAnalysis, out: *mut *mut c_char) -> OvgStatus {
    guard(|| {
        let a = analysis.as_ref().ok_or_else(|| null("analysis"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, json(&a.result.reports)?, "out")
    })
}

/// Repair attempts for every report as a JSON array; each element carries
/// either a candidate or the reason none was produced.
///
/// # Safety
/// `session` and `analysis` are live handles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ovg_repair_json(
    session: *const OvgSession,
    analysis: *const OvgAnalysis,
    out: *mut *mut c_char,
) -> OvgStatus {
    guard(|| {
        let session = session.as_ref().ok_or_else(|| null("session"))?;
        let a = analysis.as_ref().ok_or_else(|| null("analysis"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let ast = parse_source(&a.source, &a.file)?;
        let attempts = generate_repairs(&ast, &a.source, &a.result, &a.config, &session.repair, &session.solver)?;
        put(out, json(&attempts)?, "out")
    })
}

/// Apply every repair candidate to the analyzed source and re-analyze the
/// result. `patched` receives the repaired text; `applied` and
/// `revalidated` receive the candidate counts.
///
/// # Safety
/// `session` and `analysis` are live handles; the out-parameters are
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ovg_repair_apply_all(
    session: *const OvgSession,
    analysis: *const OvgAnalysis,
    patched: *mut *mut c_char,
    applied: *mut usize,
    revalidated: *mut usize,
) -> OvgStatus {
    guard(|| {
        let session = session.as_ref().ok_or_else(|| null("session"))?;
        let a = analysis.as_ref().ok_or_else(|| null("analysis"))?;
        if patched.is_null() || applied.is_null() || revalidated.is_null() {
            return Err(null("out parameter"));
        }
        let ast = parse_source(&a.source, &a.file)?;
        let attempts = generate_repairs(&ast, &a.source, &a.result, &a.config, &session.repair, &session.solver)?;
        let cands: Vec<&RepairCandidate> = attempts.iter().filter_map(|x| x.candidate.as_ref()).collect();
        let result = apply_candidates(&a.source, &cands)?;
        let mut config = a.config.clone();
        config.bound = Some(a.result.bound.clone());
        let summary = revalidate(
            &result.text,
            &a.file,
            &result.applied(&cands),
            &a.result.reports,
            &config,
            &session.solver,
        )?;
        let ok = summary
            .outcomes
            .iter()
            .filter(|o| o.status == ValidationStatus::Revalidated)
            .count();
        put(applied, cands.len(), "applied")?;
        put(revalidated, ok, "revalidated")?;
        put(patched, owned_string(result.text), "patched")
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ovg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
