//! C ABI over `confhor`.
//!
//! Entries are opaque heap handles. Every call returns a [`ConfhorStatus`];
//! on failure the message is kept per thread and read back with
//! [`confhor_last_error`]. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use confhor::cli::{AnalysisConfig, MetricId};
use confhor::exact_solutions::CatalogEntry;
use confhor::mass_geometry::{closure_scan, horizon_root, mass_catalog, ScanConfig, ScanOutcome};
use confhor::penrose_bound::{penrose_bound, BoundConfig};
use confhor::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfhorStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    OutOfRange = 3,
    NoSignChange = 4,
    NotTemporalGauge = 5,
    HypothesisViolated = 6,
    NonConvergent = 7,
    Numerical = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfhorMetric {
    Schwarzschild = 0,
    ReissnerNordstrom = 1,
    Roberts = 2,
    Kerr = 3,
    Synthetic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfhorOutcome {
    Naked = 0,
    NotNaked = 1,
    Inconclusive = 2,
}

/// Opaque catalog entry.
pub struct ConfhorEntry(CatalogEntry);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConfhorMass {
    pub m: f64,
    pub dm_dw0: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConfhorBound {
    pub m_sq: f64,
    pub mass_converged: bool,
    /// `log10 |rhs|`
    pub rhs_log10: f64,
    pub rhs_sign: f64,
    pub inequality_holds: bool,
    pub euler_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn status_of(e: &Error) -> ConfhorStatus {
    match e {
        Error::InvalidParameter(_)
        | Error::InvalidSigma(_)
        | Error::Config(_)
        | Error::BranchMismatch(_) => ConfhorStatus::InvalidParameter,
        Error::OutOfRange(_)
        | Error::PatchViolation { .. }
        | Error::ChartInvalid(_)
        | Error::DomainExceeded { .. } => ConfhorStatus::OutOfRange,
        Error::NoSignChange(_) => ConfhorStatus::NoSignChange,
        Error::NotTemporalGauge => ConfhorStatus::NotTemporalGauge,
        Error::HypothesisViolated(_) | Error::NonCausalZ { .. } => {
            ConfhorStatus::HypothesisViolated
        }
        Error::NonConvergent(_) | Error::InconclusiveRefinement(_) => ConfhorStatus::NonConvergent,
        _ => ConfhorStatus::Numerical,
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|s| *s.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), (ConfhorStatus, String)>) -> ConfhorStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|s| *s.borrow_mut() = None);
            ConfhorStatus::Ok
        }
        Ok(Err((st, msg))) => {
            set_error(msg);
            st
        }
        Err(_) => {
            set_error("panic inside confhor".into());
            ConfhorStatus::Panic
        }
    }
}

fn lib(e: Error) -> (ConfhorStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (ConfhorStatus, String) {
    (ConfhorStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` is null or a live handle from [`confhor_entry_new`].
unsafe fn entry_ref<'a>(
    p: *const ConfhorEntry,
) -> Result<&'a CatalogEntry, (ConfhorStatus, String)> {
    p.as_ref().map(|e| &e.0).ok_or_else(|| null("entry"))
}

/// Builds a catalog entry. `charge` is used by Reissner-Nordstrom, `spin` by
/// Kerr and `sigma` by Roberts; the synthetic entry ignores all parameters.
///
/// # Safety
/// `out` must be valid for one pointer write.
#[no_mangle]
pub unsafe extern "C" fn confhor_entry_new(
    metric: ConfhorMetric,
    mass: f64,
    charge: f64,
    spin: f64,
    sigma: f64,
    out: *mut *mut ConfhorEntry,
) -> ConfhorStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let cfg = AnalysisConfig {
            metric: match metric {
                ConfhorMetric::Schwarzschild => MetricId::Schwarzschild,
                ConfhorMetric::ReissnerNordstrom => MetricId::Rn,
                ConfhorMetric::Roberts => MetricId::Roberts,
                ConfhorMetric::Kerr => MetricId::Kerr,
                ConfhorMetric::Synthetic => MetricId::Synthetic,
            },
            mass,
            charge,
            spin,
            sigma,
            ..AnalysisConfig::default()
        };
        let e = cfg.entry().map_err(lib)?;
        *out = Box::into_raw(Box::new(ConfhorEntry(e)));
        Ok(())
    })
}

/// # Safety
/// `entry` is null or a handle from [`confhor_entry_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn confhor_entry_free(entry: *mut ConfhorEntry) {
    if !entry.is_null() {
        drop(Box::from_raw(entry));
    }
}

/// Mass function and `∂m/∂ω⁰` at `omega[0..4]`.
///
/// # Safety
/// `omega` points to four doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn confhor_mass(
    entry: *const ConfhorEntry,
    omega: *const f64,
    out: *mut ConfhorMass,
) -> ConfhorStatus {
    guard(|| {
        let e = entry_ref(entry)?;
        if omega.is_null() {
            return Err(null("omega"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let w: [f64; 4] = std::slice::from_raw_parts(omega, 4)
            .try_into()
            .expect("four entries");
        let s = mass_catalog(e, &w).map_err(lib)?;
        *out = ConfhorMass {
            m: s.m,
            dm_dw0: s.dm_dt,
        };
        Ok(())
    })
}

/// `ln X̃(ω¹, θ)`, the log of the horizon height.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn confhor_horizon_log(
    entry: *const ConfhorEntry,
    omega1: f64,
    theta: f64,
    out: *mut f64,
) -> ConfhorStatus {
    guard(|| {
        let e = entry_ref(entry)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let rad = e.radial(omega1).map_err(lib)?;
        *out = horizon_root(e, &rad, theta).map_err(lib)?;
        Ok(())
    })
}

/// Boundary refinement scan with default settings.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn confhor_naked_scan(
    entry: *const ConfhorEntry,
    out: *mut ConfhorOutcome,
) -> ConfhorStatus {
    guard(|| {
        let e = entry_ref(entry)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = closure_scan(e, &ScanConfig::default()).map_err(lib)?;
        *out = match r.outcome {
            ScanOutcome::Naked => ConfhorOutcome::Naked,
            ScanOutcome::NotNaked => ConfhorOutcome::NotNaked,
            ScanOutcome::Inconclusive => ConfhorOutcome::Inconclusive,
        };
        Ok(())
    })
}

/// Penrose-type bound with `nodes` Gauss nodes per axis (0 for the default).
/// A non-convergent total mass is reported in `mass_converged`, not as an
/// error.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn confhor_penrose(
    entry: *const ConfhorEntry,
    nodes: u32,
    out: *mut ConfhorBound,
) -> ConfhorStatus {
    guard(|| {
        let e = entry_ref(entry)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let mut cfg = BoundConfig::default();
        if nodes != 0 {
            cfg.nodes = nodes as usize;
        }
        let r = penrose_bound(e, &cfg).map_err(lib)?;
        *out = ConfhorBound {
            m_sq: r.m_sq,
            mass_converged: r.m_sq_detail.converged,
            rhs_log10: r.rhs_log10,
            rhs_sign: r.rhs_sign,
            inequality_holds: r.inequality_holds,
            euler_residual: r.euler_residual_max,
        };
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn confhor_last_error() -> *const c_char {
    LAST_ERROR.with(|s| s.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn confhor_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
