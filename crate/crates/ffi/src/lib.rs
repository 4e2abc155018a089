//! C ABI over the hyperbond kernel.
//!
//! Structures are opaque `HypStructure` handles owned by the caller and
//! released with `hyp_structure_free`. Strings returned through out
//! parameters are owned by the caller and released with `hyp_string_free`.
//! Every fallible call returns a `HypStatus`; on failure the message is
//! available from `hyp_last_error` on the same thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hyperbond::bridge::{transfer, RelationDocument};
use hyperbond::brunnian::{check_brunnian, generate, BrunnianSpec};
use hyperbond::dot::export_dot;
use hyperbond::kernel::validate_document;
use hyperbond::site::{check_topology, Site, TopologyDocument};
use hyperbond::{Document, Hyperstructure, DEFAULT_DEPTH_CAP};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidStructure = 4,
    CheckFailed = 5,
    OperationFailed = 6,
    Panic = 7,
}

/// Opaque handle to a validated hyperstructure.
pub struct HypStructure {
    inner: Hyperstructure,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = CString::new(message.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

struct Failure(HypStatus, String);

type Outcome = Result<HypStatus, Failure>;

fn guarded(body: impl FnOnce() -> Outcome) -> HypStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HypStatus::Panic
        }
    }
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure(HypStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| Failure(HypStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a>(ptr: *const HypStructure) -> Result<&'a Hyperstructure, Failure> {
    ptr.as_ref().map(|h| &h.inner).ok_or_else(|| Failure(HypStatus::NullArgument, "structure is null".into()))
}

unsafe fn out_ptr<'a, T>(ptr: *mut T) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| Failure(HypStatus::NullArgument, "output pointer is null".into()))
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

fn boxed(h: Hyperstructure) -> *mut HypStructure {
    Box::into_raw(Box::new(HypStructure { inner: h }))
}

fn parse_failure(e: impl std::fmt::Display) -> Failure {
    Failure(HypStatus::ParseError, e.to_string())
}

fn operation_failure(e: impl std::fmt::Display) -> Failure {
    Failure(HypStatus::OperationFailed, e.to_string())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn hyp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn hyp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn hyp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a structure document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyp_structure_parse(json: *const c_char, out: *mut *mut HypStructure) -> HypStatus {
    guarded(|| {
        let out = out_ptr(out)?;
        let doc = Document::parse(text(json, "json")?).map_err(parse_failure)?;
        let report = validate_document(&doc, DEFAULT_DEPTH_CAP);
        if let Some(first) = report.findings.first() {
            return Err(Failure(HypStatus::InvalidStructure, first.to_string()));
        }
        let h = Hyperstructure::from_document(&doc).map_err(|e| Failure(HypStatus::InvalidStructure, e.to_string()))?;
        *out = boxed(h);
        Ok(HypStatus::Ok)
    })
}

/// # Safety
/// `s` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn hyp_structure_free(s: *mut HypStructure) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Canonical JSON document of a structure.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyp_structure_to_json(s: *const HypStructure, out: *mut *mut c_char) -> HypStatus {
    guarded(|| {
        let out = out_ptr(out)?;
        *out = owned(handle(s)?.to_canonical_json());
        Ok(HypStatus::Ok)
    })
}

/// Number of bond levels.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyp_structure_order(s: *const HypStructure, out: *mut usize) -> HypStatus {
    guarded(|| {
        *out_ptr(out)? = handle(s)?.order();
        Ok(HypStatus::Ok)
    })
}

/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyp_structure_object_count(s: *const HypStructure, out: *mut usize) -> HypStatus {
    guarded(|| {
        *out_ptr(out)? = handle(s)?.objects().len();
        Ok(HypStatus::Ok)
    })
}

/// Bonds registered at `level`; zero above the top level.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyp_structure_bond_count(s: *const HypStructure, level: usize, out: *mut usize) -> HypStatus {
    guarded(|| {
        *out_ptr(out)? = handle(s)?.bond_count(level);
        Ok(HypStatus::Ok)
    })
}

/// Validates a raw document and writes the JSON list of findings.
/// Returns `CheckFailed` when there are findings.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyp_validate_document(json: *const c_char, out_report: *mut *mut c_char) -> HypStatus {
    guarded(|| {
        let out = out_ptr(out_report)?;
        let doc = Document::parse(text(json, "json")?).map_err(parse_failure)?;
        let report = validate_document(&doc, DEFAULT_DEPTH_CAP);
        *out = owned(serde_json::to_string(&report.findings).expect("findings serialize"));
        Ok(if report.is_empty() { HypStatus::Ok } else { HypStatus::CheckFailed })
    })
}

/// Checks the topology axioms of the site given by `s` and a topology
/// document; writes the JSON list of findings.
///
/// # Safety
/// `s` must be a live handle, `topology_json` a NUL-terminated string and
/// `out_report` writable.
#[no_mangle]
pub unsafe extern "C" fn hyp_topology_check(
    s: *const HypStructure,
    topology_json: *const c_char,
    out_report: *mut *mut c_char,
) -> HypStatus {
    guarded(|| {
        let out = out_ptr(out_report)?;
        let h = handle(s)?;
        let doc = TopologyDocument::parse(text(topology_json, "topology_json")?).map_err(parse_failure)?;
        let topology = doc.to_topology(h).map_err(operation_failure)?;
        let site = Site::new(h.clone(), topology).map_err(operation_failure)?;
        let report = check_topology(&site);
        *out = owned(serde_json::to_string(&report.findings).expect("findings serialize"));
        Ok(if report.holds() { HypStatus::Ok } else { HypStatus::CheckFailed })
    })
}

/// Transfers `s` along a relation document onto its universe.
///
/// # Safety
/// `s` must be a live handle, `relation_json` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hyp_transfer(
    s: *const HypStructure,
    relation_json: *const c_char,
    out: *mut *mut HypStructure,
) -> HypStatus {
    guarded(|| {
        let out = out_ptr(out)?;
        let h = handle(s)?;
        let relation = RelationDocument::parse(text(relation_json, "relation_json")?).map_err(parse_failure)?;
        *out = boxed(transfer(h, &relation).map_err(operation_failure)?);
        Ok(HypStatus::Ok)
    })
}

/// Levelwise Brunnian structure with `branching^order` objects.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyp_brunnian_generate(
    branching: usize,
    order: usize,
    out: *mut *mut HypStructure,
) -> HypStatus {
    guarded(|| {
        let out = out_ptr(out)?;
        *out = boxed(generate(&BrunnianSpec::new(branching, order)).map_err(operation_failure)?);
        Ok(HypStatus::Ok)
    })
}

/// Writes whether `s` is levelwise Brunnian.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyp_brunnian_check(s: *const HypStructure, out: *mut bool) -> HypStatus {
    guarded(|| {
        *out_ptr(out)? = check_brunnian(handle(s)?).holds();
        Ok(HypStatus::Ok)
    })
}

/// Graphviz rendering of `s`.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hyp_export_dot(s: *const HypStructure, out: *mut *mut c_char) -> HypStatus {
    guarded(|| {
        let out = out_ptr(out)?;
        *out = owned(export_dot(handle(s)?));
        Ok(HypStatus::Ok)
    })
}
