//! C ABI over `harvest-core`.
//!
//! Objects cross the boundary as opaque handles created and destroyed by
//! paired `*_new`/`*_load`/`*_free` functions. Every fallible call returns an
//! [`HvStatus`]; on failure `hv_last_error_message` describes the error for
//! the calling thread. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use harvest_core::pipeline::{process_frame_dir, run_frame_dir, FruitEntry, PickList, PipelineConfig};
use harvest_core::pose::rotation_matrix;
use harvest_core::synth::{render_frame, SceneSpec};
use harvest_core::verify::confidence_from_penalty;
use harvest_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Format = 4,
    Structure = 5,
    Config = 6,
    Contract = 7,
    OutOfRange = 8,
    Panic = 9,
}

/// Pipeline configuration handle.
pub struct HvConfig(PipelineConfig);

/// Processed frame: ranked fruits plus rejections.
pub struct HvPickList(PickList);

/// One ranked fruit. Angles, pose and approach direction are meaningful only
/// when `has_pose` is nonzero.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HvFruit {
    pub id: u16,
    pub center_m: [f64; 3],
    pub radius_m: f64,
    pub has_pose: bool,
    pub theta_rad: f64,
    pub phi_rad: f64,
    /// Row-major 3x3.
    pub r_pose: [f64; 9],
    pub approach_dir: [f64; 3],
    pub confidence: f64,
    pub can_pick: bool,
    pub candidates: usize,
    pub votes: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: HvStatus, msg: impl Into<String>) -> HvStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> HvStatus {
    let status = match &e {
        Error::Io { .. } => HvStatus::Io,
        Error::Format { .. } => HvStatus::Format,
        Error::Structure(_) => HvStatus::Structure,
        Error::Config(_) => HvStatus::Config,
        Error::Contract(_) => HvStatus::Contract,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> HvStatus) -> HvStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(HvStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, HvStatus> {
    if p.is_null() {
        return Err(fail(HvStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| fail(HvStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn hv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn hv_config_default(out: *mut *mut HvConfig) -> HvStatus {
    guard(|| {
        if out.is_null() {
            return fail(HvStatus::NullArgument, "out is null");
        }
        *out = Box::into_raw(Box::new(HvConfig(PipelineConfig::default())));
        HvStatus::Ok
    })
}

/// Loads a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hv_config_load(path: *const c_char, out: *mut *mut HvConfig) -> HvStatus {
    guard(|| {
        if out.is_null() {
            return fail(HvStatus::NullArgument, "out is null");
        }
        let path = tri!(path_arg(path, "path"));
        match PipelineConfig::load(&path) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(HvConfig(c)));
                HvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Enables or disables pose verification.
///
/// # Safety
/// `cfg` must come from `hv_config_default` or `hv_config_load`.
#[no_mangle]
pub unsafe extern "C" fn hv_config_set_verify(cfg: *mut HvConfig, enabled: bool) -> HvStatus {
    guard(|| match cfg.as_mut() {
        Some(c) => {
            c.0.verify = enabled;
            HvStatus::Ok
        }
        None => fail(HvStatus::NullArgument, "cfg is null"),
    })
}

/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hv_config_free(cfg: *mut HvConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Processes the frame directory `frame_dir`. When `out_dir` is non-null the
/// pick list, voxmaps and timing table are written there too.
///
/// # Safety
/// `cfg` must be a live handle, strings NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hv_process_frame(
    cfg: *const HvConfig,
    frame_dir: *const c_char,
    out_dir: *const c_char,
    out: *mut *mut HvPickList,
) -> HvStatus {
    guard(|| {
        let Some(cfg) = cfg.as_ref() else {
            return fail(HvStatus::NullArgument, "cfg is null");
        };
        if out.is_null() {
            return fail(HvStatus::NullArgument, "out is null");
        }
        let frame_dir = tri!(path_arg(frame_dir, "frame_dir"));
        let result = if out_dir.is_null() {
            run_frame_dir(&frame_dir, &cfg.0)
        } else {
            let out_dir = tri!(path_arg(out_dir, "out_dir"));
            process_frame_dir(&frame_dir, &cfg.0, &out_dir)
        };
        match result {
            Ok(r) => {
                *out = Box::into_raw(Box::new(HvPickList(PickList::from_result(&r, &cfg.0))));
                HvStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of ranked fruits; 0 for a null handle.
///
/// # Safety
/// `list` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hv_pick_list_len(list: *const HvPickList) -> usize {
    list.as_ref().map_or(0, |l| l.0.fruits.len())
}

/// Number of fruits rejected before a sphere was found.
///
/// # Safety
/// `list` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hv_pick_list_rejected_len(list: *const HvPickList) -> usize {
    list.as_ref().map_or(0, |l| l.0.rejected.len())
}

fn to_c(f: &FruitEntry) -> HvFruit {
    let mut r_pose = [0.0; 9];
    if let Some(rows) = f.r_pose {
        for (i, v) in rows.iter().flatten().enumerate() {
            r_pose[i] = *v;
        }
    }
    HvFruit {
        id: f.id,
        center_m: f.center_m,
        radius_m: f.radius_m,
        has_pose: f.theta_rad.is_some(),
        theta_rad: f.theta_rad.unwrap_or(0.0),
        phi_rad: f.phi_rad.unwrap_or(0.0),
        r_pose,
        approach_dir: f.approach_dir.unwrap_or_default(),
        confidence: f.confidence,
        can_pick: f.can_pick,
        candidates: f.diagnostics.candidates,
        votes: f.diagnostics.votes,
    }
}

/// Copies the fruit at rank `index` (0 is the most confident) into `out`.
///
/// # Safety
/// `list` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hv_pick_list_get(list: *const HvPickList, index: usize, out: *mut HvFruit) -> HvStatus {
    guard(|| {
        let Some(list) = list.as_ref() else {
            return fail(HvStatus::NullArgument, "list is null");
        };
        if out.is_null() {
            return fail(HvStatus::NullArgument, "out is null");
        }
        match list.0.fruits.get(index) {
            Some(f) => {
                *out = to_c(f);
                HvStatus::Ok
            }
            None => fail(
                HvStatus::OutOfRange,
                format!("index {index} out of range for {} fruits", list.0.fruits.len()),
            ),
        }
    })
}

/// Pick list as JSON. Release the string with `hv_string_free`.
///
/// # Safety
/// `list` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hv_pick_list_to_json(list: *const HvPickList, out: *mut *mut c_char) -> HvStatus {
    guard(|| {
        let Some(list) = list.as_ref() else {
            return fail(HvStatus::NullArgument, "list is null");
        };
        if out.is_null() {
            return fail(HvStatus::NullArgument, "out is null");
        }
        *out = CString::new(list.0.to_json()).expect("JSON has no NUL").into_raw();
        HvStatus::Ok
    })
}

/// # Safety
/// `list` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hv_pick_list_free(list: *mut HvPickList) {
    if !list.is_null() {
        drop(Box::from_raw(list));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Row-major approach rotation for azimuth `theta` and elevation `phi`.
///
/// # Safety
/// `out` must point to 9 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hv_rotation_matrix(theta: f64, phi: f64, out: *mut f64) -> HvStatus {
    guard(|| {
        if out.is_null() {
            return fail(HvStatus::NullArgument, "out is null");
        }
        let m = rotation_matrix(theta, phi);
        let out = std::slice::from_raw_parts_mut(out, 9);
        for r in 0..3 {
            for c in 0..3 {
                out[r * 3 + c] = m[(r, c)];
            }
        }
        HvStatus::Ok
    })
}

/// Pick confidence for a summed window penalty.
#[no_mangle]
pub extern "C" fn hv_confidence_from_penalty(window_penalty: f64) -> f64 {
    confidence_from_penalty(window_penalty)
}

/// Renders the scene described by the JSON file `spec_path` into `out_dir`.
///
/// # Safety
/// Strings must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hv_synth_render(spec_path: *const c_char, seed: u64, out_dir: *const c_char) -> HvStatus {
    guard(|| {
        let spec_path = tri!(path_arg(spec_path, "spec_path"));
        let out_dir = tri!(path_arg(out_dir, "out_dir"));
        match SceneSpec::load(&spec_path).and_then(|s| render_frame(&s, seed, &out_dir)) {
            Ok(_) => HvStatus::Ok,
            Err(e) => from_error(e),
        }
    })
}
