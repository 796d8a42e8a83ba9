//! C ABI over the percept-guard monitor.
//!
//! A `PgMonitor` is an opaque handle created by `pg_monitor_new` and released
//! with `pg_monitor_free`. Every fallible call returns a `PgStatus`; on
//! failure `pg_last_error_message` describes the most recent error on the
//! calling thread. Strings returned by the library are owned by the caller
//! and must be released with `pg_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use percept_guard::{
    compute_roi, DetectedObject, EgoState, Error, Mode, Monitor, ObjectListFrame, Position, RunConfig, SensorSource,
    Timestamp, ValidationVerdict, VerdictStatus, ZoneSet,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidConfig = 4,
    ContractViolation = 5,
    NoEgo = 6,
    NoVerdict = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgVerdict {
    Consistent = 0,
    Inconsistent = 1,
    NoData = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgMode {
    Nominal = 0,
    Degraded = 1,
    SafeStopRequested = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgSource {
    Camera = 0,
    Lidar = 1,
}

/// One detection, flattened for C callers. `class_label` must be a
/// NUL-terminated UTF-8 string that outlives the call.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PgObject {
    pub class_label: *const c_char,
    pub width_m: f64,
    pub height_m: f64,
    pub x_m: f64,
    pub y_m: f64,
    pub confidence: f64,
    pub sensed_at_ms: u64,
}

/// Opaque monitor handle.
pub struct PgMonitor {
    inner: Monitor,
    last: Option<ValidationVerdict>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let mut bytes = message.into().into_bytes();
    bytes.retain(|b| *b != 0);
    let msg = CString::new(bytes).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(PgStatus, String);

impl Failure {
    fn null(what: &str) -> Self {
        Failure(PgStatus::NullPointer, format!("{what} is null"))
    }
}

fn from_error(e: Error) -> Failure {
    let status = match &e {
        Error::Io { .. } | Error::Parse { .. } => PgStatus::ParseError,
        Error::Invalid(_) | Error::Buffer(_) | Error::Mode(_) | Error::Bus(_) => PgStatus::ContractViolation,
        Error::MissingEgo => PgStatus::NoEgo,
    };
    Failure(status, e.to_string())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            PgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PgStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| Failure(PgStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, Failure> {
    percept_guard::io::parse_json(text, std::path::Path::new(what)).map_err(from_error)
}

unsafe fn monitor_mut<'a>(m: *mut PgMonitor) -> Result<&'a mut PgMonitor, Failure> {
    m.as_mut().ok_or_else(|| Failure::null("monitor"))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON never contains NUL").into_raw()
}

/// Creates a monitor. `config_json` may be null for the defaults.
///
/// # Safety
/// `config_json` is null or a valid C string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pg_monitor_new(config_json: *const c_char, out: *mut *mut PgMonitor) -> PgStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        let cfg = if config_json.is_null() {
            RunConfig::default()
        } else {
            parse::<RunConfig>(read_str(config_json, "config")?, "config")?
        };
        let inner = Monitor::new(cfg, Timestamp::ZERO).map_err(|e| Failure(PgStatus::InvalidConfig, e.to_string()))?;
        *out = Box::into_raw(Box::new(PgMonitor { inner, last: None }));
        Ok(())
    })
}

/// Releases a monitor. Null is ignored.
///
/// # Safety
/// `monitor` is null or was returned by `pg_monitor_new` and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pg_monitor_free(monitor: *mut PgMonitor) {
    if !monitor.is_null() {
        drop(Box::from_raw(monitor));
    }
}

/// Feeds one object-list frame given as JSON.
///
/// # Safety
/// `monitor` is a live handle and `frame_json` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn pg_monitor_ingest_frame_json(monitor: *mut PgMonitor, frame_json: *const c_char) -> PgStatus {
    guard(|| {
        let m = monitor_mut(monitor)?;
        let frame: ObjectListFrame = parse(read_str(frame_json, "frame")?, "frame")?;
        m.inner.ingest(frame).map_err(from_error)
    })
}

/// Feeds one frame given as an array of `count` objects.
///
/// # Safety
/// `monitor` is a live handle; `objects` points to `count` valid entries
/// (it may be null when `count` is 0).
#[no_mangle]
pub unsafe extern "C" fn pg_monitor_ingest_objects(
    monitor: *mut PgMonitor,
    source: PgSource,
    frame_time_ms: u64,
    objects: *const PgObject,
    count: usize,
) -> PgStatus {
    guard(|| {
        let m = monitor_mut(monitor)?;
        if objects.is_null() && count > 0 {
            return Err(Failure::null("objects"));
        }
        let source = match source {
            PgSource::Camera => SensorSource::Camera,
            PgSource::Lidar => SensorSource::Lidar,
        };
        let raw = if count == 0 { &[][..] } else { std::slice::from_raw_parts(objects, count) };
        let mut list = Vec::with_capacity(count);
        for (i, o) in raw.iter().enumerate() {
            list.push(DetectedObject {
                class_label: read_str(o.class_label, &format!("objects[{i}].class_label"))?.to_owned(),
                width_m: o.width_m,
                height_m: o.height_m,
                position: Position::new(o.x_m, o.y_m),
                confidence: o.confidence,
                sensed_at: Timestamp(o.sensed_at_ms),
                source,
            });
        }
        m.inner
            .ingest(ObjectListFrame { source, frame_time: Timestamp(frame_time_ms), objects: list })
            .map_err(from_error)
    })
}

/// Replaces the current ego state, given as JSON.
///
/// # Safety
/// `monitor` is a live handle and `ego_json` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn pg_monitor_set_ego_json(monitor: *mut PgMonitor, ego_json: *const c_char) -> PgStatus {
    guard(|| {
        let m = monitor_mut(monitor)?;
        let ego: EgoState = parse(read_str(ego_json, "ego")?, "ego")?;
        m.inner.set_ego(ego).map_err(|e| Failure(PgStatus::ContractViolation, e.to_string()))
    })
}

/// Evaluates at `now_ms`, advances the mode machine and writes the verdict.
///
/// # Safety
/// `monitor` is a live handle; `out_verdict` is null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pg_monitor_evaluate(monitor: *mut PgMonitor, now_ms: u64, out_verdict: *mut PgVerdict) -> PgStatus {
    guard(|| {
        let m = monitor_mut(monitor)?;
        let (verdict, _) = m.inner.evaluate(Timestamp(now_ms)).map_err(from_error)?;
        if let Some(out) = out_verdict.as_mut() {
            *out = match verdict.status {
                VerdictStatus::Consistent => PgVerdict::Consistent,
                VerdictStatus::Inconsistent => PgVerdict::Inconsistent,
                VerdictStatus::NoData => PgVerdict::NoData,
            };
        }
        m.last = Some(verdict);
        Ok(())
    })
}

/// The full record of the last verdict as JSON. Free with `pg_string_free`.
///
/// # Safety
/// `monitor` is a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pg_monitor_last_verdict_json(monitor: *const PgMonitor, out: *mut *mut c_char) -> PgStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        let m = monitor.as_ref().ok_or_else(|| Failure::null("monitor"))?;
        let v = m.last.as_ref().ok_or_else(|| Failure(PgStatus::NoVerdict, "nothing evaluated yet".into()))?;
        *out = to_c_string(serde_json::to_string(v).expect("verdicts serialize"));
        Ok(())
    })
}

/// Current mode request.
///
/// # Safety
/// `monitor` is a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pg_monitor_mode(monitor: *const PgMonitor, out: *mut PgMode) -> PgStatus {
    guard(|| {
        let m = monitor.as_ref().ok_or_else(|| Failure::null("monitor"))?;
        let out = out.as_mut().ok_or_else(|| Failure::null("out"))?;
        *out = match m.inner.mode().mode {
            Mode::Nominal => PgMode::Nominal,
            Mode::Degraded => PgMode::Degraded,
            Mode::SafeStopRequested => PgMode::SafeStopRequested,
        };
        Ok(())
    })
}

/// External override back to nominal; the only exit from a safe stop.
///
/// # Safety
/// `monitor` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn pg_monitor_reset_mode(monitor: *mut PgMonitor, at_ms: u64) -> PgStatus {
    guard(|| {
        monitor_mut(monitor)?.inner.reset_mode(Timestamp(at_ms));
        Ok(())
    })
}

/// Computes both zone polygons for an ego state. `zones_json` may be null
/// for the default zones. Free the result with `pg_string_free`.
///
/// # Safety
/// `ego_json` is a valid C string, `zones_json` null or a valid C string,
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pg_compute_roi_json(
    ego_json: *const c_char,
    zones_json: *const c_char,
    out: *mut *mut c_char,
) -> PgStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::null("out"));
        }
        *out = ptr::null_mut();
        let ego: EgoState = parse(read_str(ego_json, "ego")?, "ego")?;
        let zones = if zones_json.is_null() {
            ZoneSet::default()
        } else {
            parse(read_str(zones_json, "zones")?, "zones")?
        };
        let roi = compute_roi(&ego, &zones).map_err(|e| Failure(PgStatus::InvalidConfig, e.to_string()))?;
        *out = to_c_string(serde_json::to_string(&roi).expect("regions serialize"));
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or came from this library and was not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn pg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn pg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
