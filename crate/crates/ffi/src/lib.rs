//! C ABI over `matmap`.
//!
//! Networks are opaque handles created from scenario JSON and released with
//! [`matmap_network_free`]. Every fallible call returns a [`MatmapStatus`];
//! on failure a message is available from [`matmap_last_error`] on the same
//! thread. Times are integer microseconds, masses kg, lengths cm.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use matmap::{
    build_network, events_from_series, mass_time_integral, network_stock, parse_scenario, pick_points_robot, rect,
    sample_series, spatial_map, stock_series, validate_rotation, FrameTransform, Network, PulseLevel, StockSeries,
    TargetVector, Time, UnitId,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatmapStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    DomainError = 4,
    InvalidRotation = 5,
    BufferTooSmall = 6,
    NotFound = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatmapPulseLevel {
    Zero = 0,
    Half = 1,
    One = 2,
}

impl From<PulseLevel> for MatmapPulseLevel {
    fn from(l: PulseLevel) -> Self {
        match l {
            PulseLevel::Zero => MatmapPulseLevel::Zero,
            PulseLevel::Half => MatmapPulseLevel::Half,
            PulseLevel::One => MatmapPulseLevel::One,
        }
    }
}

/// One step of one material stock.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatmapStockEvent {
    pub t_us: i64,
    /// 1-based material id.
    pub material: u32,
    pub delta_kg: f64,
    pub after_kg: f64,
}

/// Opaque network handle.
pub struct MatmapNetwork {
    net: Network,
    series: StockSeries,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: MatmapStatus, msg: impl Into<String>) -> MatmapStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> MatmapStatus) -> MatmapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(MatmapStatus::Panic, "internal panic"),
    }
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn matmap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Evaluates `rect(t / width)`.
///
/// # Safety
/// `out` must be null or point to writable memory for one level.
#[no_mangle]
pub unsafe extern "C" fn matmap_rect(t_us: i64, width_us: i64, out: *mut MatmapPulseLevel) -> MatmapStatus {
    guard(|| {
        if out.is_null() {
            return fail(MatmapStatus::NullPointer, "out is null");
        }
        match rect(Time::from_micros(t_us), Time::from_micros(width_us)) {
            Ok(level) => {
                *out = level.into();
                MatmapStatus::Ok
            }
            Err(e) => fail(MatmapStatus::DomainError, e.to_string()),
        }
    })
}

/// Parses a scenario document and builds its network.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must point to writable
/// storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn matmap_network_from_json(json: *const c_char, out: *mut *mut MatmapNetwork) -> MatmapStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(MatmapStatus::NullPointer, "json or out is null");
        }
        *out = ptr::null_mut();
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => return fail(MatmapStatus::InvalidUtf8, e.to_string()),
        };
        let net = match parse_scenario(text).and_then(|s| build_network(&s)) {
            Ok(n) => n,
            Err(e) => return fail(MatmapStatus::ParseError, e.to_string()),
        };
        let series = stock_series(&net);
        *out = Box::into_raw(Box::new(MatmapNetwork { net, series }));
        MatmapStatus::Ok
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `net` must be null or a handle from [`matmap_network_from_json`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn matmap_network_free(net: *mut MatmapNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

unsafe fn handle<'a>(net: *const MatmapNetwork) -> Result<&'a MatmapNetwork, MatmapStatus> {
    net.as_ref().ok_or_else(|| fail(MatmapStatus::NullPointer, "network handle is null"))
}

unsafe fn out_slice<'a, T>(ptr: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], MatmapStatus> {
    if len < need {
        return Err(fail(MatmapStatus::BufferTooSmall, format!("{what} needs {need} entries, got {len}")));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(fail(MatmapStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Unit count, class count and material count.
///
/// # Safety
/// `net` must be a live handle; each out pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn matmap_network_dims(
    net: *const MatmapNetwork,
    units: *mut usize,
    classes: *mut usize,
    materials: *mut usize,
) -> MatmapStatus {
    guard(|| {
        let h = try_ffi!(handle(net));
        for (p, v) in [(units, h.net.units().len()), (classes, h.net.registry().q()), (materials, h.net.psi())] {
            if !p.is_null() {
                *p = v;
            }
        }
        MatmapStatus::Ok
    })
}

/// Network stock at `t_us` into `out[0..materials]`.
///
/// # Safety
/// `net` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn matmap_network_stock(
    net: *const MatmapNetwork,
    t_us: i64,
    out: *mut f64,
    len: usize,
) -> MatmapStatus {
    guard(|| {
        let h = try_ffi!(handle(net));
        let dst = try_ffi!(out_slice(out, len, h.net.psi(), "out"));
        dst[..h.net.psi()].copy_from_slice(&network_stock(&h.net, Time::from_micros(t_us)));
        MatmapStatus::Ok
    })
}

/// Stock of one unit at `t_us`, as in the spatial map.
///
/// # Safety
/// `net` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn matmap_network_unit_stock(
    net: *const MatmapNetwork,
    unit_id: u32,
    t_us: i64,
    out: *mut f64,
    len: usize,
) -> MatmapStatus {
    guard(|| {
        let h = try_ffi!(handle(net));
        let dst = try_ffi!(out_slice(out, len, h.net.psi(), "out"));
        match spatial_map(&h.net, Time::from_micros(t_us)).into_iter().find(|r| r.unit == UnitId(unit_id)) {
            Some(row) => {
                dst[..row.stock.len()].copy_from_slice(&row.stock);
                MatmapStatus::Ok
            }
            None => fail(MatmapStatus::NotFound, format!("no unit {unit_id}")),
        }
    })
}

/// Copies stock events into `out`. `count` always receives the total number
/// of events; pass `cap = 0` to query it.
///
/// # Safety
/// `net` must be a live handle; `out` must hold `cap` events; `count` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn matmap_network_events(
    net: *const MatmapNetwork,
    out: *mut MatmapStockEvent,
    cap: usize,
    count: *mut usize,
) -> MatmapStatus {
    guard(|| {
        let h = try_ffi!(handle(net));
        if count.is_null() {
            return fail(MatmapStatus::NullPointer, "count is null");
        }
        let events = events_from_series(&h.series);
        *count = events.len();
        let dst = try_ffi!(out_slice(out, cap, events.len(), "out"));
        for (d, e) in dst.iter_mut().zip(&events) {
            *d = MatmapStockEvent {
                t_us: e.time.micros(),
                material: e.material.0,
                delta_kg: e.delta,
                after_kg: e.after,
            };
        }
        MatmapStatus::Ok
    })
}

/// Integral of each material stock over all time, kg*s.
///
/// # Safety
/// `net` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn matmap_network_mass_time_integral(
    net: *const MatmapNetwork,
    out: *mut f64,
    len: usize,
) -> MatmapStatus {
    guard(|| {
        let h = try_ffi!(handle(net));
        let dst = try_ffi!(out_slice(out, len, h.net.psi(), "out"));
        dst[..h.net.psi()].copy_from_slice(&mass_time_integral(&h.net));
        MatmapStatus::Ok
    })
}

/// Samples the series on `t0, t0 + step, ... <= t1`. Writes sample times to
/// `times` and row-major values (`rows x materials`) to `values`. `rows`
/// always receives the number of grid points; pass `rows_cap = 0` to query.
///
/// # Safety
/// `net` must be a live handle; `times` must hold `rows_cap` entries and
/// `values` `rows_cap * materials`; `rows` must be writable.
#[no_mangle]
pub unsafe extern "C" fn matmap_network_sample(
    net: *const MatmapNetwork,
    t0_us: i64,
    t1_us: i64,
    step_us: i64,
    times: *mut i64,
    values: *mut f64,
    rows_cap: usize,
    rows: *mut usize,
) -> MatmapStatus {
    guard(|| {
        let h = try_ffi!(handle(net));
        if rows.is_null() {
            return fail(MatmapStatus::NullPointer, "rows is null");
        }
        let samples = match sample_series(
            &h.series,
            Time::from_micros(t0_us),
            Time::from_micros(t1_us),
            Time::from_micros(step_us),
        ) {
            Ok(s) => s,
            Err(e) => return fail(MatmapStatus::DomainError, e.to_string()),
        };
        *rows = samples.len();
        let psi = h.net.psi();
        let t_out = try_ffi!(out_slice(times, rows_cap, samples.len(), "times"));
        let v_out = try_ffi!(out_slice(values, rows_cap * psi, samples.len() * psi, "values"));
        for (k, (t, v)) in samples.iter().enumerate() {
            t_out[k] = t.micros();
            v_out[k * psi..(k + 1) * psi].copy_from_slice(v);
        }
        MatmapStatus::Ok
    })
}

/// Converts a local-frame target `[x1, y1, x2, y2]` at plane height `height`
/// into two robot-frame points: `p = translation + rotation * [x, y, height]`.
/// `rotation` is row-major 3x3 and must be a proper rotation.
///
/// # Safety
/// Array arguments must point to the stated number of doubles; `degenerate`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn matmap_pick_points_robot(
    rotation: *const f64,
    translation: *const f64,
    height: f64,
    target: *const f64,
    first: *mut f64,
    second: *mut f64,
    degenerate: *mut bool,
) -> MatmapStatus {
    guard(|| {
        if rotation.is_null() || translation.is_null() || target.is_null() || first.is_null() || second.is_null() {
            return fail(MatmapStatus::NullPointer, "array argument is null");
        }
        let r = std::slice::from_raw_parts(rotation, 9);
        let raw = [[r[0], r[1], r[2]], [r[3], r[4], r[5]], [r[6], r[7], r[8]]];
        let rot = match validate_rotation(raw) {
            Ok(rot) => rot,
            Err(e) => return fail(MatmapStatus::InvalidRotation, e.to_string()),
        };
        let d = std::slice::from_raw_parts(translation, 3);
        let frame = match FrameTransform::new(rot, [d[0], d[1], d[2]], height) {
            Ok(f) => f,
            Err(e) => return fail(MatmapStatus::DomainError, e.to_string()),
        };
        let t = std::slice::from_raw_parts(target, 4);
        let picks = pick_points_robot(&frame, &TargetVector::from_array([t[0], t[1], t[2], t[3]]));
        std::slice::from_raw_parts_mut(first, 3).copy_from_slice(&picks.first);
        std::slice::from_raw_parts_mut(second, 3).copy_from_slice(&picks.second);
        if !degenerate.is_null() {
            *degenerate = picks.degenerate;
        }
        MatmapStatus::Ok
    })
}
