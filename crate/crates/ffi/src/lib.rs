//! C ABI over the `risopt` library.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! functions and released by the matching `*_free`. Every fallible call
//! returns a [`RisoptStatus`]; on failure a thread-local message is available
//! through [`risopt_last_error_message`]. Capacitances are in picofarads,
//! powers in dBm, noise power in watts.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use risopt::beamforming::{dbm_to_watts, duality_beamformer, noise_power};
use risopt::channel::{assemble_effective_channel, ChannelComponents};
use risopt::optimizer::{exhaustive_1bit_search, multistart_optimize, BcdSettings};
use risopt::ris::{ControlMode, Grouping, VaractorModel, PF};
use risopt::scene::{synthesize_components, SceneDescription};
use risopt::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RisoptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Dimension = 3,
    Parse = 4,
    Io = 5,
    Singular = 6,
    InfeasibleUser = 7,
    Duality = 8,
    Domain = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Opaque scene handle.
pub struct RisoptScene(SceneDescription);

/// Opaque channel-components handle.
pub struct RisoptChannel(ChannelComponents);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RisoptStatus {
    match e {
        Error::InvalidInput(_) | Error::Geometry(_) | Error::TooManyGroups(_) => RisoptStatus::InvalidInput,
        Error::Dimension { .. } => RisoptStatus::Dimension,
        Error::Parse { .. } | Error::Symmetry { .. } | Error::Json(_) => RisoptStatus::Parse,
        Error::Io { .. } => RisoptStatus::Io,
        Error::Singular { .. } => RisoptStatus::Singular,
        Error::InfeasibleUser { .. } => RisoptStatus::InfeasibleUser,
        Error::Duality(_) => RisoptStatus::Duality,
        Error::Domain(_) => RisoptStatus::Domain,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), RisoptStatusError>) -> RisoptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RisoptStatus::Ok,
        Ok(Err(RisoptStatusError(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RisoptStatus::Panic
        }
    }
}

struct RisoptStatusError(RisoptStatus, String);

impl From<Error> for RisoptStatusError {
    fn from(e: Error) -> Self {
        RisoptStatusError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> RisoptStatusError {
    RisoptStatusError(RisoptStatus::NullPointer, format!("{what} is null"))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a str, RisoptStatusError> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| RisoptStatusError(RisoptStatus::InvalidInput, "path is not UTF-8".into()))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], RisoptStatusError> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Result<(), RisoptStatusError> {
    if p.is_null() {
        return Err(null(what));
    }
    *p = v;
    Ok(())
}

unsafe fn channel_ref<'a>(ch: *const RisoptChannel) -> Result<&'a ChannelComponents, RisoptStatusError> {
    ch.as_ref().map(|c| &c.0).ok_or_else(|| null("channel"))
}

fn capacitances_f(c: &ChannelComponents, caps_pf: &[f64]) -> Result<Vec<f64>, RisoptStatusError> {
    if caps_pf.len() != c.n_elements() {
        return Err(Error::Dimension {
            field: "capacitances".into(),
            expected: c.n_elements().to_string(),
            found: caps_pf.len().to_string(),
        }
        .into());
    }
    let model = VaractorModel::default();
    let caps: Vec<f64> = caps_pf.iter().map(|v| v * PF).collect();
    if let Some(i) = caps.iter().position(|&c| !model.in_range(c)) {
        return Err(Error::InvalidInput(format!(
            "capacitance {} pF at element {i} is outside [{}, {}] pF",
            caps_pf[i],
            model.c_min / PF,
            model.c_max / PF
        ))
        .into());
    }
    Ok(caps)
}

fn effective(c: &ChannelComponents, caps: &[f64]) -> Result<risopt::CMatrix, RisoptStatusError> {
    let model = VaractorModel::default();
    let z = caps
        .iter()
        .map(|&x| model.load_impedance(x, c.frequency))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_effective_channel(c, &z)?.matrix)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn risopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, or 0 if none.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn risopt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// `kTB` in watts.
///
/// # Safety
/// `out_watts` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn risopt_noise_power(
    temperature_k: f64,
    bandwidth_hz: f64,
    out_watts: *mut f64,
) -> RisoptStatus {
    guard(|| {
        let w = noise_power(temperature_k, bandwidth_hz)?;
        write_out(out_watts, w, "out_watts")
    })
}

/// The built-in default scene.
#[no_mangle]
pub extern "C" fn risopt_scene_default() -> *mut RisoptScene {
    Box::into_raw(Box::new(RisoptScene(SceneDescription::default_experiment())))
}

/// Loads a scene JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn risopt_scene_load(path: *const c_char, out: *mut *mut RisoptScene) -> RisoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = SceneDescription::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(RisoptScene(s)));
        Ok(())
    })
}

/// # Safety
/// `scene` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn risopt_scene_free(scene: *mut RisoptScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

/// Traces a scene into channel components.
///
/// # Safety
/// `scene` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn risopt_channel_from_scene(
    scene: *const RisoptScene,
    out: *mut *mut RisoptChannel,
) -> RisoptStatus {
    guard(|| {
        let s = scene.as_ref().ok_or_else(|| null("scene"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = synthesize_components(&s.0)?;
        *out = Box::into_raw(Box::new(RisoptChannel(c)));
        Ok(())
    })
}

/// Loads a channel file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn risopt_channel_load(path: *const c_char, out: *mut *mut RisoptChannel) -> RisoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = ChannelComponents::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(RisoptChannel(c)));
        Ok(())
    })
}

/// Writes a channel file.
///
/// # Safety
/// `channel` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn risopt_channel_save(channel: *const RisoptChannel, path: *const c_char) -> RisoptStatus {
    guard(|| {
        let c = channel_ref(channel)?;
        c.save(path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `channel` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn risopt_channel_free(channel: *mut RisoptChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// Users, BS antennas and RIS ports.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn risopt_channel_dims(
    channel: *const RisoptChannel,
    k: *mut usize,
    m: *mut usize,
    n: *mut usize,
) -> RisoptStatus {
    guard(|| {
        let (kk, mm, nn) = channel_ref(channel)?.dims();
        write_out(k, kk, "k")?;
        write_out(m, mm, "m")?;
        write_out(n, nn, "n")
    })
}

/// Effective channel for per-element capacitances, written row-major into
/// `out_re`/`out_im` (each of length `K·M`).
///
/// # Safety
/// `caps_pf` must hold `n_caps` values; the outputs must hold `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn risopt_effective_channel(
    channel: *const RisoptChannel,
    caps_pf: *const f64,
    n_caps: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    out_len: usize,
) -> RisoptStatus {
    guard(|| {
        let c = channel_ref(channel)?;
        let caps = capacitances_f(c, slice_arg(caps_pf, n_caps, "caps_pf")?)?;
        let h = effective(c, &caps)?;
        let need = h.len();
        if out_len < need {
            return Err(RisoptStatusError(
                RisoptStatus::BufferTooSmall,
                format!("output needs {need} entries, got {out_len}"),
            ));
        }
        if out_re.is_null() || out_im.is_null() {
            return Err(null("output buffer"));
        }
        for r in 0..h.nrows() {
            for col in 0..h.ncols() {
                let i = r * h.ncols() + col;
                *out_re.add(i) = h[(r, col)].re;
                *out_im.add(i) = h[(r, col)].im;
            }
        }
        Ok(())
    })
}

/// Max-min duality beamformer on the effective channel; returns the minimum
/// rate in bps/Hz.
///
/// # Safety
/// `caps_pf` must hold `n_caps` values; `out_rate` must be valid.
#[no_mangle]
pub unsafe extern "C" fn risopt_min_rate(
    channel: *const RisoptChannel,
    caps_pf: *const f64,
    n_caps: usize,
    p_dbm: f64,
    noise_w: f64,
    out_rate: *mut f64,
) -> RisoptStatus {
    guard(|| {
        let c = channel_ref(channel)?;
        let caps = capacitances_f(c, slice_arg(caps_pf, n_caps, "caps_pf")?)?;
        let h = effective(c, &caps)?;
        let rate = duality_beamformer(&h, dbm_to_watts(p_dbm), noise_w)?.report.min_rate;
        write_out(out_rate, rate, "out_rate")
    })
}

/// Continuous per-element optimization from a seeded random start; writes
/// the optimized capacitances (pF) and the final minimum rate.
///
/// # Safety
/// `out_caps_pf` must hold `n_caps` values; `out_rate` must be valid.
#[no_mangle]
pub unsafe extern "C" fn risopt_optimize(
    channel: *const RisoptChannel,
    p_dbm: f64,
    noise_w: f64,
    seed: u64,
    out_caps_pf: *mut f64,
    n_caps: usize,
    out_rate: *mut f64,
) -> RisoptStatus {
    guard(|| {
        let c = channel_ref(channel)?;
        let n = c.n_elements();
        if n_caps != n {
            return Err(Error::Dimension {
                field: "out_caps_pf".into(),
                expected: n.to_string(),
                found: n_caps.to_string(),
            }
            .into());
        }
        if out_caps_pf.is_null() && n > 0 {
            return Err(null("out_caps_pf"));
        }
        let settings = BcdSettings {
            rng_seed: seed,
            ..BcdSettings::default()
        };
        let t = multistart_optimize(
            c,
            &VaractorModel::default(),
            &Grouping::singletons(n),
            ControlMode::ContinuousPerElement,
            &[],
            dbm_to_watts(p_dbm),
            noise_w,
            &settings,
        )?;
        for (i, v) in t.configuration.capacitances.iter().enumerate() {
            *out_caps_pf.add(i) = v / PF;
        }
        write_out(out_rate, t.min_rate(), "out_rate")
    })
}

/// Exhaustive search over adjacent-pair 1-bit states (element count must be
/// even or the last element forms its own group). Writes the best
/// enumeration index and its minimum rate.
///
/// # Safety
/// The output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn risopt_exhaustive_best(
    channel: *const RisoptChannel,
    p_dbm: f64,
    noise_w: f64,
    out_index: *mut u64,
    out_rate: *mut f64,
) -> RisoptStatus {
    guard(|| {
        let c = channel_ref(channel)?;
        let g = Grouping::column_pairs(c.n_elements(), 1);
        let r = exhaustive_1bit_search(
            c,
            &VaractorModel::default(),
            &g,
            dbm_to_watts(p_dbm),
            noise_w,
            None,
            0.05,
        )?;
        let best = r
            .best()
            .ok_or_else(|| RisoptStatusError(RisoptStatus::Domain, "no configuration evaluated".into()))?;
        write_out(out_index, best.index, "out_index")?;
        write_out(out_rate, best.min_rate.unwrap_or(f64::NAN), "out_rate")
    })
}
