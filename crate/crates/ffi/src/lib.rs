//! C interface to `rirsim`.
//!
//! Objects are opaque handles created by `*_new` functions and released with
//! the matching `*_free`. Every function that can fail returns a
//! [`RirsimStatus`]; the message of the most recent failure on the calling
//! thread is available from [`rirsim_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rirsim::analysis::{estimate_t60, measure_drr, schroeder_edc};
use rirsim::synth::{synthesize, synthesize_ism_only};
use rirsim::tail::critical_distance;
use rirsim::{DirectivityPattern, Error, MicPair, Rir, Room, Scene, Source, SynthConfig, TailSolve, Vec3};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RirsimStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    InvalidArgument = 2,
    /// Positions outside the room or an inconsistent microphone pair.
    InvalidGeometry = 3,
    /// The requested T60 needs more than total absorption.
    InfeasibleRoom = 4,
    /// No tail scale reaches the DRR target.
    InfeasibleDrr = 5,
    /// The signal cannot be analysed (no energy, too short, too little decay).
    Analysis = 6,
    /// The queried value does not exist for this response.
    NotAvailable = 7,
    /// An internal panic was caught.
    Panic = 8,
}

/// Source directivity patterns accepted by [`rirsim_scene_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RirsimPattern {
    Omnidirectional = 0,
    Subcardioid = 1,
    Cardioid = 2,
    Supercardioid = 3,
    Hypercardioid = 4,
}

/// Synthesis parameters.
pub struct RirsimConfig(SynthConfig);

/// Room, source and microphone pair.
pub struct RirsimScene(Scene);

/// Impulse response of one microphone.
pub struct RirsimRir(Rir);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RirsimStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidParameter { .. }
            | Error::LengthMismatch { .. }
            | Error::SampleRateMismatch { .. }
            | Error::SamplerExhausted { .. } => RirsimStatus::InvalidArgument,
            Error::DegenerateGeometry(_) | Error::OutsideRoom { .. } => RirsimStatus::InvalidGeometry,
            Error::InfeasibleRoom { .. } => RirsimStatus::InfeasibleRoom,
            Error::InfeasibleDrr { .. } => RirsimStatus::InfeasibleDrr,
            Error::AnechoicInput
            | Error::ZeroEnergy
            | Error::InsufficientDecayRange { .. }
            | Error::TooShort { .. } => RirsimStatus::Analysis,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RirsimStatus::NullPointer, format!("`{what}` is NULL"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(RirsimStatus::InvalidArgument, msg.into())
}

fn set_last_error(msg: Option<String>) {
    let msg = msg.map(|m| CString::new(m.replace('\0', " ")).unwrap_or_default());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RirsimStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (RirsimStatus::Ok, None),
        Ok(Err(Failure(status, msg))) => (status, Some(msg)),
        Err(payload) => {
            let text = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (RirsimStatus::Panic, Some(format!("panic: {text}")))
        }
    };
    set_last_error(msg);
    status
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn vec3(p: *const f64, what: &str) -> Result<Vec3, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = std::slice::from_raw_parts(p, 3);
    Ok(Vec3::new(s[0], s[1], s[2]))
}

unsafe fn samples<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null("samples"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn pattern_from(raw: i32) -> Result<DirectivityPattern, Failure> {
    Ok(match raw {
        0 => DirectivityPattern::Omnidirectional,
        1 => DirectivityPattern::Subcardioid,
        2 => DirectivityPattern::Cardioid,
        3 => DirectivityPattern::Supercardioid,
        4 => DirectivityPattern::Hypercardioid,
        _ => return Err(invalid(format!("unknown directivity pattern {raw}"))),
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rirsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a
/// successful call. The pointer stays valid until the next call into the
/// library from the same thread.
#[no_mangle]
pub extern "C" fn rirsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Creates a configuration with default parameters.
///
/// # Safety
/// `out` must be NULL or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn rirsim_config_new_default(out: *mut *mut RirsimConfig) -> RirsimStatus {
    guard(|| {
        let cfg = Box::into_raw(Box::new(RirsimConfig(SynthConfig::default())));
        put(out, cfg, "out").inspect_err(|_| drop(Box::from_raw(cfg)))
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from [`rirsim_config_new_default`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn rirsim_config_free(cfg: *mut RirsimConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Applies `edit` and keeps it only if the result validates.
unsafe fn edit_config(cfg: *mut RirsimConfig, edit: impl FnOnce(&mut SynthConfig)) -> RirsimStatus {
    guard(|| {
        let cfg = get_mut(cfg, "cfg")?;
        let mut next = cfg.0.clone();
        edit(&mut next);
        next.validate()?;
        cfg.0 = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_config_set_sample_rate(cfg: *mut RirsimConfig, fs: u32) -> RirsimStatus {
    edit_config(cfg, |c| c.fs = fs)
}

/// # Safety
/// `cfg` must be NULL or a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_config_set_length(cfg: *mut RirsimConfig, n_samples: usize) -> RirsimStatus {
    edit_config(cfg, |c| c.n_samples = n_samples)
}

/// # Safety
/// `cfg` must be NULL or a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_config_set_image_order(cfg: *mut RirsimConfig, order: usize) -> RirsimStatus {
    edit_config(cfg, |c| c.image_order = order)
}

/// # Safety
/// `cfg` must be NULL or a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_config_set_fade_speed(cfg: *mut RirsimConfig, kappa: f64) -> RirsimStatus {
    edit_config(cfg, |c| c.kappa = kappa)
}

/// Half-width in samples of the direct-path window.
///
/// # Safety
/// `cfg` must be NULL or a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_config_set_drr_window(cfg: *mut RirsimConfig, half_width: usize) -> RirsimStatus {
    edit_config(cfg, |c| c.drr_window = half_width)
}

/// Enables (`enabled != 0`) or disables the early-part high-pass.
///
/// # Safety
/// `cfg` must be NULL or a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_config_set_highpass(
    cfg: *mut RirsimConfig,
    enabled: i32,
    cutoff_hz: f64,
) -> RirsimStatus {
    edit_config(cfg, |c| {
        c.highpass = enabled != 0;
        c.highpass_cutoff = cutoff_hz;
    })
}

/// Range of the source directivity factor drawn per synthesis. Equal bounds
/// fix the factor.
///
/// # Safety
/// `cfg` must be NULL or a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_config_set_source_factor_range(
    cfg: *mut RirsimConfig,
    min: f64,
    max: f64,
) -> RirsimStatus {
    edit_config(cfg, |c| c.alpha_range = [min, max])
}

/// # Safety
/// `cfg` must be NULL or a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_config_set_mic_factor(cfg: *mut RirsimConfig, beta: f64) -> RirsimStatus {
    edit_config(cfg, |c| c.beta = beta)
}

/// Nonzero `expected` solves the tail scale against the expected DRR over
/// tail realizations instead of the drawn realization.
///
/// # Safety
/// `cfg` must be NULL or a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_config_set_tail_solve_expected(cfg: *mut RirsimConfig, expected: i32) -> RirsimStatus {
    edit_config(cfg, |c| {
        c.tail_solve = if expected != 0 {
            TailSolve::Expectation
        } else {
            TailSolve::Realization
        }
    })
}

/// Builds a scene. Positions are `[x, y, z]` in metres, angles in radians.
/// The microphone pair is centred on `array_center` with its axis at azimuth
/// `array_orientation` in the horizontal plane. `pattern` is a
/// [`RirsimPattern`] value.
///
/// # Safety
/// `room_dims`, `source_position` and `array_center` must each be NULL or
/// point to three readable doubles; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn rirsim_scene_new(
    room_dims: *const f64,
    t60: f64,
    source_position: *const f64,
    look_azimuth: f64,
    look_elevation: f64,
    pattern: i32,
    array_center: *const f64,
    array_orientation: f64,
    mic_spacing: f64,
    out: *mut *mut RirsimScene,
) -> RirsimStatus {
    guard(|| {
        let dims = vec3(room_dims, "room_dims")?;
        let room = Room::new(dims.x(), dims.y(), dims.z(), t60)?;
        let source = Source {
            position: vec3(source_position, "source_position")?,
            look_azimuth,
            look_elevation,
            pattern: pattern_from(pattern)?,
        };
        let mics = MicPair::centered(vec3(array_center, "array_center")?, array_orientation, mic_spacing)?;
        let scene = Scene::new(room, source, mics)?;
        let handle = Box::into_raw(Box::new(RirsimScene(scene)));
        put(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// Source to array-centre distance in metres, or NaN for a NULL scene.
///
/// # Safety
/// `scene` must be NULL or a live scene handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_scene_distance(scene: *const RirsimScene) -> f64 {
    scene.as_ref().map_or(f64::NAN, |s| s.0.distance)
}

/// # Safety
/// `scene` must be NULL or a live scene handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_scene_free(scene: *mut RirsimScene) {
    if !scene.is_null() {
        drop(Box::from_raw(scene));
    }
}

unsafe fn emit_pair(
    pair: [Rir; 2],
    out_mic0: *mut *mut RirsimRir,
    out_mic1: *mut *mut RirsimRir,
) -> Result<(), Failure> {
    if out_mic0.is_null() {
        return Err(null("out_mic0"));
    }
    if out_mic1.is_null() {
        return Err(null("out_mic1"));
    }
    let [a, b] = pair;
    out_mic0.write(Box::into_raw(Box::new(RirsimRir(a))));
    out_mic1.write(Box::into_raw(Box::new(RirsimRir(b))));
    Ok(())
}

/// Full synthesis: image sources plus a stochastic tail scaled to the DRR
/// target. Writes one handle per microphone.
///
/// # Safety
/// `cfg` and `scene` must be NULL or live handles; the output pointers must
/// be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn rirsim_synthesize(
    cfg: *const RirsimConfig,
    scene: *const RirsimScene,
    seed: u64,
    out_mic0: *mut *mut RirsimRir,
    out_mic1: *mut *mut RirsimRir,
) -> RirsimStatus {
    guard(|| {
        let cfg = get(cfg, "cfg")?;
        let scene = get(scene, "scene")?;
        emit_pair(synthesize(&scene.0, &cfg.0, seed)?, out_mic0, out_mic1)
    })
}

/// Image-source responses up to `max_order`, without a tail.
///
/// # Safety
/// As for [`rirsim_synthesize`].
#[no_mangle]
pub unsafe extern "C" fn rirsim_synthesize_ism_only(
    cfg: *const RirsimConfig,
    scene: *const RirsimScene,
    max_order: usize,
    out_mic0: *mut *mut RirsimRir,
    out_mic1: *mut *mut RirsimRir,
) -> RirsimStatus {
    guard(|| {
        let cfg = get(cfg, "cfg")?;
        let scene = get(scene, "scene")?;
        emit_pair(synthesize_ism_only(&scene.0, &cfg.0, max_order)?, out_mic0, out_mic1)
    })
}

/// Number of samples, or 0 for a NULL handle.
///
/// # Safety
/// `rir` must be NULL or a live response handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_rir_len(rir: *const RirsimRir) -> usize {
    rir.as_ref().map_or(0, |r| r.0.samples.len())
}

/// Sample rate in Hz, or 0 for a NULL handle.
///
/// # Safety
/// `rir` must be NULL or a live response handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_rir_sample_rate(rir: *const RirsimRir) -> u32 {
    rir.as_ref().map_or(0, |r| r.0.fs)
}

/// Copies the samples into `dst`, which must hold at least
/// [`rirsim_rir_len`] values.
///
/// # Safety
/// `rir` must be NULL or a live handle; `dst` must be NULL or point to
/// `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rirsim_rir_copy_samples(
    rir: *const RirsimRir,
    dst: *mut f64,
    capacity: usize,
) -> RirsimStatus {
    guard(|| {
        let src = &get(rir, "rir")?.0.samples;
        if dst.is_null() {
            return Err(null("dst"));
        }
        if capacity < src.len() {
            return Err(invalid(format!("buffer holds {capacity} samples, need {}", src.len())));
        }
        std::ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
        Ok(())
    })
}

/// Sample index of the direct-path arrival.
///
/// # Safety
/// `rir` must be NULL or a live handle; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn rirsim_rir_direct_index(rir: *const RirsimRir, out: *mut usize) -> RirsimStatus {
    guard(|| put(out, get(rir, "rir")?.0.n_d, "out"))
}

/// DRR the response was synthesized to hit. `NotAvailable` for responses
/// without a target.
///
/// # Safety
/// `rir` must be NULL or a live handle; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn rirsim_rir_target_drr(rir: *const RirsimRir, out: *mut f64) -> RirsimStatus {
    guard(|| {
        let value = get(rir, "rir")?.0.target_drr.ok_or_else(|| {
            Failure(RirsimStatus::NotAvailable, "response has no DRR target".into())
        })?;
        put(out, value, "out")
    })
}

/// DRR measured on the final response. `NotAvailable` when it could not be
/// measured (no reverberant energy).
///
/// # Safety
/// `rir` must be NULL or a live handle; `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn rirsim_rir_measured_drr(rir: *const RirsimRir, out: *mut f64) -> RirsimStatus {
    guard(|| {
        let value = get(rir, "rir")?.0.measured_drr.ok_or_else(|| {
            Failure(RirsimStatus::NotAvailable, "response has no measurable DRR".into())
        })?;
        put(out, value, "out")
    })
}

/// # Safety
/// `rir` must be NULL or a live response handle.
#[no_mangle]
pub unsafe extern "C" fn rirsim_rir_free(rir: *mut RirsimRir) {
    if !rir.is_null() {
        drop(Box::from_raw(rir));
    }
}

/// Direct-to-reverberant energy ratio of `samples` around `direct_index`
/// with a direct window of `half_width` samples on each side.
///
/// # Safety
/// `samples` must be NULL or point to `len` readable doubles; `out` must be
/// NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn rirsim_measure_drr(
    samples: *const f64,
    len: usize,
    direct_index: usize,
    half_width: usize,
    out: *mut f64,
) -> RirsimStatus {
    guard(|| {
        let h = self::samples(samples, len)?;
        put(out, measure_drr(h, direct_index, half_width)?, "out")
    })
}

/// Critical distance in metres of a room with dimensions `room_dims` and
/// reverberation time `t60`, for source factor `alpha` and microphone factor
/// `beta`.
///
/// # Safety
/// `room_dims` must be NULL or point to three doubles; `out` must be NULL or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rirsim_critical_distance(
    room_dims: *const f64,
    t60: f64,
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> RirsimStatus {
    guard(|| {
        let d = vec3(room_dims, "room_dims")?;
        let room = Room::new(d.x(), d.y(), d.z(), t60)?;
        put(out, critical_distance(&room, alpha, beta)?, "out")
    })
}

/// Reverberation time in seconds from a linear fit to the energy decay
/// curve between -5 and -35 dB.
///
/// # Safety
/// `samples` must be NULL or point to `len` readable doubles; `out` must be
/// NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn rirsim_estimate_t60(
    samples: *const f64,
    len: usize,
    sample_rate: u32,
    out: *mut f64,
) -> RirsimStatus {
    guard(|| {
        if sample_rate == 0 {
            return Err(invalid("sample_rate must be positive"));
        }
        let h = self::samples(samples, len)?;
        let edc = schroeder_edc(h, sample_rate as f64)?;
        put(out, estimate_t60(&edc)?, "out")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;

    fn last_error() -> Option<String> {
        let p = rirsim_last_error_message();
        (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
    }

    #[test]
    fn error_codes_map_by_kind() {
        let s = |e: Error| Failure::from(e).0;
        assert_eq!(s(Error::ZeroEnergy), RirsimStatus::Analysis);
        assert_eq!(s(Error::DegenerateGeometry("x".into())), RirsimStatus::InvalidGeometry);
        assert_eq!(
            s(Error::InfeasibleDrr { requested: 1.0, attainable: 0.5 }),
            RirsimStatus::InfeasibleDrr
        );
    }

    #[test]
    fn panics_become_status() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, RirsimStatus::Panic);
        assert_eq!(last_error().as_deref(), Some("panic: boom"));
        assert_eq!(guard(|| Ok(())), RirsimStatus::Ok);
        assert!(last_error().is_none());
    }

    #[test]
    fn rejected_setter_keeps_old_value() {
        let mut cfg = std::ptr::null_mut();
        unsafe {
            assert_eq!(rirsim_config_new_default(&mut cfg), RirsimStatus::Ok);
            assert_eq!(rirsim_config_set_sample_rate(cfg, 0), RirsimStatus::InvalidArgument);
            assert_eq!((*cfg).0.fs, 16_000);
            assert_eq!(rirsim_config_set_sample_rate(cfg, 8_000), RirsimStatus::Ok);
            assert_eq!((*cfg).0.fs, 8_000);
            rirsim_config_free(cfg);
        }
    }

    #[test]
    fn unknown_pattern_is_invalid() {
        assert!(pattern_from(5).is_err());
        assert_eq!(pattern_from(2).ok(), Some(DirectivityPattern::Cardioid));
    }
}
