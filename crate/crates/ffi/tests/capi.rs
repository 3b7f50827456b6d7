use std::ffi::{c_char, CStr, CString};
use std::ptr;

use risopt_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { risopt_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn default_channel() -> *mut RisoptChannel {
    let scene = risopt_scene_default();
    let mut ch = ptr::null_mut();
    assert_eq!(unsafe { risopt_channel_from_scene(scene, &mut ch) }, RisoptStatus::Ok);
    unsafe { risopt_scene_free(scene) };
    ch
}

fn dims(ch: *const RisoptChannel) -> (usize, usize, usize) {
    let (mut k, mut m, mut n) = (0, 0, 0);
    assert_eq!(
        unsafe { risopt_channel_dims(ch, &mut k, &mut m, &mut n) },
        RisoptStatus::Ok
    );
    (k, m, n)
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(risopt_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn noise_power_matches_ktb() {
    let mut w = 0.0;
    assert_eq!(unsafe { risopt_noise_power(900.0, 40e6, &mut w) }, RisoptStatus::Ok);
    assert!((w - 1.380649e-23 * 900.0 * 40e6).abs() < 1e-25);
    assert_eq!(
        unsafe { risopt_noise_power(-1.0, 40e6, &mut w) },
        RisoptStatus::InvalidInput
    );
    assert!(!last_error().is_empty());
}

#[test]
fn null_handles_are_rejected() {
    let (mut k, mut m, mut n) = (0, 0, 0);
    let s = unsafe { risopt_channel_dims(ptr::null(), &mut k, &mut m, &mut n) };
    assert_eq!(s, RisoptStatus::NullPointer);
    assert!(last_error().contains("channel"));
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { risopt_channel_load(ptr::null(), &mut out) },
        RisoptStatus::NullPointer
    );
    unsafe {
        risopt_channel_free(ptr::null_mut());
        risopt_scene_free(ptr::null_mut());
    }
}

#[test]
fn missing_file_reports_io() {
    let p = CString::new("/nonexistent/channels.json").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { risopt_channel_load(p.as_ptr(), &mut out) }, RisoptStatus::Io);
    assert!(out.is_null());
}

#[test]
fn save_load_round_trip_preserves_effective_channel() {
    let ch = default_channel();
    let (k, m, n) = dims(ch);
    assert_eq!((k, m, n), (3, 3, 20));
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("c.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { risopt_channel_save(ch, path.as_ptr()) }, RisoptStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { risopt_channel_load(path.as_ptr(), &mut back) },
        RisoptStatus::Ok
    );

    let caps = vec![0.5; n];
    let mut a = (vec![0.0; k * m], vec![0.0; k * m]);
    let mut b = (vec![0.0; k * m], vec![0.0; k * m]);
    unsafe {
        assert_eq!(
            risopt_effective_channel(ch, caps.as_ptr(), n, a.0.as_mut_ptr(), a.1.as_mut_ptr(), k * m),
            RisoptStatus::Ok
        );
        assert_eq!(
            risopt_effective_channel(back, caps.as_ptr(), n, b.0.as_mut_ptr(), b.1.as_mut_ptr(), k * m),
            RisoptStatus::Ok
        );
        risopt_channel_free(back);
        risopt_channel_free(ch);
    }
    assert_eq!(a, b);
}

#[test]
fn short_buffers_and_wrong_lengths_fail() {
    let ch = default_channel();
    let (k, m, n) = dims(ch);
    let caps = vec![0.5; n];
    let mut re = vec![0.0; k * m - 1];
    let mut im = vec![0.0; k * m - 1];
    let s = unsafe { risopt_effective_channel(ch, caps.as_ptr(), n, re.as_mut_ptr(), im.as_mut_ptr(), re.len()) };
    assert_eq!(s, RisoptStatus::BufferTooSmall);
    let mut rate = 0.0;
    let s = unsafe { risopt_min_rate(ch, caps.as_ptr(), n - 1, 20.0, 5e-13, &mut rate) };
    assert_eq!(s, RisoptStatus::Dimension);
    let bad = vec![5.0; n];
    let s = unsafe { risopt_min_rate(ch, bad.as_ptr(), n, 20.0, 5e-13, &mut rate) };
    assert_eq!(s, RisoptStatus::InvalidInput);
    assert!(last_error().contains("outside"));
    unsafe { risopt_channel_free(ch) };
}

#[test]
fn exhaustive_best_dominates_all_off() {
    let ch = default_channel();
    let (_, _, n) = dims(ch);
    let mut sigma2 = 0.0;
    unsafe { risopt_noise_power(900.0, 40e6, &mut sigma2) };
    let mut index = u64::MAX;
    let mut best = 0.0;
    assert_eq!(
        unsafe { risopt_exhaustive_best(ch, 30.0, sigma2, &mut index, &mut best) },
        RisoptStatus::Ok
    );
    assert!(index < 1 << (n / 2));
    let off = vec![0.38; n];
    let mut rate = 0.0;
    assert_eq!(
        unsafe { risopt_min_rate(ch, off.as_ptr(), n, 30.0, sigma2, &mut rate) },
        RisoptStatus::Ok
    );
    assert!(best >= rate - 1e-12);
    unsafe { risopt_channel_free(ch) };
}

#[test]
fn optimize_returns_in_range_capacitances() {
    let ch = default_channel();
    let (_, _, n) = dims(ch);
    let mut caps = vec![0.0; n];
    let mut rate = 0.0;
    let s = unsafe { risopt_optimize(ch, 20.0, 4.97e-13, 7, caps.as_mut_ptr(), n, &mut rate) };
    assert_eq!(s, RisoptStatus::Ok);
    assert!(caps.iter().all(|c| (0.2..=1.2).contains(c)), "{caps:?}");
    let mut check = 0.0;
    unsafe { risopt_min_rate(ch, caps.as_ptr(), n, 20.0, 4.97e-13, &mut check) };
    assert!((check - rate).abs() < 1e-6 * rate.max(1.0));
    unsafe { risopt_channel_free(ch) };
}
