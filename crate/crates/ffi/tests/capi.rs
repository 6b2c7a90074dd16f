use std::ffi::{CStr, CString};
use std::ptr;

use pizzaquad_ffi::*;

const TINY: &str = r#"{"p": 7, "d_model": 16, "d_mlp": 16, "d_head": 4, "n_heads": 4, "epochs": 5, "batch_size": 0}"#;

fn last_error() -> String {
    let p = pq_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn tiny_weights() -> *mut PqWeights {
    let cfg = CString::new(TINY).unwrap();
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { pq_train(cfg.as_ptr(), &mut w) }, PqStatus::Ok);
    assert!(!w.is_null());
    w
}

#[test]
fn null_arguments_are_reported() {
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { pq_weights_load(ptr::null(), &mut w) }, PqStatus::NullPointer);
    assert!(last_error().contains("path"));
    let mut x = 0.0;
    assert_eq!(unsafe { pq_forward(ptr::null(), 0, 0, &mut x, 1) }, PqStatus::NullPointer);
    unsafe {
        pq_weights_free(ptr::null_mut());
        pq_report_free(ptr::null_mut());
        pq_string_free(ptr::null_mut());
    }
    assert_eq!(unsafe { pq_weights_modulus(ptr::null()) }, 0);
}

#[test]
fn missing_file_is_an_io_error() {
    let path = CString::new("/nonexistent/weights.json").unwrap();
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { pq_weights_load(path.as_ptr(), &mut w) }, PqStatus::Io);
    assert!(w.is_null());
}

#[test]
fn bad_config_is_rejected() {
    let cfg = CString::new(r#"{"p": 1}"#).unwrap();
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { pq_train(cfg.as_ptr(), &mut w) }, PqStatus::InvalidConfig);
    let cfg = CString::new(r#"{"nope": 1}"#).unwrap();
    assert_eq!(unsafe { pq_train(cfg.as_ptr(), &mut w) }, PqStatus::InvalidConfig);
}

#[test]
fn weights_round_trip_through_json() {
    let w = tiny_weights();
    unsafe {
        assert_eq!(pq_weights_modulus(w), 7);
        let mut json = ptr::null_mut();
        assert_eq!(pq_weights_to_json(w, &mut json), PqStatus::Ok);
        let mut w2 = ptr::null_mut();
        assert_eq!(pq_weights_from_json(json, &mut w2), PqStatus::Ok);
        let (mut l1, mut l2) = ([0.0; 7], [0.0; 7]);
        assert_eq!(pq_forward(w, 3, 5, l1.as_mut_ptr(), 7), PqStatus::Ok);
        assert_eq!(pq_forward(w2, 3, 5, l2.as_mut_ptr(), 7), PqStatus::Ok);
        assert_eq!(l1, l2);
        assert_eq!(pq_forward(w, 3, 5, l1.as_mut_ptr(), 6), PqStatus::BufferTooSmall);
        assert_eq!(pq_forward(w, 9, 5, l1.as_mut_ptr(), 7), PqStatus::InvalidArgument);
        pq_string_free(json);
        pq_weights_free(w2);
        pq_weights_free(w);
    }
}

#[test]
fn closed_form_matches_numeric() {
    for v in [PqVariant::Relu, PqVariant::Abs, PqVariant::Identity, PqVariant::Secondary] {
        let (mut exact, mut approx) = (0.0, 0.0);
        unsafe {
            assert_eq!(pq_closed_form(v, 3, 59, 4, 11, 20, &mut exact), PqStatus::Ok);
            assert_eq!(pq_numeric_integral(v, 3, 59, 4, 11, 20, 1 << 16, &mut approx), PqStatus::Ok);
        }
        assert!((exact - approx).abs() < 1e-6, "{v:?}: {exact} vs {approx}");
    }
    let mut x = 0.0;
    assert_eq!(unsafe { pq_closed_form(PqVariant::Abs, 0, 59, 0, 0, 0, &mut x) }, PqStatus::InvalidArgument);
}

#[test]
fn uniform_bound_matches_analytic() {
    let mut b = PqBound::default();
    assert_eq!(unsafe { pq_uniform_bound(128, PqVariant::Abs, PqPeriod::Full, 59, &mut b) }, PqStatus::Ok);
    let analytic = 2.0 * std::f64::consts::PI.powi(2) / 128.0;
    assert!((b.eps_approx_int - analytic).abs() < 1e-9);
    assert_eq!(b.n_boxes, 128);
    assert_eq!(
        unsafe { pq_uniform_bound(8, PqVariant::Identity, PqPeriod::Half, 59, &mut b) },
        PqStatus::InvalidArgument
    );
}

#[test]
fn analysis_of_untrained_model_is_sound() {
    let w = tiny_weights();
    unsafe {
        let mut r = ptr::null_mut();
        let status = pq_analyze(w, &mut r);
        assert_eq!(status, PqStatus::Ok, "{}", last_error());
        assert_eq!(pq_report_sound(r), 1);
        let mut count = 0;
        assert_eq!(pq_report_key_freqs(r, ptr::null_mut(), 0, &mut count), PqStatus::Ok);
        let mut keys = vec![0usize; count];
        assert_eq!(pq_report_key_freqs(r, keys.as_mut_ptr(), count, &mut count), PqStatus::Ok);
        let mut b = PqBound::default();
        assert_eq!(pq_report_bound(r, 1000, PqVariant::Abs, PqPeriod::Full, &mut b), PqStatus::MissingData);
        let mut json = ptr::null_mut();
        assert_eq!(pq_report_to_json(r, &mut json), PqStatus::Ok);
        assert!(CStr::from_ptr(json).to_str().unwrap().contains("key_freqs"));
        pq_string_free(json);
        pq_report_free(r);
        pq_weights_free(w);
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(pq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
