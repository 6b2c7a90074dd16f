//! C ABI over `pizzaquad`.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `_free`. Every fallible call returns a
//! [`PqStatus`]; on failure a message for the calling thread is available
//! from [`pq_last_error`] until the next failing call on that thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pizzaquad::model::{forward_batch, train, ModelConfig, ModelWeights};
use pizzaquad::pipeline::{analyze, AnalysisOptions, AnalysisReport};
use pizzaquad::quadrature::{self, bound_report, BoxScheme, IntegrandSpec, Period, Variant};
use pizzaquad::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Io = 4,
    Schema = 5,
    /// Divergence or non-finite tensors.
    Numeric = 6,
    /// A cluster could not be turned into a quadrature scheme.
    Analysis = 7,
    MissingData = 8,
    BufferTooSmall = 9,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqVariant {
    Relu = 0,
    Abs = 1,
    Identity = 2,
    Secondary = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PqPeriod {
    Full = 0,
    Half = 1,
}

/// Bound components of one (frequency, variant, period) entry.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PqBound {
    pub n_boxes: usize,
    pub eps_approx_int: f64,
    pub eps_phi: f64,
    pub eps_0: f64,
    /// NaN when the baseline is zero.
    pub relative_total: f64,
}

/// Opaque trained-model handle.
pub struct PqWeights(ModelWeights);

/// Opaque analysis-report handle.
pub struct PqReport(AnalysisReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> PqStatus {
    match e {
        Error::InvalidConfig(_) => PqStatus::InvalidConfig,
        Error::TokenOutOfRange { .. } | Error::EmptyBatch | Error::UnknownVariant(_) | Error::UnknownFigure(_) => {
            PqStatus::InvalidArgument
        }
        Error::Io { .. } => PqStatus::Io,
        Error::Schema(_) | Error::ShapeMismatch { .. } | Error::Json(_) | Error::CacheMismatch { .. } => PqStatus::Schema,
        Error::Divergence { .. } | Error::NonFinite { .. } => PqStatus::Numeric,
        Error::ClusterTooSmall { .. } | Error::ZeroMass(_) | Error::DegenerateCluster(_) | Error::NotPiPeriodic(_) => {
            PqStatus::Analysis
        }
        Error::MissingData(_) => PqStatus::MissingData,
    }
}

fn fail(status: PqStatus, msg: impl Into<String>) -> PqStatus {
    set_error(msg);
    status
}

/// Runs `f`, mapping errors and panics onto status codes.
fn guard(f: impl FnOnce() -> Result<(), PqStatus>) -> PqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PqStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(PqStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, PqStatus>;
}

impl<T> OrStatus<T> for pizzaquad::Result<T> {
    fn or_status(self) -> Result<T, PqStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, PqStatus> {
    if s.is_null() {
        return Err(fail(PqStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(PqStatus::InvalidArgument, format!("`{name}` is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, PqStatus> {
    p.as_ref().ok_or_else(|| fail(PqStatus::NullPointer, format!("`{name}` is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), PqStatus> {
    if p.is_null() {
        Err(fail(PqStatus::NullPointer, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

fn variant_of(v: PqVariant) -> Variant {
    match v {
        PqVariant::Relu => Variant::Relu,
        PqVariant::Abs => Variant::Abs,
        PqVariant::Identity => Variant::Identity,
        PqVariant::Secondary => Variant::Secondary,
    }
}

fn period_of(p: PqPeriod) -> Period {
    match p {
        PqPeriod::Full => Period::Full,
        PqPeriod::Half => Period::Half,
    }
}

fn bound_of(b: &quadrature::BoundComponents) -> PqBound {
    PqBound {
        n_boxes: b.n_boxes,
        eps_approx_int: b.eps_approx_int,
        eps_phi: b.eps_phi,
        eps_0: b.eps_0,
        relative_total: b.relative_total.unwrap_or(f64::NAN),
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn pq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from a `pq_*` function documented as returning an owned
/// string, and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads weights from a JSON file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pq_weights_load(path: *const c_char, out: *mut *mut PqWeights) -> PqStatus {
    guard(|| {
        out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let w = ModelWeights::load(path).or_status()?;
        *out = Box::into_raw(Box::new(PqWeights(w)));
        Ok(())
    })
}

/// Parses weights from a JSON document.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pq_weights_from_json(json: *const c_char, out: *mut *mut PqWeights) -> PqStatus {
    guard(|| {
        out_arg(out, "out")?;
        let w = ModelWeights::from_json(str_arg(json, "json")?).or_status()?;
        *out = Box::into_raw(Box::new(PqWeights(w)));
        Ok(())
    })
}

/// Trains a model. `config_json` is a model config object; missing fields
/// take their defaults, so `"{}"` trains the standard model.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pq_train(config_json: *const c_char, out: *mut *mut PqWeights) -> PqStatus {
    guard(|| {
        out_arg(out, "out")?;
        let config: ModelConfig = serde_json::from_str(str_arg(config_json, "config_json")?)
            .map_err(|e| fail(PqStatus::InvalidConfig, e.to_string()))?;
        let (w, _) = train(&config).or_status()?;
        *out = Box::into_raw(Box::new(PqWeights(w)));
        Ok(())
    })
}

/// # Safety
/// `w` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pq_weights_free(w: *mut PqWeights) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Modulus of the model, or 0 for a null handle.
///
/// # Safety
/// `w` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pq_weights_modulus(w: *const PqWeights) -> usize {
    w.as_ref().map_or(0, |w| w.0.config.p)
}

/// Weights serialized as JSON; free with [`pq_string_free`].
///
/// # Safety
/// `w` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pq_weights_to_json(w: *const PqWeights, out: *mut *mut c_char) -> PqStatus {
    guard(|| {
        out_arg(out, "out")?;
        let w = ref_arg(w, "weights")?;
        *out = into_c_string(w.0.to_json().or_status()?);
        Ok(())
    })
}

/// Writes the `p` logits for the input `a b =` into `logits[0..p]`.
///
/// # Safety
/// `w` must be a live handle; `logits` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pq_forward(w: *const PqWeights, a: usize, b: usize, logits: *mut f64, len: usize) -> PqStatus {
    guard(|| {
        let w = ref_arg(w, "weights")?;
        out_arg(logits, "logits")?;
        let p = w.0.config.p;
        if len < p {
            return Err(fail(PqStatus::BufferTooSmall, format!("need {p} doubles, got {len}")));
        }
        let out = forward_batch(&w.0, &[(a, b)]).or_status()?;
        let dst = std::slice::from_raw_parts_mut(logits, p);
        for (d, s) in dst.iter_mut().zip(out.row(0)) {
            *d = *s;
        }
        Ok(())
    })
}

/// Runs the full analysis with both variants and both periods.
///
/// # Safety
/// `w` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pq_analyze(w: *const PqWeights, out: *mut *mut PqReport) -> PqStatus {
    guard(|| {
        out_arg(out, "out")?;
        let w = ref_arg(w, "weights")?;
        let report = analyze(&w.0, &AnalysisOptions::default()).or_status()?;
        *out = Box::into_raw(Box::new(PqReport(report)));
        Ok(())
    })
}

/// # Safety
/// `r` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn pq_report_free(r: *mut PqReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Copies up to `len` key frequencies into `freqs` and stores the total count
/// in `count`. Pass `freqs = null, len = 0` to query the count.
///
/// # Safety
/// `r` must be a live handle; `freqs` must point to `len` writable values
/// unless `len` is 0; `count` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pq_report_key_freqs(
    r: *const PqReport,
    freqs: *mut usize,
    len: usize,
    count: *mut usize,
) -> PqStatus {
    guard(|| {
        let r = ref_arg(r, "report")?;
        out_arg(count, "count")?;
        let keys = &r.0.key_freqs;
        *count = keys.len();
        if len == 0 {
            return Ok(());
        }
        out_arg(freqs, "freqs")?;
        let n = len.min(keys.len());
        std::slice::from_raw_parts_mut(freqs, n).copy_from_slice(&keys[..n]);
        if len < keys.len() {
            return Err(fail(PqStatus::BufferTooSmall, format!("{} key frequencies", keys.len())));
        }
        Ok(())
    })
}

/// Bound entry for frequency `k`.
///
/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pq_report_bound(
    r: *const PqReport,
    k: usize,
    variant: PqVariant,
    period: PqPeriod,
    out: *mut PqBound,
) -> PqStatus {
    guard(|| {
        let r = ref_arg(r, "report")?;
        out_arg(out, "out")?;
        let b = r
            .0
            .frequency(k)
            .and_then(|f| f.bound(variant_of(variant), period_of(period)))
            .ok_or_else(|| fail(PqStatus::MissingData, format!("no bound for k = {k}")))?;
        *out = bound_of(b);
        Ok(())
    })
}

/// Brute-force maximum relative error for frequency `k`.
///
/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pq_report_actual_error(
    r: *const PqReport,
    k: usize,
    variant: PqVariant,
    out: *mut f64,
) -> PqStatus {
    guard(|| {
        let r = ref_arg(r, "report")?;
        out_arg(out, "out")?;
        let a = r
            .0
            .frequency(k)
            .and_then(|f| f.actual(variant_of(variant)))
            .ok_or_else(|| fail(PqStatus::MissingData, format!("no actual error for k = {k}")))?;
        *out = a.max_rel;
        Ok(())
    })
}

/// 1 if the structural criteria hold, 0 otherwise (including null).
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pq_report_good_model(r: *const PqReport) -> i32 {
    r.as_ref().is_some_and(|r| r.0.flags.good_model()) as i32
}

/// 1 if soundness and the exact logit decomposition hold, 0 otherwise.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pq_report_sound(r: *const PqReport) -> i32 {
    r.as_ref().is_some_and(|r| r.0.flags.hard_invariants_hold()) as i32
}

/// The report as JSON; free with [`pq_string_free`].
///
/// # Safety
/// `r` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pq_report_to_json(r: *const PqReport, out: *mut *mut c_char) -> PqStatus {
    guard(|| {
        let r = ref_arg(r, "report")?;
        out_arg(out, "out")?;
        let text = serde_json::to_string(&r.0).map_err(|e| fail(PqStatus::Schema, e.to_string()))?;
        *out = into_c_string(text);
        Ok(())
    })
}

/// Exact integral of the variant's integrand for tokens `(a, b, c)` at frequency `k`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pq_closed_form(
    variant: PqVariant,
    k: usize,
    p: usize,
    a: usize,
    b: usize,
    c: usize,
    out: *mut f64,
) -> PqStatus {
    guard(|| {
        out_arg(out, "out")?;
        if p < 2 || k == 0 {
            return Err(fail(PqStatus::InvalidArgument, "need p >= 2 and k >= 1"));
        }
        *out = quadrature::closed_form(variant_of(variant), k, p, a, b, c);
        Ok(())
    })
}

/// Midpoint-rule integral of the same integrand with `n_points` nodes.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pq_numeric_integral(
    variant: PqVariant,
    k: usize,
    p: usize,
    a: usize,
    b: usize,
    c: usize,
    n_points: usize,
    out: *mut f64,
) -> PqStatus {
    guard(|| {
        out_arg(out, "out")?;
        if p < 2 || k == 0 || n_points == 0 {
            return Err(fail(PqStatus::InvalidArgument, "need p >= 2, k >= 1 and n_points >= 1"));
        }
        let spec = IntegrandSpec::from_tokens(variant_of(variant), k, p, a, b, c);
        *out = quadrature::numeric_integral(&spec, n_points);
        Ok(())
    })
}

/// Bound for a scheme of `n` equal boxes with exact phases.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pq_uniform_bound(
    n: usize,
    variant: PqVariant,
    period: PqPeriod,
    p: usize,
    out: *mut PqBound,
) -> PqStatus {
    guard(|| {
        out_arg(out, "out")?;
        if n == 0 || p < 2 {
            return Err(fail(PqStatus::InvalidArgument, "need n >= 1 and p >= 2"));
        }
        let b = bound_report(&BoxScheme::uniform(1, n), variant_of(variant), period_of(period), p).or_status()?;
        *out = bound_of(&b);
        Ok(())
    })
}
