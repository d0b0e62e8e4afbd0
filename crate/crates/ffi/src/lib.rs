//! C ABI over `signoise`.
//!
//! Every fallible call returns an [`SnStatus`]; on failure the thread-local
//! message from [`sn_last_error_message`] says what went wrong. Buffers are
//! caller-owned. Filters are opaque handles freed with [`sn_filter_free`].

use std::cell::RefCell;
use std::ffi::CString;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::c_char;
use signoise::error::Error;
use signoise::filter::{apply_zero_phase, design_filter, frequency_response, FilterSpec, FilterStages};
use signoise::kinematics::velocity;
use signoise::sampling::{min_sampling_rate, AnalysisDomain};
use signoise::series::TimeSeries;
use signoise::stats::{fit_model, incremental_pvaf_values, paired_t_test, tdist, Model};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad argument, length or series content.
    InvalidInput = 2,
    /// Singular system, constant data or non-convergence.
    Numerical = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnModel {
    PowerLaw = 0,
    Exponential = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnDomain {
    Frequency = 0,
    Time = 1,
}

/// Fitted main sequence. Coefficients are (a, b) for the power law and
/// (v_max, c) for the exponential.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnFit {
    pub coeffs: [f64; 2],
    pub ci95_low: [f64; 2],
    pub ci95_high: [f64; 2],
    pub r2: f64,
    pub adj_r2: f64,
    pub n_points: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnTTest {
    pub t: f64,
    pub df: usize,
    pub p_two_tailed: f64,
}

/// Opaque designed filter.
pub struct SnFilter(FilterStages);

thread_local! {
    static LAST_ERROR: RefCell<Option<(CString, &'static str)>> = const { RefCell::new(None) };
}

fn set_error(msg: &str, code: &'static str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some((c, code)));
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SnStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SnStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"), "null_pointer");
            SnStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string(), e.code());
            if e.is_numerical() {
                SnStatus::Numerical
            } else {
                SnStatus::InvalidInput
            }
        }
        Err(_) => {
            set_error("internal panic", "panic");
            SnStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

/// Message for the last failed call on this thread, or NULL after a
/// success. Valid until the next `sn_*` call on the same thread.
#[no_mangle]
pub extern "C" fn sn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |(m, _)| m.as_ptr()))
}

/// Stable identifier of the last error (e.g. "invalid_cutoff"), or NULL
/// after a success. Same lifetime as [`sn_last_error_message`].
#[no_mangle]
pub extern "C" fn sn_last_error_code() -> *const c_char {
    thread_local! {
        static CODE: RefCell<CString> = RefCell::new(CString::default());
    }
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => ptr::null(),
        Some((_, code)) => CODE.with(|c| {
            *c.borrow_mut() = CString::new(*code).unwrap_or_default();
            c.borrow().as_ptr()
        }),
    })
}

fn design(spec: FilterSpec, out_filter: *mut *mut SnFilter) -> SnStatus {
    guard(|| {
        let slot = unsafe { out(out_filter, "out_filter")? };
        *slot = ptr::null_mut();
        let stages = design_filter(&spec)?;
        *slot = Box::into_raw(Box::new(SnFilter(stages)));
        Ok(())
    })
}

/// Butterworth low-pass of `order` at `cutoff_hz` for data sampled at `rate_hz`.
///
/// # Safety
/// `out_filter` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sn_filter_lowpass(order: usize, cutoff_hz: f64, rate_hz: f64, out_filter: *mut *mut SnFilter) -> SnStatus {
    design(FilterSpec::lowpass(order, cutoff_hz, rate_hz), out_filter)
}

/// # Safety
/// `out_filter` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sn_filter_highpass(order: usize, cutoff_hz: f64, rate_hz: f64, out_filter: *mut *mut SnFilter) -> SnStatus {
    design(FilterSpec::highpass(order, cutoff_hz, rate_hz), out_filter)
}

/// # Safety
/// `out_filter` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sn_filter_bandpass(
    order: usize,
    low_hz: f64,
    high_hz: f64,
    rate_hz: f64,
    out_filter: *mut *mut SnFilter,
) -> SnStatus {
    design(FilterSpec::bandpass(order, low_hz, high_hz, rate_hz), out_filter)
}

/// Zero-phase (forward-backward) filtering of `len` samples. `input` and
/// `output` may alias.
///
/// # Safety
/// `filter` must come from an `sn_filter_*` constructor; `input` and
/// `output` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sn_filter_apply(filter: *const SnFilter, input: *const f64, len: usize, output: *mut f64) -> SnStatus {
    guard(|| {
        let f = filter.as_ref().ok_or(Failure::Null("filter"))?;
        let x = slice(input, len, "input")?.to_vec();
        let y = apply_zero_phase(&f.0, &TimeSeries::new(x, f.0.rate_hz)?)?;
        slice_mut(output, len, "output")?.copy_from_slice(y.samples());
        Ok(())
    })
}

/// Magnitude at `freq_hz`; squared when `zero_phase` is set.
///
/// # Safety
/// `filter` must be a live handle and `out_magnitude` writable.
#[no_mangle]
pub unsafe extern "C" fn sn_filter_response(
    filter: *const SnFilter,
    freq_hz: f64,
    zero_phase: bool,
    out_magnitude: *mut f64,
) -> SnStatus {
    guard(|| {
        let f = filter.as_ref().ok_or(Failure::Null("filter"))?;
        *out(out_magnitude, "out_magnitude")? = frequency_response(&f.0, freq_hz, zero_phase)?;
        Ok(())
    })
}

/// Number of second-order sections, or 0 for NULL.
///
/// # Safety
/// `filter` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sn_filter_section_count(filter: *const SnFilter) -> usize {
    filter.as_ref().map_or(0, |f| f.0.sections.len())
}

/// # Safety
/// `filter` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sn_filter_free(filter: *mut SnFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}

/// Savitzky-Golay velocity in units per second. The `window / 2` samples
/// at each end have no estimate and are written as NaN.
///
/// # Safety
/// `input` and `output` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sn_velocity(
    input: *const f64,
    len: usize,
    rate_hz: f64,
    window: usize,
    poly_order: usize,
    output: *mut f64,
) -> SnStatus {
    guard(|| {
        let x = slice(input, len, "input")?.to_vec();
        let v = velocity(&TimeSeries::new(x, rate_hz)?, window, poly_order)?;
        slice_mut(output, len, "output")?.copy_from_slice(v.samples());
        Ok(())
    })
}

/// Incremental percent of variance accounted for, regressors entered in
/// order. `regressors` is row-major, `n_regressors` rows of `len` samples.
/// `out_rank_deficient` may be NULL.
///
/// # Safety
/// `y` holds `len` doubles, `regressors` `n_regressors * len`, and
/// `out_pvaf` `n_regressors`.
#[no_mangle]
pub unsafe extern "C" fn sn_incremental_pvaf(
    y: *const f64,
    len: usize,
    regressors: *const f64,
    n_regressors: usize,
    out_pvaf: *mut f64,
    out_rank_deficient: *mut bool,
) -> SnStatus {
    guard(|| {
        let y = slice(y, len, "y")?;
        let total = n_regressors.checked_mul(len).ok_or(Error::InvalidArgument("size overflow".into()))?;
        let flat = slice(regressors, total, "regressors")?;
        let rows: Vec<&[f64]> = if len == 0 { vec![&[]; n_regressors] } else { flat.chunks(len).collect() };
        let r = incremental_pvaf_values(y, &rows)?;
        slice_mut(out_pvaf, n_regressors, "out_pvaf")?.copy_from_slice(&r.pvaf);
        if let Some(flag) = out_rank_deficient.as_mut() {
            *flag = r.rank_deficient;
        }
        Ok(())
    })
}

/// Least-squares main-sequence fit of peak velocity against amplitude.
///
/// # Safety
/// `amplitudes` and `velocities` hold `len` doubles; `out_fit` is writable.
#[no_mangle]
pub unsafe extern "C" fn sn_fit_main_sequence(
    model: SnModel,
    amplitudes: *const f64,
    velocities: *const f64,
    len: usize,
    out_fit: *mut SnFit,
) -> SnStatus {
    guard(|| {
        let slot = out(out_fit, "out_fit")?;
        let xs = slice(amplitudes, len, "amplitudes")?;
        let ys = slice(velocities, len, "velocities")?;
        let pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
        let m = match model {
            SnModel::PowerLaw => Model::PowerLaw,
            SnModel::Exponential => Model::Exponential,
        };
        let f = fit_model(m, &pts)?;
        *slot = SnFit {
            coeffs: f.coeffs,
            ci95_low: [f.ci95[0][0], f.ci95[1][0]],
            ci95_high: [f.ci95[0][1], f.ci95[1][1]],
            r2: f.r2,
            adj_r2: f.adj_r2,
            n_points: f.n_points,
        };
        Ok(())
    })
}

/// Paired t-test on `x - y`.
///
/// # Safety
/// `x` and `y` hold `len` doubles; `out_result` is writable.
#[no_mangle]
pub unsafe extern "C" fn sn_paired_t_test(x: *const f64, y: *const f64, len: usize, out_result: *mut SnTTest) -> SnStatus {
    guard(|| {
        let slot = out(out_result, "out_result")?;
        let r = paired_t_test(slice(x, len, "x")?, slice(y, len, "y")?)?;
        *slot = SnTTest {
            t: r.t,
            df: r.df,
            p_two_tailed: r.p_two_tailed,
        };
        Ok(())
    })
}

/// Two-sided Student t tail probability; NaN for `df <= 0`.
#[no_mangle]
pub extern "C" fn sn_t_two_tailed_p(t: f64, df: f64) -> f64 {
    if df > 0.0 {
        tdist::two_tailed_p(t, df)
    } else {
        f64::NAN
    }
}

/// Lowest sampling rate for a signal whose content reaches `max_freq_hz`.
///
/// # Safety
/// `out_rate_hz` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sn_min_sampling_rate(max_freq_hz: f64, domain: SnDomain, out_rate_hz: *mut f64) -> SnStatus {
    guard(|| {
        let d = match domain {
            SnDomain::Frequency => AnalysisDomain::Frequency,
            SnDomain::Time => AnalysisDomain::Time,
        };
        *out(out_rate_hz, "out_rate_hz")? = min_sampling_rate(max_freq_hz, d)?;
        Ok(())
    })
}
