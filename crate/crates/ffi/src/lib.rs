//! C interface.
//!
//! Every fallible function returns an [`SlStatus`]; on failure the message is
//! available from [`sl_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `*_free` function.
//!
//! Matrices are passed row-major: `x[i * p + j]`, `y[i * n_times + r]`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndarray::{Array2, ArrayView2};
use smoothlasso::benchmark::run_benchmark;
use smoothlasso::estimators::{
    adaptive_lasso_fit, fit_timecourse, EstimatorId, EstimatorSpec, TimeCourseFit,
};
use smoothlasso::io::{emit_report, load_dataset, save_dataset, BenchmarkConfig, ReportFormat};
use smoothlasso::simulation::{simulate_dataset, SimModel, TimeCourseDataset};
use smoothlasso::smoothing::Kernel;
use smoothlasso::solver::{lasso_fit, standardize_columns, DesignMatrix, LassoFit, SolverOptions};
use smoothlasso::tuning::{tune_estimator, TuningGrid};
use smoothlasso::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotApplicable = 4,
    Numerical = 5,
    Parse = 6,
    Io = 7,
    Panic = 8,
    Other = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlKernel {
    Gaussian = 0,
    Epanechnikov = 1,
    Uniform = 2,
}

impl From<SlKernel> for Kernel {
    fn from(k: SlKernel) -> Self {
        match k {
            SlKernel::Gaussian => Kernel::Gaussian,
            SlKernel::Epanechnikov => Kernel::Epanechnikov,
            SlKernel::Uniform => Kernel::Uniform,
        }
    }
}

/// A time-course dataset.
pub struct SlDataset {
    inner: TimeCourseDataset,
}

/// Fits of one estimator at every time-point.
pub struct SlTimeCourseFit {
    inner: TimeCourseFit,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SlStatus {
    match e {
        Error::InvalidArgument(_)
        | Error::Config(_)
        | Error::TooFewColumns { .. }
        | Error::TooLarge(_) => SlStatus::InvalidArgument,
        Error::DimensionMismatch(_) => SlStatus::DimensionMismatch,
        Error::NotApplicable(_) => SlStatus::NotApplicable,
        Error::RankDeficient { .. } | Error::ConstantColumn(_) | Error::NonFinite(_) => {
            SlStatus::Numerical
        }
        Error::Parse { .. } => SlStatus::Parse,
        Error::Io { .. } => SlStatus::Io,
        Error::TimePoints(v) => v.first().map_or(SlStatus::Other, |(_, e)| status_of(e)),
        Error::Run { source, .. } => status_of(source),
        _ => SlStatus::Other,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SlStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SlStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SlStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(
    p: *mut T,
    len: usize,
    what: &'static str,
) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn reference<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn utf8_path<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::InvalidArgument("path is not UTF-8".into())))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn dims_product(a: usize, b: usize) -> Result<usize, Failure> {
    a.checked_mul(b)
        .ok_or_else(|| Failure::Lib(Error::InvalidArgument("dimensions overflow".into())))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Draws a dataset from simulation model 1 or 2.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sl_dataset_simulate(
    model: u8,
    n: usize,
    p: usize,
    sigma: f64,
    n_times: usize,
    seed: u64,
    out: *mut *mut SlDataset,
) -> SlStatus {
    guard(|| {
        let model = SimModel::try_from(model)?;
        let inner = simulate_dataset(model, n, p, sigma, n_times, seed)?;
        put(out, SlDataset { inner })
    })
}

/// Reads a dataset CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sl_dataset_load(
    path: *const c_char,
    out: *mut *mut SlDataset,
) -> SlStatus {
    guard(|| {
        let inner = load_dataset(utf8_path(path)?)?;
        put(out, SlDataset { inner })
    })
}

/// Writes a dataset CSV.
///
/// # Safety
/// `data` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sl_dataset_save(data: *const SlDataset, path: *const c_char) -> SlStatus {
    guard(|| {
        let d = reference(data, "data")?;
        save_dataset(&d.inner, utf8_path(path)?)?;
        Ok(())
    })
}

/// Copies raw arrays into a new dataset. `x` is `n × p`, `y` is `n × n_times`,
/// both row-major.
///
/// # Safety
/// The arrays must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn sl_dataset_from_arrays(
    x: *const f64,
    y: *const f64,
    times: *const f64,
    n: usize,
    p: usize,
    n_times: usize,
    out: *mut *mut SlDataset,
) -> SlStatus {
    guard(|| {
        let xs = slice(x, dims_product(n, p)?, "x")?;
        let ys = slice(y, dims_product(n, n_times)?, "y")?;
        let ts = slice(times, n_times, "times")?;
        let x = Array2::from_shape_vec((n, p), xs.to_vec())
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        let y = Array2::from_shape_vec((n, n_times), ys.to_vec())
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        let inner = TimeCourseDataset::new(x, y, ts.to_vec())?;
        put(out, SlDataset { inner })
    })
}

/// # Safety
/// `data` must be a live handle; the output pointers may be NULL.
#[no_mangle]
pub unsafe extern "C" fn sl_dataset_dims(
    data: *const SlDataset,
    n: *mut usize,
    p: *mut usize,
    n_times: *mut usize,
) -> SlStatus {
    guard(|| {
        let d = &reference(data, "data")?.inner;
        for (ptr, v) in [(n, d.n()), (p, d.p()), (n_times, d.timepoints())] {
            if !ptr.is_null() {
                *ptr = v;
            }
        }
        Ok(())
    })
}

/// Copies the design (row-major, `n × p`) into `out`.
///
/// # Safety
/// `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn sl_dataset_design(
    data: *const SlDataset,
    out: *mut f64,
    len: usize,
) -> SlStatus {
    guard(|| {
        let d = &reference(data, "data")?.inner;
        copy_row_major(d.x.view(), out, len)
    })
}

/// Copies the responses (row-major, `n × n_times`) into `out`.
///
/// # Safety
/// `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn sl_dataset_responses(
    data: *const SlDataset,
    out: *mut f64,
    len: usize,
) -> SlStatus {
    guard(|| {
        let d = &reference(data, "data")?.inner;
        copy_row_major(d.y.view(), out, len)
    })
}

unsafe fn copy_row_major(a: ArrayView2<'_, f64>, out: *mut f64, len: usize) -> Result<(), Failure> {
    if len != a.len() {
        return Err(
            Error::DimensionMismatch(format!("buffer of {len} for {} values", a.len())).into(),
        );
    }
    let dst = slice_mut(out, len, "out")?;
    for (d, s) in dst.iter_mut().zip(a.iter()) {
        *d = *s;
    }
    Ok(())
}

/// # Safety
/// `data` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_dataset_free(data: *mut SlDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

unsafe fn design_from(
    x: *const f64,
    n: usize,
    p: usize,
    standardize: bool,
) -> Result<DesignMatrix, Failure> {
    let xs = slice(x, dims_product(n, p)?, "x")?;
    let a =
        ArrayView2::from_shape((n, p), xs).map_err(|e| Error::DimensionMismatch(e.to_string()))?;
    Ok(if standardize {
        standardize_columns(a)?
    } else {
        DesignMatrix::from_raw(a)?
    })
}

unsafe fn write_fit(
    fit: &LassoFit,
    intercept: *mut f64,
    coefficients: *mut f64,
    p: usize,
    converged: *mut bool,
) -> Result<(), Failure> {
    let dst = slice_mut(coefficients, p, "coefficients")?;
    dst.copy_from_slice(&fit.coefficients);
    if !intercept.is_null() {
        *intercept = fit.intercept;
    }
    if !converged.is_null() {
        *converged = fit.converged;
    }
    Ok(())
}

/// Lasso on raw arrays. With `standardize` the columns are centered and scaled
/// first and the coefficients refer to the standardized columns.
///
/// # Safety
/// `x` holds `n·p` values, `y` holds `n`, `coefficients` room for `p`.
#[no_mangle]
pub unsafe extern "C" fn sl_lasso_fit(
    x: *const f64,
    y: *const f64,
    n: usize,
    p: usize,
    lambda: f64,
    standardize: bool,
    intercept: *mut f64,
    coefficients: *mut f64,
    converged: *mut bool,
) -> SlStatus {
    guard(|| {
        let d = design_from(x, n, p, standardize)?;
        let fit = lasso_fit(&d, slice(y, n, "y")?, lambda, &SolverOptions::default())?;
        write_fit(&fit, intercept, coefficients, p, converged)
    })
}

/// Adaptive Lasso with weights `1/|beta_init_j|^gamma` on raw arrays.
///
/// # Safety
/// As [`sl_lasso_fit`]; `beta_init` holds `p` values.
#[no_mangle]
pub unsafe extern "C" fn sl_adaptive_lasso_fit(
    x: *const f64,
    y: *const f64,
    n: usize,
    p: usize,
    lambda: f64,
    beta_init: *const f64,
    gamma: f64,
    standardize: bool,
    intercept: *mut f64,
    coefficients: *mut f64,
    converged: *mut bool,
) -> SlStatus {
    guard(|| {
        let d = design_from(x, n, p, standardize)?;
        let init = slice(beta_init, p, "beta_init")?;
        let fit = adaptive_lasso_fit(
            &d,
            slice(y, n, "y")?,
            lambda,
            init,
            gamma,
            &SolverOptions::default(),
        )?;
        write_fit(&fit, intercept, coefficients, p, converged)
    })
}

/// Tunes estimator `estimator` (1..=7) on `valid` with the default grid and
/// fits it on `train`.
///
/// # Safety
/// `train` and `valid` must be live handles and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sl_tune_and_fit(
    train: *const SlDataset,
    valid: *const SlDataset,
    estimator: u8,
    kernel: SlKernel,
    out: *mut *mut SlTimeCourseFit,
) -> SlStatus {
    guard(|| {
        let train = &reference(train, "train")?.inner;
        let valid = &reference(valid, "valid")?.inner;
        let spec =
            EstimatorSpec::new(EstimatorId::from_number(estimator)?).with_kernel(kernel.into());
        let grid = TuningGrid::default_for(&train.times, train.n(), train.p());
        let opts = SolverOptions::default();
        let tuned = tune_estimator(&spec, train, valid, &grid, &opts)?;
        let inner = fit_timecourse(&spec, &train.prepare()?, &tuned, &opts)?;
        put(out, SlTimeCourseFit { inner })
    })
}

/// # Safety
/// `fit` must be a live handle; the output pointers may be NULL.
#[no_mangle]
pub unsafe extern "C" fn sl_fit_dims(
    fit: *const SlTimeCourseFit,
    n_times: *mut usize,
    p: *mut usize,
) -> SlStatus {
    guard(|| {
        let f = &reference(fit, "fit")?.inner;
        if !n_times.is_null() {
            *n_times = f.fits.len();
        }
        if !p.is_null() {
            *p = f.fits.first().map_or(0, |x| x.coefficients.len());
        }
        Ok(())
    })
}

/// Intercept and coefficients (standardized scale) at time-point `r`.
///
/// # Safety
/// `coefficients` must hold `len` values, `len` equal to the predictor count.
#[no_mangle]
pub unsafe extern "C" fn sl_fit_coefficients(
    fit: *const SlTimeCourseFit,
    r: usize,
    intercept: *mut f64,
    coefficients: *mut f64,
    len: usize,
) -> SlStatus {
    guard(|| {
        let f = &reference(fit, "fit")?.inner;
        let one = f
            .fits
            .get(r)
            .ok_or_else(|| Error::InvalidArgument(format!("time-point {r} out of range")))?;
        if len != one.coefficients.len() {
            return Err(Error::DimensionMismatch(format!(
                "buffer of {len} for {} coefficients",
                one.coefficients.len()
            ))
            .into());
        }
        write_fit(one, intercept, coefficients, len, ptr::null_mut())
    })
}

/// Final-stage penalty and bandwidth selected at time-point `r`; the
/// bandwidth is NaN for unsmoothed estimators.
///
/// # Safety
/// `fit` must be a live handle; the output pointers may be NULL.
#[no_mangle]
pub unsafe extern "C" fn sl_fit_params(
    fit: *const SlTimeCourseFit,
    r: usize,
    lambda: *mut f64,
    bandwidth: *mut f64,
) -> SlStatus {
    guard(|| {
        let f = &reference(fit, "fit")?.inner;
        let tp = f
            .params
            .timepoints
            .get(r)
            .ok_or_else(|| Error::InvalidArgument(format!("time-point {r} out of range")))?;
        let last = tp.stages.last().expect("at least one stage");
        if !lambda.is_null() {
            *lambda = last.lambda;
        }
        if !bandwidth.is_null() {
            *bandwidth = last.bandwidth.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// # Safety
/// `fit` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sl_fit_free(fit: *mut SlTimeCourseFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Runs a benchmark from a JSON configuration (NULL for defaults) and writes
/// the report CSV to `out_path`.
///
/// # Safety
/// Both arguments must be NUL-terminated strings or NULL (config only).
#[no_mangle]
pub unsafe extern "C" fn sl_benchmark(
    config_json: *const c_char,
    out_path: *const c_char,
) -> SlStatus {
    guard(|| {
        let cfg = if config_json.is_null() {
            BenchmarkConfig::default()
        } else {
            let text = CStr::from_ptr(config_json)
                .to_str()
                .map_err(|_| Error::Config("config is not UTF-8".into()))?;
            BenchmarkConfig::from_json(text)?
        };
        let out = utf8_path(out_path)?;
        let rows = run_benchmark(&cfg)?;
        emit_report(&rows, out, ReportFormat::Csv)?;
        Ok(())
    })
}
