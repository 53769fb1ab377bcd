//! C ABI for `infill-sizing`.
//!
//! Every fallible function returns an [`IszStatus`] and writes its result
//! through an out-pointer. On failure, [`isz_last_error_message`] describes
//! the most recent error on the calling thread. Designs and threshold tables
//! are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use infill_sizing::design::{self, Design};
use infill_sizing::sizing::{self, LambdaInput, SizingRequest, ThresholdSource};
use infill_sizing::threshold_fit::{self, ThresholdSpec, ThresholdTable};
use infill_sizing::variance_formulas::{self, ModelSpec};
use infill_sizing::{ou_model, Error};

/// Status codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IszStatus {
    Ok = 0,
    NullPointer = 1,
    /// An argument is outside its domain.
    Domain = 2,
    /// The model has no estimator for the requested parameter.
    Inadmissible = 3,
    /// A closed form or matrix computation lost precision or broke down.
    Numeric = 4,
    /// The target ratio is outside the fitted curve's range.
    OutOfRange = 5,
    NonMonotone = 6,
    Unattainable = 7,
    Overflow = 8,
    /// Too few or degenerate data rows for a fit.
    Data = 9,
    Config = 10,
    IndexOutOfBounds = 11,
    Panic = 12,
    Internal = 13,
}

/// The five model/parameter combinations plus the pooled agnostic curve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IszSpec {
    InterceptOnly = 0,
    SlopeOnly = 1,
    FullIntercept = 2,
    FullSlope = 3,
    FullCovariance = 4,
    Agnostic = 5,
}

impl From<IszSpec> for ThresholdSpec {
    fn from(s: IszSpec) -> Self {
        match s {
            IszSpec::InterceptOnly => ModelSpec::INTERCEPT_ONLY.into(),
            IszSpec::SlopeOnly => ModelSpec::SLOPE_ONLY.into(),
            IszSpec::FullIntercept => ModelSpec::FULL_INTERCEPT.into(),
            IszSpec::FullSlope => ModelSpec::FULL_SLOPE.into(),
            IszSpec::FullCovariance => ModelSpec::FULL_COVARIANCE.into(),
            IszSpec::Agnostic => ThresholdSpec::Agnostic,
        }
    }
}

impl From<ThresholdSpec> for IszSpec {
    fn from(s: ThresholdSpec) -> Self {
        match s {
            ThresholdSpec::Agnostic => IszSpec::Agnostic,
            ThresholdSpec::Model(m) if m == ModelSpec::INTERCEPT_ONLY => IszSpec::InterceptOnly,
            ThresholdSpec::Model(m) if m == ModelSpec::SLOPE_ONLY => IszSpec::SlopeOnly,
            ThresholdSpec::Model(m) if m == ModelSpec::FULL_INTERCEPT => IszSpec::FullIntercept,
            ThresholdSpec::Model(m) if m == ModelSpec::FULL_SLOPE => IszSpec::FullSlope,
            ThresholdSpec::Model(_) => IszSpec::FullCovariance,
        }
    }
}

/// Which `lambda / n` threshold [`isz_size`] uses.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IszThresholdSource {
    /// Taken from the `table` argument.
    Fitted = 0,
    Published = 1,
    RuleOfThumb = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IszVariance {
    pub actual: f64,
    pub limiting: f64,
    /// `limiting / actual`, independent of `sigma2`.
    pub ratio: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IszThreshold {
    pub spec: IszSpec,
    pub target: f64,
    pub x: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub r2_adj: f64,
    pub rmse: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IszSizingRequest {
    /// True: `value` is lambda. False: `value` is the SNR.
    pub value_is_lambda: bool,
    pub value: f64,
    pub sigma2: f64,
    pub target: f64,
    pub spec: IszSpec,
    pub source: IszThresholdSource,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IszSizingResult {
    pub lambda: f64,
    pub snr: f64,
    pub x: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_approx: usize,
    pub n_exact: usize,
}

/// Opaque design handle.
pub struct IszDesign(Design);

/// Opaque threshold table handle.
pub struct IszThresholdTable(ThresholdTable);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IszStatus {
    match e {
        Error::Domain(_) | Error::Usage(_) => IszStatus::Domain,
        Error::Inadmissible { .. } => IszStatus::Inadmissible,
        Error::NumericDegeneracy { .. } | Error::Singular(_) => IszStatus::Numeric,
        Error::OutOfRange { .. } => IszStatus::OutOfRange,
        Error::NonMonotone(_) => IszStatus::NonMonotone,
        Error::Unattainable(_) => IszStatus::Unattainable,
        Error::Overflow(_) => IszStatus::Overflow,
        Error::InsufficientData(_) | Error::DegenerateData(_) => IszStatus::Data,
        Error::Config(_) => IszStatus::Config,
        Error::Io(_) => IszStatus::Internal,
    }
}

enum Failure {
    Null(&'static str),
    Index(usize, usize),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status and a message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> IszStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IszStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            IszStatus::NullPointer
        }
        Ok(Err(Failure::Index(i, len))) => {
            set_last_error(format!("index {i} out of bounds for length {len}"));
            IszStatus::IndexOutOfBounds
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            IszStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn input<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

/// Message for the last failed call on this thread, or NULL if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn isz_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn isz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Lag-one correlation `exp(-lambda / (n - 1))` of the sampled OU process.
///
/// # Safety
/// `out_rho` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isz_rho(n: usize, lambda: f64, out_rho: *mut f64) -> IszStatus {
    guard(|| {
        *out(out_rho, "out_rho")? = ou_model::rho(n, lambda)?;
        Ok(())
    })
}

/// Finite-`n` and limiting variance of one estimator, and their ratio.
/// `spec` must not be `Agnostic`.
///
/// # Safety
/// `out_variance` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isz_variance(
    spec: IszSpec,
    n: usize,
    lambda: f64,
    sigma2: f64,
    out_variance: *mut IszVariance,
) -> IszStatus {
    guard(|| {
        let o = out(out_variance, "out_variance")?;
        let ThresholdSpec::Model(spec) = spec.into() else {
            return Err(
                Error::Domain("the agnostic curve has no closed-form variance".into()).into(),
            );
        };
        let params = ou_model::OuParameters::new(lambda, sigma2)?;
        let r = variance_formulas::variance_report(spec, n, &params)?;
        *o = IszVariance {
            actual: r.actual,
            limiting: r.limiting,
            ratio: r.ratio,
        };
        Ok(())
    })
}

/// # Safety
/// `out_lambda` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isz_lambda_from_snr(
    snr: f64,
    sigma2: f64,
    out_lambda: *mut f64,
) -> IszStatus {
    guard(|| {
        *out(out_lambda, "out_lambda")? = sizing::lambda_from_snr(snr, sigma2)?;
        Ok(())
    })
}

/// # Safety
/// `out_snr` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isz_snr_from_lambda(
    lambda: f64,
    sigma2: f64,
    out_snr: *mut f64,
) -> IszStatus {
    guard(|| {
        *out(out_snr, "out_snr")? = sizing::snr_from_lambda(lambda, sigma2)?;
        Ok(())
    })
}

/// Smallest `n >= 3` with `lambda / n < x`.
///
/// # Safety
/// `out_n` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isz_approx_sample_size(
    lambda: f64,
    x: f64,
    out_n: *mut usize,
) -> IszStatus {
    guard(|| {
        *out(out_n, "out_n")? = sizing::approx_sample_size(lambda, x)?;
        Ok(())
    })
}

/// Smallest `n >= 3` whose exact variance ratio reaches `target`; for
/// `Agnostic`, the largest such `n` over the five specs.
///
/// # Safety
/// `out_n` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isz_exact_sample_size(
    spec: IszSpec,
    lambda: f64,
    target: f64,
    out_n: *mut usize,
) -> IszStatus {
    guard(|| {
        let o = out(out_n, "out_n")?;
        let mut best = 0;
        for s in ThresholdSpec::from(spec).members() {
            best = best.max(sizing::exact_sample_size(s, lambda, target)?);
        }
        *o = best;
        Ok(())
    })
}

/// Builds a maximin Latin hypercube design. Release it with
/// [`isz_design_free`].
///
/// # Safety
/// `out_design` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isz_design_new(
    points: usize,
    seed: u64,
    restarts: usize,
    out_design: *mut *mut IszDesign,
) -> IszStatus {
    guard(|| {
        let o = out(out_design, "out_design")?;
        let d = design::latin_hypercube(points, seed, restarts)?;
        *o = Box::into_raw(Box::new(IszDesign(d)));
        Ok(())
    })
}

/// Number of points after rounding and deduplication; 0 for NULL.
///
/// # Safety
/// `design` must be NULL or a live handle from [`isz_design_new`].
#[no_mangle]
pub unsafe extern "C" fn isz_design_len(design: *const IszDesign) -> usize {
    design.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `design` must be a live handle; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn isz_design_get(
    design: *const IszDesign,
    index: usize,
    out_n: *mut usize,
    out_lambda: *mut f64,
) -> IszStatus {
    guard(|| {
        let d = &input(design, "design")?.0;
        let (on, ol) = (out(out_n, "out_n")?, out(out_lambda, "out_lambda")?);
        let p = d
            .points()
            .get(index)
            .ok_or(Failure::Index(index, d.len()))?;
        *on = p.n;
        *ol = p.lambda;
        Ok(())
    })
}

/// Minimum pairwise distance and squared centered L2 discrepancy, both on
/// the unit square.
///
/// # Safety
/// `design` must be a live handle; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn isz_design_metrics(
    design: *const IszDesign,
    out_min_distance: *mut f64,
    out_discrepancy: *mut f64,
) -> IszStatus {
    guard(|| {
        let d = &input(design, "design")?.0;
        *out(out_min_distance, "out_min_distance")? = d.min_pairwise_distance();
        *out(out_discrepancy, "out_discrepancy")? = d.centered_l2_discrepancy();
        Ok(())
    })
}

/// # Safety
/// `design` must be NULL or a handle from [`isz_design_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn isz_design_free(design: *mut IszDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}

/// Fits the six curves over `design` and solves each at every target.
/// Rows are spec-major: intercept-only, slope-only, full intercept, full
/// slope, full covariance, agnostic. Release with [`isz_thresholds_free`].
///
/// # Safety
/// `design` must be a live handle, `targets` must point to `n_targets`
/// doubles, and `out_table` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isz_thresholds_new(
    design: *const IszDesign,
    targets: *const f64,
    n_targets: usize,
    out_table: *mut *mut IszThresholdTable,
) -> IszStatus {
    guard(|| {
        let d = &input(design, "design")?.0;
        let o = out(out_table, "out_table")?;
        if targets.is_null() {
            return Err(Failure::Null("targets"));
        }
        let targets = std::slice::from_raw_parts(targets, n_targets);
        let t = threshold_fit::threshold_table(d, targets)?;
        *o = Box::into_raw(Box::new(IszThresholdTable(t)));
        Ok(())
    })
}

/// # Safety
/// `table` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn isz_thresholds_len(table: *const IszThresholdTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.rows.len())
}

/// # Safety
/// `table` must be a live handle and `out_threshold` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn isz_thresholds_get(
    table: *const IszThresholdTable,
    index: usize,
    out_threshold: *mut IszThreshold,
) -> IszStatus {
    guard(|| {
        let t = &input(table, "table")?.0;
        let o = out(out_threshold, "out_threshold")?;
        let r = t
            .rows
            .get(index)
            .ok_or(Failure::Index(index, t.rows.len()))?;
        *o = IszThreshold {
            spec: r.spec.into(),
            target: r.target_ratio,
            x: r.x_at_target,
            ci_lo: r.ci_lo,
            ci_hi: r.ci_hi,
            r2_adj: r.fit.map_or(f64::NAN, |f| f.r2_adj),
            rmse: r.fit.map_or(f64::NAN, |f| f.rmse),
        };
        Ok(())
    })
}

/// # Safety
/// `table` must be NULL or a handle from [`isz_thresholds_new`] not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn isz_thresholds_free(table: *mut IszThresholdTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Sample size for one request. `table` is required for the fitted source
/// and ignored otherwise.
///
/// # Safety
/// `request` and `out_result` must be valid pointers; `table` must be NULL
/// or a live handle.
#[no_mangle]
pub unsafe extern "C" fn isz_size(
    request: *const IszSizingRequest,
    table: *const IszThresholdTable,
    out_result: *mut IszSizingResult,
) -> IszStatus {
    guard(|| {
        let r = input(request, "request")?;
        let o = out(out_result, "out_result")?;
        let source = match r.source {
            IszThresholdSource::Fitted => ThresholdSource::Fitted(input(table, "table")?.0.clone()),
            IszThresholdSource::Published => ThresholdSource::Published,
            IszThresholdSource::RuleOfThumb => ThresholdSource::RuleOfThumb,
        };
        let req = SizingRequest {
            input: if r.value_is_lambda {
                LambdaInput::Lambda(r.value)
            } else {
                LambdaInput::Snr(r.value)
            },
            sigma2: r.sigma2,
            target_ratio: r.target,
            spec: r.spec.into(),
        };
        let res = sizing::size(&req, &source)?;
        let th = res.threshold_used.as_ref();
        *o = IszSizingResult {
            lambda: res.lambda,
            snr: res.snr,
            x: th.map_or(f64::NAN, |t| t.x_at_target),
            ci_lo: th.map_or(f64::NAN, |t| t.ci_lo),
            ci_hi: th.map_or(f64::NAN, |t| t.ci_hi),
            n_approx: res.n_approx.unwrap_or(0),
            n_exact: res.n_exact,
        };
        Ok(())
    })
}
