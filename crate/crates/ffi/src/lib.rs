//! C ABI over the `shide` crate.
//!
//! Every fallible call returns a [`ShideStatus`]; on failure the message is
//! kept per thread and can be read with [`shide_last_error_message`]. Fitted
//! estimators are opaque heap handles released with their `_free` function.
//! Panics never cross the boundary: they are reported as
//! [`ShideStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shide::baseline::{silverman_bw, sj_bw, KdeEstimate};
use shide::bench::{ModelId, ModelSpec};
use shide::estimator::{BandwidthChoice, WorkingScale};
use shide::{DensityEstimate, Error, PolynomialKernel, ShideConfig, SupportSpec};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShideStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    TooFewObservations = 3,
    NonFinite = 4,
    OutsideSupport = 5,
    Degenerate = 6,
    SignDomain = 7,
    Panic = 99,
}

/// How the noise half-width is chosen.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShideBandwidthRule {
    /// Use `ShideOptions::h` as given.
    Fixed = 0,
    /// Asymptotically optimal width with normal-reference curvature.
    Amise = 1,
    /// Spacing-percentile rule at `ShideOptions::alpha`.
    Percentile = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShideSupportKind {
    Unbounded = 0,
    /// `(lower, +inf)`
    LowerBounded = 1,
    /// `(-inf, upper)`
    UpperBounded = 2,
    /// `(lower, upper)`
    Interval = 3,
}

/// Estimation settings; obtain defaults from [`shide_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ShideOptions {
    /// Kernel order, 1 to 30.
    pub k: u32,
    /// Noisy replicates per observation.
    pub m: usize,
    pub rule: ShideBandwidthRule,
    /// Half-width for `SHIDE_BANDWIDTH_RULE_FIXED`.
    pub h: f64,
    /// Spacing percentile for `SHIDE_BANDWIDTH_RULE_PERCENTILE`.
    pub alpha: f64,
    /// Multiplier on the selected width.
    pub c: f64,
    /// Calibrated (`true`) or raw (`false`) percentile rule.
    pub calibrated: bool,
    pub support: ShideSupportKind,
    pub lower: f64,
    pub upper: f64,
    pub seed: u64,
    /// Rescale the fit to unit mass.
    pub normalize: bool,
    /// Fit on the transformed scale for bounded supports.
    pub transformed: bool,
}

/// Fitted SHIDE density.
pub struct ShideDensity(DensityEstimate);

/// Fitted Gaussian kernel density estimate.
pub struct ShideKde(KdeEstimate);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ShideStatus {
    match e {
        Error::TooFewObservations { .. } => ShideStatus::TooFewObservations,
        Error::NonFinite { .. } => ShideStatus::NonFinite,
        Error::OutsideSupport { .. } => ShideStatus::OutsideSupport,
        Error::Degenerate(_) => ShideStatus::Degenerate,
        Error::SignDomain(_) => ShideStatus::SignDomain,
        _ => ShideStatus::InvalidArgument,
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

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> ShideStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => ShideStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed for `{what}`"));
            ShideStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("internal panic: {msg}"));
            ShideStatus::Panic
        }
    }
}

unsafe fn input<'a>(ptr: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        Ok(&[])
    } else if ptr.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(slice::from_raw_parts(ptr, len))
    }
}

unsafe fn output<'a>(
    ptr: *mut f64,
    len: usize,
    what: &'static str,
) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        Ok(&mut [])
    } else if ptr.is_null() {
        Err(Failure::Null(what))
    } else {
        Ok(slice::from_raw_parts_mut(ptr, len))
    }
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

fn config_from(o: &ShideOptions) -> ShideConfig {
    let bandwidth = match o.rule {
        ShideBandwidthRule::Fixed => BandwidthChoice::Fixed(o.h),
        ShideBandwidthRule::Amise => match BandwidthChoice::amise() {
            BandwidthChoice::AmiseOpt {
                psi_method,
                roughness_method,
                ..
            } => BandwidthChoice::AmiseOpt {
                c: o.c,
                psi_method,
                roughness_method,
            },
            other => other,
        },
        ShideBandwidthRule::Percentile => match BandwidthChoice::percentile(o.alpha) {
            BandwidthChoice::Percentile {
                psi_method,
                roughness_method,
                pilot,
                ..
            } => BandwidthChoice::Percentile {
                alpha: o.alpha,
                calibrated: o.calibrated,
                c: o.c,
                psi_method,
                roughness_method,
                pilot,
            },
            other => other,
        },
    };
    let support = match o.support {
        ShideSupportKind::Unbounded => SupportSpec::Unbounded,
        ShideSupportKind::LowerBounded => SupportSpec::LowerBounded(o.lower),
        ShideSupportKind::UpperBounded => SupportSpec::UpperBounded(o.upper),
        ShideSupportKind::Interval => SupportSpec::Interval(o.lower, o.upper),
    };
    ShideConfig {
        k: o.k,
        m: o.m,
        bandwidth,
        support,
        seed: o.seed,
        normalize: o.normalize,
        working_scale: if o.transformed {
            WorkingScale::Transformed
        } else {
            WorkingScale::Original
        },
        ..ShideConfig::default()
    }
}

/// Default settings: order 3, ten replicates, AMISE width, unbounded support,
/// seed 0, no normalisation, original scale.
#[no_mangle]
pub extern "C" fn shide_options_default() -> ShideOptions {
    let d = ShideConfig::default();
    ShideOptions {
        k: d.k,
        m: d.m,
        rule: ShideBandwidthRule::Amise,
        h: 1.0,
        alpha: 0.5,
        c: 1.0,
        calibrated: true,
        support: ShideSupportKind::Unbounded,
        lower: 0.0,
        upper: 0.0,
        seed: d.seed,
        normalize: d.normalize,
        transformed: false,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn shide_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn shide_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Fits a SHIDE density to `n` observations.
///
/// # Safety
/// `data` must point to `n` readable doubles, `options` may be NULL (defaults)
/// or point to a valid `ShideOptions`, and `out` must be writable. On success
/// `*out` owns a handle to release with [`shide_density_free`].
#[no_mangle]
pub unsafe extern "C" fn shide_density_new(
    data: *const f64,
    n: usize,
    options: *const ShideOptions,
    out: *mut *mut ShideDensity,
) -> ShideStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        out.write(ptr::null_mut());
        let data = input(data, n, "data")?;
        let opts = if options.is_null() {
            shide_options_default()
        } else {
            *options
        };
        let estimate = shide::shide_estimate(data, &config_from(&opts))?;
        out.write(Box::into_raw(Box::new(ShideDensity(estimate))));
        Ok(())
    })
}

/// Density at `x`; NaN for a NULL handle.
///
/// # Safety
/// `density` must be NULL or a live handle from [`shide_density_new`].
#[no_mangle]
pub unsafe extern "C" fn shide_density_evaluate(density: *const ShideDensity, x: f64) -> f64 {
    match density.as_ref() {
        Some(d) => d.0.evaluate(x),
        None => f64::NAN,
    }
}

/// Evaluates the density at `n` points into `out`.
///
/// # Safety
/// `density` must be a live handle; `xs` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn shide_density_evaluate_many(
    density: *const ShideDensity,
    xs: *const f64,
    n: usize,
    out: *mut f64,
) -> ShideStatus {
    guard(|| {
        let d = density.as_ref().ok_or(Failure::Null("density"))?;
        let xs = input(xs, n, "xs")?;
        let out = output(out, n, "out")?;
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = d.0.evaluate(x);
        }
        Ok(())
    })
}

/// Noise half-width used by the fit; NaN for a NULL handle.
///
/// # Safety
/// `density` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn shide_density_bandwidth(density: *const ShideDensity) -> f64 {
    density.as_ref().map_or(f64::NAN, |d| d.0.h_used())
}

/// Histogram bin width used by the fit; NaN for a NULL handle.
///
/// # Safety
/// `density` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn shide_density_bin_width(density: *const ShideDensity) -> f64 {
    density.as_ref().map_or(f64::NAN, |d| d.0.theta_used())
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `density` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shide_density_free(density: *mut ShideDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

/// Fits a Gaussian KDE with bandwidth `h`. With `multiplicative` set the
/// estimator works on `log|x|` and needs single-signed data.
///
/// # Safety
/// `data` must point to `n` doubles and `out` must be writable. On success
/// `*out` owns a handle to release with [`shide_kde_free`].
#[no_mangle]
pub unsafe extern "C" fn shide_kde_new(
    data: *const f64,
    n: usize,
    h: f64,
    multiplicative: bool,
    out: *mut *mut ShideKde,
) -> ShideStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        out.write(ptr::null_mut());
        let data = input(data, n, "data")?;
        let kde = if multiplicative {
            KdeEstimate::multiplicative(data, h)?
        } else {
            KdeEstimate::additive(data, h)?
        };
        out.write(Box::into_raw(Box::new(ShideKde(kde))));
        Ok(())
    })
}

/// KDE value at `x`; NaN for a NULL handle.
///
/// # Safety
/// `kde` must be NULL or a live handle from [`shide_kde_new`].
#[no_mangle]
pub unsafe extern "C" fn shide_kde_evaluate(kde: *const ShideKde, x: f64) -> f64 {
    kde.as_ref().map_or(f64::NAN, |k| k.0.evaluate(x))
}

/// Evaluates the KDE at `n` points into `out`.
///
/// # Safety
/// `kde` must be a live handle; `xs` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn shide_kde_evaluate_many(
    kde: *const ShideKde,
    xs: *const f64,
    n: usize,
    out: *mut f64,
) -> ShideStatus {
    guard(|| {
        let k = kde.as_ref().ok_or(Failure::Null("kde"))?;
        let xs = input(xs, n, "xs")?;
        let out = output(out, n, "out")?;
        out.copy_from_slice(&k.0.evaluate_many(xs));
        Ok(())
    })
}

/// Releases a handle; NULL is ignored.
///
/// # Safety
/// `kde` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn shide_kde_free(kde: *mut ShideKde) {
    if !kde.is_null() {
        drop(Box::from_raw(kde));
    }
}

/// Silverman's rule-of-thumb bandwidth.
///
/// # Safety
/// `data` must point to `n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shide_bw_silverman(
    data: *const f64,
    n: usize,
    out: *mut f64,
) -> ShideStatus {
    guard(|| {
        let data = input(data, n, "data")?;
        let h = silverman_bw(data)?;
        write_out(out, h, "out")
    })
}

/// Sheather–Jones solve-the-equation bandwidth.
///
/// # Safety
/// `data` must point to `n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shide_bw_sj(data: *const f64, n: usize, out: *mut f64) -> ShideStatus {
    guard(|| {
        let data = input(data, n, "data")?;
        let h = sj_bw(data)?;
        write_out(out, h, "out")
    })
}

/// Density of the order-`k` noise kernel with half-width `h` at `x`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shide_kernel_pdf(k: u32, h: f64, x: f64, out: *mut f64) -> ShideStatus {
    guard(|| {
        let kernel = PolynomialKernel::new(k, h)?;
        write_out(out, kernel.pdf(x), "out")
    })
}

/// Draws `n` values from simulation model `model` (1 to 5) into `out`, using
/// the same stream as `shide sample --seed`.
///
/// # Safety
/// `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn shide_sample_model(
    model: u32,
    n: usize,
    seed: u64,
    out: *mut f64,
) -> ShideStatus {
    guard(|| {
        let id = match model {
            1..=5 => ModelId::ALL[model as usize - 1],
            _ => {
                return Err(Failure::Lib(Error::InvalidParameter {
                    name: "model",
                    reason: format!("must be 1 to 5, got {model}"),
                }))
            }
        };
        let out = output(out, n, "out")?;
        let values = ModelSpec::new(id).sample(n, &mut ChaCha8Rng::seed_from_u64(seed));
        out.copy_from_slice(&values);
        Ok(())
    })
}
