//! C interface to `neariso`.
//!
//! A model is created from data with [`ni_model_new`], queried through the
//! `ni_model_*` functions and released with [`ni_model_free`]. Every fallible
//! function returns an [`NiStatus`]; on failure a message is available from
//! [`ni_last_error`] on the same thread until the next failing call.
//!
//! Arrays are passed as pointer plus length. Output arrays must hold at least
//! the number of elements the corresponding `*_len`/`*_count` call reports,
//! otherwise `NI_BUFFER_TOO_SMALL` is returned and nothing is written.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use neariso::{
    clip_bounds, select_lambda, Criterion, Direction, Error, Family, Fit, GeneralizedModel, PenaltyScale,
};

pub const NI_FAMILY_NORMAL: i32 = 0;
pub const NI_FAMILY_BINOMIAL: i32 = 1;
pub const NI_FAMILY_POISSON: i32 = 2;
pub const NI_FAMILY_GAMMA: i32 = 3;
/// Chi-square with `shape` degrees of freedom.
pub const NI_FAMILY_CHISQ: i32 = 4;

pub const NI_INCREASING: i32 = 0;
pub const NI_DECREASING: i32 = 1;

/// Family default: per-trial for binomial, natural otherwise.
pub const NI_SCALE_DEFAULT: i32 = -1;
pub const NI_SCALE_NATURAL: i32 = 0;
pub const NI_SCALE_MEAN_WEIGHT: i32 = 1;

pub const NI_CRITERION_AIC: i32 = 0;
pub const NI_CRITERION_CP: i32 = 1;

#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NiStatus {
    NI_OK = 0,
    NI_NULL_POINTER = 1,
    NI_INVALID_ARGUMENT = 2,
    NI_EMPTY_INPUT = 3,
    NI_DOMAIN = 4,
    NI_SUPPORT = 5,
    NI_NONPOSITIVE_WEIGHT = 6,
    NI_LENGTH_MISMATCH = 7,
    NI_INVALID_BOUNDS = 8,
    NI_NONCONVERGENCE = 9,
    NI_BUFFER_TOO_SMALL = 10,
    NI_INTERNAL = 11,
}

/// Opaque fitted solution path.
pub struct NiModel {
    inner: GeneralizedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NiStatus {
    match e {
        Error::EmptyInput => NiStatus::NI_EMPTY_INPUT,
        Error::Domain { .. } => NiStatus::NI_DOMAIN,
        Error::Support { .. } => NiStatus::NI_SUPPORT,
        Error::NonpositiveWeight { .. } => NiStatus::NI_NONPOSITIVE_WEIGHT,
        Error::LengthMismatch { .. } => NiStatus::NI_LENGTH_MISMATCH,
        Error::InvalidBounds { .. } => NiStatus::NI_INVALID_BOUNDS,
        Error::NonConvergence { .. } => NiStatus::NI_NONCONVERGENCE,
        _ => NiStatus::NI_INVALID_ARGUMENT,
    }
}

struct Fail(NiStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NiStatus::NI_OK,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            NiStatus::NI_INTERNAL
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(NiStatus::NI_NULL_POINTER, format!("`{what}` is null"))
}

fn invalid(msg: String) -> Fail {
    Fail(NiStatus::NI_INVALID_ARGUMENT, msg)
}

unsafe fn borrow<'a>(m: *const NiModel) -> Result<&'a GeneralizedModel, Fail> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn input<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn output<'a>(p: *mut f64, cap: usize, need: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    if cap < need {
        return Err(Fail(
            NiStatus::NI_BUFFER_TOO_SMALL,
            format!("`{what}` holds {cap} values, {need} needed"),
        ));
    }
    Ok(slice::from_raw_parts_mut(p, need))
}

fn family(kind: i32, shape: f64) -> Result<Family, Fail> {
    let positive = |what: &str| {
        if shape > 0.0 && shape.is_finite() {
            Ok(shape)
        } else {
            Err(invalid(format!("{what} needs a positive shape, got {shape}")))
        }
    };
    Ok(match kind {
        NI_FAMILY_NORMAL => Family::normal(),
        NI_FAMILY_POISSON => Family::poisson(),
        NI_FAMILY_BINOMIAL => {
            let n = positive("binomial")?;
            if n.fract() != 0.0 || n > u32::MAX as f64 {
                return Err(invalid(format!("binomial trials must be an integer, got {n}")));
            }
            Family::binomial(n as u32)
        }
        NI_FAMILY_GAMMA => Family::gamma(positive("gamma")?),
        NI_FAMILY_CHISQ => Family::chi_square(positive("chi-square")?),
        other => return Err(invalid(format!("unknown family code {other}"))),
    })
}

/// Last error message on this thread, or null. Owned by the library and valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ni_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ni_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Solves the full path. `weights` may be null, meaning the family default
/// (trials for binomial, shape for gamma, half the degrees of freedom for
/// chi-square, one otherwise).
///
/// # Safety
/// `data` (and `weights` when non-null) must point to `n` doubles; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ni_model_new(
    data: *const f64,
    weights: *const f64,
    n: usize,
    family_kind: i32,
    shape: f64,
    direction: i32,
    penalty_scale: i32,
    out: *mut *mut NiModel,
) -> NiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let x = input(data, n, "data")?;
        let w = if weights.is_null() { None } else { Some(input(weights, n, "weights")?) };
        let fam = family(family_kind, shape)?;
        let dir = match direction {
            NI_INCREASING => Direction::Increasing,
            NI_DECREASING => Direction::Decreasing,
            other => return Err(invalid(format!("unknown direction code {other}"))),
        };
        let scale = match penalty_scale {
            NI_SCALE_DEFAULT => PenaltyScale::default_for(fam.kind),
            NI_SCALE_NATURAL => PenaltyScale::Natural,
            NI_SCALE_MEAN_WEIGHT => PenaltyScale::MeanWeight,
            other => return Err(invalid(format!("unknown penalty scale code {other}"))),
        };
        let inner = GeneralizedModel::new(x, w, fam, dir, scale)?;
        *out = Box::into_raw(Box::new(NiModel { inner }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`ni_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ni_model_free(model: *mut NiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of observations.
///
/// # Safety
/// `model` must be a live model or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn ni_model_len(model: *const NiModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.data().len())
}

/// Number of knots, including the leading zero.
///
/// # Safety
/// `model` must be a live model or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn ni_model_knot_count(model: *const NiModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.path().states().len())
}

/// Copies the knots in increasing order.
///
/// # Safety
/// `out` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ni_model_knots(model: *const NiModel, out: *mut f64, cap: usize) -> NiStatus {
    guard(|| {
        let m = borrow(model)?;
        let k = m.knots();
        output(out, cap, k.len(), "out")?.copy_from_slice(&k);
        Ok(())
    })
}

unsafe fn write_fit(fit: &Fit, eta: *mut f64, theta: *mut f64, cap: usize, pieces: *mut usize) -> Result<(), Fail> {
    let n = fit.eta.len();
    output(eta, cap, n, "eta")?.copy_from_slice(&fit.eta);
    if !theta.is_null() {
        output(theta, cap, n, "theta")?.copy_from_slice(&fit.theta);
    }
    if !pieces.is_null() {
        *pieces = fit.pieces;
    }
    Ok(())
}

/// Fit at `lambda`. `theta` and `pieces` may be null.
///
/// # Safety
/// `eta` (and `theta` when non-null) must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn ni_model_fit(
    model: *const NiModel,
    lambda: f64,
    eta: *mut f64,
    theta: *mut f64,
    cap: usize,
    pieces: *mut usize,
) -> NiStatus {
    guard(|| {
        let m = borrow(model)?;
        write_fit(&m.fit_at(lambda)?, eta, theta, cap, pieces)
    })
}

/// Fit at `lambda` with the natural parameter confined to `[lower, upper]`.
///
/// # Safety
/// As for [`ni_model_fit`].
#[no_mangle]
pub unsafe extern "C" fn ni_model_fit_bounded(
    model: *const NiModel,
    lambda: f64,
    lower: f64,
    upper: f64,
    eta: *mut f64,
    theta: *mut f64,
    cap: usize,
    pieces: *mut usize,
) -> NiStatus {
    guard(|| {
        let m = borrow(model)?;
        let fit = clip_bounds(&m.fit_at(lambda)?, m.family(), lower, upper)?;
        write_fit(&fit, eta, theta, cap, pieces)
    })
}

/// Selects a knot by AIC or Cp (`sigma2` is ignored for AIC). Writes the
/// selected lambda and, when non-null, its knot index and criterion value.
///
/// # Safety
/// `lambda` must be valid; the other outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn ni_model_select(
    model: *const NiModel,
    criterion: i32,
    sigma2: f64,
    lambda: *mut f64,
    knot: *mut usize,
    value: *mut f64,
) -> NiStatus {
    guard(|| {
        let m = borrow(model)?;
        if lambda.is_null() {
            return Err(null("lambda"));
        }
        let c = match criterion {
            NI_CRITERION_AIC => Criterion::Aic,
            NI_CRITERION_CP if sigma2 > 0.0 && sigma2.is_finite() => Criterion::Cp { sigma2 },
            NI_CRITERION_CP => return Err(invalid(format!("Cp needs a positive sigma2, got {sigma2}"))),
            other => return Err(invalid(format!("unknown criterion code {other}"))),
        };
        let t = select_lambda(m, c)?;
        *lambda = t.selected_lambda();
        if !knot.is_null() {
            *knot = t.selected;
        }
        if !value.is_null() {
            *value = t.selected_entry().criterion;
        }
        Ok(())
    })
}
