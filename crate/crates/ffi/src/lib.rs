//! C interface to `augmi`.
//!
//! Every fallible function returns an [`AugmiStatus`]. On failure the message
//! is kept per thread and can be read with [`augmi_last_error`]. Models are
//! opaque handles released with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use augmi::attacks::{mean_statistic, moment_features, AttackModel};
use augmi::data::Sample;
use augmi::dp_bound::{mi_upper_bound, DpParams};
use augmi::loss::cross_entropy_loss;
use augmi::records::{LossSet, MembershipRecord, Split};
use augmi::target::TargetModel;
use augmi::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AugmiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Io = 4,
    Invariant = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

/// Target model handle.
pub struct AugmiTargetModel(TargetModel);

/// Fitted attack handle.
pub struct AugmiAttackModel(AttackModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> AugmiStatus {
    match e.root() {
        Error::InvalidInput(_) | Error::InvalidConfig(_) | Error::Calibration(_) => AugmiStatus::InvalidInput,
        Error::Parse { .. } => AugmiStatus::Parse,
        Error::Io(_) => AugmiStatus::Io,
        Error::Invariant(_) => AugmiStatus::Invariant,
        _ => AugmiStatus::Internal,
    }
}

struct Fail(AugmiStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null() -> Fail {
    Fail(AugmiStatus::NullPointer, "null pointer argument".into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AugmiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AugmiStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside augmi".into());
            AugmiStatus::Internal
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(null)
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null());
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(AugmiStatus::InvalidInput, "path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

unsafe fn write_all(values: &[f64], buf: *mut f64, cap: usize, written: *mut usize) -> Result<(), Fail> {
    *out(written)? = values.len();
    if values.len() > cap {
        return Err(Fail(AugmiStatus::BufferTooSmall, format!("need {} slots, got {cap}", values.len())));
    }
    if !values.is_empty() {
        if buf.is_null() {
            return Err(null());
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    }
    Ok(())
}

/// Message for the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn augmi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn augmi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Cross-entropy of `logits[0..len]` against `label`.
///
/// # Safety
/// `logits` must point to `len` readable doubles and `out_loss` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augmi_cross_entropy(logits: *const f64, len: usize, label: usize, out_loss: *mut f64) -> AugmiStatus {
    guard(|| {
        let l = cross_entropy_loss(slice(logits, len)?, label)?;
        *out(out_loss)? = l;
        Ok(())
    })
}

/// Arithmetic mean of a loss set.
///
/// # Safety
/// `losses` must point to `len` readable doubles and `out_mean` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augmi_mean_statistic(losses: *const f64, len: usize, out_mean: *mut f64) -> AugmiStatus {
    guard(|| {
        let m = mean_statistic(slice(losses, len)?)?;
        *out(out_mean)? = m;
        Ok(())
    })
}

/// Power-mean moment features of orders `1..=order`. `*written` is set to
/// `order` even when `cap` is too small.
///
/// # Safety
/// `losses` must hold `len` doubles, `buf` must hold `cap` doubles and
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augmi_moment_features(
    losses: *const f64,
    len: usize,
    order: usize,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> AugmiStatus {
    guard(|| {
        let f = moment_features(slice(losses, len)?, order)?;
        write_all(&f.0, buf, cap, written)
    })
}

/// Upper bound on membership-inference success for an (epsilon, k) instance
/// with prior `q`.
///
/// # Safety
/// `out_bound` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augmi_mi_upper_bound(epsilon: f64, k: usize, q: f64, out_bound: *mut f64) -> AugmiStatus {
    guard(|| {
        let p = DpParams::new(epsilon, k, q)?;
        *out(out_bound)? = mi_upper_bound(&p);
        Ok(())
    })
}

/// Loads a target checkpoint written by `augmi train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_model` writable.
#[no_mangle]
pub unsafe extern "C" fn augmi_target_model_load(path_: *const c_char, out_model: *mut *mut AugmiTargetModel) -> AugmiStatus {
    guard(|| {
        let slot = out(out_model)?;
        let m = TargetModel::read_checkpoint(path(path_)?)?;
        *slot = Box::into_raw(Box::new(AugmiTargetModel(m)));
        Ok(())
    })
}

/// Number of classes, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn augmi_target_model_classes(model: *const AugmiTargetModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.classes())
}

/// Flattened input length, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn augmi_target_model_input_len(model: *const AugmiTargetModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.input_shape().len())
}

/// Logits for one input of `augmi_target_model_input_len` features.
///
/// # Safety
/// `model` must be a live handle, `features` must hold `len` doubles, `buf`
/// must hold `cap` doubles and `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augmi_target_model_logits(
    model: *const AugmiTargetModel,
    features: *const f64,
    len: usize,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> AugmiStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(null)?.0;
        let sample = Sample::new(0, m.input_shape(), slice(features, len)?.to_vec(), 0)?;
        write_all(&m.logits(&sample)?, buf, cap, written)
    })
}

/// # Safety
/// `model` must be null or a handle from `augmi_target_model_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn augmi_target_model_free(model: *mut AugmiTargetModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Loads a fitted attack written by `augmi attack train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_model` writable.
#[no_mangle]
pub unsafe extern "C" fn augmi_attack_model_load(path_: *const c_char, out_model: *mut *mut AugmiAttackModel) -> AugmiStatus {
    guard(|| {
        let slot = out(out_model)?;
        let m = AttackModel::read(path(path_)?)?;
        *slot = Box::into_raw(Box::new(AugmiAttackModel(m)));
        Ok(())
    })
}

/// Membership decision for one loss set. Pass NaN as `original_loss` when the
/// untransformed loss is unknown.
///
/// # Safety
/// `model` must be a live handle, `losses` must hold `len` doubles and
/// `out_member` must be writable.
#[no_mangle]
pub unsafe extern "C" fn augmi_attack_model_decide(
    model: *const AugmiAttackModel,
    losses: *const f64,
    len: usize,
    original_loss: f64,
    out_member: *mut bool,
) -> AugmiStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(null)?.0;
        let record = MembershipRecord {
            id: 0,
            member: false,
            split: Split::AttackEval,
            losses: LossSet::new(slice(losses, len)?.to_vec())?,
            original_loss: (!original_loss.is_nan()).then_some(original_loss),
        };
        *out(out_member)? = m.decide(&record)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from `augmi_attack_model_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn augmi_attack_model_free(model: *mut AugmiAttackModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
