//! C interface to activesplit.
//!
//! Every fallible function returns an [`AsStatus`]; on failure a message is
//! available from [`as_last_error`] on the same thread. Handles are opaque
//! and must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use activesplit::{data, loss, models, Dataset, Error, Fingerprint, FittedModel, IngestOptions};
use activesplit::{ModelSpec, PredictionBatch, N_BITS};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Domain = 6,
    Training = 7,
    Config = 8,
    Panic = 9,
}

/// Loaded dataset, sorted by activity.
pub struct AsDataset {
    inner: Dataset,
}

/// Trained regressor.
pub struct AsModel {
    inner: FittedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> AsStatus {
    match e {
        Error::Io { .. } => AsStatus::Io,
        Error::Parse { .. } => AsStatus::Parse,
        Error::Validation(_) | Error::Size { .. } => AsStatus::Validation,
        Error::Domain(_) | Error::Aggregation(_) => AsStatus::Domain,
        Error::Training(_) => AsStatus::Training,
        Error::Config(_) | Error::Json(_) => AsStatus::Config,
    }
}

struct Fail(AsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AsStatus::Panic
        }
    }
}

fn null(name: &str) -> Fail {
    Fail(AsStatus::NullArgument, format!("{name} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(AsStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn as_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Feature count of every fingerprint (128).
#[no_mangle]
pub extern "C" fn as_n_bits() -> usize {
    N_BITS
}

/// Loads a dataset CSV (`id,activity,fp`). Nonzero `dedup_average` averages
/// rows that share an id.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn as_dataset_load(
    path: *const c_char,
    dedup_average: i32,
    out: *mut *mut AsDataset,
) -> AsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let opts = IngestOptions {
            dedup_average: dedup_average != 0,
            name: None,
        };
        let inner = data::parse_dataset(path, &opts)?;
        *out = Box::into_raw(Box::new(AsDataset { inner }));
        Ok(())
    })
}

/// # Safety
/// `dataset` must come from [`as_dataset_load`] or be null.
#[no_mangle]
pub unsafe extern "C" fn as_dataset_free(dataset: *mut AsDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of molecules, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn as_dataset_len(dataset: *const AsDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.len())
}

/// Copies activities, in sorted order, into `out` (capacity `len`).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn as_dataset_activities(
    dataset: *const AsDataset,
    out: *mut f64,
    len: usize,
) -> AsStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len < d.inner.len() {
            return Err(Fail(
                AsStatus::Domain,
                format!("buffer holds {len}, need {}", d.inner.len()),
            ));
        }
        for (i, m) in d.inner.molecules().iter().enumerate() {
            *out.add(i) = m.activity;
        }
        Ok(())
    })
}

/// Empirical quantile of the activities at `fraction` in [0, 1].
///
/// # Safety
/// `dataset` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn as_dataset_quantile(
    dataset: *const AsDataset,
    fraction: f64,
    out: *mut f64,
) -> AsStatus {
    guard(|| {
        let d = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = d.inner.empirical_quantile(fraction)?;
        Ok(())
    })
}

unsafe fn batch(
    predicted: *const f64,
    truth: *const f64,
    n: usize,
) -> Result<PredictionBatch, Fail> {
    let p = slice_arg(predicted, n, "predicted")?;
    let t = slice_arg(truth, n, "truth")?;
    Ok(PredictionBatch::new(p.to_vec(), t.to_vec())?)
}

/// Normalized rank of the best-ranked active molecule.
///
/// # Safety
/// `predicted` and `truth` must each point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn as_loss_min(
    predicted: *const f64,
    truth: *const f64,
    n: usize,
    gamma: f64,
    out: *mut f64,
) -> AsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = loss::loss_min(&batch(predicted, truth, n)?, gamma)?;
        Ok(())
    })
}

/// Normalized sum of the active molecules' ranks.
///
/// # Safety
/// As for [`as_loss_min`].
#[no_mangle]
pub unsafe extern "C" fn as_loss_sum(
    predicted: *const f64,
    truth: *const f64,
    n: usize,
    gamma: f64,
    out: *mut f64,
) -> AsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = loss::loss_sum(&batch(predicted, truth, n)?, gamma)?;
        Ok(())
    })
}

/// Mean squared error.
///
/// # Safety
/// As for [`as_loss_min`].
#[no_mangle]
pub unsafe extern "C" fn as_mse(
    predicted: *const f64,
    truth: *const f64,
    n: usize,
    out: *mut f64,
) -> AsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = loss::mse(&batch(predicted, truth, n)?);
        Ok(())
    })
}

fn parse_spec(json: &str) -> Result<ModelSpec, Fail> {
    let spec: ModelSpec = serde_json::from_str(json)
        .map_err(|e| Fail(AsStatus::Config, format!("model spec: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

unsafe fn rows(x: *const f64, n_rows: usize, n_cols: usize) -> Result<Vec<Fingerprint>, Fail> {
    if n_cols != N_BITS {
        return Err(Fail(
            AsStatus::Domain,
            format!("expected {N_BITS} columns, got {n_cols}"),
        ));
    }
    let x = slice_arg(x, n_rows * n_cols, "x")?;
    x.chunks(n_cols)
        .map(|row| {
            let bits: Vec<u8> = row
                .iter()
                .map(|&v| {
                    if v == 0.0 {
                        0
                    } else if v == 1.0 {
                        1
                    } else {
                        2
                    }
                })
                .collect();
            Fingerprint::from_bits(&bits).map_err(Fail::from)
        })
        .collect()
}

/// Fits a model described by JSON, e.g. `{"ridge":{"alpha":0.1}}`, on
/// a row-major 0/1 matrix of `n_rows` x 128.
///
/// # Safety
/// `spec_json` must be NUL-terminated, `x` must hold `n_rows * n_cols`
/// doubles, `y` must hold `n_rows` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn as_model_fit(
    spec_json: *const c_char,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    y: *const f64,
    out: *mut *mut AsModel,
) -> AsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = parse_spec(str_arg(spec_json, "spec_json")?)?;
        let fps = rows(x, n_rows, n_cols)?;
        let y = slice_arg(y, n_rows, "y")?;
        let inner = models::fit(&spec, &fps, y)?;
        *out = Box::into_raw(Box::new(AsModel { inner }));
        Ok(())
    })
}

/// Fits a model on every molecule of a dataset.
///
/// # Safety
/// `spec_json` must be NUL-terminated; `dataset` live; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn as_model_fit_dataset(
    spec_json: *const c_char,
    dataset: *const AsDataset,
    out: *mut *mut AsModel,
) -> AsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = parse_spec(str_arg(spec_json, "spec_json")?)?;
        let d = dataset.as_ref().ok_or_else(|| null("dataset"))?;
        let inner = models::fit(&spec, &d.inner.fingerprints(), &d.inner.activities())?;
        *out = Box::into_raw(Box::new(AsModel { inner }));
        Ok(())
    })
}

/// Predicts `n_rows` rows of a row-major matrix with `n_cols` (= 128) columns.
///
/// # Safety
/// `x` must hold `n_rows * n_cols` doubles and `out` must have room for `n_rows`.
#[no_mangle]
pub unsafe extern "C" fn as_model_predict_dense(
    model: *const AsModel,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut f64,
) -> AsStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = slice_arg(x, n_rows * n_cols, "x")?;
        let pred = m.inner.predict_dense(x, n_cols)?;
        ptr::copy_nonoverlapping(pred.as_ptr(), out, pred.len());
        Ok(())
    })
}

/// # Safety
/// `model` must come from a fit call or be null.
#[no_mangle]
pub unsafe extern "C" fn as_model_free(model: *mut AsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
