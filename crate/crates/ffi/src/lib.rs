//! C ABI over the `edwsvr` crate.
//!
//! Models are opaque `EdwsvrModel` handles created by `edwsvr_train` or
//! `edwsvr_model_load` and released with `edwsvr_model_free`. Every fallible
//! call returns an `EdwsvrStatus`; on failure a description is stored per
//! thread and can be copied out with `edwsvr_last_error_message`. Matrices
//! are dense, row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use edwsvr::data::Dataset;
use edwsvr::model_file::{load_model, save_model};
use edwsvr::pipeline::{fit_method, FitOptions, KernelChoice, Method, Model};
use edwsvr::Error;

/// Result codes. `EDWSVR_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdwsvrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numeric = 4,
    Io = 5,
    Parse = 6,
    Panic = 7,
}

/// Values for `EdwsvrTrainOptions::method`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdwsvrMethod {
    Cd = 0,
    Asgd = 1,
    Esvr = 2,
    Ols = 3,
}

/// Values for `EdwsvrTrainOptions::kernel`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdwsvrKernel {
    Linear = 0,
    Rbf = 1,
}

/// Training options. Start from `edwsvr_train_options_default()`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdwsvrTrainOptions {
    /// An `EdwsvrMethod` value.
    pub method: u32,
    /// An `EdwsvrKernel` value.
    pub kernel: u32,
    /// RBF width; zero or negative selects 1/d.
    pub gamma: f64,
    pub lambda1: f64,
    pub c: f64,
    pub epsilon: f64,
    /// Fraction of variance kept by PCA; zero or negative disables PCA.
    pub pca_variance: f64,
    pub max_sweeps: usize,
    pub tol: f64,
    pub passes: usize,
    pub seed: u64,
}

/// Opaque trained model.
pub struct EdwsvrModel {
    inner: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let clean = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = clean);
}

fn status_of(e: &Error) -> EdwsvrStatus {
    match e {
        Error::InvalidArgument(_) | Error::MissingTarget(_) | Error::EmptyDataset(_) => EdwsvrStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => EdwsvrStatus::DimensionMismatch,
        Error::ZeroVariance | Error::Factorization(_) => EdwsvrStatus::Numeric,
        Error::Io(_) => EdwsvrStatus::Io,
        Error::Parse { .. } | Error::ModelFormat { .. } => EdwsvrStatus::Parse,
    }
}

fn fail(status: EdwsvrStatus, message: &str) -> EdwsvrStatus {
    set_error(message);
    status
}

/// Runs `body`, converting errors and panics into status codes.
fn guarded(body: impl FnOnce() -> Result<(), (EdwsvrStatus, String)>) -> EdwsvrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EdwsvrStatus::Ok,
        Ok(Err((status, message))) => fail(status, &message),
        Err(_) => fail(EdwsvrStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (EdwsvrStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (EdwsvrStatus, String) {
    (EdwsvrStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> (EdwsvrStatus, String) {
    (EdwsvrStatus::InvalidArgument, message.into())
}

unsafe fn path_arg(path: *const c_char) -> Result<String, (EdwsvrStatus, String)> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_string)
        .map_err(|_| invalid("path is not valid UTF-8"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn edwsvr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn edwsvr_train_options_default() -> EdwsvrTrainOptions {
    let d = FitOptions::default();
    EdwsvrTrainOptions {
        method: EdwsvrMethod::Cd as u32,
        kernel: EdwsvrKernel::Rbf as u32,
        gamma: 0.0,
        lambda1: d.lambda1,
        c: d.c_upper,
        epsilon: d.epsilon,
        pca_variance: 0.0,
        max_sweeps: d.max_sweeps,
        tol: d.tol,
        passes: d.passes,
        seed: d.seed,
    }
}

fn fit_options(o: &EdwsvrTrainOptions) -> Result<FitOptions, (EdwsvrStatus, String)> {
    let method = match o.method {
        0 => Method::Cd,
        1 => Method::Asgd,
        2 => Method::Esvr,
        3 => Method::Ols,
        m => return Err(invalid(format!("unknown method code {m}"))),
    };
    let kernel = match o.kernel {
        0 => KernelChoice::Linear,
        1 => KernelChoice::Rbf { gamma: (o.gamma > 0.0).then_some(o.gamma) },
        k => return Err(invalid(format!("unknown kernel code {k}"))),
    };
    let kernel = if matches!(method, Method::Ols) { KernelChoice::Linear } else { kernel };
    Ok(FitOptions {
        method,
        kernel,
        lambda1: o.lambda1,
        c_upper: o.c,
        epsilon: o.epsilon,
        pca_variance: (o.pca_variance > 0.0).then_some(o.pca_variance),
        max_sweeps: o.max_sweeps,
        tol: o.tol,
        passes: o.passes,
        seed: o.seed,
    })
}

/// Trains on `n_rows x n_cols` row-major features `x` and targets `y`.
/// `options` may be null for defaults. On success `*out` owns a new model.
///
/// # Safety
/// `x` must point to `n_rows * n_cols` doubles, `y` to `n_rows` doubles,
/// `options` to a valid struct or null, and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn edwsvr_train(
    x: *const f64,
    y: *const f64,
    n_rows: usize,
    n_cols: usize,
    options: *const EdwsvrTrainOptions,
    out: *mut *mut EdwsvrModel,
) -> EdwsvrStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if x.is_null() && n_rows * n_cols > 0 {
            return Err(null("x"));
        }
        if y.is_null() {
            return Err(null("y"));
        }
        if n_rows == 0 {
            return Err(invalid("no training rows"));
        }
        let opts = if options.is_null() { edwsvr_train_options_default() } else { *options };
        let opts = fit_options(&opts)?;
        let xs = if n_cols == 0 { &[][..] } else { std::slice::from_raw_parts(x, n_rows * n_cols) };
        let ys = std::slice::from_raw_parts(y, n_rows);
        let features = edwsvr_matrix(xs, n_rows, n_cols);
        let data = Dataset::new(features, ys.to_vec()).map_err(lib_err)?;
        let model = fit_method(&data, &opts).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EdwsvrModel { inner: model }));
        Ok(())
    })
}

fn edwsvr_matrix(xs: &[f64], n_rows: usize, n_cols: usize) -> edwsvr::nalgebra::DMatrix<f64> {
    edwsvr::nalgebra::DMatrix::from_row_slice(n_rows, n_cols, xs)
}

/// Writes one prediction per row of `x` into `out` (length `n_rows`).
///
/// # Safety
/// `model` must come from this library; `x` must hold `n_rows * n_cols`
/// doubles and `out` room for `n_rows`.
#[no_mangle]
pub unsafe extern "C" fn edwsvr_model_predict(
    model: *const EdwsvrModel,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut f64,
) -> EdwsvrStatus {
    guarded(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if n_rows == 0 {
            return Ok(());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        if x.is_null() && n_cols > 0 {
            return Err(null("x"));
        }
        let expected = model.inner.n_features();
        if n_cols != expected {
            return Err((
                EdwsvrStatus::DimensionMismatch,
                format!("dimension mismatch: expected {expected} columns, found {n_cols}"),
            ));
        }
        let xs = if n_cols == 0 { &[][..] } else { std::slice::from_raw_parts(x, n_rows * n_cols) };
        let preds = (0..n_rows)
            .map(|i| model.inner.predict(&xs[i * n_cols..(i + 1) * n_cols]))
            .collect::<edwsvr::Result<Vec<f64>>>()
            .map_err(lib_err)?;
        std::slice::from_raw_parts_mut(out, n_rows).copy_from_slice(&preds);
        Ok(())
    })
}

/// Raw feature count expected by `edwsvr_model_predict`; 0 for null.
///
/// # Safety
/// `model` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn edwsvr_model_n_features(model: *const EdwsvrModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.n_features())
}

/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn edwsvr_model_save(model: *const EdwsvrModel, path: *const c_char) -> EdwsvrStatus {
    guarded(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let path = path_arg(path)?;
        save_model(&model.inner, path).map_err(lib_err)
    })
}

/// # Safety
/// `path` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn edwsvr_model_load(path: *const c_char, out: *mut *mut EdwsvrModel) -> EdwsvrStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = path_arg(path)?;
        let model = load_model(path).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(EdwsvrModel { inner: model }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a live handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn edwsvr_model_free(model: *mut EdwsvrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// plus one for the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn edwsvr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}
