//! C ABI over the neuroattn toolkit.
//!
//! Every function returns an [`NaStatus`]. On failure the message is kept
//! per thread and can be read with [`na_last_error_message`]. Tensors and
//! models are opaque handles owned by the caller and released with their
//! `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use neuroattn::attention::{spatial_softmax, FeatureMap};
use neuroattn::encoder::{encoder_forward, EncoderModel};
use neuroattn::evalmetrics::{benjamini_hochberg, correlation_p_value};
use neuroattn::io::checkpoint::load_model;
use neuroattn::io::{read_tensor, write_tensor, Tensor};
use neuroattn::numerics::{pearson, Grid2D};
use neuroattn::rsa::kendall_tau_a;
use neuroattn::saliency::{metric_auc, FixationSet, PredictionScale, SaliencyPrediction};
use neuroattn::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaStatus {
    Ok = 0,
    InvalidArgument = 1,
    ShapeMismatch = 2,
    Degenerate = 3,
    NonFinite = 4,
    /// Malformed file contents: bad magic, truncation, unknown dtype, parse errors.
    Format = 5,
    Io = 6,
    NullPointer = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

impl From<&Error> for NaStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => NaStatus::InvalidArgument,
            Error::Shape(_) => NaStatus::ShapeMismatch,
            Error::Degenerate(_) => NaStatus::Degenerate,
            Error::NonFinite(_) => NaStatus::NonFinite,
            Error::BadMagic { .. } | Error::TruncatedPayload { .. } | Error::UnknownDtype { .. } | Error::Parse { .. } => {
                NaStatus::Format
            }
            Error::Io { .. } => NaStatus::Io,
        }
    }
}

/// Opaque tensor handle.
pub struct NaTensor(Tensor);

/// Opaque model handle.
pub struct NaModel(EncoderModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(NaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(NaStatus::from(&e), e.to_string())
    }
}

fn fail(status: NaStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NaStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NaStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(NaStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(NaStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| fail(NaStatus::NullPointer, format!("{what} is null")))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(fail(NaStatus::NullPointer, "path is null"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| fail(NaStatus::InvalidArgument, "path is not UTF-8"))?;
    Ok(PathBuf::from(s))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn na_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Reads a tensor file. On success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn na_tensor_read(path: *const c_char, out: *mut *mut NaTensor) -> NaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let t = read_tensor(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(NaTensor(t)));
        Ok(())
    })
}

/// Copies `len` values with the given dims into a new tensor.
///
/// # Safety
/// `dims` must hold `ndim` values, `data` `len` values, and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn na_tensor_new(
    dims: *const usize,
    ndim: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut NaTensor,
) -> NaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let dims = input(dims, ndim, "dims")?.to_vec();
        let data = input(data, len, "data")?.to_vec();
        *out = Box::into_raw(Box::new(NaTensor(Tensor::new(dims, data)?)));
        Ok(())
    })
}

/// # Safety
/// `tensor` must be a live handle and `path` a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn na_tensor_write(tensor: *const NaTensor, path: *const c_char) -> NaStatus {
    guard(|| {
        let t = tensor.as_ref().ok_or_else(|| fail(NaStatus::NullPointer, "tensor is null"))?;
        write_tensor(path_arg(path)?, &t.0)?;
        Ok(())
    })
}

/// Number of dimensions; 0 for a null handle.
///
/// # Safety
/// `tensor` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn na_tensor_ndim(tensor: *const NaTensor) -> usize {
    tensor.as_ref().map_or(0, |t| t.0.dims().len())
}

/// Number of elements; 0 for a null handle.
///
/// # Safety
/// `tensor` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn na_tensor_len(tensor: *const NaTensor) -> usize {
    tensor.as_ref().map_or(0, |t| t.0.len())
}

/// Copies the dims into `out` (capacity `cap`).
///
/// # Safety
/// `tensor` must be a live handle and `out` hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn na_tensor_dims(tensor: *const NaTensor, out: *mut usize, cap: usize) -> NaStatus {
    guard(|| {
        let t = tensor.as_ref().ok_or_else(|| fail(NaStatus::NullPointer, "tensor is null"))?;
        let dims = t.0.dims();
        if cap < dims.len() {
            return Err(fail(NaStatus::BufferTooSmall, format!("need {} dims, buffer holds {cap}", dims.len())));
        }
        output(out, dims.len(), "out")?.copy_from_slice(dims);
        Ok(())
    })
}

/// Borrowed pointer to the row-major values, valid while the handle lives.
///
/// # Safety
/// `tensor` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn na_tensor_data(tensor: *const NaTensor) -> *const f64 {
    tensor.as_ref().map_or(ptr::null(), |t| t.0.data().as_ptr())
}

/// # Safety
/// `tensor` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn na_tensor_free(tensor: *mut NaTensor) {
    if !tensor.is_null() {
        drop(Box::from_raw(tensor));
    }
}

/// Loads a checkpoint directory written by `train`.
///
/// # Safety
/// `dir` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn na_model_load(dir: *const c_char, out: *mut *mut NaModel) -> NaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let m = load_model(path_arg(dir)?)?;
        *out = Box::into_raw(Box::new(NaModel(m)));
        Ok(())
    })
}

/// Voxel count of the model; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn na_model_voxels(model: *const NaModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.voxels())
}

/// Predicts one frame from an H×W×C feature tensor into `out` (capacity
/// `cap` ≥ voxels), in response units. Gaze models need fixations and are
/// rejected here.
///
/// # Safety
/// `model` and `features` must be live handles and `out` hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn na_model_predict(
    model: *const NaModel,
    features: *const NaTensor,
    out: *mut f64,
    cap: usize,
) -> NaStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| fail(NaStatus::NullPointer, "model is null"))?.0;
        let t = &features.as_ref().ok_or_else(|| fail(NaStatus::NullPointer, "features is null"))?.0;
        let [h, w, c] = *t.dims() else {
            return Err(fail(NaStatus::ShapeMismatch, format!("features must be HxWxC, got dims {:?}", t.dims())));
        };
        if cap < m.voxels() {
            return Err(fail(NaStatus::BufferTooSmall, format!("need {} values, buffer holds {cap}", m.voxels())));
        }
        let f = FeatureMap::new(0, h, w, c, t.data().to_vec())?;
        let frame_map = m.frame_attention(0, None)?;
        let (z, _) = encoder_forward(m, &f, frame_map.as_ref())?;
        output(out, z.len(), "out")?.copy_from_slice(&m.denormalize(&z));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn na_model_free(model: *mut NaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Pearson correlation of two length-`n` vectors.
///
/// # Safety
/// `x` and `y` must hold `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn na_pearson(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> NaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (x, y) = (input(x, n, "x")?, input(y, n, "y")?);
        *out = pearson(x, y).ok_or_else(|| fail(NaStatus::Degenerate, "constant or too-short input"))?;
        Ok(())
    })
}

/// Kendall's tau-a of two length-`n` sequences.
///
/// # Safety
/// `x` and `y` must hold `n` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn na_kendall_tau_a(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> NaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = kendall_tau_a(input(x, n, "x")?, input(y, n, "y")?)?;
        Ok(())
    })
}

/// Softmax over an `height`×`width` row-major grid, written to `out`.
///
/// # Safety
/// `saliency` and `out` must each hold `height * width` values.
#[no_mangle]
pub unsafe extern "C" fn na_spatial_softmax(saliency: *const f64, height: usize, width: usize, out: *mut f64) -> NaStatus {
    guard(|| {
        let n = height.checked_mul(width).ok_or_else(|| fail(NaStatus::InvalidArgument, "grid too large"))?;
        let g = Grid2D::new(height, width, input(saliency, n, "saliency")?.to_vec())?;
        let a = spatial_softmax(&g)?;
        output(out, n, "out")?.copy_from_slice(a.values().values());
        Ok(())
    })
}

/// ROC area of an arbitrary-scale saliency grid against fixated cells
/// `(rows[i], cols[i])`; repeated cells count with multiplicity.
///
/// # Safety
/// `saliency` must hold `height * width` values, `rows` and `cols` each
/// `count` values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn na_metric_auc(
    saliency: *const f64,
    height: usize,
    width: usize,
    rows: *const usize,
    cols: *const usize,
    count: usize,
    out: *mut f64,
) -> NaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let n = height.checked_mul(width).ok_or_else(|| fail(NaStatus::InvalidArgument, "grid too large"))?;
        let g = Grid2D::new(height, width, input(saliency, n, "saliency")?.to_vec())?;
        let cells: Vec<(usize, usize)> =
            input(rows, count, "rows")?.iter().copied().zip(input(cols, count, "cols")?.iter().copied()).collect();
        let fix = FixationSet::new(0, height, width, &cells)?;
        *out = metric_auc(&SaliencyPrediction::new(0, g, PredictionScale::Arbitrary)?, &fix)?;
        Ok(())
    })
}

/// Two-sided p-value of a Pearson correlation `r` over `n` samples.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn na_correlation_p_value(r: f64, n: usize, out: *mut f64) -> NaStatus {
    guard(|| {
        *out_ptr(out, "out")? = correlation_p_value(r, n)?;
        Ok(())
    })
}

/// Benjamini-Hochberg mask at level `q`. NaN p-values mark degenerate
/// tests: never rejected and not counted. `mask` receives 1 or 0.
///
/// # Safety
/// `p_values` and `mask` must each hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn na_benjamini_hochberg(p_values: *const f64, n: usize, q: f64, mask: *mut u8) -> NaStatus {
    guard(|| {
        let ps: Vec<Option<f64>> = input(p_values, n, "p_values")?.iter().map(|&p| (!p.is_nan()).then_some(p)).collect();
        let m = benjamini_hochberg(&ps, q)?;
        for (dst, keep) in output(mask, n, "mask")?.iter_mut().zip(m) {
            *dst = u8::from(keep);
        }
        Ok(())
    })
}
