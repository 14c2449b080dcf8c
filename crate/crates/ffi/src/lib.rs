//! C ABI over the hyperim library.
//!
//! Every entry point returns a [`HyperimStatus`]. On failure the message is
//! kept per thread and can be read with [`hyperim_last_error`]. Panics never
//! cross the boundary; they surface as [`HyperimStatus::Panic`].
//!
//! Ball functions take raw coordinate arrays of length `dim`. Input points
//! are projected into the ball first, so slightly out-of-range values from
//! foreign code are tolerated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use hyperim::ball::{BallPoint, TangentVector};
use hyperim::eval::rank_top_k;
use hyperim::model::{self, checkpoint, HyperIMParams};
use hyperim::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Checkpoint = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A loaded classifier. Create with [`hyperim_model_load`], release with
/// [`hyperim_model_free`].
pub struct HyperimModel {
    params: HyperIMParams,
    label_names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(HyperimStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io(_) => HyperimStatus::Io,
            Error::Parse { .. } => HyperimStatus::Parse,
            Error::Checkpoint(_) => HyperimStatus::Checkpoint,
            _ => HyperimStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(HyperimStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> Failure {
    Failure(HyperimStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HyperimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            HyperimStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            HyperimStatus::Panic
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn point(p: *const f64, dim: usize, what: &str) -> Result<BallPoint, Failure> {
    Ok(BallPoint::project(slice(p, dim, what)?)?)
}

unsafe fn model_ref<'a>(m: *const HyperimModel) -> Result<&'a HyperimModel, Failure> {
    m.as_ref().ok_or_else(|| null("model"))
}

/// Message of the last failed call on this thread, or null after a
/// successful one. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn hyperim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Load a checkpoint written by `hyperim train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hyperim_model_load(path: *const c_char, out: *mut *mut HyperimModel) -> HyperimStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = std::ptr::null_mut();
        let path = c_str(path, "path")?;
        let params = checkpoint::load(Path::new(path))?;
        let label_names = params
            .labels
            .words()
            .iter()
            .map(|w| CString::new(w.as_str()).map_err(|_| invalid("label name contains NUL")))
            .collect::<Result<_, _>>()?;
        *out = Box::into_raw(Box::new(HyperimModel { params, label_names }));
        Ok(())
    })
}

/// Release a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`hyperim_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hyperim_model_free(model: *mut HyperimModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of labels the model scores.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hyperim_model_num_labels(model: *const HyperimModel, out: *mut usize) -> HyperimStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.params.num_labels();
        Ok(())
    })
}

/// Name of label `index`. The string is owned by the model.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hyperim_model_label_name(
    model: *const HyperimModel,
    index: usize,
    out: *mut *const c_char,
) -> HyperimStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let name = m
            .label_names
            .get(index)
            .ok_or_else(|| invalid(format!("label index {index} out of range 0..{}", m.label_names.len())))?;
        *out = name.as_ptr();
        Ok(())
    })
}

fn probabilities(m: &HyperimModel, text: &str) -> Vec<f64> {
    let p = &m.params;
    let tokens: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    let ids = hyperim::cli::ingest::encode_tokens(&tokens, &p.vocab, p.config.seq_len);
    model::forward(&ids, p)
}

/// Probability of every label for a whitespace-tokenized document.
/// `probs` must hold `len` values with `len >= num_labels`.
///
/// # Safety
/// `model` must be a live handle, `text` NUL-terminated, `probs` writable
/// for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hyperim_model_scores(
    model: *const HyperimModel,
    text: *const c_char,
    probs: *mut f64,
    len: usize,
) -> HyperimStatus {
    guard(|| {
        let m = model_ref(model)?;
        let text = c_str(text, "text")?;
        let c = m.params.num_labels();
        if len < c {
            return Err(Failure(
                HyperimStatus::BufferTooSmall,
                format!("need {c} slots, got {len}"),
            ));
        }
        let out = slice_mut(probs, c, "probs")?;
        out.copy_from_slice(&probabilities(m, text));
        Ok(())
    })
}

/// The `k` most probable labels, highest first. Writes `min(k, num_labels)`
/// entries to `indices` and `probs` and stores that count in `written`.
///
/// # Safety
/// `model` must be a live handle, `text` NUL-terminated, `indices` and
/// `probs` writable for `k` elements, `written` writable.
#[no_mangle]
pub unsafe extern "C" fn hyperim_model_predict(
    model: *const HyperimModel,
    text: *const c_char,
    k: usize,
    indices: *mut usize,
    probs: *mut f64,
    written: *mut usize,
) -> HyperimStatus {
    guard(|| {
        let m = model_ref(model)?;
        let text = c_str(text, "text")?;
        let written = written.as_mut().ok_or_else(|| null("written"))?;
        let n = k.min(m.params.num_labels());
        let idx_out = slice_mut(indices, n, "indices")?;
        let p_out = slice_mut(probs, n, "probs")?;
        let p = probabilities(m, text);
        for (j, i) in rank_top_k(&p, n).into_iter().enumerate() {
            idx_out[j] = i;
            p_out[j] = p[i];
        }
        *written = n;
        Ok(())
    })
}

/// Geodesic distance between two points of the `dim`-ball.
///
/// # Safety
/// `u` and `v` must be readable for `dim` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hyperim_ball_distance(
    u: *const f64,
    v: *const f64,
    dim: usize,
    out: *mut f64,
) -> HyperimStatus {
    guard(|| {
        let (u, v) = (point(u, dim, "u")?, point(v, dim, "v")?);
        *out.as_mut().ok_or_else(|| null("out"))? = u.distance(&v);
        Ok(())
    })
}

/// Möbius addition `u ⊕ v`, written to `out`.
///
/// # Safety
/// `u` and `v` must be readable and `out` writable for `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn hyperim_ball_mobius_add(
    u: *const f64,
    v: *const f64,
    dim: usize,
    out: *mut f64,
) -> HyperimStatus {
    guard(|| {
        let r = point(u, dim, "u")?.mobius_add(&point(v, dim, "v")?);
        slice_mut(out, dim, "out")?.copy_from_slice(r.coords());
        Ok(())
    })
}

/// Möbius scalar multiplication `k ⊗ p`.
///
/// # Safety
/// `p` must be readable and `out` writable for `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn hyperim_ball_scalar_mul(k: f64, p: *const f64, dim: usize, out: *mut f64) -> HyperimStatus {
    guard(|| {
        if !k.is_finite() {
            return Err(invalid("scalar must be finite"));
        }
        let r = point(p, dim, "p")?.scalar_mul(k);
        slice_mut(out, dim, "out")?.copy_from_slice(r.coords());
        Ok(())
    })
}

/// Exponential map at `p` of tangent vector `w`.
///
/// # Safety
/// `p` and `w` must be readable and `out` writable for `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn hyperim_ball_exp_map(
    p: *const f64,
    w: *const f64,
    dim: usize,
    out: *mut f64,
) -> HyperimStatus {
    guard(|| {
        let base = point(p, dim, "p")?;
        let w = slice(w, dim, "w")?;
        if w.iter().any(|x| !x.is_finite()) {
            return Err(invalid("tangent vector must be finite"));
        }
        let r = hyperim::ball::exp_map(&base, &TangentVector::new(base.clone(), w.to_vec()));
        slice_mut(out, dim, "out")?.copy_from_slice(r.coords());
        Ok(())
    })
}

/// Logarithmic map at `p` of point `u`, a tangent vector at `p`.
///
/// # Safety
/// `p` and `u` must be readable and `out` writable for `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn hyperim_ball_log_map(
    p: *const f64,
    u: *const f64,
    dim: usize,
    out: *mut f64,
) -> HyperimStatus {
    guard(|| {
        let t = point(p, dim, "p")?.log_map(&point(u, dim, "u")?);
        slice_mut(out, dim, "out")?.copy_from_slice(&t.vec);
        Ok(())
    })
}

/// Project arbitrary finite coordinates into the ball.
///
/// # Safety
/// `x` must be readable and `out` writable for `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn hyperim_ball_project(x: *const f64, dim: usize, out: *mut f64) -> HyperimStatus {
    guard(|| {
        let r = point(x, dim, "x")?;
        slice_mut(out, dim, "out")?.copy_from_slice(r.coords());
        Ok(())
    })
}
