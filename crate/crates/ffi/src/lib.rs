//! C ABI for `dtmad`.
//!
//! Conventions:
//!
//! - Every fallible function returns a [`DtmadStatus`]; results go through
//!   out-pointers that are written only on success.
//! - Datasets and indexes are opaque handles created by `*_new` and released
//!   by the matching `*_free` (which accepts null).
//! - After a failure, `dtmad_last_error_message` describes it. The string
//!   belongs to the calling thread and stays valid until its next call into
//!   this library.
//! - Orders `q` are doubles; pass `INFINITY` for `q = ∞`.
//! - Panics never cross the boundary; they surface as `DTMAD_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use dtmad::detectors::{dtm_score, score_with_index, DetectorConfig, Method, NeighborCount};
use dtmad::eval::{average_precision, roc_auc};
use dtmad::{theory, Dataset, Error, Label, NeighborIndex, Order};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtmadStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    KOutOfRange = 4,
    SingleClass = 5,
    Unsupported = 6,
    Internal = 7,
    Panic = 8,
}

/// Detector selector for [`dtmad_score`].
#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtmadMethod {
    Knn = 0,
    Kthnn = 1,
    Dtm = 2,
    Dtmf = 3,
    Lof = 4,
}

/// Opaque point set.
pub struct DtmadDataset(Dataset);

/// Opaque nearest-neighbor index; owns a copy of its points.
pub struct DtmadIndex(NeighborIndex);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NUL bytes removed"));
}

fn status_of(e: &Error) -> DtmadStatus {
    match e {
        Error::DimensionMismatch { .. } => DtmadStatus::DimensionMismatch,
        Error::KOutOfRange { .. } => DtmadStatus::KOutOfRange,
        Error::SingleClass { .. } | Error::LabelsRequired => DtmadStatus::SingleClass,
        Error::Unsupported(_) => DtmadStatus::Unsupported,
        Error::Internal(_) | Error::Quadrature(_) => DtmadStatus::Internal,
        _ => DtmadStatus::InvalidArgument,
    }
}

struct Fail(DtmadStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(DtmadStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DtmadStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DtmadStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside dtmad");
            DtmadStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn slice_out<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn write_out<T>(ptr: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if ptr.is_null() {
        return Err(null(what));
    }
    ptr.write(value);
    Ok(())
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Fail> {
    ptr.as_ref().ok_or_else(|| null(what))
}

fn order(q: f64) -> Result<Order, Fail> {
    Ok(Order::new(q)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dtmad_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the calling thread's most recent failure.
#[no_mangle]
pub extern "C" fn dtmad_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies `n·d` row-major coordinates into a new dataset.
#[no_mangle]
pub unsafe extern "C" fn dtmad_dataset_new(
    values: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut DtmadDataset,
) -> DtmadStatus {
    guard(|| {
        let len = n
            .checked_mul(d)
            .ok_or_else(|| Fail(DtmadStatus::InvalidArgument, "n·d overflows".into()))?;
        let values = slice_in(values, len, "values")?;
        if d == 0 {
            return Err(Fail(DtmadStatus::InvalidArgument, "d must be ≥ 1".into()));
        }
        let ds = Dataset::new(values.to_vec(), d)?;
        write_out(out, Box::into_raw(Box::new(DtmadDataset(ds))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn dtmad_dataset_free(dataset: *mut DtmadDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of points; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn dtmad_dataset_n(dataset: *const DtmadDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.n())
}

/// Dimension; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn dtmad_dataset_d(dataset: *const DtmadDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.d())
}

#[no_mangle]
pub unsafe extern "C" fn dtmad_index_new(dataset: *const DtmadDataset, out: *mut *mut DtmadIndex) -> DtmadStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        let index = NeighborIndex::build(&ds.0);
        write_out(out, Box::into_raw(Box::new(DtmadIndex(index))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn dtmad_index_free(index: *mut DtmadIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// The `k` nearest sample points of `x` (length `d`), closest first, ties
/// broken by lower index. Writes `k` entries to each output array.
#[no_mangle]
pub unsafe extern "C" fn dtmad_index_knn(
    index: *const DtmadIndex,
    x: *const f64,
    d: usize,
    k: usize,
    out_indices: *mut usize,
    out_distances: *mut f64,
) -> DtmadStatus {
    guard(|| {
        let index = handle(index, "index")?;
        let x = slice_in(x, d, "x")?;
        let list = index.0.knn_query(x, k)?;
        slice_out(out_indices, k, "out_indices")?.copy_from_slice(&list.indices);
        slice_out(out_distances, k, "out_distances")?.copy_from_slice(&list.distances);
        Ok(())
    })
}

/// Distance from `x` to its `k`-th nearest sample point.
#[no_mangle]
pub unsafe extern "C" fn dtmad_index_knn_radius(
    index: *const DtmadIndex,
    x: *const f64,
    d: usize,
    k: usize,
    out: *mut f64,
) -> DtmadStatus {
    guard(|| {
        let index = handle(index, "index")?;
        let x = slice_in(x, d, "x")?;
        let r = index.0.knn_radius(x, k)?;
        write_out(out, r, "out")
    })
}

/// Empirical DTM of order `q` at an arbitrary point `x`.
#[no_mangle]
pub unsafe extern "C" fn dtmad_dtm(
    index: *const DtmadIndex,
    x: *const f64,
    d: usize,
    k: usize,
    q: f64,
    out: *mut f64,
) -> DtmadStatus {
    guard(|| {
        let index = handle(index, "index")?;
        let x = slice_in(x, d, "x")?;
        let v = dtm_score(&index.0, x, k, order(q)?)?;
        write_out(out, v, "out")
    })
}

/// Scores every indexed point. `method` is a [`DtmadMethod`] value; `k = 0`
/// selects the default `⌈0.03·n⌉`; `q` is read by `DTMAD_METHOD_DTM` only.
/// `out_scores` receives `n` values; `out_k` (nullable) the neighbor count.
#[no_mangle]
pub unsafe extern "C" fn dtmad_score(
    index: *const DtmadIndex,
    method: u32,
    k: usize,
    q: f64,
    out_scores: *mut f64,
    out_k: *mut usize,
) -> DtmadStatus {
    guard(|| {
        let index = handle(index, "index")?;
        let method = match method {
            0 => Method::Knn,
            1 => Method::Kthnn,
            2 => Method::Dtm,
            3 => Method::Dtmf,
            4 => Method::Lof,
            other => return Err(Fail(DtmadStatus::InvalidArgument, format!("unknown method {other}"))),
        };
        let mut cfg = DetectorConfig::new(method);
        if method == Method::Dtm {
            cfg.q = order(q)?;
        }
        if k > 0 {
            cfg.neighbors = NeighborCount::K(k);
        }
        let report = score_with_index(&index.0, &cfg)?;
        slice_out(out_scores, report.n, "out_scores")?.copy_from_slice(&report.scores);
        if !out_k.is_null() {
            out_k.write(report.k);
        }
        Ok(())
    })
}

unsafe fn labeled(scores: *const f64, labels: *const u8, n: usize) -> Result<(&'static [f64], Vec<Label>), Fail> {
    let scores = slice_in(scores, n, "scores")?;
    let labels = slice_in(labels, n, "labels")?
        .iter()
        .map(|&l| match l {
            0 => Ok(Label::Normal),
            1 => Ok(Label::Anomaly),
            other => Err(Fail(DtmadStatus::InvalidArgument, format!("label {other} is not 0 or 1"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((scores, labels))
}

/// ROC-AUC of `scores` against 0/1 `labels` (1 = anomaly).
#[no_mangle]
pub unsafe extern "C" fn dtmad_roc_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> DtmadStatus {
    guard(|| {
        let (s, l) = labeled(scores, labels, n)?;
        write_out(out, roc_auc(s, &l)?, "out")
    })
}

/// Average precision of `scores` against 0/1 `labels` (1 = anomaly).
#[no_mangle]
pub unsafe extern "C" fn dtmad_average_precision(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> DtmadStatus {
    guard(|| {
        let (s, l) = labeled(scores, labels, n)?;
        write_out(out, average_precision(s, &l)?, "out")
    })
}

/// `β_n` of the uniform radius bound.
#[no_mangle]
pub unsafe extern "C" fn dtmad_beta_n(n: usize, d: usize, delta: f64, out: *mut f64) -> DtmadStatus {
    guard(|| write_out(out, theory::beta_n(n, d, delta)?, "out"))
}

/// `α_n` of the sample-point radius bound.
#[no_mangle]
pub unsafe extern "C" fn dtmad_alpha_n(n: usize, delta: f64, out: *mut f64) -> DtmadStatus {
    guard(|| write_out(out, theory::alpha_n(n, delta)?, "out"))
}

/// Uniform deviation bound on the p-NN radius.
#[no_mangle]
pub unsafe extern "C" fn dtmad_radius_bound(n: usize, d: usize, delta: f64, p: f64, c: f64, out: *mut f64) -> DtmadStatus {
    guard(|| write_out(out, theory::radius_bound(n, d, delta, p, c)?, "out"))
}

/// Deviation bound on the p-NN radius at the sample points.
#[no_mangle]
pub unsafe extern "C" fn dtmad_radius_bound_sample(n: usize, delta: f64, p: f64, c: f64, out: *mut f64) -> DtmadStatus {
    guard(|| write_out(out, theory::radius_bound_sample(n, delta, p, c)?, "out"))
}

/// Uniform deviation bound on the DTM.
#[no_mangle]
pub unsafe extern "C" fn dtmad_dtm_bound(n: usize, d: usize, delta: f64, m: f64, c: f64, out: *mut f64) -> DtmadStatus {
    guard(|| write_out(out, theory::dtm_bound(n, d, delta, m, c)?, "out"))
}

/// Deviation bound on the DTM at the sample points.
#[no_mangle]
pub unsafe extern "C" fn dtmad_dtm_bound_sample(n: usize, delta: f64, m: f64, c: f64, out: *mut f64) -> DtmadStatus {
    guard(|| write_out(out, theory::dtm_bound_sample(n, delta, m, c)?, "out"))
}

/// Density level `g₀` required for separation; `q` may be `INFINITY`.
#[no_mangle]
pub unsafe extern "C" fn dtmad_g0_threshold(m: f64, epsilon: f64, eta: f64, h: f64, b: f64, q: f64, out: *mut f64) -> DtmadStatus {
    guard(|| write_out(out, theory::g0_threshold(m, epsilon, eta, h, b, order(q)?)?, "out"))
}

/// Smallest separation at which the whole normal support is safe.
#[no_mangle]
pub unsafe extern "C" fn dtmad_full_support_eta(m: f64, epsilon: f64, a0: f64, b: f64, q: f64, h: f64, out: *mut f64) -> DtmadStatus {
    guard(|| write_out(out, theory::full_support_eta(m, epsilon, a0, b, order(q)?, h)?, "out"))
}
