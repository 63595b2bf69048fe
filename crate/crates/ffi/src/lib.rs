//! C ABI for the clickbait toolkit.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible call returns a
//! [`CbStatus`]; on failure the message is kept per thread and can be read
//! with [`cb_last_error_message`]. Labels are `0` for clickbait and `1` for
//! non-clickbait.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use clickbait::corpus::{cohens_kappa, load_corpus};
use clickbait::ensemble::ensemble_predict;
use clickbait::eval::mcnemar_from_counts;
use clickbait::features::{extract_features, HeuristicTagger, FEATURE_DIM};
use clickbait::pipeline::Predictor;
use clickbait::{Corpus, Error, Label, NewsArticle};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Checkpoint = 5,
    Numeric = 6,
    InvalidArgument = 7,
    Panic = 8,
}

/// A loaded corpus.
pub struct CbCorpus(Corpus);

/// A loaded model of any family.
pub struct CbModel(Predictor);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: CbStatus, msg: impl Into<String>) -> CbStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> CbStatus {
    let status = match e {
        Error::Io { .. } => CbStatus::Io,
        Error::Parse { .. } => CbStatus::Parse,
        Error::Invalid(_) => CbStatus::InvalidArgument,
        Error::Checkpoint(_) => CbStatus::Checkpoint,
        Error::Tensor(_) | Error::Training(_) => CbStatus::Numeric,
    };
    fail(status, e.to_string())
}

/// Runs `body`, converting panics into [`CbStatus::Panic`].
fn guard(body: impl FnOnce() -> CbStatus) -> CbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(CbStatus::Panic, msg)
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, CbStatus> {
    if p.is_null() {
        return Err(fail(CbStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(CbStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn label_arg(v: c_int, name: &str) -> Result<Label, CbStatus> {
    usize::try_from(v)
        .ok()
        .and_then(Label::from_index)
        .ok_or_else(|| fail(CbStatus::InvalidArgument, format!("{name}: label {v} is not 0 or 1")))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(CbStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Loads a JSON-lines corpus. On success `*out` receives a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cb_corpus_load(path: *const c_char, out: *mut *mut CbCorpus) -> CbStatus {
    guard(|| {
        non_null!(out);
        let path = try_status!(str_arg(path, "path"));
        match load_corpus(Path::new(path)) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(CbCorpus(c)));
                CbStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of articles; 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a handle from [`cb_corpus_load`].
#[no_mangle]
pub unsafe extern "C" fn cb_corpus_len(corpus: *const CbCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// # Safety
/// `corpus` must be null or a handle from [`cb_corpus_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cb_corpus_free(corpus: *mut CbCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Loads a model directory written by `clickbait train`.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cb_model_load(dir: *const c_char, out: *mut *mut CbModel) -> CbStatus {
    guard(|| {
        non_null!(out);
        let dir = try_status!(str_arg(dir, "dir"));
        match Predictor::load(Path::new(dir)) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(CbModel(m)));
                CbStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Classifies one article.
///
/// # Safety
/// `model` must be a live handle, `title`/`content` NUL-terminated strings
/// and `label`/`score` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cb_model_predict(
    model: *const CbModel,
    title: *const c_char,
    content: *const c_char,
    label: *mut c_int,
    score: *mut f64,
) -> CbStatus {
    guard(|| {
        non_null!(model, label, score);
        let title = try_status!(str_arg(title, "title"));
        let content = try_status!(str_arg(content, "content"));
        let article = NewsArticle::new("ffi", title, content, None, "ffi");
        match (*model).0.predict(std::slice::from_ref(&article)) {
            Ok(s) => {
                *label = s[0].label.index() as c_int;
                *score = s[0].clickbait_score;
                CbStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Classifies every article of a corpus into caller-provided arrays of
/// length `len`, which must equal the corpus size.
///
/// # Safety
/// Handles must be live; `labels` and `scores` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn cb_model_predict_corpus(
    model: *const CbModel,
    corpus: *const CbCorpus,
    labels: *mut c_int,
    scores: *mut f64,
    len: usize,
) -> CbStatus {
    guard(|| {
        non_null!(model, corpus, labels, scores);
        let corpus = &(*corpus).0;
        if len != corpus.len() {
            return fail(
                CbStatus::InvalidArgument,
                format!("buffers hold {len} entries for {} articles", corpus.len()),
            );
        }
        match (*model).0.predict(corpus.articles()) {
            Ok(s) => {
                let labels = std::slice::from_raw_parts_mut(labels, len);
                let scores = std::slice::from_raw_parts_mut(scores, len);
                for (i, p) in s.iter().enumerate() {
                    labels[i] = p.label.index() as c_int;
                    scores[i] = p.clickbait_score;
                }
                CbStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `model` must be null or a handle from [`cb_model_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cb_model_free(model: *mut CbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Length of a handcrafted feature vector.
#[no_mangle]
pub extern "C" fn cb_feature_dim() -> usize {
    FEATURE_DIM
}

/// Writes the handcrafted features of one article into `out`, which must
/// hold at least [`cb_feature_dim`] values.
///
/// # Safety
/// `title`/`content` must be NUL-terminated and `out` must hold `len`
/// values.
#[no_mangle]
pub unsafe extern "C" fn cb_features_extract(
    title: *const c_char,
    content: *const c_char,
    out: *mut f64,
    len: usize,
) -> CbStatus {
    guard(|| {
        non_null!(out);
        let title = try_status!(str_arg(title, "title"));
        let content = try_status!(str_arg(content, "content"));
        if len < FEATURE_DIM {
            return fail(
                CbStatus::InvalidArgument,
                format!("buffer of {len} values; need {FEATURE_DIM}"),
            );
        }
        let article = NewsArticle::new("ffi", title, content, None, "ffi");
        match extract_features(&article, &HeuristicTagger) {
            Ok(v) => {
                std::slice::from_raw_parts_mut(out, FEATURE_DIM).copy_from_slice(&v);
                CbStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// McNemar's test with continuity correction from the discordant counts.
///
/// # Safety
/// `statistic` and `p_value` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cb_eval_mcnemar(b: usize, c: usize, statistic: *mut f64, p_value: *mut f64) -> CbStatus {
    guard(|| {
        non_null!(statistic, p_value);
        let m = mcnemar_from_counts(b, c);
        *statistic = m.statistic;
        *p_value = m.p_value;
        CbStatus::Ok
    })
}

/// Cohen's kappa between two label arrays of length `n`.
///
/// # Safety
/// `a` and `b` must hold `n` labels; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cb_cohens_kappa(a: *const c_int, b: *const c_int, n: usize, out: *mut f64) -> CbStatus {
    guard(|| {
        non_null!(a, b, out);
        let conv = |p: *const c_int, name: &str| -> Result<Vec<Label>, CbStatus> {
            std::slice::from_raw_parts(p, n)
                .iter()
                .map(|&v| label_arg(v, name))
                .collect()
        };
        let la = try_status!(conv(a, "a"));
        let lb = try_status!(conv(b, "b"));
        match cohens_kappa(&la, &lb) {
            Ok(k) => {
                *out = k;
                CbStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Weighted soft vote over `n` clickbait scores.
///
/// # Safety
/// `scores` and `weights` must hold `n` values; `label` and `combined`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn cb_ensemble_predict(
    scores: *const f64,
    weights: *const f64,
    n: usize,
    threshold: f64,
    label: *mut c_int,
    combined: *mut f64,
) -> CbStatus {
    guard(|| {
        non_null!(scores, weights, label, combined);
        let s = std::slice::from_raw_parts(scores, n);
        let w = std::slice::from_raw_parts(weights, n);
        match ensemble_predict(s, w, threshold) {
            Ok((l, c)) => {
                *label = l.index() as c_int;
                *combined = c;
                CbStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated) and returns the full message length plus one. Returns 0
/// when no error is recorded.
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cb_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}
