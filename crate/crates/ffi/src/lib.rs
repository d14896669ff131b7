//! C ABI over the sensematch library.
//!
//! Objects cross the boundary as opaque handles created by `sm_*_load`,
//! `sm_*_build` or `sm_*_new` functions and released by the matching
//! `sm_*_free`. Every fallible function returns an [`SmStatus`]; on failure
//! the message is available from [`sm_last_error`] on the same thread.
//! Strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sensematch::assigner::{assign, AssignPolicy, NovelIdMode, PredictionRecord};
use sensematch::corpus::{load_split, save_predictions, DatasetSplit};
use sensematch::metrics::{adjusted_rand_index, bleu, macro_f1};
use sensematch::pairgen::{build_training_set, save_pairs, PairDataset};
use sensematch::scorer::{encode_pair, mock_overlap_scorer, score_batch, NeuralScorer, Scorer};
use sensematch::{Error, Language};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Serialization = 6,
    InvalidInput = 7,
    UninitializedScorer = 8,
    Training = 9,
    Checkpoint = 10,
    Transport = 11,
    Extraction = 12,
    /// A Rust panic was caught at the boundary.
    Internal = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmLanguage {
    Fi = 0,
    Ru = 1,
    De = 2,
}

impl From<SmLanguage> for Language {
    fn from(l: SmLanguage) -> Self {
        match l {
            SmLanguage::Fi => Language::Fi,
            SmLanguage::Ru => Language::Ru,
            SmLanguage::De => Language::De,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmNovelIdMode {
    PerUsage = 0,
    PerWord = 1,
}

impl From<SmNovelIdMode> for NovelIdMode {
    fn from(m: SmNovelIdMode) -> Self {
        match m {
            SmNovelIdMode::PerUsage => NovelIdMode::PerUsage,
            SmNovelIdMode::PerWord => NovelIdMode::PerWord,
        }
    }
}

/// A loaded and validated data split.
pub struct SmSplit(DatasetSplit);

/// A labelled gloss/usage pair dataset.
pub struct SmPairs(PairDataset);

/// A pair scorer backend.
pub struct SmScorer(Scorer);

/// Prediction records of one assignment run.
pub struct SmRecords(Vec<PredictionRecord>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SmStatus {
    match e {
        Error::Io { .. } => SmStatus::Io,
        Error::Parse { .. } => SmStatus::Parse,
        Error::Validation(_) => SmStatus::Validation,
        Error::Serialization(_) => SmStatus::Serialization,
        Error::InvalidInput(_) => SmStatus::InvalidInput,
        Error::UninitializedScorer => SmStatus::UninitializedScorer,
        Error::Training(_) => SmStatus::Training,
        Error::Checkpoint { .. } => SmStatus::Checkpoint,
        Error::Transport { .. } => SmStatus::Transport,
        Error::Extraction { .. } => SmStatus::Extraction,
    }
}

struct Fail(SmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Run `f`, translating errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SmStatus::Ok
        }
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SmStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(SmStatus::NullArgument, format!("{name} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SmStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(SmStatus::NullArgument, format!("{name} is NULL")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(SmStatus::NullArgument, format!("{name} is NULL")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(SmStatus::NullArgument, format!("{name} is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn sm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Load and validate a split file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_split_load(
    path: *const c_char,
    language: SmLanguage,
    out: *mut *mut SmSplit,
) -> SmStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let split = load_split(str_arg(path, "path")?, language.into())?;
        *out = Box::into_raw(Box::new(SmSplit(split)));
        Ok(())
    })
}

/// Number of usages in the split.
///
/// # Safety
/// `split` must be a live handle or NULL (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn sm_split_usage_count(split: *const SmSplit) -> usize {
    split.as_ref().map_or(0, |s| s.0.usages().len())
}

/// # Safety
/// `split` must be NULL or a handle from [`sm_split_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sm_split_free(split: *mut SmSplit) {
    if !split.is_null() {
        drop(Box::from_raw(split));
    }
}

/// Build the shuffled positive and hard-negative pairs of a split.
///
/// # Safety
/// `split` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_pairs_build(
    split: *const SmSplit,
    seed: u64,
    out: *mut *mut SmPairs,
) -> SmStatus {
    guard(|| {
        let split = ref_arg(split, "split")?;
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(SmPairs(build_training_set(&split.0, seed))));
        Ok(())
    })
}

/// Number of pairs, and optionally the number of positives.
///
/// # Safety
/// `pairs` must be a live handle or NULL; `positives` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn sm_pairs_len(pairs: *const SmPairs, positives: *mut usize) -> usize {
    let Some(p) = pairs.as_ref() else { return 0 };
    if let Some(out) = positives.as_mut() {
        *out = p.0.positives();
    }
    p.0.len()
}

/// Write the pairs as a TSV file.
///
/// # Safety
/// `pairs` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sm_pairs_save(pairs: *const SmPairs, path: *const c_char) -> SmStatus {
    guard(|| {
        let pairs = ref_arg(pairs, "pairs")?;
        save_pairs(&pairs.0, str_arg(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `pairs` must be NULL or a handle from [`sm_pairs_build`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sm_pairs_free(pairs: *mut SmPairs) {
    if !pairs.is_null() {
        drop(Box::from_raw(pairs));
    }
}

/// Lexical-overlap scorer.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_scorer_new_mock(out: *mut *mut SmScorer) -> SmStatus {
    guard(|| {
        *out_arg(out, "out")? = Box::into_raw(Box::new(SmScorer(mock_overlap_scorer())));
        Ok(())
    })
}

/// Scorer backed by a trained checkpoint directory.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_scorer_load_checkpoint(
    dir: *const c_char,
    out: *mut *mut SmScorer,
) -> SmStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let scorer = NeuralScorer::load(str_arg(dir, "dir")?)?;
        *out = Box::into_raw(Box::new(SmScorer(Scorer::new(scorer))));
        Ok(())
    })
}

/// Match probability of one (usage example, gloss) pair.
///
/// # Safety
/// `scorer` must be a live handle, `example` and `gloss` NUL-terminated
/// strings and `probability` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_scorer_score(
    scorer: *const SmScorer,
    example: *const c_char,
    gloss: *const c_char,
    probability: *mut f64,
) -> SmStatus {
    guard(|| {
        let scorer = ref_arg(scorer, "scorer")?;
        let out = out_arg(probability, "probability")?;
        let input = encode_pair(str_arg(example, "example")?, str_arg(gloss, "gloss")?)?;
        *out = score_batch(&scorer.0, &[input])?[0];
        Ok(())
    })
}

/// # Safety
/// `scorer` must be NULL or a handle from an `sm_scorer_*` constructor not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn sm_scorer_free(scorer: *mut SmScorer) {
    if !scorer.is_null() {
        drop(Box::from_raw(scorer));
    }
}

/// Assign an old sense or a novel ID to every new-period usage.
///
/// # Safety
/// `split` and `scorer` must be live handles and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_assign(
    split: *const SmSplit,
    scorer: *const SmScorer,
    threshold: f64,
    mode: SmNovelIdMode,
    out: *mut *mut SmRecords,
) -> SmStatus {
    guard(|| {
        let split = ref_arg(split, "split")?;
        let scorer = ref_arg(scorer, "scorer")?;
        let out = out_arg(out, "out")?;
        let policy = AssignPolicy::new(threshold, mode.into())?;
        let records = assign(&split.0, &scorer.0, &policy)?;
        *out = Box::into_raw(Box::new(SmRecords(records)));
        Ok(())
    })
}

/// Number of records, and optionally how many are flagged novel.
///
/// # Safety
/// `records` must be a live handle or NULL; `novel` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn sm_records_len(records: *const SmRecords, novel: *mut usize) -> usize {
    let Some(r) = records.as_ref() else { return 0 };
    if let Some(out) = novel.as_mut() {
        *out = r.0.iter().filter(|r| r.is_novel).count();
    }
    r.0.len()
}

/// Write the records as a submission TSV.
///
/// # Safety
/// `records` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sm_records_save(
    records: *const SmRecords,
    path: *const c_char,
) -> SmStatus {
    guard(|| {
        let records = ref_arg(records, "records")?;
        save_predictions(&records.0, str_arg(path, "path")?, false)?;
        Ok(())
    })
}

/// # Safety
/// `records` must be NULL or a handle from [`sm_assign`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sm_records_free(records: *mut SmRecords) {
    if !records.is_null() {
        drop(Box::from_raw(records));
    }
}

/// Adjusted Rand Index of two labelings of `len` items.
///
/// # Safety
/// `gold` and `pred` must point to `len` readable values; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sm_adjusted_rand_index(
    gold: *const u32,
    pred: *const u32,
    len: usize,
    out: *mut f64,
) -> SmStatus {
    guard(|| {
        let gold = slice_arg(gold, len, "gold")?;
        let pred = slice_arg(pred, len, "pred")?;
        *out_arg(out, "out")? = adjusted_rand_index(gold, pred)?;
        Ok(())
    })
}

/// Macro-F1 over the classes present in `gold`.
///
/// # Safety
/// As for [`sm_adjusted_rand_index`].
#[no_mangle]
pub unsafe extern "C" fn sm_macro_f1(
    gold: *const u32,
    pred: *const u32,
    len: usize,
    out: *mut f64,
) -> SmStatus {
    guard(|| {
        let gold = slice_arg(gold, len, "gold")?;
        let pred = slice_arg(pred, len, "pred")?;
        *out_arg(out, "out")? = macro_f1(gold, pred)?;
        Ok(())
    })
}

/// Sentence BLEU of `candidate` against `reference`.
///
/// # Safety
/// `candidate` and `reference` must be NUL-terminated strings and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sm_bleu(
    candidate: *const c_char,
    reference: *const c_char,
    out: *mut f64,
) -> SmStatus {
    guard(|| {
        let c = str_arg(candidate, "candidate")?;
        let r = str_arg(reference, "reference")?;
        *out_arg(out, "out")? = bleu(c, r)?;
        Ok(())
    })
}
