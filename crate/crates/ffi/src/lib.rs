//! C ABI over `cfaudit`.
//!
//! Objects are opaque handles created by `cfa_*_new`/`cfa_*_load` style
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`CfaStatus`]; on failure [`cfa_last_error`] describes the
//! problem. Strings returned through `char **` out-parameters are owned by
//! the caller and must be released with [`cfa_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cfaudit::audit::{accuracy_drop, cfi, flip_rate, Generator};
use cfaudit::cfgen::{generate, GenConfig, GenMode};
use cfaudit::corpus::{parse_jsonl, Document, IngestOptions};
use cfaudit::lexicon::Lexicon;
use cfaudit::models::{train, Classifier, ModelKind, ModelSpec, TrainedModel};
use cfaudit::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    Corpus = 6,
    Training = 7,
    Model = 8,
    Panic = 99,
}

/// Opaque sensitive-word lexicon.
pub struct CfaLexicon(Lexicon);

/// Opaque trained classifier.
pub struct CfaModel(TrainedModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> CfaStatus {
    match err {
        Error::Io { .. } => CfaStatus::Io,
        Error::Parse { .. }
        | Error::Conllu { .. }
        | Error::Alignment(_)
        | Error::Json(_)
        | Error::Csv(_)
        | Error::UnknownAttribute(_)
        | Error::DuplicateEntry { .. }
        | Error::SelfPerturbation(_)
        | Error::EmptyPerturbations(_) => CfaStatus::Parse,
        Error::Corpus(_) => CfaStatus::Corpus,
        Error::Training(_) => CfaStatus::Training,
        Error::Model(_) | Error::Explain(_) => CfaStatus::Model,
        Error::Config(_) => CfaStatus::InvalidArgument,
    }
}

struct Failure(CfaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(CfaStatus::Parse, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CfaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CfaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CfaStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(CfaStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CfaStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(CfaStatus::NullPointer, format!("`{name}` is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(CfaStatus::NullPointer, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(CfaStatus::InvalidArgument, "output contains a NUL byte".into()))
}

fn mode_of(multi: bool) -> GenMode {
    if multi {
        GenMode::Multi
    } else {
        GenMode::Single
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cfa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cfa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn cfa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a handle to the shipped lexicon.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cfa_lexicon_builtin(out: *mut *mut CfaLexicon) -> CfaStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(CfaLexicon(Lexicon::builtin())));
        Ok(())
    })
}

/// Loads a lexicon from a TSV file or a directory of TSV files.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cfa_lexicon_load(path: *const c_char, out: *mut *mut CfaLexicon) -> CfaStatus {
    guard(|| {
        let path = std::path::Path::new(str_arg(path, "path")?);
        out_arg(out, "out")?;
        let lexicon = if path.is_dir() {
            Lexicon::load_dir(path)?
        } else {
            cfaudit::lexicon::load_lexicon(path)?
        };
        *out = Box::into_raw(Box::new(CfaLexicon(lexicon)));
        Ok(())
    })
}

/// Number of (attribute, surface) entries.
///
/// # Safety
/// `lexicon` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cfa_lexicon_len(lexicon: *const CfaLexicon, out: *mut usize) -> CfaStatus {
    guard(|| {
        let lexicon = ref_arg(lexicon, "lexicon")?;
        out_arg(out, "out")?;
        *out = lexicon.0.len();
        Ok(())
    })
}

/// # Safety
/// `lexicon` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cfa_lexicon_free(lexicon: *mut CfaLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

/// Counterfactuals of one document as a JSON array of
/// `{parent_id, text, flipped_attributes, substitutions}` objects.
///
/// # Safety
/// Pointers must be valid; `doc_id` and `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cfa_generate(
    lexicon: *const CfaLexicon,
    doc_id: *const c_char,
    text: *const c_char,
    seed: u64,
    multi: bool,
    out_json: *mut *mut c_char,
) -> CfaStatus {
    guard(|| {
        let lexicon = ref_arg(lexicon, "lexicon")?;
        let doc = Document::new(str_arg(doc_id, "doc_id")?, str_arg(text, "text")?, None);
        out_arg(out_json, "out_json")?;
        let config = GenConfig {
            seed,
            mode: mode_of(multi),
            ..Default::default()
        };
        let cfs = generate(&doc, &lexicon.0, &config, None)?;
        let records: Vec<serde_json::Value> = cfs
            .iter()
            .map(|cf| {
                serde_json::json!({
                    "parent_id": cf.parent_id,
                    "text": cf.text,
                    "flipped_attributes": cf.flipped_attributes,
                    "substitutions": cf.substitutions,
                })
            })
            .collect();
        *out_json = into_c_string(serde_json::to_string(&records)?)?;
        Ok(())
    })
}

/// Loads a model saved by `cfaudit train`.
///
/// # Safety
/// `path` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cfa_model_load(path: *const c_char, out: *mut *mut CfaModel) -> CfaStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(CfaModel(TrainedModel::load(path)?)));
        Ok(())
    })
}

/// Trains a model on a JSONL corpus (`{"id", "text", "label"}` per line).
/// `kind` is `logreg`, `gnb` or `mlp`.
///
/// # Safety
/// Strings must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cfa_model_train(
    corpus_jsonl: *const c_char,
    kind: *const c_char,
    seed: u64,
    out: *mut *mut CfaModel,
) -> CfaStatus {
    guard(|| {
        let corpus = str_arg(corpus_jsonl, "corpus_jsonl")?;
        let kind = match str_arg(kind, "kind")? {
            "logreg" => ModelKind::Logreg,
            "gnb" | "gaussian_nb" => ModelKind::GaussianNb,
            "mlp" => ModelKind::Mlp,
            other => {
                return Err(Failure(CfaStatus::InvalidArgument, format!("unknown model kind `{other}`")))
            }
        };
        out_arg(out, "out")?;
        let docs = parse_jsonl(corpus, &IngestOptions::default())?;
        let model = train(&docs, &ModelSpec::new(kind), seed)?;
        *out = Box::into_raw(Box::new(CfaModel(model)));
        Ok(())
    })
}

/// Serializes a model to its JSON persistence format.
///
/// # Safety
/// `model` must be live and `out_json` valid.
#[no_mangle]
pub unsafe extern "C" fn cfa_model_to_json(model: *const CfaModel, out_json: *mut *mut c_char) -> CfaStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        out_arg(out_json, "out_json")?;
        *out_json = into_c_string(model.0.to_json()?)?;
        Ok(())
    })
}

/// P(label = 1) for `text`.
///
/// # Safety
/// `model` must be live, `text` NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cfa_model_predict_proba(
    model: *const CfaModel,
    text: *const c_char,
    out: *mut f64,
) -> CfaStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let text = str_arg(text, "text")?;
        out_arg(out, "out")?;
        *out = model.0.predict_proba(text);
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cfa_model_free(model: *mut CfaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Flip-rate (percent) of `model` over a JSONL corpus; labels are optional.
///
/// # Safety
/// Handles must be live, `corpus_jsonl` NUL-terminated and `out_pct` valid.
#[no_mangle]
pub unsafe extern "C" fn cfa_flip_rate(
    model: *const CfaModel,
    lexicon: *const CfaLexicon,
    corpus_jsonl: *const c_char,
    seed: u64,
    multi: bool,
    out_pct: *mut f64,
) -> CfaStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let lexicon = ref_arg(lexicon, "lexicon")?;
        let corpus = str_arg(corpus_jsonl, "corpus_jsonl")?;
        out_arg(out_pct, "out_pct")?;
        let opts = IngestOptions {
            require_label: false,
            ..Default::default()
        };
        let docs = parse_jsonl(corpus, &opts)?;
        let config = GenConfig {
            seed,
            mode: mode_of(multi),
            ..Default::default()
        };
        *out_pct = flip_rate(&model.0, &docs, &Generator::new(&lexicon.0, &config))?.flip_rate_pct;
        Ok(())
    })
}

/// Counterfactual Fairness Increment, `100 (pre - post) / pre`; 0 when
/// `fr_pre` is 0.
#[no_mangle]
pub extern "C" fn cfa_cfi(fr_pre: f64, fr_post: f64) -> f64 {
    cfi(fr_pre, fr_post)
}

/// Accuracy drop in percentage points.
#[no_mangle]
pub extern "C" fn cfa_accuracy_drop(acc_pre: f64, acc_post: f64) -> f64 {
    accuracy_drop(acc_pre, acc_post)
}
