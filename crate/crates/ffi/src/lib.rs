//! C ABI for the corpus-forge toolkit.
//!
//! Every function returns a [`CfStatus`]; results travel through out
//! parameters. On any non-OK status the calling thread's last-error message
//! is updated and can be read with [`cf_last_error_message`]. Heap-allocated
//! results (strings, id arrays, handles) are owned by the caller and must be
//! released with the matching `cf_*_free` function.
//!
//! All functions catch panics at the boundary and report them as
//! [`CfStatus::Panic`] instead of unwinding into foreign frames.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::AssertUnwindSafe;
use std::path::Path;

use corpus_forge::lang::LanguageTable;
use corpus_forge::lid::LidModel;
use corpus_forge::metrics::span_f1_pair;
use corpus_forge::sampling::temperature_plan;
use corpus_forge::script::{native_ratio, to_devanagari};
use corpus_forge::vocab::{tokenize, VocabModel};

/// Result of every C-ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfStatus {
    /// The call succeeded and all out parameters are set.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A file could not be read or written.
    IoError = 3,
    /// The input was structurally valid but semantically rejected.
    InvalidInput = 4,
    /// An internal panic was caught at the boundary.
    Panic = 5,
}

/// Opaque handle to a loaded WordPiece vocabulary.
pub struct CfVocab {
    inner: VocabModel,
}

/// Opaque handle to a loaded language-identification model.
pub struct CfLid {
    inner: LidModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    // Interior NULs cannot survive in a C string; replace rather than fail.
    let sanitized = message.replace('\0', "?");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(err: &corpus_forge::Error) -> CfStatus {
    set_error(&err.to_string());
    match err {
        corpus_forge::Error::Io { .. } => CfStatus::IoError,
        _ => CfStatus::InvalidInput,
    }
}

/// Run a boundary body, converting panics into [`CfStatus::Panic`].
fn guard(body: impl FnOnce() -> CfStatus) -> CfStatus {
    match std::panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            CfStatus::Panic
        }
    }
}

/// Borrow a C string argument as UTF-8, reporting null and encoding errors.
///
/// # Safety
/// `ptr` must be null or point to a NUL-terminated string that stays valid
/// for the duration of the call.
unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, CfStatus> {
    if ptr.is_null() {
        set_error(&format!("{what} must not be null"));
        return Err(CfStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("{what} is not valid UTF-8"));
        CfStatus::InvalidUtf8
    })
}

fn require_out<T>(ptr: *mut T, what: &str) -> Result<(), CfStatus> {
    if ptr.is_null() {
        set_error(&format!("{what} must not be null"));
        return Err(CfStatus::NullArgument);
    }
    Ok(())
}

fn give_string(s: String, out: *mut *mut c_char) -> CfStatus {
    match CString::new(s.replace('\0', "?")) {
        Ok(cs) => {
            // SAFETY: `out` was null-checked by the caller.
            unsafe { *out = cs.into_raw() };
            CfStatus::Ok
        }
        Err(_) => {
            set_error("result could not be encoded as a C string");
            CfStatus::InvalidInput
        }
    }
}

/// Version of the library as a static NUL-terminated string. Never null;
/// must not be freed.
#[no_mangle]
pub extern "C" fn cf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the calling thread's most recent error. Never null;
/// empty when no error has occurred on this thread. The pointer is valid
/// until the next failing `cf_` call on the same thread and must not be
/// freed.
#[no_mangle]
pub extern "C" fn cf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be null or a pointer previously returned through a `cf_` out
/// parameter, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Release an id array returned by [`cf_vocab_tokenize`]. Null is a no-op.
///
/// # Safety
/// `ids` must be null or the exact pointer produced together with `len` by
/// a tokenize call, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_ids_free(ids: *mut u32, len: usize) {
    if !ids.is_null() {
        drop(Box::from_raw(std::ptr::slice_from_raw_parts_mut(ids, len)));
    }
}

// ==== vocabulary ====

/// Load a vocabulary from a one-piece-per-line file into a new handle.
///
/// # Safety
/// `path` must point to a valid NUL-terminated string and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_vocab_load(path: *const c_char, out: *mut *mut CfVocab) -> CfStatus {
    guard(|| {
        if let Err(status) = require_out(out, "out") {
            return status;
        }
        *out = std::ptr::null_mut();
        let path = match read_str(path, "path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        match VocabModel::load(Path::new(path)) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(CfVocab { inner: model }));
                CfStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Release a vocabulary handle. Null is a no-op.
///
/// # Safety
/// `vocab` must be null or a handle from [`cf_vocab_load`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_vocab_free(vocab: *mut CfVocab) {
    if !vocab.is_null() {
        drop(Box::from_raw(vocab));
    }
}

/// Number of pieces in the vocabulary.
///
/// # Safety
/// `vocab` must be a live handle from [`cf_vocab_load`]; `out_len` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cf_vocab_len(vocab: *const CfVocab, out_len: *mut usize) -> CfStatus {
    guard(|| {
        if vocab.is_null() {
            set_error("vocab must not be null");
            return CfStatus::NullArgument;
        }
        if let Err(status) = require_out(out_len, "out_len") {
            return status;
        }
        *out_len = (*vocab).inner.len();
        CfStatus::Ok
    })
}

/// Surface form of one piece id, as a new string released with
/// [`cf_string_free`]. Unknown ids are rejected.
///
/// # Safety
/// `vocab` must be a live handle from [`cf_vocab_load`]; `out_piece` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cf_vocab_piece(
    vocab: *const CfVocab,
    id: u32,
    out_piece: *mut *mut c_char,
) -> CfStatus {
    guard(|| {
        if vocab.is_null() {
            set_error("vocab must not be null");
            return CfStatus::NullArgument;
        }
        if let Err(status) = require_out(out_piece, "out_piece") {
            return status;
        }
        *out_piece = std::ptr::null_mut();
        match (*vocab).inner.piece(id) {
            Some(piece) => give_string(piece.to_string(), out_piece),
            None => {
                set_error(&format!("piece id {id} is out of range"));
                CfStatus::InvalidInput
            }
        }
    })
}

/// Tokenize UTF-8 text into piece ids. The array is released with
/// [`cf_ids_free`] using the returned length. An empty text yields a zero
/// length; the pointer must still be freed.
///
/// # Safety
/// `vocab` must be a live handle from [`cf_vocab_load`]; `text` must point
/// to a NUL-terminated string; `out_ids` and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cf_vocab_tokenize(
    vocab: *const CfVocab,
    text: *const c_char,
    out_ids: *mut *mut u32,
    out_len: *mut usize,
) -> CfStatus {
    guard(|| {
        if vocab.is_null() {
            set_error("vocab must not be null");
            return CfStatus::NullArgument;
        }
        if let Err(status) = require_out(out_ids, "out_ids") {
            return status;
        }
        if let Err(status) = require_out(out_len, "out_len") {
            return status;
        }
        *out_ids = std::ptr::null_mut();
        *out_len = 0;
        let text = match read_str(text, "text") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let ids = tokenize(&(*vocab).inner, text).into_boxed_slice();
        *out_len = ids.len();
        *out_ids = Box::into_raw(ids) as *mut u32;
        CfStatus::Ok
    })
}

// ==== language identification ====

/// Load a language-identification model from disk into a new handle.
///
/// # Safety
/// `path` must point to a valid NUL-terminated string and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cf_lid_load(path: *const c_char, out: *mut *mut CfLid) -> CfStatus {
    guard(|| {
        if let Err(status) = require_out(out, "out") {
            return status;
        }
        *out = std::ptr::null_mut();
        let path = match read_str(path, "path") {
            Ok(p) => p,
            Err(status) => return status,
        };
        match LidModel::load(Path::new(path)) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(CfLid { inner: model }));
                CfStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Release an identification-model handle. Null is a no-op.
///
/// # Safety
/// `lid` must be null or a handle from [`cf_lid_load`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cf_lid_free(lid: *mut CfLid) {
    if !lid.is_null() {
        drop(Box::from_raw(lid));
    }
}

/// Identify the language of UTF-8 text. `out_lang` receives a new string
/// released with [`cf_string_free`]: a language code, or empty when the
/// model saw too few letters or the score margin was inconclusive. When
/// `out_score` is non-null it receives the winning log-probability per gram,
/// or NaN for an undecided prediction.
///
/// # Safety
/// `lid` must be a live handle from [`cf_lid_load`]; `text` must point to a
/// NUL-terminated string; `out_lang` must be writable; `out_score` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn cf_lid_predict(
    lid: *const CfLid,
    text: *const c_char,
    out_lang: *mut *mut c_char,
    out_score: *mut f64,
) -> CfStatus {
    guard(|| {
        if lid.is_null() {
            set_error("lid must not be null");
            return CfStatus::NullArgument;
        }
        if let Err(status) = require_out(out_lang, "out_lang") {
            return status;
        }
        *out_lang = std::ptr::null_mut();
        let text = match read_str(text, "text") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let prediction = (*lid).inner.scorer().predict(text);
        let (lang, score) = match &prediction {
            corpus_forge::lid::Prediction::Identified { lang, score } => {
                (lang.clone(), *score)
            }
            corpus_forge::lid::Prediction::Unknown { .. } => (String::new(), f64::NAN),
        };
        if !out_score.is_null() {
            *out_score = score;
        }
        give_string(lang, out_lang)
    })
}

// ==== sampling ====

/// Temperature-adjusted sampling probabilities for `len` token counts:
/// `p[i] = counts[i]^alpha / sum_j counts[j]^alpha`. `alpha` must be a
/// positive finite number and at least one count must be nonzero.
/// `out_probs` must hold `len` doubles; entries for zero counts are 0.
///
/// # Safety
/// `counts` must point to `len` readable u64 values and `out_probs` to `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cf_temperature_probabilities(
    counts: *const u64,
    len: usize,
    alpha: f64,
    out_probs: *mut f64,
) -> CfStatus {
    guard(|| {
        if counts.is_null() {
            set_error("counts must not be null");
            return CfStatus::NullArgument;
        }
        if let Err(status) = require_out(out_probs, "out_probs") {
            return status;
        }
        if len == 0 {
            set_error("len must be at least 1");
            return CfStatus::InvalidInput;
        }
        let counts = std::slice::from_raw_parts(counts, len);
        // Zero-padded decimal keys sort like indices, so the plan's key
        // order is the input order.
        let keyed: BTreeMap<String, u64> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (format!("{i:020}"), c))
            .collect();
        match temperature_plan(&keyed, alpha) {
            Ok(plan) => {
                for (i, entry) in plan.per_lang.values().enumerate() {
                    *out_probs.add(i) = entry.probability;
                }
                CfStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

// ==== script utilities ====

/// Share of letters in `text` written in the native script of language
/// `lang` (a code from the 24-language table). `out_ratio` receives a value
/// in [0, 1]; when `out_letters` is non-null it receives the number of
/// letters inspected (0 means the ratio is vacuous).
///
/// # Safety
/// `text` and `lang` must point to NUL-terminated strings; `out_ratio` must
/// be writable; `out_letters` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cf_native_ratio(
    text: *const c_char,
    lang: *const c_char,
    out_ratio: *mut f64,
    out_letters: *mut u64,
) -> CfStatus {
    guard(|| {
        if let Err(status) = require_out(out_ratio, "out_ratio") {
            return status;
        }
        let text = match read_str(text, "text") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let lang = match read_str(lang, "lang") {
            Ok(l) => l,
            Err(status) => return status,
        };
        let language = match LanguageTable::require(lang) {
            Ok(l) => l,
            Err(err) => return fail(&err),
        };
        let ratio = native_ratio(text, language.script);
        *out_ratio = ratio.ratio;
        if !out_letters.is_null() {
            *out_letters = ratio.total_letters;
        }
        CfStatus::Ok
    })
}

/// Transliterate text from the native script of `lang` into Devanagari by
/// aligned code-point offset. `out_text` receives a new string released
/// with [`cf_string_free`]; when `out_converted` is non-null it receives
/// the number of code points that were mapped. Languages whose script has
/// no Devanagari-aligned block are rejected.
///
/// # Safety
/// `text` and `lang` must point to NUL-terminated strings; `out_text` must
/// be writable; `out_converted` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cf_to_devanagari(
    text: *const c_char,
    lang: *const c_char,
    out_text: *mut *mut c_char,
    out_converted: *mut u64,
) -> CfStatus {
    guard(|| {
        if let Err(status) = require_out(out_text, "out_text") {
            return status;
        }
        *out_text = std::ptr::null_mut();
        let text = match read_str(text, "text") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let lang = match read_str(lang, "lang") {
            Ok(l) => l,
            Err(status) => return status,
        };
        let language = match LanguageTable::require(lang) {
            Ok(l) => l,
            Err(err) => return fail(&err),
        };
        match to_devanagari(text, language.script) {
            Ok((converted, report)) => {
                if !out_converted.is_null() {
                    *out_converted = report.converted;
                }
                give_string(converted, out_text)
            }
            Err(err) => fail(&err),
        }
    })
}

// ==== metrics ====

/// Token-bag F1 between a gold answer and a predicted answer, in [0, 1].
/// With `normalize` set, both sides are lowercased, stripped of punctuation,
/// and whitespace-collapsed before comparison.
///
/// # Safety
/// `gold` and `pred` must point to NUL-terminated strings; `out_f1` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cf_span_f1(
    gold: *const c_char,
    pred: *const c_char,
    normalize: bool,
    out_f1: *mut f64,
) -> CfStatus {
    guard(|| {
        if let Err(status) = require_out(out_f1, "out_f1") {
            return status;
        }
        let gold = match read_str(gold, "gold") {
            Ok(g) => g,
            Err(status) => return status,
        };
        let pred = match read_str(pred, "pred") {
            Ok(p) => p,
            Err(status) => return status,
        };
        *out_f1 = span_f1_pair(gold, pred, normalize);
        CfStatus::Ok
    })
}
