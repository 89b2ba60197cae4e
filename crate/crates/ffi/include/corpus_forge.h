/* C interface to the corpus-forge curation and scoring toolkit. */

#ifndef CORPUS_FORGE_H
#define CORPUS_FORGE_H

/* Generated by cbindgen from crates/ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every C-ABI call.
 */
typedef enum CfStatus {
  /**
   * The call succeeded and all out parameters are set.
   */
  CF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CF_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  CF_STATUS_INVALID_UTF8 = 2,
  /**
   * A file could not be read or written.
   */
  CF_STATUS_IO_ERROR = 3,
  /**
   * The input was structurally valid but semantically rejected.
   */
  CF_STATUS_INVALID_INPUT = 4,
  /**
   * An internal panic was caught at the boundary.
   */
  CF_STATUS_PANIC = 5,
} CfStatus;

/**
 * Opaque handle to a loaded language-identification model.
 */
typedef struct CfLid CfLid;

/**
 * Opaque handle to a loaded WordPiece vocabulary.
 */
typedef struct CfVocab CfVocab;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the library as a static NUL-terminated string. Never null;
 * must not be freed.
 */
const char *cf_version(void);

/**
 * Message describing the calling thread's most recent error. Never null;
 * empty when no error has occurred on this thread. The pointer is valid
 * until the next failing `cf_` call on the same thread and must not be
 * freed.
 */
const char *cf_last_error_message(void);

/**
 * Release a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must be null or a pointer previously returned through a `cf_` out
 * parameter, not yet freed.
 */
void cf_string_free(char *s);

/**
 * Release an id array returned by [`cf_vocab_tokenize`]. Null is a no-op.
 *
 * # Safety
 * `ids` must be null or the exact pointer produced together with `len` by
 * a tokenize call, not yet freed.
 */
void cf_ids_free(uint32_t *ids, size_t len);

/**
 * Load a vocabulary from a one-piece-per-line file into a new handle.
 *
 * # Safety
 * `path` must point to a valid NUL-terminated string and `out` to writable
 * storage for one pointer.
 */
enum CfStatus cf_vocab_load(const char *path, struct CfVocab **out);

/**
 * Release a vocabulary handle. Null is a no-op.
 *
 * # Safety
 * `vocab` must be null or a handle from [`cf_vocab_load`], not yet freed.
 */
void cf_vocab_free(struct CfVocab *vocab);

/**
 * Number of pieces in the vocabulary.
 *
 * # Safety
 * `vocab` must be a live handle from [`cf_vocab_load`]; `out_len` must be
 * writable.
 */
enum CfStatus cf_vocab_len(const struct CfVocab *vocab, size_t *out_len);

/**
 * Surface form of one piece id, as a new string released with
 * [`cf_string_free`]. Unknown ids are rejected.
 *
 * # Safety
 * `vocab` must be a live handle from [`cf_vocab_load`]; `out_piece` must be
 * writable.
 */
enum CfStatus cf_vocab_piece(const struct CfVocab *vocab, uint32_t id, char **out_piece);

/**
 * Tokenize UTF-8 text into piece ids. The array is released with
 * [`cf_ids_free`] using the returned length. An empty text yields a zero
 * length; the pointer must still be freed.
 *
 * # Safety
 * `vocab` must be a live handle from [`cf_vocab_load`]; `text` must point
 * to a NUL-terminated string; `out_ids` and `out_len` must be writable.
 */
enum CfStatus cf_vocab_tokenize(const struct CfVocab *vocab,
                                const char *text,
                                uint32_t **out_ids,
                                size_t *out_len);

/**
 * Load a language-identification model from disk into a new handle.
 *
 * # Safety
 * `path` must point to a valid NUL-terminated string and `out` to writable
 * storage for one pointer.
 */
enum CfStatus cf_lid_load(const char *path, struct CfLid **out);

/**
 * Release an identification-model handle. Null is a no-op.
 *
 * # Safety
 * `lid` must be null or a handle from [`cf_lid_load`], not yet freed.
 */
void cf_lid_free(struct CfLid *lid);

/**
 * Identify the language of UTF-8 text. `out_lang` receives a new string
 * released with [`cf_string_free`]: a language code, or empty when the
 * model saw too few letters or the score margin was inconclusive. When
 * `out_score` is non-null it receives the winning log-probability per gram,
 * or NaN for an undecided prediction.
 *
 * # Safety
 * `lid` must be a live handle from [`cf_lid_load`]; `text` must point to a
 * NUL-terminated string; `out_lang` must be writable; `out_score` must be
 * null or writable.
 */
enum CfStatus cf_lid_predict(const struct CfLid *lid,
                             const char *text,
                             char **out_lang,
                             double *out_score);

/**
 * Temperature-adjusted sampling probabilities for `len` token counts:
 * `p[i] = counts[i]^alpha / sum_j counts[j]^alpha`. `alpha` must be a
 * positive finite number and at least one count must be nonzero.
 * `out_probs` must hold `len` doubles; entries for zero counts are 0.
 *
 * # Safety
 * `counts` must point to `len` readable u64 values and `out_probs` to `len`
 * writable doubles.
 */
enum CfStatus cf_temperature_probabilities(const uint64_t *counts,
                                           size_t len,
                                           double alpha,
                                           double *out_probs);

/**
 * Share of letters in `text` written in the native script of language
 * `lang` (a code from the 24-language table). `out_ratio` receives a value
 * in [0, 1]; when `out_letters` is non-null it receives the number of
 * letters inspected (0 means the ratio is vacuous).
 *
 * # Safety
 * `text` and `lang` must point to NUL-terminated strings; `out_ratio` must
 * be writable; `out_letters` must be null or writable.
 */
enum CfStatus cf_native_ratio(const char *text,
                              const char *lang,
                              double *out_ratio,
                              uint64_t *out_letters);

/**
 * Transliterate text from the native script of `lang` into Devanagari by
 * aligned code-point offset. `out_text` receives a new string released
 * with [`cf_string_free`]; when `out_converted` is non-null it receives
 * the number of code points that were mapped. Languages whose script has
 * no Devanagari-aligned block are rejected.
 *
 * # Safety
 * `text` and `lang` must point to NUL-terminated strings; `out_text` must
 * be writable; `out_converted` must be null or writable.
 */
enum CfStatus cf_to_devanagari(const char *text,
                               const char *lang,
                               char **out_text,
                               uint64_t *out_converted);

/**
 * Token-bag F1 between a gold answer and a predicted answer, in [0, 1].
 * With `normalize` set, both sides are lowercased, stripped of punctuation,
 * and whitespace-collapsed before comparison.
 *
 * # Safety
 * `gold` and `pred` must point to NUL-terminated strings; `out_f1` must be
 * writable.
 */
enum CfStatus cf_span_f1(const char *gold, const char *pred, bool normalize, double *out_f1);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORPUS_FORGE_H */
