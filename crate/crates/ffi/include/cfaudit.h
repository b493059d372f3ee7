#ifndef CFAUDIT_H
#define CFAUDIT_H

#pragma once

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CfaStatus {
  CFA_STATUS_OK = 0,
  CFA_STATUS_NULL_POINTER = 1,
  CFA_STATUS_INVALID_UTF8 = 2,
  CFA_STATUS_INVALID_ARGUMENT = 3,
  CFA_STATUS_IO = 4,
  CFA_STATUS_PARSE = 5,
  CFA_STATUS_CORPUS = 6,
  CFA_STATUS_TRAINING = 7,
  CFA_STATUS_MODEL = 8,
  CFA_STATUS_PANIC = 99,
} CfaStatus;

// Opaque sensitive-word lexicon.
typedef struct CfaLexicon CfaLexicon;

// Opaque trained classifier.
typedef struct CfaModel CfaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *cfa_last_error(void);

// Library version as a static NUL-terminated string.
const char *cfa_version(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void cfa_string_free(char *s);

// Creates a handle to the shipped lexicon.
//
// # Safety
// `out` must be a valid pointer.
enum CfaStatus cfa_lexicon_builtin(struct CfaLexicon **out);

// Loads a lexicon from a TSV file or a directory of TSV files.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum CfaStatus cfa_lexicon_load(const char *path, struct CfaLexicon **out);

// Number of (attribute, surface) entries.
//
// # Safety
// `lexicon` must be a live handle and `out` a valid pointer.
enum CfaStatus cfa_lexicon_len(const struct CfaLexicon *lexicon, size_t *out);

// # Safety
// `lexicon` must be NULL or a handle not yet freed.
void cfa_lexicon_free(struct CfaLexicon *lexicon);

// Counterfactuals of one document as a JSON array of
// `{parent_id, text, flipped_attributes, substitutions}` objects.
//
// # Safety
// Pointers must be valid; `doc_id` and `text` NUL-terminated.
enum CfaStatus cfa_generate(const struct CfaLexicon *lexicon,
                            const char *doc_id,
                            const char *text,
                            uint64_t seed,
                            bool multi,
                            char **out_json);

// Loads a model saved by `cfaudit train`.
//
// # Safety
// `path` must be NUL-terminated and `out` valid.
enum CfaStatus cfa_model_load(const char *path, struct CfaModel **out);

// Trains a model on a JSONL corpus (`{"id", "text", "label"}` per line).
// `kind` is `logreg`, `gnb` or `mlp`.
//
// # Safety
// Strings must be NUL-terminated and `out` valid.
enum CfaStatus cfa_model_train(const char *corpus_jsonl,
                               const char *kind,
                               uint64_t seed,
                               struct CfaModel **out);

// Serializes a model to its JSON persistence format.
//
// # Safety
// `model` must be live and `out_json` valid.
enum CfaStatus cfa_model_to_json(const struct CfaModel *model, char **out_json);

// P(label = 1) for `text`.
//
// # Safety
// `model` must be live, `text` NUL-terminated and `out` valid.
enum CfaStatus cfa_model_predict_proba(const struct CfaModel *model, const char *text, double *out);

// # Safety
// `model` must be NULL or a handle not yet freed.
void cfa_model_free(struct CfaModel *model);

// Flip-rate (percent) of `model` over a JSONL corpus; labels are optional.
//
// # Safety
// Handles must be live, `corpus_jsonl` NUL-terminated and `out_pct` valid.
enum CfaStatus cfa_flip_rate(const struct CfaModel *model,
                             const struct CfaLexicon *lexicon,
                             const char *corpus_jsonl,
                             uint64_t seed,
                             bool multi,
                             double *out_pct);

// Counterfactual Fairness Increment, `100 (pre - post) / pre`; 0 when
// `fr_pre` is 0.
double cfa_cfi(double fr_pre, double fr_post);

// Accuracy drop in percentage points.
double cfa_accuracy_drop(double acc_pre, double acc_post);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CFAUDIT_H */
