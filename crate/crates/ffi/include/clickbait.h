#ifndef CLICKBAIT_H
#define CLICKBAIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum cb_status {
  CB_STATUS_OK = 0,
  CB_STATUS_NULL_POINTER = 1,
  CB_STATUS_INVALID_UTF8 = 2,
  CB_STATUS_IO = 3,
  CB_STATUS_PARSE = 4,
  CB_STATUS_CHECKPOINT = 5,
  CB_STATUS_NUMERIC = 6,
  CB_STATUS_INVALID_ARGUMENT = 7,
  CB_STATUS_PANIC = 8,
} cb_status;

// A loaded corpus.
typedef struct cb_corpus cb_corpus;

// A loaded model of any family.
typedef struct cb_model cb_model;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Loads a JSON-lines corpus. On success `*out` receives a new handle.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum cb_status cb_corpus_load(const char *path, struct cb_corpus **out);

// Number of articles; 0 for a null handle.
//
// # Safety
// `corpus` must be null or a handle from [`cb_corpus_load`].
size_t cb_corpus_len(const struct cb_corpus *corpus);

// # Safety
// `corpus` must be null or a handle from [`cb_corpus_load`] not yet freed.
void cb_corpus_free(struct cb_corpus *corpus);

// Loads a model directory written by `clickbait train`.
//
// # Safety
// `dir` must be a NUL-terminated string and `out` a valid pointer.
enum cb_status cb_model_load(const char *dir, struct cb_model **out);

// Classifies one article.
//
// # Safety
// `model` must be a live handle, `title`/`content` NUL-terminated strings
// and `label`/`score` valid pointers.
enum cb_status cb_model_predict(const struct cb_model *model,
                                const char *title,
                                const char *content,
                                int *label,
                                double *score);

// Classifies every article of a corpus into caller-provided arrays of
// length `len`, which must equal the corpus size.
//
// # Safety
// Handles must be live; `labels` and `scores` must hold `len` elements.
enum cb_status cb_model_predict_corpus(const struct cb_model *model,
                                       const struct cb_corpus *corpus,
                                       int *labels,
                                       double *scores,
                                       size_t len);

// # Safety
// `model` must be null or a handle from [`cb_model_load`] not yet freed.
void cb_model_free(struct cb_model *model);

// Length of a handcrafted feature vector.
size_t cb_feature_dim(void);

// Writes the handcrafted features of one article into `out`, which must
// hold at least [`cb_feature_dim`] values.
//
// # Safety
// `title`/`content` must be NUL-terminated and `out` must hold `len`
// values.
enum cb_status cb_features_extract(const char *title, const char *content, double *out, size_t len);

// McNemar's test with continuity correction from the discordant counts.
//
// # Safety
// `statistic` and `p_value` must be valid pointers.
enum cb_status cb_eval_mcnemar(size_t b, size_t c, double *statistic, double *p_value);

// Cohen's kappa between two label arrays of length `n`.
//
// # Safety
// `a` and `b` must hold `n` labels; `out` must be valid.
enum cb_status cb_cohens_kappa(const int *a, const int *b, size_t n, double *out);

// Weighted soft vote over `n` clickbait scores.
//
// # Safety
// `scores` and `weights` must hold `n` values; `label` and `combined`
// must be valid.
enum cb_status cb_ensemble_predict(const double *scores,
                                   const double *weights,
                                   size_t n,
                                   double threshold,
                                   int *label,
                                   double *combined);

// Copies the calling thread's last error message into `buf` (truncated and
// NUL-terminated) and returns the full message length plus one. Returns 0
// when no error is recorded.
//
// # Safety
// `buf` must be null or hold `len` bytes.
size_t cb_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLICKBAIT_H */
