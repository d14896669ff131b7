#ifndef SENSEMATCH_H
#define SENSEMATCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SmStatus {
  SM_STATUS_OK = 0,
  SM_STATUS_NULL_ARGUMENT = 1,
  SM_STATUS_INVALID_UTF8 = 2,
  SM_STATUS_IO = 3,
  SM_STATUS_PARSE = 4,
  SM_STATUS_VALIDATION = 5,
  SM_STATUS_SERIALIZATION = 6,
  SM_STATUS_INVALID_INPUT = 7,
  SM_STATUS_UNINITIALIZED_SCORER = 8,
  SM_STATUS_TRAINING = 9,
  SM_STATUS_CHECKPOINT = 10,
  SM_STATUS_TRANSPORT = 11,
  SM_STATUS_EXTRACTION = 12,
  // A Rust panic was caught at the boundary.
  SM_STATUS_INTERNAL = 13,
} SmStatus;

typedef enum SmLanguage {
  SM_LANGUAGE_FI = 0,
  SM_LANGUAGE_RU = 1,
  SM_LANGUAGE_DE = 2,
} SmLanguage;

typedef enum SmNovelIdMode {
  SM_NOVEL_ID_MODE_PER_USAGE = 0,
  SM_NOVEL_ID_MODE_PER_WORD = 1,
} SmNovelIdMode;

// A labelled gloss/usage pair dataset.
typedef struct SmPairs SmPairs;

// Prediction records of one assignment run.
typedef struct SmRecords SmRecords;

// A pair scorer backend.
typedef struct SmScorer SmScorer;

// A loaded and validated data split.
typedef struct SmSplit SmSplit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL after a success.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *sm_last_error(void);

// Library version as a static string.
const char *sm_version(void);

// Load and validate a split file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum SmStatus sm_split_load(const char *path, enum SmLanguage language, struct SmSplit **out);

// Number of usages in the split.
//
// # Safety
// `split` must be a live handle or NULL (which yields 0).
size_t sm_split_usage_count(const struct SmSplit *split);

// # Safety
// `split` must be NULL or a handle from [`sm_split_load`] not yet freed.
void sm_split_free(struct SmSplit *split);

// Build the shuffled positive and hard-negative pairs of a split.
//
// # Safety
// `split` must be a live handle and `out` a writable pointer.
enum SmStatus sm_pairs_build(const struct SmSplit *split, uint64_t seed, struct SmPairs **out);

// Number of pairs, and optionally the number of positives.
//
// # Safety
// `pairs` must be a live handle or NULL; `positives` may be NULL.
size_t sm_pairs_len(const struct SmPairs *pairs, size_t *positives);

// Write the pairs as a TSV file.
//
// # Safety
// `pairs` must be a live handle and `path` a NUL-terminated string.
enum SmStatus sm_pairs_save(const struct SmPairs *pairs, const char *path);

// # Safety
// `pairs` must be NULL or a handle from [`sm_pairs_build`] not yet freed.
void sm_pairs_free(struct SmPairs *pairs);

// Lexical-overlap scorer.
//
// # Safety
// `out` must be a writable pointer.
enum SmStatus sm_scorer_new_mock(struct SmScorer **out);

// Scorer backed by a trained checkpoint directory.
//
// # Safety
// `dir` must be a NUL-terminated string and `out` a writable pointer.
enum SmStatus sm_scorer_load_checkpoint(const char *dir, struct SmScorer **out);

// Match probability of one (usage example, gloss) pair.
//
// # Safety
// `scorer` must be a live handle, `example` and `gloss` NUL-terminated
// strings and `probability` a writable pointer.
enum SmStatus sm_scorer_score(const struct SmScorer *scorer,
                              const char *example,
                              const char *gloss,
                              double *probability);

// # Safety
// `scorer` must be NULL or a handle from an `sm_scorer_*` constructor not
// yet freed.
void sm_scorer_free(struct SmScorer *scorer);

// Assign an old sense or a novel ID to every new-period usage.
//
// # Safety
// `split` and `scorer` must be live handles and `out` a writable pointer.
enum SmStatus sm_assign(const struct SmSplit *split,
                        const struct SmScorer *scorer,
                        double threshold,
                        enum SmNovelIdMode mode,
                        struct SmRecords **out);

// Number of records, and optionally how many are flagged novel.
//
// # Safety
// `records` must be a live handle or NULL; `novel` may be NULL.
size_t sm_records_len(const struct SmRecords *records, size_t *novel);

// Write the records as a submission TSV.
//
// # Safety
// `records` must be a live handle and `path` a NUL-terminated string.
enum SmStatus sm_records_save(const struct SmRecords *records, const char *path);

// # Safety
// `records` must be NULL or a handle from [`sm_assign`] not yet freed.
void sm_records_free(struct SmRecords *records);

// Adjusted Rand Index of two labelings of `len` items.
//
// # Safety
// `gold` and `pred` must point to `len` readable values; `out` must be
// writable.
enum SmStatus sm_adjusted_rand_index(const uint32_t *gold,
                                     const uint32_t *pred,
                                     size_t len,
                                     double *out);

// Macro-F1 over the classes present in `gold`.
//
// # Safety
// As for [`sm_adjusted_rand_index`].
enum SmStatus sm_macro_f1(const uint32_t *gold, const uint32_t *pred, size_t len, double *out);

// Sentence BLEU of `candidate` against `reference`.
//
// # Safety
// `candidate` and `reference` must be NUL-terminated strings and `out`
// writable.
enum SmStatus sm_bleu(const char *candidate, const char *reference, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SENSEMATCH_H */
