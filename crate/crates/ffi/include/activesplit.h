/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef ACTIVESPLIT_H
#define ACTIVESPLIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every fallible call.
 */
typedef enum AsStatus {
  AS_STATUS_OK = 0,
  AS_STATUS_NULL_ARGUMENT = 1,
  AS_STATUS_INVALID_UTF8 = 2,
  AS_STATUS_IO = 3,
  AS_STATUS_PARSE = 4,
  AS_STATUS_VALIDATION = 5,
  AS_STATUS_DOMAIN = 6,
  AS_STATUS_TRAINING = 7,
  AS_STATUS_CONFIG = 8,
  AS_STATUS_PANIC = 9,
} AsStatus;

/*
 Loaded dataset, sorted by activity.
 */
typedef struct AsDataset AsDataset;

/*
 Trained regressor.
 */
typedef struct AsModel AsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the most recent failure on this thread. The pointer stays
 valid until the next failing call on the same thread.
 */
const char *as_last_error(void);

/*
 Feature count of every fingerprint (128).
 */
uintptr_t as_n_bits(void);

/*
 Loads a dataset CSV (`id,activity,fp`). Nonzero `dedup_average` averages
 rows that share an id.

 # Safety
 `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AsStatus as_dataset_load(const char *path, int32_t dedup_average, struct AsDataset **out);

/*
 # Safety
 `dataset` must come from [`as_dataset_load`] or be null.
 */
void as_dataset_free(struct AsDataset *dataset);

/*
 Number of molecules, or 0 for a null handle.

 # Safety
 `dataset` must be a live handle or null.
 */
uintptr_t as_dataset_len(const struct AsDataset *dataset);

/*
 Copies activities, in sorted order, into `out` (capacity `len`).

 # Safety
 `out` must point to `len` writable doubles.
 */
enum AsStatus as_dataset_activities(const struct AsDataset *dataset, double *out, uintptr_t len);

/*
 Empirical quantile of the activities at `fraction` in [0, 1].

 # Safety
 `dataset` must be a live handle and `out` a valid pointer.
 */
enum AsStatus as_dataset_quantile(const struct AsDataset *dataset, double fraction, double *out);

/*
 Normalized rank of the best-ranked active molecule.

 # Safety
 `predicted` and `truth` must each point to `n` doubles; `out` must be valid.
 */
enum AsStatus as_loss_min(const double *predicted,
                          const double *truth,
                          uintptr_t n,
                          double gamma,
                          double *out);

/*
 Normalized sum of the active molecules' ranks.

 # Safety
 As for [`as_loss_min`].
 */
enum AsStatus as_loss_sum(const double *predicted,
                          const double *truth,
                          uintptr_t n,
                          double gamma,
                          double *out);

/*
 Mean squared error.

 # Safety
 As for [`as_loss_min`].
 */
enum AsStatus as_mse(const double *predicted, const double *truth, uintptr_t n, double *out);

/*
 Fits a model described by JSON, e.g. `{"ridge":{"alpha":0.1}}`, on
 a row-major 0/1 matrix of `n_rows` x 128.

 # Safety
 `spec_json` must be NUL-terminated, `x` must hold `n_rows * n_cols`
 doubles, `y` must hold `n_rows` doubles and `out` must be valid.
 */
enum AsStatus as_model_fit(const char *spec_json,
                           const double *x,
                           uintptr_t n_rows,
                           uintptr_t n_cols,
                           const double *y,
                           struct AsModel **out);

/*
 Fits a model on every molecule of a dataset.

 # Safety
 `spec_json` must be NUL-terminated; `dataset` live; `out` valid.
 */
enum AsStatus as_model_fit_dataset(const char *spec_json,
                                   const struct AsDataset *dataset,
                                   struct AsModel **out);

/*
 Predicts `n_rows` rows of a row-major matrix with `n_cols` (= 128) columns.

 # Safety
 `x` must hold `n_rows * n_cols` doubles and `out` must have room for `n_rows`.
 */
enum AsStatus as_model_predict_dense(const struct AsModel *model,
                                     const double *x,
                                     uintptr_t n_rows,
                                     uintptr_t n_cols,
                                     double *out);

/*
 # Safety
 `model` must come from a fit call or be null.
 */
void as_model_free(struct AsModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACTIVESPLIT_H */
