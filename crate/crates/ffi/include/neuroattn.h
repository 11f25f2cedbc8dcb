#ifndef NEUROATTN_H
#define NEUROATTN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NaStatus {
  NA_STATUS_OK = 0,
  NA_STATUS_INVALID_ARGUMENT = 1,
  NA_STATUS_SHAPE_MISMATCH = 2,
  NA_STATUS_DEGENERATE = 3,
  NA_STATUS_NON_FINITE = 4,
  /**
   * Malformed file contents: bad magic, truncation, unknown dtype, parse errors.
   */
  NA_STATUS_FORMAT = 5,
  NA_STATUS_IO = 6,
  NA_STATUS_NULL_POINTER = 7,
  NA_STATUS_BUFFER_TOO_SMALL = 8,
  NA_STATUS_PANIC = 9,
} NaStatus;

/**
 * Opaque model handle.
 */
typedef struct NaModel NaModel;

/**
 * Opaque tensor handle.
 */
typedef struct NaTensor NaTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library from the same thread.
 */
const char *na_last_error_message(void);

/**
 * Reads a tensor file. On success `*out` owns a new handle.
 *
 * # Safety
 * `path` must be a nul-terminated string and `out` a valid pointer.
 */
enum NaStatus na_tensor_read(const char *path, struct NaTensor **out);

/**
 * Copies `len` values with the given dims into a new tensor.
 *
 * # Safety
 * `dims` must hold `ndim` values, `data` `len` values, and `out` be valid.
 */
enum NaStatus na_tensor_new(const size_t *dims,
                            size_t ndim,
                            const double *data,
                            size_t len,
                            struct NaTensor **out);

/**
 * # Safety
 * `tensor` must be a live handle and `path` a nul-terminated string.
 */
enum NaStatus na_tensor_write(const struct NaTensor *tensor, const char *path);

/**
 * Number of dimensions; 0 for a null handle.
 *
 * # Safety
 * `tensor` must be null or a live handle.
 */
size_t na_tensor_ndim(const struct NaTensor *tensor);

/**
 * Number of elements; 0 for a null handle.
 *
 * # Safety
 * `tensor` must be null or a live handle.
 */
size_t na_tensor_len(const struct NaTensor *tensor);

/**
 * Copies the dims into `out` (capacity `cap`).
 *
 * # Safety
 * `tensor` must be a live handle and `out` hold `cap` values.
 */
enum NaStatus na_tensor_dims(const struct NaTensor *tensor, size_t *out, size_t cap);

/**
 * Borrowed pointer to the row-major values, valid while the handle lives.
 *
 * # Safety
 * `tensor` must be null or a live handle.
 */
const double *na_tensor_data(const struct NaTensor *tensor);

/**
 * # Safety
 * `tensor` must be null or a handle not yet freed.
 */
void na_tensor_free(struct NaTensor *tensor);

/**
 * Loads a checkpoint directory written by `train`.
 *
 * # Safety
 * `dir` must be a nul-terminated string and `out` a valid pointer.
 */
enum NaStatus na_model_load(const char *dir, struct NaModel **out);

/**
 * Voxel count of the model; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t na_model_voxels(const struct NaModel *model);

/**
 * Predicts one frame from an H×W×C feature tensor into `out` (capacity
 * `cap` ≥ voxels), in response units. Gaze models need fixations and are
 * rejected here.
 *
 * # Safety
 * `model` and `features` must be live handles and `out` hold `cap` values.
 */
enum NaStatus na_model_predict(const struct NaModel *model,
                               const struct NaTensor *features,
                               double *out,
                               size_t cap);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void na_model_free(struct NaModel *model);

/**
 * Pearson correlation of two length-`n` vectors.
 *
 * # Safety
 * `x` and `y` must hold `n` values; `out` must be valid.
 */
enum NaStatus na_pearson(const double *x, const double *y, size_t n, double *out);

/**
 * Kendall's tau-a of two length-`n` sequences.
 *
 * # Safety
 * `x` and `y` must hold `n` values; `out` must be valid.
 */
enum NaStatus na_kendall_tau_a(const double *x, const double *y, size_t n, double *out);

/**
 * Softmax over an `height`×`width` row-major grid, written to `out`.
 *
 * # Safety
 * `saliency` and `out` must each hold `height * width` values.
 */
enum NaStatus na_spatial_softmax(const double *saliency, size_t height, size_t width, double *out);

/**
 * ROC area of an arbitrary-scale saliency grid against fixated cells
 * `(rows[i], cols[i])`; repeated cells count with multiplicity.
 *
 * # Safety
 * `saliency` must hold `height * width` values, `rows` and `cols` each
 * `count` values; `out` must be valid.
 */
enum NaStatus na_metric_auc(const double *saliency,
                            size_t height,
                            size_t width,
                            const size_t *rows,
                            const size_t *cols,
                            size_t count,
                            double *out);

/**
 * Two-sided p-value of a Pearson correlation `r` over `n` samples.
 *
 * # Safety
 * `out` must be valid.
 */
enum NaStatus na_correlation_p_value(double r, size_t n, double *out);

/**
 * Benjamini-Hochberg mask at level `q`. NaN p-values mark degenerate
 * tests: never rejected and not counted. `mask` receives 1 or 0.
 *
 * # Safety
 * `p_values` and `mask` must each hold `n` values.
 */
enum NaStatus na_benjamini_hochberg(const double *p_values, size_t n, double q, uint8_t *mask);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NEUROATTN_H */
