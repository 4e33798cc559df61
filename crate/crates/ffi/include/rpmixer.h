#ifndef RPMIXER_H
#define RPMIXER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Data split selector, passed to [`rpmx_model_evaluate`] as its integer value.
 */
typedef enum RpmxSplit {
  RPMX_SPLIT_TRAIN = 0,
  RPMX_SPLIT_VAL = 1,
  RPMX_SPLIT_TEST = 2,
} RpmxSplit;

/**
 * Result code of every fallible call.
 */
typedef enum RpmxStatus {
  RPMX_STATUS_OK = 0,
  RPMX_STATUS_NULL_POINTER = 1,
  RPMX_STATUS_INVALID_ARGUMENT = 2,
  RPMX_STATUS_IO = 3,
  RPMX_STATUS_FORMAT = 4,
  RPMX_STATUS_DIMENSION = 5,
  RPMX_STATUS_CONFIG = 6,
  RPMX_STATUS_NUMERIC = 7,
  RPMX_STATUS_UNSUPPORTED = 8,
  RPMX_STATUS_PANIC = 9,
} RpmxStatus;

/**
 * A multivariate series of shape nodes × features × steps.
 */
typedef struct RpmxDataset RpmxDataset;

/**
 * Trained model plus the configuration it was trained with.
 */
typedef struct RpmxModel RpmxModel;

/**
 * Average metrics over the forecast horizon, on the original scale.
 */
typedef struct RpmxMetrics {
  double mae;
  double rmse;
  /**
   * Percent.
   */
  double mape;
} RpmxMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after a success.
 * The pointer stays valid until the next rpmx call on the same thread.
 */
const char *rpmx_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rpmx_version(void);

/**
 * Loads a checkpoint written by `rpmixer train`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RpmxStatus rpmx_model_load(const char *path, struct RpmxModel **out);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must come from `rpmx_model_load` and not be used afterwards.
 */
void rpmx_model_free(struct RpmxModel *model);

/**
 * Shape contract of a model. Any output pointer may be null.
 *
 * # Safety
 * `model` must be a live handle; non-null outputs must be valid.
 */
enum RpmxStatus rpmx_model_dims(const struct RpmxModel *model,
                                size_t *nodes,
                                size_t *features,
                                size_t *t_past,
                                size_t *t_future);

/**
 * Number of trainable parameters.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum RpmxStatus rpmx_model_num_params(const struct RpmxModel *model, size_t *out);

/**
 * Forecasts a batch in the model's standardized space.
 *
 * `input` holds `batch × nodes × (features·t_past)` values, each node row
 * feature-major; `output` receives `batch × nodes × t_future` values and
 * `output_len` must equal that count.
 *
 * # Safety
 * `input` must point to `batch·nodes·features·t_past` floats and `output`
 * to `output_len` writable floats.
 */
enum RpmxStatus rpmx_model_predict(const struct RpmxModel *model,
                                   const float *input,
                                   size_t batch,
                                   float *output,
                                   size_t output_len);

/**
 * Evaluates a model on one split of a dataset with the model's own
 * windowing, split ratios and standardization settings.
 *
 * # Safety
 * Both handles must be live and `out` a valid pointer.
 */
enum RpmxStatus rpmx_model_evaluate(const struct RpmxModel *model,
                                    const struct RpmxDataset *dataset,
                                    uint32_t split,
                                    struct RpmxMetrics *out);

/**
 * Loads a dataset: `.csv` files (one column per node, one row per step,
 * `interval_minutes` apart) or the binary format written by `rpmixer generate`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RpmxStatus rpmx_dataset_load(const char *path,
                                  uint32_t interval_minutes,
                                  struct RpmxDataset **out);

/**
 * Generates the default synthetic periodic dataset at the given size.
 * `seed` is the experiment seed, matching `rpmixer generate --seed`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RpmxStatus rpmx_dataset_synthetic(size_t nodes,
                                       size_t steps,
                                       uint64_t seed,
                                       struct RpmxDataset **out);

/**
 * Releases a dataset; null is ignored.
 *
 * # Safety
 * `dataset` must come from an rpmx constructor and not be used afterwards.
 */
void rpmx_dataset_free(struct RpmxDataset *dataset);

/**
 * Shape of a dataset. Any output pointer may be null.
 *
 * # Safety
 * `dataset` must be a live handle; non-null outputs must be valid.
 */
enum RpmxStatus rpmx_dataset_dims(const struct RpmxDataset *dataset,
                                  size_t *nodes,
                                  size_t *features,
                                  size_t *steps);

/**
 * Copies all values, laid out nodes × features × steps, into `buffer`;
 * `len` must equal that count.
 *
 * # Safety
 * `dataset` must be a live handle and `buffer` must hold `len` floats.
 */
enum RpmxStatus rpmx_dataset_copy_values(const struct RpmxDataset *dataset,
                                         float *buffer,
                                         size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RPMIXER_H */
