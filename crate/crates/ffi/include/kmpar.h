#ifndef KMPAR_H
#define KMPAR_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible entry point.
 */
typedef enum KmparStatus {
  KMPAR_STATUS_OK = 0,
  KMPAR_STATUS_NULL_POINTER = 1,
  KMPAR_STATUS_INVALID_ARGUMENT = 2,
  KMPAR_STATUS_DIMENSION_MISMATCH = 3,
  KMPAR_STATUS_EMPTY_INPUT = 4,
  KMPAR_STATUS_PARSE = 5,
  KMPAR_STATUS_IO = 6,
  KMPAR_STATUS_PANIC = 7,
} KmparStatus;

/**
 * Seeding algorithm.
 */
typedef enum KmparAlgorithm {
  KMPAR_ALGORITHM_RANDOM = 0,
  KMPAR_ALGORITHM_KMEANS_PLUS_PLUS = 1,
  KMPAR_ALGORITHM_KMEANS_PARALLEL = 2,
  KMPAR_ALGORITHM_PARTITION = 3,
} KmparAlgorithm;

/**
 * Opaque center set.
 */
typedef struct KmparCenters KmparCenters;

/**
 * Opaque point set.
 */
typedef struct KmparDataset KmparDataset;

/**
 * Seeding options. Obtain defaults from [`kmpar_init_options_default`].
 */
typedef struct KmparInitOptions {
  enum KmparAlgorithm algorithm;
  size_t k;
  /**
   * Oversampling factor ℓ; a value `<= 0` means `2k`.
   */
  double oversampling;
  /**
   * Sampling rounds; `0` picks `⌈log₂ ψ⌉`.
   */
  uint32_t rounds;
  /**
   * Draw exactly ℓ points per round instead of Bernoulli sampling.
   */
  bool exact_l;
  /**
   * Worker shards; `0` uses the default plan.
   */
  size_t shards;
  /**
   * Partition group count; `0` uses `⌈√(n/k)⌉`.
   */
  size_t partition_groups;
  uint64_t seed;
} KmparInitOptions;

/**
 * Lloyd refinement options.
 */
typedef struct KmparLloydOptions {
  double tol;
  /**
   * Step cap; `0` runs until convergence.
   */
  size_t max_iters;
} KmparLloydOptions;

/**
 * Outcome of [`kmpar_lloyd`].
 */
typedef struct KmparLloydReport {
  double final_cost;
  size_t iterations;
  bool converged;
} KmparLloydReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a dataset from `n * dim` row-major coordinates and optional
 * per-point weights (`weights` may be null).
 *
 * # Safety
 * `coords` must point to `n * dim` doubles, `weights` to `n` doubles or be
 * null, and `out` must be writable.
 */
enum KmparStatus kmpar_dataset_new(const double *coords,
                                   size_t n,
                                   size_t dim,
                                   const double *weights,
                                   struct KmparDataset **out);

/**
 * Loads a delimited text table.
 *
 * `delimiter` is one of `"auto"`, `"comma"` or `"whitespace"` (null means
 * auto). `categorical` lists `n_categorical` zero-based symbolic columns
 * and may be null when the count is zero.
 *
 * # Safety
 * `path` and a non-null `delimiter` must be NUL-terminated strings,
 * `categorical` must point to `n_categorical` entries, `out` must be writable.
 */
enum KmparStatus kmpar_dataset_load(const char *path,
                                    const char *delimiter,
                                    const size_t *categorical,
                                    size_t n_categorical,
                                    bool skip_header,
                                    struct KmparDataset **out);

/**
 * Number of points, or 0 for a null handle.
 *
 * # Safety
 * `data` must be null or a live handle.
 */
size_t kmpar_dataset_len(const struct KmparDataset *data);

/**
 * Point dimension, or 0 for a null handle.
 *
 * # Safety
 * `data` must be null or a live handle.
 */
size_t kmpar_dataset_dim(const struct KmparDataset *data);

/**
 * Releases a dataset. Null is ignored.
 *
 * # Safety
 * `data` must be null or a handle not yet freed.
 */
void kmpar_dataset_free(struct KmparDataset *data);

/**
 * Default seeding options for `k` clusters: k-means|| with ℓ = 2k,
 * five rounds, seed 0.
 */
struct KmparInitOptions kmpar_init_options_default(size_t k);

/**
 * Default Lloyd options: relative tolerance 1e-6, no step cap.
 */
struct KmparLloydOptions kmpar_lloyd_options_default(void);

/**
 * Seeds `opts.k` centers on `data`.
 *
 * # Safety
 * `data` and `opts` must be live pointers, `out` must be writable.
 */
enum KmparStatus kmpar_initialize(const struct KmparDataset *data,
                                  const struct KmparInitOptions *opts,
                                  struct KmparCenters **out);

/**
 * Refines `centers` in place with Lloyd iterations. `report` may be null.
 *
 * # Safety
 * `data`, `centers` and `opts` must be live pointers; `report` must be null
 * or writable.
 */
enum KmparStatus kmpar_lloyd(const struct KmparDataset *data,
                             struct KmparCenters *centers,
                             const struct KmparLloydOptions *opts,
                             struct KmparLloydReport *report);

/**
 * Weighted k-means cost of `centers` on `data`.
 *
 * # Safety
 * `data` and `centers` must be live handles, `out` must be writable.
 */
enum KmparStatus kmpar_cost(const struct KmparDataset *data,
                            const struct KmparCenters *centers,
                            double *out);

/**
 * Number of centers, or 0 for a null handle.
 *
 * # Safety
 * `centers` must be null or a live handle.
 */
size_t kmpar_centers_len(const struct KmparCenters *centers);

/**
 * Center dimension, or 0 for a null handle.
 *
 * # Safety
 * `centers` must be null or a live handle.
 */
size_t kmpar_centers_dim(const struct KmparCenters *centers);

/**
 * Copies the row-major center coordinates into `buf`, which must hold
 * `capacity` doubles; at least `len * dim` are required.
 *
 * # Safety
 * `centers` must be a live handle and `buf` must point to `capacity` writable doubles.
 */
enum KmparStatus kmpar_centers_copy(const struct KmparCenters *centers,
                                    double *buf,
                                    size_t capacity);

/**
 * Releases a center set. Null is ignored.
 *
 * # Safety
 * `centers` must be null or a handle not yet freed.
 */
void kmpar_centers_free(struct KmparCenters *centers);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *kmpar_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kmpar_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KMPAR_H */
