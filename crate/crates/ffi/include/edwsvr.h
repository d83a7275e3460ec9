#ifndef EDWSVR_H
#define EDWSVR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. `EDWSVR_STATUS_OK` is zero.
typedef enum EdwsvrStatus {
  EDWSVR_STATUS_OK = 0,
  EDWSVR_STATUS_NULL_POINTER = 1,
  EDWSVR_STATUS_INVALID_ARGUMENT = 2,
  EDWSVR_STATUS_DIMENSION_MISMATCH = 3,
  EDWSVR_STATUS_NUMERIC = 4,
  EDWSVR_STATUS_IO = 5,
  EDWSVR_STATUS_PARSE = 6,
  EDWSVR_STATUS_PANIC = 7,
} EdwsvrStatus;

// Values for `EdwsvrTrainOptions::method`.
typedef enum EdwsvrMethod {
  EDWSVR_METHOD_CD = 0,
  EDWSVR_METHOD_ASGD = 1,
  EDWSVR_METHOD_ESVR = 2,
  EDWSVR_METHOD_OLS = 3,
} EdwsvrMethod;

// Values for `EdwsvrTrainOptions::kernel`.
typedef enum EdwsvrKernel {
  EDWSVR_KERNEL_LINEAR = 0,
  EDWSVR_KERNEL_RBF = 1,
} EdwsvrKernel;

// Opaque trained model.
typedef struct EdwsvrModel EdwsvrModel;

// Training options. Start from `edwsvr_train_options_default()`.
typedef struct EdwsvrTrainOptions {
  // An `EdwsvrMethod` value.
  uint32_t method;
  // An `EdwsvrKernel` value.
  uint32_t kernel;
  // RBF width; zero or negative selects 1/d.
  double gamma;
  double lambda1;
  double c;
  double epsilon;
  // Fraction of variance kept by PCA; zero or negative disables PCA.
  double pca_variance;
  uintptr_t max_sweeps;
  double tol;
  uintptr_t passes;
  uint64_t seed;
} EdwsvrTrainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *edwsvr_version(void);

struct EdwsvrTrainOptions edwsvr_train_options_default(void);

// Trains on `n_rows x n_cols` row-major features `x` and targets `y`.
// `options` may be null for defaults. On success `*out` owns a new model.
//
// # Safety
// `x` must point to `n_rows * n_cols` doubles, `y` to `n_rows` doubles,
// `options` to a valid struct or null, and `out` to writable storage.
enum EdwsvrStatus edwsvr_train(const double *x,
                               const double *y,
                               uintptr_t n_rows,
                               uintptr_t n_cols,
                               const struct EdwsvrTrainOptions *options,
                               struct EdwsvrModel **out);

// Writes one prediction per row of `x` into `out` (length `n_rows`).
//
// # Safety
// `model` must come from this library; `x` must hold `n_rows * n_cols`
// doubles and `out` room for `n_rows`.
enum EdwsvrStatus edwsvr_model_predict(const struct EdwsvrModel *model,
                                       const double *x,
                                       uintptr_t n_rows,
                                       uintptr_t n_cols,
                                       double *out);

// Raw feature count expected by `edwsvr_model_predict`; 0 for null.
//
// # Safety
// `model` must be null or come from this library.
uintptr_t edwsvr_model_n_features(const struct EdwsvrModel *model);

// # Safety
// `model` must come from this library; `path` must be NUL-terminated.
enum EdwsvrStatus edwsvr_model_save(const struct EdwsvrModel *model, const char *path);

// # Safety
// `path` must be NUL-terminated and `out` writable.
enum EdwsvrStatus edwsvr_model_load(const char *path, struct EdwsvrModel **out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must be null or a live handle from this library, freed once.
void edwsvr_model_free(struct EdwsvrModel *model);

// Copies the calling thread's last error message into `buf` (truncated,
// always NUL-terminated when `len > 0`). Returns the full message length
// plus one for the terminator.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
uintptr_t edwsvr_last_error_message(char *buf, uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EDWSVR_H */
