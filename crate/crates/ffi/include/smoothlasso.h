#ifndef SMOOTHLASSO_H
#define SMOOTHLASSO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_ARGUMENT = 2,
  SL_STATUS_DIMENSION_MISMATCH = 3,
  SL_STATUS_NOT_APPLICABLE = 4,
  SL_STATUS_NUMERICAL = 5,
  SL_STATUS_PARSE = 6,
  SL_STATUS_IO = 7,
  SL_STATUS_PANIC = 8,
  SL_STATUS_OTHER = 9,
} SlStatus;

typedef enum SlKernel {
  SL_KERNEL_GAUSSIAN = 0,
  SL_KERNEL_EPANECHNIKOV = 1,
  SL_KERNEL_UNIFORM = 2,
} SlKernel;

// A time-course dataset.
typedef struct SlDataset SlDataset;

// Fits of one estimator at every time-point.
typedef struct SlTimeCourseFit SlTimeCourseFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into the library from the same thread.
const char *sl_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sl_version(void);

// Draws a dataset from simulation model 1 or 2.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum SlStatus sl_dataset_simulate(uint8_t model,
                                  size_t n,
                                  size_t p,
                                  double sigma,
                                  size_t n_times,
                                  uint64_t seed,
                                  struct SlDataset **out);

// Reads a dataset CSV.
//
// # Safety
// `path` must be a NUL-terminated string and `out` valid for one write.
enum SlStatus sl_dataset_load(const char *path, struct SlDataset **out);

// Writes a dataset CSV.
//
// # Safety
// `data` must be a live handle and `path` a NUL-terminated string.
enum SlStatus sl_dataset_save(const struct SlDataset *data, const char *path);

// Copies raw arrays into a new dataset. `x` is `n × p`, `y` is `n × n_times`,
// both row-major.
//
// # Safety
// The arrays must hold the stated number of elements.
enum SlStatus sl_dataset_from_arrays(const double *x,
                                     const double *y,
                                     const double *times,
                                     size_t n,
                                     size_t p,
                                     size_t n_times,
                                     struct SlDataset **out);

// # Safety
// `data` must be a live handle; the output pointers may be NULL.
enum SlStatus sl_dataset_dims(const struct SlDataset *data, size_t *n, size_t *p, size_t *n_times);

// Copies the design (row-major, `n × p`) into `out`.
//
// # Safety
// `out` must hold `len` elements.
enum SlStatus sl_dataset_design(const struct SlDataset *data, double *out, size_t len);

// Copies the responses (row-major, `n × n_times`) into `out`.
//
// # Safety
// `out` must hold `len` elements.
enum SlStatus sl_dataset_responses(const struct SlDataset *data, double *out, size_t len);

// # Safety
// `data` must be NULL or a handle not yet freed.
void sl_dataset_free(struct SlDataset *data);

// Lasso on raw arrays. With `standardize` the columns are centered and scaled
// first and the coefficients refer to the standardized columns.
//
// # Safety
// `x` holds `n·p` values, `y` holds `n`, `coefficients` room for `p`.
enum SlStatus sl_lasso_fit(const double *x,
                           const double *y,
                           size_t n,
                           size_t p,
                           double lambda,
                           bool standardize,
                           double *intercept,
                           double *coefficients,
                           bool *converged);

// Adaptive Lasso with weights `1/|beta_init_j|^gamma` on raw arrays.
//
// # Safety
// As [`sl_lasso_fit`]; `beta_init` holds `p` values.
enum SlStatus sl_adaptive_lasso_fit(const double *x,
                                    const double *y,
                                    size_t n,
                                    size_t p,
                                    double lambda,
                                    const double *beta_init,
                                    double gamma,
                                    bool standardize,
                                    double *intercept,
                                    double *coefficients,
                                    bool *converged);

// Tunes estimator `estimator` (1..=7) on `valid` with the default grid and
// fits it on `train`.
//
// # Safety
// `train` and `valid` must be live handles and `out` valid for one write.
enum SlStatus sl_tune_and_fit(const struct SlDataset *train,
                              const struct SlDataset *valid,
                              uint8_t estimator,
                              enum SlKernel kernel,
                              struct SlTimeCourseFit **out);

// # Safety
// `fit` must be a live handle; the output pointers may be NULL.
enum SlStatus sl_fit_dims(const struct SlTimeCourseFit *fit, size_t *n_times, size_t *p);

// Intercept and coefficients (standardized scale) at time-point `r`.
//
// # Safety
// `coefficients` must hold `len` values, `len` equal to the predictor count.
enum SlStatus sl_fit_coefficients(const struct SlTimeCourseFit *fit,
                                  size_t r,
                                  double *intercept,
                                  double *coefficients,
                                  size_t len);

// Final-stage penalty and bandwidth selected at time-point `r`; the
// bandwidth is NaN for unsmoothed estimators.
//
// # Safety
// `fit` must be a live handle; the output pointers may be NULL.
enum SlStatus sl_fit_params(const struct SlTimeCourseFit *fit,
                            size_t r,
                            double *lambda,
                            double *bandwidth);

// # Safety
// `fit` must be NULL or a handle not yet freed.
void sl_fit_free(struct SlTimeCourseFit *fit);

// Runs a benchmark from a JSON configuration (NULL for defaults) and writes
// the report CSV to `out_path`.
//
// # Safety
// Both arguments must be NUL-terminated strings or NULL (config only).
enum SlStatus sl_benchmark(const char *config_json, const char *out_path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMOOTHLASSO_H */
