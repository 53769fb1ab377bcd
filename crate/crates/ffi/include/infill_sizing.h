#ifndef INFILL_SIZING_H
#define INFILL_SIZING_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * The five model/parameter combinations plus the pooled agnostic curve.
 */
typedef enum IszSpec {
  ISZ_SPEC_INTERCEPT_ONLY = 0,
  ISZ_SPEC_SLOPE_ONLY = 1,
  ISZ_SPEC_FULL_INTERCEPT = 2,
  ISZ_SPEC_FULL_SLOPE = 3,
  ISZ_SPEC_FULL_COVARIANCE = 4,
  ISZ_SPEC_AGNOSTIC = 5,
} IszSpec;

/**
 * Status codes. Zero is success.
 */
typedef enum IszStatus {
  ISZ_STATUS_OK = 0,
  ISZ_STATUS_NULL_POINTER = 1,
  /**
   * An argument is outside its domain.
   */
  ISZ_STATUS_DOMAIN = 2,
  /**
   * The model has no estimator for the requested parameter.
   */
  ISZ_STATUS_INADMISSIBLE = 3,
  /**
   * A closed form or matrix computation lost precision or broke down.
   */
  ISZ_STATUS_NUMERIC = 4,
  /**
   * The target ratio is outside the fitted curve's range.
   */
  ISZ_STATUS_OUT_OF_RANGE = 5,
  ISZ_STATUS_NON_MONOTONE = 6,
  ISZ_STATUS_UNATTAINABLE = 7,
  ISZ_STATUS_OVERFLOW = 8,
  /**
   * Too few or degenerate data rows for a fit.
   */
  ISZ_STATUS_DATA = 9,
  ISZ_STATUS_CONFIG = 10,
  ISZ_STATUS_INDEX_OUT_OF_BOUNDS = 11,
  ISZ_STATUS_PANIC = 12,
  ISZ_STATUS_INTERNAL = 13,
} IszStatus;

/**
 * Which `lambda / n` threshold [`isz_size`] uses.
 */
typedef enum IszThresholdSource {
  /**
   * Taken from the `table` argument.
   */
  ISZ_THRESHOLD_SOURCE_FITTED = 0,
  ISZ_THRESHOLD_SOURCE_PUBLISHED = 1,
  ISZ_THRESHOLD_SOURCE_RULE_OF_THUMB = 2,
} IszThresholdSource;

/**
 * Opaque design handle.
 */
typedef struct IszDesign IszDesign;

/**
 * Opaque threshold table handle.
 */
typedef struct IszThresholdTable IszThresholdTable;

typedef struct IszVariance {
  double actual;
  double limiting;
  /**
   * `limiting / actual`, independent of `sigma2`.
   */
  double ratio;
} IszVariance;

typedef struct IszThreshold {
  enum IszSpec spec;
  double target;
  double x;
  double ci_lo;
  double ci_hi;
  double r2_adj;
  double rmse;
} IszThreshold;

typedef struct IszSizingRequest {
  /**
   * True: `value` is lambda. False: `value` is the SNR.
   */
  bool value_is_lambda;
  double value;
  double sigma2;
  double target;
  enum IszSpec spec;
  enum IszThresholdSource source;
} IszSizingRequest;

typedef struct IszSizingResult {
  double lambda;
  double snr;
  double x;
  double ci_lo;
  double ci_hi;
  size_t n_approx;
  size_t n_exact;
} IszSizingResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *isz_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *isz_version(void);

/**
 * Lag-one correlation `exp(-lambda / (n - 1))` of the sampled OU process.
 *
 * # Safety
 * `out_rho` must be a valid pointer.
 */
enum IszStatus isz_rho(size_t n, double lambda, double *out_rho);

/**
 * Finite-`n` and limiting variance of one estimator, and their ratio.
 * `spec` must not be `Agnostic`.
 *
 * # Safety
 * `out_variance` must be a valid pointer.
 */
enum IszStatus isz_variance(enum IszSpec spec,
                            size_t n,
                            double lambda,
                            double sigma2,
                            struct IszVariance *out_variance);

/**
 * # Safety
 * `out_lambda` must be a valid pointer.
 */
enum IszStatus isz_lambda_from_snr(double snr, double sigma2, double *out_lambda);

/**
 * # Safety
 * `out_snr` must be a valid pointer.
 */
enum IszStatus isz_snr_from_lambda(double lambda, double sigma2, double *out_snr);

/**
 * Smallest `n >= 3` with `lambda / n < x`.
 *
 * # Safety
 * `out_n` must be a valid pointer.
 */
enum IszStatus isz_approx_sample_size(double lambda, double x, size_t *out_n);

/**
 * Smallest `n >= 3` whose exact variance ratio reaches `target`; for
 * `Agnostic`, the largest such `n` over the five specs.
 *
 * # Safety
 * `out_n` must be a valid pointer.
 */
enum IszStatus isz_exact_sample_size(enum IszSpec spec,
                                     double lambda,
                                     double target,
                                     size_t *out_n);

/**
 * Builds a maximin Latin hypercube design. Release it with
 * [`isz_design_free`].
 *
 * # Safety
 * `out_design` must be a valid pointer.
 */
enum IszStatus isz_design_new(size_t points,
                              uint64_t seed,
                              size_t restarts,
                              struct IszDesign **out_design);

/**
 * Number of points after rounding and deduplication; 0 for NULL.
 *
 * # Safety
 * `design` must be NULL or a live handle from [`isz_design_new`].
 */
size_t isz_design_len(const struct IszDesign *design);

/**
 * # Safety
 * `design` must be a live handle; the out-pointers must be valid.
 */
enum IszStatus isz_design_get(const struct IszDesign *design,
                              size_t index,
                              size_t *out_n,
                              double *out_lambda);

/**
 * Minimum pairwise distance and squared centered L2 discrepancy, both on
 * the unit square.
 *
 * # Safety
 * `design` must be a live handle; the out-pointers must be valid.
 */
enum IszStatus isz_design_metrics(const struct IszDesign *design,
                                  double *out_min_distance,
                                  double *out_discrepancy);

/**
 * # Safety
 * `design` must be NULL or a handle from [`isz_design_new`] not yet freed.
 */
void isz_design_free(struct IszDesign *design);

/**
 * Fits the six curves over `design` and solves each at every target.
 * Rows are spec-major: intercept-only, slope-only, full intercept, full
 * slope, full covariance, agnostic. Release with [`isz_thresholds_free`].
 *
 * # Safety
 * `design` must be a live handle, `targets` must point to `n_targets`
 * doubles, and `out_table` must be a valid pointer.
 */
enum IszStatus isz_thresholds_new(const struct IszDesign *design,
                                  const double *targets,
                                  size_t n_targets,
                                  struct IszThresholdTable **out_table);

/**
 * # Safety
 * `table` must be NULL or a live handle.
 */
size_t isz_thresholds_len(const struct IszThresholdTable *table);

/**
 * # Safety
 * `table` must be a live handle and `out_threshold` a valid pointer.
 */
enum IszStatus isz_thresholds_get(const struct IszThresholdTable *table,
                                  size_t index,
                                  struct IszThreshold *out_threshold);

/**
 * # Safety
 * `table` must be NULL or a handle from [`isz_thresholds_new`] not yet
 * freed.
 */
void isz_thresholds_free(struct IszThresholdTable *table);

/**
 * Sample size for one request. `table` is required for the fitted source
 * and ignored otherwise.
 *
 * # Safety
 * `request` and `out_result` must be valid pointers; `table` must be NULL
 * or a live handle.
 */
enum IszStatus isz_size(const struct IszSizingRequest *request,
                        const struct IszThresholdTable *table,
                        struct IszSizingResult *out_result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFILL_SIZING_H */
