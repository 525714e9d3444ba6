#ifndef SHIDE_H
#define SHIDE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * How the noise half-width is chosen.
 */
typedef enum ShideBandwidthRule {
  /**
   * Use `ShideOptions::h` as given.
   */
  SHIDE_BANDWIDTH_RULE_FIXED = 0,
  /**
   * Asymptotically optimal width with normal-reference curvature.
   */
  SHIDE_BANDWIDTH_RULE_AMISE = 1,
  /**
   * Spacing-percentile rule at `ShideOptions::alpha`.
   */
  SHIDE_BANDWIDTH_RULE_PERCENTILE = 2,
} ShideBandwidthRule;

typedef enum ShideSupportKind {
  SHIDE_SUPPORT_KIND_UNBOUNDED = 0,
  /**
   * `(lower, +inf)`
   */
  SHIDE_SUPPORT_KIND_LOWER_BOUNDED = 1,
  /**
   * `(-inf, upper)`
   */
  SHIDE_SUPPORT_KIND_UPPER_BOUNDED = 2,
  /**
   * `(lower, upper)`
   */
  SHIDE_SUPPORT_KIND_INTERVAL = 3,
} ShideSupportKind;

/**
 * Result code of every fallible call.
 */
typedef enum ShideStatus {
  SHIDE_STATUS_OK = 0,
  SHIDE_STATUS_NULL_POINTER = 1,
  SHIDE_STATUS_INVALID_ARGUMENT = 2,
  SHIDE_STATUS_TOO_FEW_OBSERVATIONS = 3,
  SHIDE_STATUS_NON_FINITE = 4,
  SHIDE_STATUS_OUTSIDE_SUPPORT = 5,
  SHIDE_STATUS_DEGENERATE = 6,
  SHIDE_STATUS_SIGN_DOMAIN = 7,
  SHIDE_STATUS_PANIC = 99,
} ShideStatus;

/**
 * Fitted SHIDE density.
 */
typedef struct ShideDensity ShideDensity;

/**
 * Fitted Gaussian kernel density estimate.
 */
typedef struct ShideKde ShideKde;

/**
 * Estimation settings; obtain defaults from [`shide_options_default`].
 */
typedef struct ShideOptions {
  /**
   * Kernel order, 1 to 30.
   */
  uint32_t k;
  /**
   * Noisy replicates per observation.
   */
  size_t m;
  enum ShideBandwidthRule rule;
  /**
   * Half-width for `SHIDE_BANDWIDTH_RULE_FIXED`.
   */
  double h;
  /**
   * Spacing percentile for `SHIDE_BANDWIDTH_RULE_PERCENTILE`.
   */
  double alpha;
  /**
   * Multiplier on the selected width.
   */
  double c;
  /**
   * Calibrated (`true`) or raw (`false`) percentile rule.
   */
  bool calibrated;
  enum ShideSupportKind support;
  double lower;
  double upper;
  uint64_t seed;
  /**
   * Rescale the fit to unit mass.
   */
  bool normalize;
  /**
   * Fit on the transformed scale for bounded supports.
   */
  bool transformed;
} ShideOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default settings: order 3, ten replicates, AMISE width, unbounded support,
 * seed 0, no normalisation, original scale.
 */
struct ShideOptions shide_options_default(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *shide_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *shide_version(void);

/**
 * Fits a SHIDE density to `n` observations.
 *
 * # Safety
 * `data` must point to `n` readable doubles, `options` may be NULL (defaults)
 * or point to a valid `ShideOptions`, and `out` must be writable. On success
 * `*out` owns a handle to release with [`shide_density_free`].
 */
enum ShideStatus shide_density_new(const double *data,
                                   size_t n,
                                   const struct ShideOptions *options,
                                   struct ShideDensity **out);

/**
 * Density at `x`; NaN for a NULL handle.
 *
 * # Safety
 * `density` must be NULL or a live handle from [`shide_density_new`].
 */
double shide_density_evaluate(const struct ShideDensity *density, double x);

/**
 * Evaluates the density at `n` points into `out`.
 *
 * # Safety
 * `density` must be a live handle; `xs` and `out` must each hold `n` doubles.
 */
enum ShideStatus shide_density_evaluate_many(const struct ShideDensity *density,
                                             const double *xs,
                                             size_t n,
                                             double *out);

/**
 * Noise half-width used by the fit; NaN for a NULL handle.
 *
 * # Safety
 * `density` must be NULL or a live handle.
 */
double shide_density_bandwidth(const struct ShideDensity *density);

/**
 * Histogram bin width used by the fit; NaN for a NULL handle.
 *
 * # Safety
 * `density` must be NULL or a live handle.
 */
double shide_density_bin_width(const struct ShideDensity *density);

/**
 * Releases a handle; NULL is ignored.
 *
 * # Safety
 * `density` must be NULL or a handle not yet freed.
 */
void shide_density_free(struct ShideDensity *density);

/**
 * Fits a Gaussian KDE with bandwidth `h`. With `multiplicative` set the
 * estimator works on `log|x|` and needs single-signed data.
 *
 * # Safety
 * `data` must point to `n` doubles and `out` must be writable. On success
 * `*out` owns a handle to release with [`shide_kde_free`].
 */
enum ShideStatus shide_kde_new(const double *data,
                               size_t n,
                               double h,
                               bool multiplicative,
                               struct ShideKde **out);

/**
 * KDE value at `x`; NaN for a NULL handle.
 *
 * # Safety
 * `kde` must be NULL or a live handle from [`shide_kde_new`].
 */
double shide_kde_evaluate(const struct ShideKde *kde, double x);

/**
 * Evaluates the KDE at `n` points into `out`.
 *
 * # Safety
 * `kde` must be a live handle; `xs` and `out` must each hold `n` doubles.
 */
enum ShideStatus shide_kde_evaluate_many(const struct ShideKde *kde,
                                         const double *xs,
                                         size_t n,
                                         double *out);

/**
 * Releases a handle; NULL is ignored.
 *
 * # Safety
 * `kde` must be NULL or a handle not yet freed.
 */
void shide_kde_free(struct ShideKde *kde);

/**
 * Silverman's rule-of-thumb bandwidth.
 *
 * # Safety
 * `data` must point to `n` doubles and `out` must be writable.
 */
enum ShideStatus shide_bw_silverman(const double *data, size_t n, double *out);

/**
 * Sheather–Jones solve-the-equation bandwidth.
 *
 * # Safety
 * `data` must point to `n` doubles and `out` must be writable.
 */
enum ShideStatus shide_bw_sj(const double *data, size_t n, double *out);

/**
 * Density of the order-`k` noise kernel with half-width `h` at `x`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ShideStatus shide_kernel_pdf(uint32_t k, double h, double x, double *out);

/**
 * Draws `n` values from simulation model `model` (1 to 5) into `out`, using
 * the same stream as `shide sample --seed`.
 *
 * # Safety
 * `out` must hold `n` doubles.
 */
enum ShideStatus shide_sample_model(uint32_t model, size_t n, uint64_t seed, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHIDE_H */
