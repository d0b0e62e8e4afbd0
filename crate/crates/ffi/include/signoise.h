#ifndef SIGNOISE_H
#define SIGNOISE_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SnStatus {
  SN_STATUS_OK = 0,
  SN_STATUS_NULL_POINTER = 1,
  /**
   * Bad argument, length or series content.
   */
  SN_STATUS_INVALID_INPUT = 2,
  /**
   * Singular system, constant data or non-convergence.
   */
  SN_STATUS_NUMERICAL = 3,
  SN_STATUS_PANIC = 4,
} SnStatus;

typedef enum SnModel {
  SN_MODEL_POWER_LAW = 0,
  SN_MODEL_EXPONENTIAL = 1,
} SnModel;

typedef enum SnDomain {
  SN_DOMAIN_FREQUENCY = 0,
  SN_DOMAIN_TIME = 1,
} SnDomain;

/**
 * Opaque designed filter.
 */
typedef struct SnFilter SnFilter;

/**
 * Fitted main sequence. Coefficients are (a, b) for the power law and
 * (v_max, c) for the exponential.
 */
typedef struct SnFit {
  double coeffs[2];
  double ci95_low[2];
  double ci95_high[2];
  double r2;
  double adj_r2;
  size_t n_points;
} SnFit;

typedef struct SnTTest {
  double t;
  size_t df;
  double p_two_tailed;
} SnTTest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL after a
 * success. Valid until the next `sn_*` call on the same thread.
 */
const char *sn_last_error_message(void);

/**
 * Stable identifier of the last error (e.g. "invalid_cutoff"), or NULL
 * after a success. Same lifetime as [`sn_last_error_message`].
 */
const char *sn_last_error_code(void);

/**
 * Butterworth low-pass of `order` at `cutoff_hz` for data sampled at `rate_hz`.
 *
 * # Safety
 * `out_filter` must be valid for a pointer write.
 */
enum SnStatus sn_filter_lowpass(size_t order,
                                double cutoff_hz,
                                double rate_hz,
                                struct SnFilter **out_filter);

/**
 * # Safety
 * `out_filter` must be valid for a pointer write.
 */
enum SnStatus sn_filter_highpass(size_t order,
                                 double cutoff_hz,
                                 double rate_hz,
                                 struct SnFilter **out_filter);

/**
 * # Safety
 * `out_filter` must be valid for a pointer write.
 */
enum SnStatus sn_filter_bandpass(size_t order,
                                 double low_hz,
                                 double high_hz,
                                 double rate_hz,
                                 struct SnFilter **out_filter);

/**
 * Zero-phase (forward-backward) filtering of `len` samples. `input` and
 * `output` may alias.
 *
 * # Safety
 * `filter` must come from an `sn_filter_*` constructor; `input` and
 * `output` must each hold `len` doubles.
 */
enum SnStatus sn_filter_apply(const struct SnFilter *filter,
                              const double *input,
                              size_t len,
                              double *output);

/**
 * Magnitude at `freq_hz`; squared when `zero_phase` is set.
 *
 * # Safety
 * `filter` must be a live handle and `out_magnitude` writable.
 */
enum SnStatus sn_filter_response(const struct SnFilter *filter,
                                 double freq_hz,
                                 bool zero_phase,
                                 double *out_magnitude);

/**
 * Number of second-order sections, or 0 for NULL.
 *
 * # Safety
 * `filter` must be NULL or a live handle.
 */
size_t sn_filter_section_count(const struct SnFilter *filter);

/**
 * # Safety
 * `filter` must be NULL or a handle not yet freed.
 */
void sn_filter_free(struct SnFilter *filter);

/**
 * Savitzky-Golay velocity in units per second. The `window / 2` samples
 * at each end have no estimate and are written as NaN.
 *
 * # Safety
 * `input` and `output` must each hold `len` doubles.
 */
enum SnStatus sn_velocity(const double *input,
                          size_t len,
                          double rate_hz,
                          size_t window,
                          size_t poly_order,
                          double *output);

/**
 * Incremental percent of variance accounted for, regressors entered in
 * order. `regressors` is row-major, `n_regressors` rows of `len` samples.
 * `out_rank_deficient` may be NULL.
 *
 * # Safety
 * `y` holds `len` doubles, `regressors` `n_regressors * len`, and
 * `out_pvaf` `n_regressors`.
 */
enum SnStatus sn_incremental_pvaf(const double *y,
                                  size_t len,
                                  const double *regressors,
                                  size_t n_regressors,
                                  double *out_pvaf,
                                  bool *out_rank_deficient);

/**
 * Least-squares main-sequence fit of peak velocity against amplitude.
 *
 * # Safety
 * `amplitudes` and `velocities` hold `len` doubles; `out_fit` is writable.
 */
enum SnStatus sn_fit_main_sequence(enum SnModel model,
                                   const double *amplitudes,
                                   const double *velocities,
                                   size_t len,
                                   struct SnFit *out_fit);

/**
 * Paired t-test on `x - y`.
 *
 * # Safety
 * `x` and `y` hold `len` doubles; `out_result` is writable.
 */
enum SnStatus sn_paired_t_test(const double *x,
                               const double *y,
                               size_t len,
                               struct SnTTest *out_result);

/**
 * Two-sided Student t tail probability; NaN for `df <= 0`.
 */
double sn_t_two_tailed_p(double t, double df);

/**
 * Lowest sampling rate for a signal whose content reaches `max_freq_hz`.
 *
 * # Safety
 * `out_rate_hz` must be writable.
 */
enum SnStatus sn_min_sampling_rate(double max_freq_hz, enum SnDomain domain, double *out_rate_hz);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIGNOISE_H */
