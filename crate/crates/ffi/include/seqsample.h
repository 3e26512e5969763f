#ifndef SEQSAMPLE_H
#define SEQSAMPLE_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SeqsampleStatus {
  SEQSAMPLE_STATUS_OK = 0,
  SEQSAMPLE_STATUS_NULL_POINTER = 1,
  SEQSAMPLE_STATUS_INVALID_PARAMETER = 2,
  SEQSAMPLE_STATUS_PLAN_NOT_FOUND = 3,
  /**
   * The sequential test has already reached a verdict.
   */
  SEQSAMPLE_STATUS_ALREADY_DECIDED = 4,
  SEQSAMPLE_STATUS_INTERNAL = 5,
} SeqsampleStatus;

typedef enum SeqsampleCase {
  SEQSAMPLE_CASE_I = 1,
  SEQSAMPLE_CASE_II = 2,
} SeqsampleCase;

typedef enum SeqsampleVerdict {
  SEQSAMPLE_VERDICT_CONTINUE = 0,
  SEQSAMPLE_VERDICT_ACCEPT = 1,
  SEQSAMPLE_VERDICT_REJECT = 2,
  SEQSAMPLE_VERDICT_TRUNCATED_ACCEPT = 3,
  SEQSAMPLE_VERDICT_TRUNCATED_REJECT = 4,
} SeqsampleVerdict;

/**
 * Opaque sequential test: a configuration and its current state.
 */
typedef struct SeqsampleSprt SeqsampleSprt;

typedef struct SeqsampleSprtState {
  uint64_t n_seen;
  uint64_t defects;
  double log_lr;
  enum SeqsampleVerdict verdict;
} SeqsampleSprtState;

typedef struct SeqsamplePerformance {
  double accept_prob;
  double reject_prob;
  /**
   * Expected number of items inspected.
   */
  double asn;
} SeqsamplePerformance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *seqsample_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *seqsample_version(void);

/**
 * Sample size `ceil(z² p0 (1−p0) / δ²)`. Pass a NaN `z` to derive it from
 * `alpha` as the upper α/2 normal quantile.
 *
 * # Safety
 * `out_n` must be valid for writes.
 */
enum SeqsampleStatus seqsample_sample_size(double alpha,
                                           double p0,
                                           double delta,
                                           double z,
                                           uint64_t *out_n);

/**
 * Smallest `k` with `P(X ≥ k) ≤ alpha` for X ~ Poisson(n·p0).
 *
 * # Safety
 * `out_k` must be valid for writes.
 */
enum SeqsampleStatus seqsample_rejection_threshold(uint64_t n,
                                                   double p0,
                                                   double alpha,
                                                   uint64_t *out_k);

/**
 * Smallest `k` with `P(X ≤ k−1) ≥ reliability` for X ~ Poisson(n·p0).
 *
 * # Safety
 * `out_k` must be valid for writes.
 */
enum SeqsampleStatus seqsample_acceptance_threshold(uint64_t n,
                                                    double p0,
                                                    double reliability,
                                                    uint64_t *out_k);

/**
 * `P(X ≤ k)` for X ~ Poisson(lambda).
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SeqsampleStatus seqsample_poisson_cdf(uint64_t k, double lambda, double *out);

/**
 * Embedded plan-table cell. Blank cells return `PLAN_NOT_FOUND`.
 *
 * # Safety
 * `out_n` and `out_c` must be valid for writes.
 */
enum SeqsampleStatus seqsample_lookup_plan(uint64_t batch_size,
                                           double aql,
                                           enum SeqsampleCase table,
                                           uint64_t *out_n,
                                           uint64_t *out_c);

/**
 * Sample size for a code letter (`A`–`R`, no `I` or `O`).
 *
 * # Safety
 * `out_n` must be valid for writes.
 */
enum SeqsampleStatus seqsample_code_letter_size(char letter, uint64_t *out_n);

/**
 * Creates a sequential test in its initial state.
 *
 * # Safety
 * `out` must be valid for writes. The handle written there must be released
 * with [`seqsample_sprt_free`].
 */
enum SeqsampleStatus seqsample_sprt_new(double p0,
                                        double p1,
                                        double alpha,
                                        double beta,
                                        uint64_t n_max,
                                        uint64_t k_star,
                                        struct SeqsampleSprt **out);

/**
 * Records one inspected item (`defect` nonzero for a defective one). A test
 * that has already stopped returns `ALREADY_DECIDED` and is left unchanged.
 *
 * # Safety
 * `handle` must come from [`seqsample_sprt_new`] and not be freed;
 * `out_state` may be null.
 */
enum SeqsampleStatus seqsample_sprt_step(struct SeqsampleSprt *handle,
                                         bool defect,
                                         struct SeqsampleSprtState *out_state);

/**
 * Current state of a sequential test.
 *
 * # Safety
 * `handle` must be a live handle; `out_state` must be valid for writes.
 */
enum SeqsampleStatus seqsample_sprt_state(const struct SeqsampleSprt *handle,
                                          struct SeqsampleSprtState *out_state);

/**
 * Wald boundaries `ln A` and `ln B` of the test.
 *
 * # Safety
 * `handle` must be a live handle; both out-pointers must be valid for writes.
 */
enum SeqsampleStatus seqsample_sprt_boundaries(const struct SeqsampleSprt *handle,
                                               double *out_log_a,
                                               double *out_log_b);

/**
 * Exact acceptance probability, rejection probability and expected sample
 * count of the test when each item is defective with probability `true_p`.
 *
 * # Safety
 * `handle` must be a live handle; `out` must be valid for writes.
 */
enum SeqsampleStatus seqsample_sprt_performance(const struct SeqsampleSprt *handle,
                                                double true_p,
                                                struct SeqsamplePerformance *out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `handle` must be null or come from [`seqsample_sprt_new`], and must not be
 * used afterwards.
 */
void seqsample_sprt_free(struct SeqsampleSprt *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEQSAMPLE_H */
