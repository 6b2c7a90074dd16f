#ifndef PIZZAQUAD_H
#define PIZZAQUAD_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PqStatus {
  PQ_STATUS_OK = 0,
  PQ_STATUS_NULL_POINTER = 1,
  PQ_STATUS_INVALID_ARGUMENT = 2,
  PQ_STATUS_INVALID_CONFIG = 3,
  PQ_STATUS_IO = 4,
  PQ_STATUS_SCHEMA = 5,
  /**
   * Divergence or non-finite tensors.
   */
  PQ_STATUS_NUMERIC = 6,
  /**
   * A cluster could not be turned into a quadrature scheme.
   */
  PQ_STATUS_ANALYSIS = 7,
  PQ_STATUS_MISSING_DATA = 8,
  PQ_STATUS_BUFFER_TOO_SMALL = 9,
  PQ_STATUS_PANIC = 99,
} PqStatus;

typedef enum PqVariant {
  PQ_VARIANT_RELU = 0,
  PQ_VARIANT_ABS = 1,
  PQ_VARIANT_IDENTITY = 2,
  PQ_VARIANT_SECONDARY = 3,
} PqVariant;

typedef enum PqPeriod {
  PQ_PERIOD_FULL = 0,
  PQ_PERIOD_HALF = 1,
} PqPeriod;

/**
 * Opaque analysis-report handle.
 */
typedef struct PqReport PqReport;

/**
 * Opaque trained-model handle.
 */
typedef struct PqWeights PqWeights;

/**
 * Bound components of one (frequency, variant, period) entry.
 */
typedef struct PqBound {
  size_t n_boxes;
  double eps_approx_int;
  double eps_phi;
  double eps_0;
  /**
   * NaN when the baseline is zero.
   */
  double relative_total;
} PqBound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread; do not free.
 */
const char *pq_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pq_version(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from a `pq_*` function documented as returning an owned
 * string, and must not be freed twice.
 */
void pq_string_free(char *s);

/**
 * Loads weights from a JSON file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum PqStatus pq_weights_load(const char *path, struct PqWeights **out);

/**
 * Parses weights from a JSON document.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum PqStatus pq_weights_from_json(const char *json, struct PqWeights **out);

/**
 * Trains a model. `config_json` is a model config object; missing fields
 * take their defaults, so `"{}"` trains the standard model.
 *
 * # Safety
 * `config_json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum PqStatus pq_train(const char *config_json, struct PqWeights **out);

/**
 * # Safety
 * `w` must be null or a handle from this library that has not been freed.
 */
void pq_weights_free(struct PqWeights *w);

/**
 * Modulus of the model, or 0 for a null handle.
 *
 * # Safety
 * `w` must be null or a live handle.
 */
size_t pq_weights_modulus(const struct PqWeights *w);

/**
 * Weights serialized as JSON; free with [`pq_string_free`].
 *
 * # Safety
 * `w` must be a live handle and `out` a valid pointer.
 */
enum PqStatus pq_weights_to_json(const struct PqWeights *w, char **out);

/**
 * Writes the `p` logits for the input `a b =` into `logits[0..p]`.
 *
 * # Safety
 * `w` must be a live handle; `logits` must point to `len` writable doubles.
 */
enum PqStatus pq_forward(const struct PqWeights *w, size_t a, size_t b, double *logits, size_t len);

/**
 * Runs the full analysis with both variants and both periods.
 *
 * # Safety
 * `w` must be a live handle and `out` a valid pointer.
 */
enum PqStatus pq_analyze(const struct PqWeights *w, struct PqReport **out);

/**
 * # Safety
 * `r` must be null or a handle from this library that has not been freed.
 */
void pq_report_free(struct PqReport *r);

/**
 * Copies up to `len` key frequencies into `freqs` and stores the total count
 * in `count`. Pass `freqs = null, len = 0` to query the count.
 *
 * # Safety
 * `r` must be a live handle; `freqs` must point to `len` writable values
 * unless `len` is 0; `count` must be valid.
 */
enum PqStatus pq_report_key_freqs(const struct PqReport *r,
                                  size_t *freqs,
                                  size_t len,
                                  size_t *count);

/**
 * Bound entry for frequency `k`.
 *
 * # Safety
 * `r` must be a live handle and `out` a valid pointer.
 */
enum PqStatus pq_report_bound(const struct PqReport *r,
                              size_t k,
                              enum PqVariant variant,
                              enum PqPeriod period,
                              struct PqBound *out);

/**
 * Brute-force maximum relative error for frequency `k`.
 *
 * # Safety
 * `r` must be a live handle and `out` a valid pointer.
 */
enum PqStatus pq_report_actual_error(const struct PqReport *r,
                                     size_t k,
                                     enum PqVariant variant,
                                     double *out);

/**
 * 1 if the structural criteria hold, 0 otherwise (including null).
 *
 * # Safety
 * `r` must be null or a live handle.
 */
int32_t pq_report_good_model(const struct PqReport *r);

/**
 * 1 if soundness and the exact logit decomposition hold, 0 otherwise.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
int32_t pq_report_sound(const struct PqReport *r);

/**
 * The report as JSON; free with [`pq_string_free`].
 *
 * # Safety
 * `r` must be a live handle and `out` a valid pointer.
 */
enum PqStatus pq_report_to_json(const struct PqReport *r, char **out);

/**
 * Exact integral of the variant's integrand for tokens `(a, b, c)` at frequency `k`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PqStatus pq_closed_form(enum PqVariant variant,
                             size_t k,
                             size_t p,
                             size_t a,
                             size_t b,
                             size_t c,
                             double *out);

/**
 * Midpoint-rule integral of the same integrand with `n_points` nodes.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PqStatus pq_numeric_integral(enum PqVariant variant,
                                  size_t k,
                                  size_t p,
                                  size_t a,
                                  size_t b,
                                  size_t c,
                                  size_t n_points,
                                  double *out);

/**
 * Bound for a scheme of `n` equal boxes with exact phases.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PqStatus pq_uniform_bound(size_t n,
                               enum PqVariant variant,
                               enum PqPeriod period,
                               size_t p,
                               struct PqBound *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PIZZAQUAD_H */
