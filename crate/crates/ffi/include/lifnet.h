#ifndef LIFNET_H
#define LIFNET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes.
 */
typedef enum LifnetStatus {
  LIFNET_STATUS_OK = 0,
  LIFNET_STATUS_NULL_POINTER = 1,
  LIFNET_STATUS_INVALID_ARGUMENT = 2,
  LIFNET_STATUS_NUMERICAL_ERROR = 3,
  LIFNET_STATUS_BUFFER_TOO_SMALL = 4,
  LIFNET_STATUS_DEATH_ONLY = 5,
  LIFNET_STATUS_EMPTY_HISTOGRAM = 6,
  LIFNET_STATUS_PANIC = 7,
} LifnetStatus;

/**
 * Opaque ensemble statistics.
 */
typedef struct LifnetEnsemble LifnetEnsemble;

/**
 * Opaque mean-field trace.
 */
typedef struct LifnetTrace LifnetTrace;

typedef struct LifnetWeightModel {
  double phi;
  double mu;
  /**
   * Probability that a weight is exactly zero.
   */
  double sparsity_p;
  double theta;
} LifnetWeightModel;

typedef struct LifnetMeanFieldParams {
  struct LifnetWeightModel model;
  double gamma;
  double x0;
  /**
   * Nonzero selects the halved-decay recursion (potentials floored at 0).
   */
  bool clamp_at_zero;
  size_t horizon;
} LifnetMeanFieldParams;

typedef struct LifnetSimConfig {
  size_t n;
  struct LifnetWeightModel model;
  double gamma;
  double x0;
  double v_min;
  size_t horizon;
  uint64_t seed;
  bool self_connections;
} LifnetSimConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *lifnet_version(void);

/**
 * Message of the last failure on this thread. Valid until the next failing
 * call on the same thread.
 */
const char *lifnet_last_error_message(void);

/**
 * Upper tail of the standard normal.
 */
double lifnet_gaussian_tail(double z);

/**
 * `(2e/3)^{3/4} pi^{1/4} theta`.
 */
double lifnet_death_threshold(double theta);

/**
 * Zero-mean charge probability.
 */
enum LifnetStatus lifnet_p_phi(double y, const struct LifnetWeightModel *model, double *out);

/**
 * Charge probability with weight mean.
 */
enum LifnetStatus lifnet_p_phi_mu(double y, const struct LifnetWeightModel *model, double *out);

/**
 * Sparse charge probability.
 */
enum LifnetStatus lifnet_p_sparse(double y, const struct LifnetWeightModel *model, double *out);

/**
 * Derivative of the zero-mean charge probability.
 */
enum LifnetStatus lifnet_p_phi_deriv(double y, const struct LifnetWeightModel *model, double *out);

/**
 * Firing probability with a potential floor `v_min <= 0`.
 */
enum LifnetStatus lifnet_charge_prob_vmin(double prior,
                                          double new_charge,
                                          double v_min,
                                          const struct LifnetWeightModel *model,
                                          double *out);

/**
 * Fixed points of the memoryless map, ascending, starting with 0.
 *
 * `values` and `stable` must hold `cap` entries. On success `*out_len` is
 * the number written; with `LIFNET_STATUS_BUFFER_TOO_SMALL` it is the
 * number required.
 */
enum LifnetStatus lifnet_fixed_points(const struct LifnetWeightModel *model,
                                      double *values,
                                      bool *stable,
                                      size_t cap,
                                      size_t *out_len,
                                      bool *death_only);

/**
 * Runs the mean-field recursion. Release the trace with
 * [`lifnet_trace_free`].
 */
enum LifnetStatus lifnet_meanfield_run(const struct LifnetMeanFieldParams *params,
                                       struct LifnetTrace **out);

/**
 * Number of activity values, `horizon + 1`; 0 for a null handle.
 */
size_t lifnet_trace_len(const struct LifnetTrace *trace);

/**
 * Copies `x_0..x_T` into `buf`.
 */
enum LifnetStatus lifnet_trace_activity(const struct LifnetTrace *trace, double *buf, size_t cap);

/**
 * Step at which the trajectory settled, or -1.
 */
enum LifnetStatus lifnet_trace_converged_at(const struct LifnetTrace *trace, int64_t *out);

/**
 * `P(k, t)`; 0 for cohorts not in the table or a null handle.
 */
double lifnet_trace_fire_prob(const struct LifnetTrace *trace, size_t k, size_t t);

void lifnet_trace_free(struct LifnetTrace *trace);

/**
 * Expectation and variance of `X_t` for `t = 0..=horizon`; both buffers
 * need `horizon + 1` entries.
 */
enum LifnetStatus lifnet_moments(const struct LifnetMeanFieldParams *params,
                                 size_t n,
                                 double *expectation,
                                 double *variance,
                                 size_t cap);

/**
 * Probability generating function of `X_t` at `s`, `t <= 20`.
 */
enum LifnetStatus lifnet_pgf_eval(size_t t,
                                  double s,
                                  const struct LifnetMeanFieldParams *params,
                                  size_t n,
                                  double *out);

/**
 * Spike counts `X_0..X_T` of one seeded network; `counts` needs
 * `horizon + 1` entries.
 */
enum LifnetStatus lifnet_simulate_counts(const struct LifnetSimConfig *config,
                                         uint64_t network_index,
                                         uint64_t *counts,
                                         size_t cap);

/**
 * Simulates networks `0..runs`. Release with [`lifnet_ensemble_free`].
 */
enum LifnetStatus lifnet_ensemble_run(const struct LifnetSimConfig *config,
                                      size_t runs,
                                      struct LifnetEnsemble **out);

size_t lifnet_ensemble_len(const struct LifnetEnsemble *e);

enum LifnetStatus lifnet_ensemble_mean_activity(const struct LifnetEnsemble *e,
                                                double *buf,
                                                size_t cap);

enum LifnetStatus lifnet_ensemble_std_activity(const struct LifnetEnsemble *e,
                                               double *buf,
                                               size_t cap);

/**
 * Mean activity over the last 20 steps, averaged over networks.
 */
enum LifnetStatus lifnet_ensemble_asymptote(const struct LifnetEnsemble *e, double *out);

/**
 * Total-variation distance of the pooled ISIs to `Geometric(p)`.
 */
enum LifnetStatus lifnet_ensemble_isi_tv(const struct LifnetEnsemble *e, double p, double *out);

void lifnet_ensemble_free(struct LifnetEnsemble *e);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIFNET_H */
