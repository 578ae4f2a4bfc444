#ifndef CACHELEARN_H
#define CACHELEARN_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CachelearnStatus {
  CACHELEARN_STATUS_OK = 0,
  CACHELEARN_STATUS_NULL_POINTER = 1,
  CACHELEARN_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Accuracy or free parameters outside the region a bound allows.
   */
  CACHELEARN_STATUS_PARAMETER_DOMAIN = 3,
  CACHELEARN_STATUS_INSUFFICIENT_DATA = 4,
  CACHELEARN_STATUS_IO = 5,
  CACHELEARN_STATUS_PARSE = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  CACHELEARN_STATUS_INTERNAL = 7,
} CachelearnStatus;

/**
 * Opaque request log.
 */
typedef struct CachelearnRequestLog CachelearnRequestLog;

/**
 * Network parameters; units as in the Rust `NetworkConfig`.
 */
typedef struct CachelearnConfig {
  double lambda_u;
  double lambda_s;
  double lambda_b;
  double lambda_r;
  double file_bits;
  double bs_rate;
  double gamma;
  double coverage_radius;
  uint32_t cache_slots;
  uint32_t catalog_size;
} CachelearnConfig;

typedef struct CachelearnBoundQuery {
  struct CachelearnConfig config;
  /**
   * Seconds.
   */
  double epsilon;
  double delta;
  uint64_t m;
  double dist_inf;
  /**
   * 0: sup Σg ≤ N; non-zero: exact supremum.
   */
  uint8_t exact_sup;
} CachelearnBoundQuery;

typedef struct CachelearnBound {
  /**
   * Seconds; `INFINITY` when infeasible.
   */
  double tau;
  /**
   * Nodes/m².
   */
  double density_threshold;
  uint8_t feasible;
} CachelearnBound;

typedef struct CachelearnSourceRequirement {
  uint64_t m_min;
  double dist_condition_rhs;
  double f;
  uint8_t satisfied;
} CachelearnSourceRequirement;

/**
 * Parameter box and gradient bound of a parametric family.
 */
typedef struct CachelearnFamily {
  uint32_t dim;
  double lower;
  double upper;
  double c;
} CachelearnFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *cachelearn_last_error(void);

/**
 * Static, NUL-terminated version string.
 */
const char *cachelearn_version(void);

/**
 * Numerical-results parameter set (N = 10, M = 2).
 */
enum CachelearnStatus cachelearn_config_default(struct CachelearnConfig *out);

enum CachelearnStatus cachelearn_config_validate(const struct CachelearnConfig *cfg);

/**
 * Zipf profile with exponent `theta` over `n` files into `out[0..n]`.
 */
enum CachelearnStatus cachelearn_zipf_profile(size_t n, double theta, double *out);

/**
 * Closed-form offloading loss in seconds for strategy `pi` and profile `p`.
 */
enum CachelearnStatus cachelearn_offloading_loss(const struct CachelearnConfig *cfg,
                                                 const double *pi,
                                                 const double *p,
                                                 size_t len,
                                                 double *out);

enum CachelearnStatus cachelearn_loss_floor(const struct CachelearnConfig *cfg, double *out);

/**
 * Minimizes the offloading loss for profile `p`; writes the strategy to
 * `out_pi[0..len]` and its loss to `out_loss`.
 */
enum CachelearnStatus cachelearn_optimize_caching(const struct CachelearnConfig *cfg,
                                                  const double *p,
                                                  size_t len,
                                                  uint64_t seed,
                                                  double *out_pi,
                                                  double *out_loss);

/**
 * Simulated offloading loss: mean and standard error in seconds.
 */
enum CachelearnStatus cachelearn_monte_carlo_loss(const struct CachelearnConfig *cfg,
                                                  const double *pi,
                                                  const double *p,
                                                  size_t len,
                                                  uint64_t trials,
                                                  uint64_t seed,
                                                  double *out_mean,
                                                  double *out_stderr);

/**
 * Training time for the target-only estimator.
 */
enum CachelearnStatus cachelearn_tau_empirical(const struct CachelearnBoundQuery *q,
                                               struct CachelearnBound *out);

/**
 * Closed-form relaxation of the target-only training time, in seconds.
 */
enum CachelearnStatus cachelearn_tau_empirical_simplified(const struct CachelearnBoundQuery *q,
                                                          double *out);

enum CachelearnStatus cachelearn_tau_per_user(const struct CachelearnBoundQuery *q, double *out);

/**
 * Training time for the pooled transfer-learning estimator.
 */
enum CachelearnStatus cachelearn_tau_tl_pooled(const struct CachelearnBoundQuery *q,
                                               struct CachelearnBound *out);

/**
 * Training time for the convex-combination estimator at `(alpha, eta)`.
 */
enum CachelearnStatus cachelearn_tau_tl_convex(const struct CachelearnBoundQuery *q,
                                               double alpha,
                                               double eta,
                                               struct CachelearnBound *out);

enum CachelearnStatus cachelearn_prop1_check(const struct CachelearnBoundQuery *q,
                                             struct CachelearnSourceRequirement *out);

/**
 * Training time for a parametric family.
 */
enum CachelearnStatus cachelearn_tau_parametric(const struct CachelearnBoundQuery *q,
                                                const struct CachelearnFamily *family,
                                                struct CachelearnBound *out);

/**
 * Training time for the fused parametric estimator; `q->m` source samples.
 */
enum CachelearnStatus cachelearn_tau_parametric_tl(const struct CachelearnBoundQuery *q,
                                                   const struct CachelearnFamily *family,
                                                   double theta_dist,
                                                   double d_t,
                                                   double lambda,
                                                   struct CachelearnBound *out);

/**
 * Simulates requests over `[0, tau]` from profile `p`.
 */
enum CachelearnStatus cachelearn_request_log_generate(const struct CachelearnConfig *cfg,
                                                      const double *p,
                                                      size_t len,
                                                      double tau,
                                                      uint64_t seed,
                                                      struct CachelearnRequestLog **out);

enum CachelearnStatus cachelearn_request_log_load(const char *path_utf8,
                                                  struct CachelearnRequestLog **out);

enum CachelearnStatus cachelearn_request_log_save(const struct CachelearnRequestLog *log,
                                                  const char *path_utf8);

enum CachelearnStatus cachelearn_request_log_total(const struct CachelearnRequestLog *log,
                                                   uint64_t *out);

enum CachelearnStatus cachelearn_request_log_users(const struct CachelearnRequestLog *log,
                                                   uint64_t *out);

/**
 * Relative request frequencies over `n` files into `out[0..n]`.
 */
enum CachelearnStatus cachelearn_request_log_empirical_profile(const struct CachelearnRequestLog *log,
                                                               size_t n,
                                                               double *out);

/**
 * Releases a log; NULL is ignored.
 */
void cachelearn_request_log_free(struct CachelearnRequestLog *log);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CACHELEARN_H */
