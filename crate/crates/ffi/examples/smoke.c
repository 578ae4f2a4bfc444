/* Minimal consumer of the C ABI: default config, Zipf profile, optimized
 * caching loss, training-time bound and a simulated request log. */
#include <math.h>
#include <stdio.h>

#include "cachelearn.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    CachelearnStatus s_ = (call);                                          \
    if (s_ != CACHELEARN_STATUS_OK) {                                      \
      fprintf(stderr, "%s failed (%d): %s\n", #call, (int)s_,              \
              cachelearn_last_error());                                    \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  CachelearnConfig cfg;
  CHECK(cachelearn_config_default(&cfg));

  double p[10], pi[10], loss, floor_s;
  CHECK(cachelearn_zipf_profile(10, 0.8, p));
  CHECK(cachelearn_optimize_caching(&cfg, p, 10, 0, pi, &loss));
  CHECK(cachelearn_loss_floor(&cfg, &floor_s));

  CachelearnBoundQuery q = {cfg, 0.6 * floor_s, 0.02, 0, 0.0, 0};
  CachelearnBound b;
  CHECK(cachelearn_tau_empirical(&q, &b));

  CachelearnRequestLog *log = NULL;
  uint64_t total = 0;
  double est[10];
  CHECK(cachelearn_request_log_generate(&cfg, p, 10, b.tau, 7, &log));
  CHECK(cachelearn_request_log_total(log, &total));
  CHECK(cachelearn_request_log_empirical_profile(log, 10, est));
  cachelearn_request_log_free(log);

  if (cachelearn_tau_tl_convex(&q, 2.0, 0.0, &b) != CACHELEARN_STATUS_PARAMETER_DOMAIN) {
    fprintf(stderr, "expected a parameter-domain error\n");
    return 1;
  }

  printf("loss=%.6f floor=%.6f tau=%.6f requests=%llu p1_hat=%.4f\n", loss, floor_s,
         b.tau, (unsigned long long)total, est[0]);
  return loss >= floor_s && isfinite(b.tau) ? 0 : 1;
}
