#include <math.h>
#include <stdio.h>
#include <string.h>

#include "spectral_mask.h"

#define CHECK(cond)                                                      \
  do {                                                                   \
    if (!(cond)) {                                                       \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, #cond); \
      return 1;                                                          \
    }                                                                    \
  } while (0)

int main(void) {
  SmParams *params = NULL;
  CHECK(sm_params_new(2, 1, 1, &params) == SM_STATUS_OK);

  SmDistribution *dist = NULL;
  CHECK(sm_distribution_enumerate(params, SM_PART_REAL, 0, &dist) == SM_STATUS_OK);
  size_t len = 0;
  CHECK(sm_distribution_len(dist, &len) == SM_STATUS_OK && len == 3);

  double norm, lo, hi;
  CHECK(sm_distribution_psi2(dist, 1e-12, &norm, &lo, &hi) == SM_STATUS_OK);
  CHECK(fabs(norm - 1.0 / sqrt(log(3.0))) < 1e-9);

  char *json = NULL;
  CHECK(sm_distribution_to_json(dist, &json) == SM_STATUS_OK);
  CHECK(strstr(json, "\"part\":\"real\"") != NULL);
  sm_string_free(json);
  sm_distribution_free(dist);

  SmParams *bad = NULL;
  CHECK(sm_params_new(4, 9, 1, &bad) == SM_STATUS_INVALID_PARAMS);
  CHECK(sm_last_error_message() != NULL);

  double bound;
  CHECK(sm_tail_bound_entropy(10, 7, 1.0, &bound) == SM_STATUS_HYPOTHESIS_VIOLATION);
  CHECK(sm_psi2_upper(4, &bound) == SM_STATUS_OK && bound > 2.7 && bound < 2.71);

  SmCrossover kind;
  double t_star, cf, cs;
  CHECK(sm_crossover_region(2304, 48, &kind, &t_star, &cf, &cs) == SM_STATUS_OK);
  CHECK(kind == SM_CROSSOVER_SECOND_FOR_ALL_T && isnan(t_star));

  SmAccumulator *acc = NULL;
  double ts[1] = {1.0};
  SmParams *p12 = NULL;
  CHECK(sm_params_new(12, 5, 4, &p12) == SM_STATUS_OK);
  CHECK(sm_mc_run(p12, SM_PART_REAL, 20000, 42, ts, 1, 2, &acc) == SM_STATUS_OK);
  double est, hw;
  CHECK(sm_accumulator_moment(acc, 2, &est, &hw) == SM_STATUS_OK);
  CHECK(fabs(est - 4.0 / 3.0) <= hw);
  CHECK(sm_accumulator_tail(acc, 2.5, &est, &hw) == SM_STATUS_QUERY);

  sm_accumulator_free(acc);
  sm_params_free(p12);
  sm_params_free(params);
  printf("ok %s\n", sm_version());
  return 0;
}
