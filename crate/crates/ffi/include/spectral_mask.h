#ifndef SPECTRAL_MASK_H
#define SPECTRAL_MASK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SmStatus {
  SM_STATUS_OK = 0,
  SM_STATUS_NULL_POINTER = 1,
  SM_STATUS_INVALID_PARAMS = 2,
  SM_STATUS_HYPOTHESIS_VIOLATION = 3,
  SM_STATUS_CAPABILITY_EXCEEDED = 4,
  SM_STATUS_QUERY = 5,
  SM_STATUS_INTERNAL = 6,
} SmStatus;

typedef enum SmPart {
  SM_PART_COMPLEX = 0,
  SM_PART_REAL = 1,
  SM_PART_IMAG = 2,
  SM_PART_MODULUS = 3,
  SM_PART_MODULUS_CENTERED = 4,
} SmPart;

typedef enum SmCrossover {
  SM_CROSSOVER_SECOND_FOR_ALL_T = 0,
  SM_CROSSOVER_FIRST_BEYOND_T_STAR = 1,
} SmCrossover;

// Opaque Monte Carlo result, with the inputs needed to reproduce it.
typedef struct SmAccumulator SmAccumulator;

// Opaque exact distribution of one part.
typedef struct SmDistribution SmDistribution;

// Opaque `(N, l, m)` triple.
typedef struct SmParams SmParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread; do not free.
const char *sm_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sm_version(void);

// # Safety
// `s` must come from this library (e.g. [`sm_distribution_to_json`]) and not be freed twice.
void sm_string_free(char *s);

// # Safety
// `out` must be a valid pointer to write a handle into.
enum SmStatus sm_params_new(uint32_t n, uint32_t l, uint32_t m, struct SmParams **out);

// # Safety
// `p` must be NULL or a handle from [`sm_params_new`].
void sm_params_free(struct SmParams *p);

// Exact distribution of `part`. `guard_n` caps `N`; 0 selects the default.
//
// # Safety
// `params` must be a live handle and `out` writable.
enum SmStatus sm_distribution_enumerate(const struct SmParams *params,
                                        enum SmPart part,
                                        uint32_t guard_n,
                                        struct SmDistribution **out);

// # Safety
// `d` must be NULL or a handle from [`sm_distribution_enumerate`].
void sm_distribution_free(struct SmDistribution *d);

// Number of support atoms.
//
// # Safety
// `d` must be a live handle and `out` writable.
enum SmStatus sm_distribution_len(const struct SmDistribution *d, size_t *out);

// Atom `index`: value `(re, im)` and probability. `im` is 0 for real parts.
//
// # Safety
// `d` must be a live handle; the out-pointers must be writable.
enum SmStatus sm_distribution_atom(const struct SmDistribution *d,
                                   size_t index,
                                   double *re,
                                   double *im,
                                   double *prob);

// `E[v^order]`.
//
// # Safety
// `d` must be a live handle and `out` writable.
enum SmStatus sm_distribution_moment(const struct SmDistribution *d, uint32_t order, double *out);

// `P(|v| ≥ t)`.
//
// # Safety
// `d` must be a live handle and `out` writable.
enum SmStatus sm_distribution_tail(const struct SmDistribution *d, double t, double *out);

// `E[exp(v²/K²)]`.
//
// # Safety
// `d` must be a live handle and `out` writable.
enum SmStatus sm_distribution_exp_moment(const struct SmDistribution *d, double k, double *out);

// Orlicz ψ₂ norm with its certified bracket `[lo, hi]`.
//
// # Safety
// `d` must be a live handle; the out-pointers must be writable.
enum SmStatus sm_distribution_psi2(const struct SmDistribution *d,
                                   double tol,
                                   double *norm,
                                   double *lo,
                                   double *hi);

// JSON serialization; release with [`sm_string_free`].
//
// # Safety
// `d` must be a live handle and `out` writable.
enum SmStatus sm_distribution_to_json(const struct SmDistribution *d, char **out);

// Monte Carlo run for one real-valued part, recording moments up to
// `max_order` and tails at `thresholds[0..n_thresholds]`.
//
// # Safety
// `params` must be a live handle, `thresholds` must point to
// `n_thresholds` doubles (or be NULL when it is 0), and `out` writable.
enum SmStatus sm_mc_run(const struct SmParams *params,
                        enum SmPart part,
                        uint64_t samples,
                        uint64_t seed,
                        const double *thresholds,
                        size_t n_thresholds,
                        uint32_t max_order,
                        struct SmAccumulator **out);

// # Safety
// `a` must be NULL or a handle from [`sm_mc_run`].
void sm_accumulator_free(struct SmAccumulator *a);

// Tail estimate at a threshold passed to [`sm_mc_run`], with its CI half-width.
//
// # Safety
// `a` must be a live handle; the out-pointers must be writable.
enum SmStatus sm_accumulator_tail(const struct SmAccumulator *a,
                                  double t,
                                  double *estimate,
                                  double *half_width);

// Raw moment estimate with its CI half-width.
//
// # Safety
// `a` must be a live handle; the out-pointers must be writable.
enum SmStatus sm_accumulator_moment(const struct SmAccumulator *a,
                                    uint32_t order,
                                    double *estimate,
                                    double *half_width);

// Reproducible JSON snapshot; release with [`sm_string_free`].
//
// # Safety
// `a` must be a live handle and `out` writable.
enum SmStatus sm_accumulator_to_json(const struct SmAccumulator *a, char **out);

// Complementary standard normal CDF.
double sm_q_function(double x);

// `2·exp(−4t²/N)` for the real and imaginary parts.
//
// # Safety
// `out` must be writable.
enum SmStatus sm_tail_bound_uv(uint32_t n, double t, double *out);

// `2·exp(−2t²/N)` for the centered modulus.
//
// # Safety
// `out` must be writable.
enum SmStatus sm_tail_bound_mod(uint32_t n, double t, double *out);

// Entropy-type tail bound; needs `m < N/2`.
//
// # Safety
// `out` must be writable.
enum SmStatus sm_tail_bound_entropy(uint32_t n, uint32_t m, double t, double *out);

// Minimum of the two exponential tail bounds; needs `m < N/2`.
//
// # Safety
// `out` must be writable.
enum SmStatus sm_tail_bound_combined(uint32_t n, uint32_t m, double t, double *out);

// Tail bound through the Gaussian Q-function; needs `t > 0`.
//
// # Safety
// `out` must be writable.
enum SmStatus sm_tail_bound_q(uint32_t n, double t, double *out);

// Upper bound on `E[U^{2·order}]`.
//
// # Safety
// `out` must be writable.
enum SmStatus sm_moment_bound(uint32_t n, uint32_t order, double *out);

// Upper bound on `E[exp(U²/K²)]`; needs `K > √N/2`.
//
// # Safety
// `out` must be writable.
enum SmStatus sm_exp_moment_bound(uint32_t n, double k, double *out);

// `√N`-order upper bound on the ψ₂ norm.
//
// # Safety
// `out` must be writable.
enum SmStatus sm_psi2_upper(uint32_t n, double *out);

// `N/√ln 2` upper bound on the ψ₂ norm.
//
// # Safety
// `out` must be writable.
enum SmStatus sm_psi2_sup_upper(uint32_t n, double *out);

// Which exponent of the combined tail bound dominates. `t_star` is NaN
// when the second branch wins for every `t`.
//
// # Safety
// The out-pointers must be writable.
enum SmStatus sm_crossover_region(uint32_t n,
                                  uint32_t m,
                                  enum SmCrossover *kind,
                                  double *t_star,
                                  double *coeff_first,
                                  double *coeff_second);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECTRAL_MASK_H */
