#ifndef SURPRISAL_H
#define SURPRISAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SurprisalStatus {
  SURPRISAL_STATUS_OK = 0,
  SURPRISAL_STATUS_NULL_POINTER = 1,
  SURPRISAL_STATUS_INVALID_DISTRIBUTION = 2,
  SURPRISAL_STATUS_DOMAIN = 3,
  SURPRISAL_STATUS_FORMAT = 4,
  SURPRISAL_STATUS_INCONSISTENT = 5,
  SURPRISAL_STATUS_IO = 6,
  SURPRISAL_STATUS_PANIC = 7,
} SurprisalStatus;

typedef enum SurprisalMethod {
  SURPRISAL_METHOD_DEFICIENCY = 0,
  SURPRISAL_METHOD_HOLENSTEIN_RENNER = 1,
} SurprisalMethod;

// Opaque two-level distribution.
typedef struct SurprisalTwoLevel SurprisalTwoLevel;

// A min-entropy certificate. Entropies and deviations are in nats.
typedef struct SurprisalCertificate {
  uint64_t n;
  uint32_t alphabet_bits;
  double delta_def;
  double epsilon;
  double deviation_t;
  double min_entropy_bound;
  // Bits per symbol.
  double rate_per_symbol;
} SurprisalCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *surprisal_last_error(void);

// Shannon entropy in nats.
//
// # Safety
// `weights` must point to `len` doubles; `out` must be writable.
enum SurprisalStatus surprisal_shannon_entropy(const double *weights, size_t len, double *out);

// Rényi entropy of order `alpha` in nats.
//
// # Safety
// `weights` must point to `len` doubles; `out` must be writable.
enum SurprisalStatus surprisal_renyi_entropy(const double *weights,
                                             size_t len,
                                             double alpha,
                                             double *out);

// Min-entropy in nats.
//
// # Safety
// `weights` must point to `len` doubles; `out` must be writable.
enum SurprisalStatus surprisal_min_entropy(const double *weights, size_t len, double *out);

// Two-level distribution over `alphabet_size` symbols with heavy mass `theta`.
//
// # Safety
// `out` must be writable. Free the handle with [`surprisal_two_level_free`].
enum SurprisalStatus surprisal_two_level_from_theta(uint64_t alphabet_size,
                                                    double theta,
                                                    struct SurprisalTwoLevel **out);

// Worst-case two-level distribution over `2^alphabet_bits` symbols with
// deficiency `delta_def` nats.
//
// # Safety
// `out` must be writable. Free the handle with [`surprisal_two_level_free`].
enum SurprisalStatus surprisal_two_level_from_deficiency(uint32_t alphabet_bits,
                                                         double delta_def,
                                                         struct SurprisalTwoLevel **out);

// Worst-case two-level distribution over `2^alphabet_bits` symbols with
// Shannon entropy `k` nats.
//
// # Safety
// `out` must be writable. Free the handle with [`surprisal_two_level_free`].
enum SurprisalStatus surprisal_two_level_from_entropy(uint32_t alphabet_bits,
                                                      double k,
                                                      struct SurprisalTwoLevel **out);

// # Safety
// `h` must be null or a live handle; it is invalid afterwards.
void surprisal_two_level_free(struct SurprisalTwoLevel *h);

// Heavy-atom probability, or NaN for a null handle.
//
// # Safety
// `h` must be null or a live handle.
double surprisal_two_level_theta(const struct SurprisalTwoLevel *h);

// Deficiency in nats, or NaN for a null handle.
//
// # Safety
// `h` must be null or a live handle.
double surprisal_two_level_deficiency(const struct SurprisalTwoLevel *h);

// Shannon entropy in nats, or NaN for a null handle.
//
// # Safety
// `h` must be null or a live handle.
double surprisal_two_level_shannon(const struct SurprisalTwoLevel *h);

// Min-entropy in nats, or NaN for a null handle.
//
// # Safety
// `h` must be null or a live handle.
double surprisal_two_level_min_entropy(const struct SurprisalTwoLevel *h);

// Rényi entropy of order `alpha` in nats.
//
// # Safety
// `h` must be a live handle; `out` must be writable.
enum SurprisalStatus surprisal_two_level_renyi(const struct SurprisalTwoLevel *h,
                                               double alpha,
                                               double *out);

// `E exp(t (H - surprise))` for `t >= -1`.
//
// # Safety
// `h` must be a live handle; `out` must be writable.
enum SurprisalStatus surprisal_two_level_mgf(const struct SurprisalTwoLevel *h,
                                             double t,
                                             double *out);

// Smallest Rényi entropy of order `alpha > 1`, in nats, over `2^alphabet_bits`
// symbols with Shannon entropy `k` nats.
//
// # Safety
// `out` must be writable.
enum SurprisalStatus surprisal_worst_renyi(uint32_t alphabet_bits,
                                           double k,
                                           double alpha,
                                           double *out);

// One-sided tail bound for `n` samples with deficiency `delta_def` nats at
// total deviation `t` nats.
//
// # Safety
// `out` must be writable.
enum SurprisalStatus surprisal_tail_epsilon(uint64_t n,
                                            uint32_t alphabet_bits,
                                            double delta_def,
                                            double t,
                                            double *out);

// Min-entropy certificate for `n` samples over `2^alphabet_bits` symbols.
// `method` is a [`SurprisalMethod`] value; `hr_constant` is used only by the
// Holenstein-Renner method.
//
// # Safety
// `out` must be writable.
enum SurprisalStatus surprisal_certificate(uint64_t n,
                                           uint32_t alphabet_bits,
                                           double delta_def,
                                           double epsilon,
                                           uint32_t method,
                                           double hr_constant,
                                           struct SurprisalCertificate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SURPRISAL_H */
