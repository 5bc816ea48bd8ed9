#ifndef CONFHOR_H
#define CONFHOR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ConfhorStatus {
  CONFHOR_STATUS_OK = 0,
  CONFHOR_STATUS_NULL_POINTER = 1,
  CONFHOR_STATUS_INVALID_PARAMETER = 2,
  CONFHOR_STATUS_OUT_OF_RANGE = 3,
  CONFHOR_STATUS_NO_SIGN_CHANGE = 4,
  CONFHOR_STATUS_NOT_TEMPORAL_GAUGE = 5,
  CONFHOR_STATUS_HYPOTHESIS_VIOLATED = 6,
  CONFHOR_STATUS_NON_CONVERGENT = 7,
  CONFHOR_STATUS_NUMERICAL = 8,
  CONFHOR_STATUS_PANIC = 9,
} ConfhorStatus;

typedef enum ConfhorMetric {
  CONFHOR_METRIC_SCHWARZSCHILD = 0,
  CONFHOR_METRIC_REISSNER_NORDSTROM = 1,
  CONFHOR_METRIC_ROBERTS = 2,
  CONFHOR_METRIC_KERR = 3,
  CONFHOR_METRIC_SYNTHETIC = 4,
} ConfhorMetric;

typedef enum ConfhorOutcome {
  CONFHOR_OUTCOME_NAKED = 0,
  CONFHOR_OUTCOME_NOT_NAKED = 1,
  CONFHOR_OUTCOME_INCONCLUSIVE = 2,
} ConfhorOutcome;

// Opaque catalog entry.
typedef struct ConfhorEntry ConfhorEntry;

typedef struct ConfhorMass {
  double m;
  double dm_dw0;
} ConfhorMass;

typedef struct ConfhorBound {
  double m_sq;
  bool mass_converged;
  // `log10 |rhs|`
  double rhs_log10;
  double rhs_sign;
  bool inequality_holds;
  double euler_residual;
} ConfhorBound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a catalog entry. `charge` is used by Reissner-Nordstrom, `spin` by
// Kerr and `sigma` by Roberts; the synthetic entry ignores all parameters.
//
// # Safety
// `out` must be valid for one pointer write.
enum ConfhorStatus confhor_entry_new(enum ConfhorMetric metric,
                                     double mass,
                                     double charge,
                                     double spin,
                                     double sigma,
                                     struct ConfhorEntry **out);

// # Safety
// `entry` is null or a handle from [`confhor_entry_new`] not yet freed.
void confhor_entry_free(struct ConfhorEntry *entry);

// Mass function and `∂m/∂ω⁰` at `omega[0..4]`.
//
// # Safety
// `omega` points to four doubles; `out` is writable.
enum ConfhorStatus confhor_mass(const struct ConfhorEntry *entry,
                                const double *omega,
                                struct ConfhorMass *out);

// `ln X̃(ω¹, θ)`, the log of the horizon height.
//
// # Safety
// `out` is writable.
enum ConfhorStatus confhor_horizon_log(const struct ConfhorEntry *entry,
                                       double omega1,
                                       double theta,
                                       double *out);

// Boundary refinement scan with default settings.
//
// # Safety
// `out` is writable.
enum ConfhorStatus confhor_naked_scan(const struct ConfhorEntry *entry, enum ConfhorOutcome *out);

// Penrose-type bound with `nodes` Gauss nodes per axis (0 for the default).
// A non-convergent total mass is reported in `mass_converged`, not as an
// error.
//
// # Safety
// `out` is writable.
enum ConfhorStatus confhor_penrose(const struct ConfhorEntry *entry,
                                   uint32_t nodes,
                                   struct ConfhorBound *out);

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next call on the same thread.
const char *confhor_last_error(void);

// Library version as a static NUL-terminated string.
const char *confhor_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONFHOR_H */
