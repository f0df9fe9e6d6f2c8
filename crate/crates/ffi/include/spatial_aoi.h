#ifndef SPATIAL_AOI_H
#define SPATIAL_AOI_H

#include <stdbool.h>
#include <stdint.h>

typedef enum {
  SA_STATUS_OK = 0,
  SA_STATUS_VALIDATION = 2,
  SA_STATUS_NUMERICAL = 3,
  SA_STATUS_IO = 4,
  SA_STATUS_NULL_POINTER = 5,
  SA_STATUS_PANIC = 6,
} SaStatus;

typedef enum {
  SA_DISCIPLINE_FCFS = 0,
  SA_DISCIPLINE_LCFS_PR = 1,
} SaDiscipline;

typedef enum {
  SA_METHOD_BETA_META = 0,
  SA_METHOD_EXACT_META = 1,
  SA_METHOD_MEAN_APPROX = 2,
} SaMethod;

/**
 * Network and simulation parameters.
 */
typedef struct SaConfig SaConfig;

typedef struct {
  double avg;
  double peak;
} SaAoiPair;

/**
 * Analytical prediction. AoI fields are infinite beyond the critical
 * rate; fields a method does not produce are NaN.
 */
typedef struct {
  double p_s;
  double xi_c;
  double c1;
  double c2;
  double beta_a;
  double beta_b;
  double avg_fcfs;
  double peak_fcfs;
  double avg_lcfs;
  double peak_lcfs;
  uint32_t iterations;
} SaPrediction;

/**
 * Network-level simulation aggregates.
 */
typedef struct {
  uint64_t links;
  double avg_aoi;
  double avg_aoi_hw;
  double peak_aoi;
  double peak_aoi_hw;
  double stable_avg_aoi;
  double stable_peak_aoi;
  double mu_mean;
  double mean_activity;
  double median_queue_slope;
  bool unstable;
} SaSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or an empty
 * string. Valid until the next call into this library on the thread.
 */
const char *sa_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sa_version(void);

/**
 * Configuration with default parameters. Never null.
 */
SaConfig *sa_config_new(void);

/**
 * Parse a TOML configuration into `*out`.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
SaStatus sa_config_from_toml(const char *text, SaConfig **out);

/**
 * # Safety
 * `cfg` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void sa_config_free(SaConfig *cfg);

/**
 * Set a numeric network parameter by its configuration-file name. The
 * configuration is left unchanged if the new value is invalid.
 *
 * # Safety
 * `cfg` must be a valid handle and `name` a NUL-terminated string.
 */
SaStatus sa_config_set(SaConfig *cfg, const char *name, double value);

/**
 * # Safety
 * `cfg` must be a valid handle.
 */
SaStatus sa_config_set_discipline(SaConfig *cfg, SaDiscipline discipline);

/**
 * Simulation size and seed. The warm-up follows the default rule.
 *
 * # Safety
 * `cfg` must be a valid handle.
 */
SaStatus sa_config_set_sim(SaConfig *cfg, uint32_t realizations, uint64_t slots, uint64_t seed);

/**
 * Success probability of the typical active link.
 *
 * # Safety
 * `cfg` must be a valid handle and `out` a valid pointer.
 */
SaStatus sa_solve_ps(const SaConfig *cfg, double *out);

/**
 * Largest stable update rate.
 *
 * # Safety
 * `cfg` must be a valid handle and `out` a valid pointer.
 */
SaStatus sa_critical_xi(const SaConfig *cfg, double *out);

/**
 * Single-link AoI for update rate `xi` and per-slot service probability
 * `service`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
SaStatus sa_cond_aoi(double xi, double service, SaDiscipline discipline, SaAoiPair *out);

/**
 * Network AoI by the chosen method. Rates at or beyond the critical rate
 * succeed with infinite AoI fields.
 *
 * # Safety
 * `cfg` must be a valid handle and `out` a valid pointer.
 */
SaStatus sa_analyze(const SaConfig *cfg, SaMethod method, SaPrediction *out);

/**
 * Monte Carlo simulation of the configured network on `workers` threads.
 *
 * # Safety
 * `cfg` must be a valid handle and `out` a valid pointer.
 */
SaStatus sa_simulate(const SaConfig *cfg,
                     uint32_t workers,
                     bool integrated_fading,
                     SaSimSummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPATIAL_AOI_H */
