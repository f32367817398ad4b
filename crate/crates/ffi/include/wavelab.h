#ifndef WAVELAB_H
#define WAVELAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Values 10 and above mirror the library's error kinds.
 */
typedef enum WlStatus {
  WL_STATUS_OK = 0,
  WL_STATUS_IO = 1,
  WL_STATUS_CONFIG = 2,
  WL_STATUS_NULL_POINTER = 4,
  WL_STATUS_INVALID_UTF8 = 5,
  WL_STATUS_PANIC = 6,
  WL_STATUS_BUFFER_TOO_SMALL = 7,
  WL_STATUS_INVALID_GRID = 10,
  WL_STATUS_INVALID_PARAMETER = 11,
  WL_STATUS_GRID_TOO_COARSE = 12,
  WL_STATUS_BOUNDARY_LEAK = 13,
  WL_STATUS_NOT_NORMALIZED = 14,
  WL_STATUS_ZERO_AMPLITUDE = 15,
  WL_STATUS_GRID_MISMATCH = 16,
  WL_STATUS_TIME_MISMATCH = 17,
  WL_STATUS_SPECIES_MISMATCH = 18,
  WL_STATUS_NO_OVERLAP = 19,
  WL_STATUS_TOO_MANY_PARTS = 20,
  WL_STATUS_EMPTY_AGGREGATE = 21,
  WL_STATUS_NORM_DRIFT = 22,
  WL_STATUS_OFF_GRID = 23,
  WL_STATUS_WIDTH_TOO_SMALL = 24,
  WL_STATUS_ENSEMBLE_TOO_SMALL = 25,
  WL_STATUS_DEGENERATE_AXES = 26,
  WL_STATUS_EMPTY_SOURCE = 27,
  WL_STATUS_OVERFILLED = 28,
  WL_STATUS_DIVERGENT_OCCUPANCY = 29,
} WlStatus;

typedef enum WlEprKind {
  WL_EPR_KIND_P1 = 0,
  WL_EPR_KIND_P2 = 1,
  WL_EPR_KIND_MIXTURE = 2,
} WlEprKind;

typedef enum WlParticleKind {
  WL_PARTICLE_KIND_BOSE = 0,
  WL_PARTICLE_KIND_FERMI = 1,
} WlParticleKind;

typedef enum WlEnsemble {
  WL_ENSEMBLE_CLOSED = 0,
  WL_ENSEMBLE_RESERVOIR = 1,
} WlEnsemble;

/**
 * Opaque wavepacket handle.
 */
typedef struct WlWavepacket WlWavepacket;

typedef struct WlMoments {
  double mean_x;
  double delta_x;
  double mean_p;
  double delta_p;
} WlMoments;

typedef struct WlSgCounts {
  double axis_theta;
  double axis_phi;
  uint64_t n_up;
  uint64_t n_down;
} WlSgCounts;

typedef struct WlDirectionEstimate {
  double theta;
  double phi;
  double cone_halfangle_95;
  double log_likelihood;
} WlDirectionEstimate;

/**
 * `p_split` is read only for [`WlEprKind::Mixture`].
 */
typedef struct WlEprModel {
  enum WlEprKind kind;
  double p_split;
} WlEprModel;

typedef struct WlChshResult {
  double s_hat;
  double s_stderr;
  /**
   * Correlations at (a,b), (a,b'), (a',b), (a',b').
   */
  double e_hat[4];
  bool violates_bell;
} WlChshResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *wl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wl_version(void);

void wl_string_free(char *s);

/**
 * Seed of the stream (master, label, index). A null label is treated as "".
 */
uint64_t wl_derive_seed(uint64_t master, const char *label, uint64_t index);

/**
 * Minimum-uncertainty Gaussian on the grid `origin + i * spacing`.
 */
enum WlStatus wl_wavepacket_gaussian(size_t n_points,
                                     double spacing,
                                     double origin,
                                     double center,
                                     double momentum,
                                     double sigma,
                                     double mass,
                                     const char *species,
                                     struct WlWavepacket **out_packet);

void wl_wavepacket_free(struct WlWavepacket *wp);

struct WlWavepacket *wl_wavepacket_clone(const struct WlWavepacket *wp);

/**
 * Number of grid nodes, or 0 for a null handle.
 */
size_t wl_wavepacket_n_points(const struct WlWavepacket *wp);

double wl_wavepacket_time(const struct WlWavepacket *wp);

uint32_t wl_wavepacket_quanta(const struct WlWavepacket *wp);

/**
 * Copies the amplitudes as interleaved (re, im) pairs; `len` must be at
 * least twice the number of nodes.
 */
enum WlStatus wl_wavepacket_amplitudes(const struct WlWavepacket *wp,
                                       double *out_re_im,
                                       size_t len);

enum WlStatus wl_wavepacket_moments(const struct WlWavepacket *wp, struct WlMoments *out_moments);

enum WlStatus wl_wavepacket_heisenberg(const struct WlWavepacket *wp, double *out_product);

/**
 * Serializes to JSON; release the string with [`wl_string_free`].
 */
enum WlStatus wl_wavepacket_to_json(const struct WlWavepacket *wp, char **out_json);

enum WlStatus wl_wavepacket_from_json(const char *json, struct WlWavepacket **out_packet);

/**
 * Merges `count` overlapping packets; a negative threshold selects the
 * default.
 */
enum WlStatus wl_wavepacket_coalesce(const struct WlWavepacket *const *packets,
                                     size_t count,
                                     double threshold,
                                     struct WlWavepacket **out_packet);

/**
 * Splits into `parts` handles written to `out_parts` (capacity >= parts).
 */
enum WlStatus wl_wavepacket_split(const struct WlWavepacket *wp,
                                  size_t parts,
                                  struct WlWavepacket **out_parts,
                                  size_t capacity);

/**
 * Evolves `n_steps` steps of `dt`. `potential_json` uses the scenario
 * schema (`{"kind": "harmonic", "omega": 1.0}`); null means free.
 */
enum WlStatus wl_evolve(const struct WlWavepacket *wp,
                        const char *potential_json,
                        double dt,
                        size_t n_steps,
                        struct WlWavepacket **out_packet);

/**
 * Width of the packet imaged from `n_particles` emulsion spots.
 */
enum WlStatus wl_emulsion_width(const struct WlWavepacket *wp,
                                size_t n_particles,
                                double delta_t,
                                double reduction_width,
                                size_t acting_quanta,
                                uint64_t seed,
                                double *out_width,
                                double *out_stderr);

enum WlStatus wl_sg_up_probability(double theta,
                                   double phi,
                                   double axis_theta,
                                   double axis_phi,
                                   double *out_probability);

enum WlStatus wl_sg_simulate(double theta,
                             double phi,
                             double axis_theta,
                             double axis_phi,
                             uint64_t n,
                             uint64_t seed,
                             struct WlSgCounts *out_counts);

enum WlStatus wl_sg_estimate(const struct WlSgCounts *counts,
                             size_t len,
                             struct WlDirectionEstimate *out_estimate);

/**
 * Joint probability of outcomes `r_a`, `r_b` (each +1 or -1).
 */
enum WlStatus wl_epr_joint_probability(struct WlEprModel model,
                                       int32_t r_a,
                                       int32_t r_b,
                                       double zeta,
                                       double *out_probability);

enum WlStatus wl_epr_correlation(struct WlEprModel model, double zeta, double *out_e);

enum WlStatus wl_epr_chsh(struct WlEprModel model,
                          double a,
                          double a_prime,
                          double b,
                          double b_prime,
                          uint64_t n_per_setting,
                          uint64_t seed,
                          struct WlChshResult *out_result);

enum WlStatus wl_epr_p_split(double mu, double distance, double *out_p_split);

enum WlStatus wl_analytic_occupancy(enum WlParticleKind kind,
                                    double beta,
                                    double energy,
                                    double mu,
                                    double *out_occupancy);

/**
 * Runs the balance chain over `n_modes` modes. Each output array must hold
 * `n_modes` values; any of them may be null.
 */
enum WlStatus wl_balance_simulate(enum WlParticleKind kind,
                                  enum WlEnsemble ensemble,
                                  const double *energies,
                                  size_t n_modes,
                                  double beta,
                                  double chemical_potential,
                                  uint64_t total_quanta,
                                  uint64_t n_steps,
                                  uint64_t burn_in,
                                  uint64_t seed,
                                  double *out_mean,
                                  double *out_stderr,
                                  double *out_analytic);

/**
 * Runs a scenario file. `out_dir` may be null to use the scenario's own
 * path; `seed` overrides the scenario seed when `override_seed` is true.
 * The run directory is written to `out_run_dir` if it is not null.
 */
enum WlStatus wl_run_scenario(const char *scenario_path,
                              const char *out_dir,
                              bool force,
                              bool override_seed,
                              uint64_t seed,
                              size_t threads,
                              char **out_run_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WAVELAB_H */
