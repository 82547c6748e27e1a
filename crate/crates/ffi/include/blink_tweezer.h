#ifndef BLINK_TWEEZER_H
#define BLINK_TWEEZER_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum BtStatus {
  BT_STATUS_OK = 0,
  BT_STATUS_INVALID_ARGUMENT = 1,
  BT_STATUS_SINGULAR = 2,
  BT_STATUS_CAPACITY = 3,
  BT_STATUS_SPEED = 4,
  BT_STATUS_CONSTRAINT = 5,
  BT_STATUS_RANGE = 6,
  BT_STATUS_CONFIG = 7,
  BT_STATUS_NUMERIC = 8,
  BT_STATUS_IO = 9,
  BT_STATUS_NULL_POINTER = 10,
  BT_STATUS_UTF8 = 11,
  BT_STATUS_PANIC = 12,
} BtStatus;

/**
 * A compiled rearrangement schedule.
 */
typedef struct BtSchedule BtSchedule;

/**
 * Heatmap simulation settings, created from a JSON config.
 */
typedef struct BtSimConfig BtSimConfig;

/**
 * A band of on-times in seconds. `empty` is nonzero when no admissible
 * on-time exists.
 */
typedef struct BtBand {
  double t_on_min;
  double t_on_max;
  bool empty;
} BtBand;

/**
 * A 2x2 phase-space map `[[a, b], [c, d]]`.
 */
typedef struct BtMap {
  double a;
  double b;
  double c;
  double d;
} BtMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *bt_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bt_version(void);

/**
 * Frees a string returned by this library. Null is ignored.
 */
void bt_string_free(char *s);

enum BtStatus bt_resonant_ton_np1(double omega, double t_off, uint32_t k, double *t_on);

/**
 * Both two-cycle resonances. Fails with `SINGULAR` at `omega * t_off = 1`.
 */
enum BtStatus bt_resonant_ton_np2(double omega, double t_off, double *t_on_a, double *t_on_b);

enum BtStatus bt_admissible_band(double omega,
                                 double t_off,
                                 uint32_t k,
                                 uint32_t n_p,
                                 struct BtBand *band);

enum BtStatus bt_is_periodic(double omega,
                             double t_on,
                             double t_off,
                             uint32_t n_p,
                             double tol,
                             bool *periodic,
                             double *residual);

enum BtStatus bt_max_atoms(double t_on, double t_off, uint32_t *m);

/**
 * Worst-case survival for a harmonic trap of frequency `omega` (rad/s) and
 * cutoff `d` (m), Rb-87 at `temperature` (K).
 */
enum BtStatus bt_worst_survival(double omega,
                                double d,
                                double temperature,
                                double alpha,
                                double t_off,
                                uint32_t n_p,
                                double *p);

enum BtStatus bt_omega_from_trap(double depth_u0, double d, double mass, double *omega);

enum BtStatus bt_rotation_map(double theta, struct BtMap *map);

enum BtStatus bt_shear_map(double s, struct BtMap *map);

/**
 * One blinking period `T(ω t_off) R(−ω t_on)`.
 */
enum BtStatus bt_cycle_map(double omega, double t_on, double t_off, struct BtMap *map);

enum BtStatus bt_map_multiply(struct BtMap lhs, struct BtMap rhs, struct BtMap *product);

enum BtStatus bt_spectral_norm(struct BtMap map, double *norm);

/**
 * Parses a heatmap config (the `mc` JSON format).
 */
enum BtStatus bt_sim_config_from_json(const char *json, struct BtSimConfig **handle);

/**
 * Number of grid cells the config describes.
 */
enum BtStatus bt_sim_cell_count(const struct BtSimConfig *handle, size_t *count);

/**
 * Runs the heatmap and writes `len` survival values and standard errors,
 * row-major with `t_on` as the row. `len` must equal the cell count.
 */
enum BtStatus bt_sim_run(const struct BtSimConfig *handle, double *p, double *stderr, size_t len);

void bt_sim_config_free(struct BtSimConfig *handle);

/**
 * JSON (micrometre units) for a built-in scenario: `rotation`, `vacancy`,
 * `worm` or `fall`, on a lattice of pitch `lattice_constant` (m). Free the result with [`bt_string_free`].
 */
enum BtStatus bt_builtin_scenario_json(const char *name,
                                       double lattice_constant,
                                       char **json);

/**
 * Compiles a scenario (micrometre JSON) into a schedule. `n_slots` of 0
 * or 1 picks as many slots as the timing allows.
 */
enum BtStatus bt_schedule_compile(const char *scenario_json,
                                  double t_on,
                                  double t_off,
                                  uint32_t n_blink,
                                  uint32_t n_slots,
                                  double v_max,
                                  struct BtSchedule **handle);

enum BtStatus bt_schedule_cycle_count(const struct BtSchedule *handle, uint32_t *count);

/**
 * Counts constraint violations (none means feasible). Lengths in m,
 * speeds in m/s, times in s.
 */
enum BtStatus bt_schedule_validate(const struct BtSchedule *handle,
                                   double v_max,
                                   double min_site_separation,
                                   double rise_time,
                                   size_t *violations);

/**
 * Schedule as JSON (SI units). Free the result with [`bt_string_free`].
 */
enum BtStatus bt_schedule_to_json(const struct BtSchedule *handle, char **json);

void bt_schedule_free(struct BtSchedule *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLINK_TWEEZER_H */
