#ifndef SAFECOVER_H
#define SAFECOVER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum ScStatus {
  SC_STATUS_OK = 0,
  SC_STATUS_NULL_ARGUMENT = 1,
  SC_STATUS_INVALID_UTF8 = 2,
  SC_STATUS_INVALID_POLYGON = 3,
  SC_STATUS_INVALID_PARAMS = 4,
  SC_STATUS_NON_FINITE = 5,
  SC_STATUS_SINGULAR_TRANSFORM = 6,
  SC_STATUS_DEGENERATE = 7,
  SC_STATUS_OUT_OF_BOUNDS = 8,
  SC_STATUS_GRID_FORMAT = 9,
  SC_STATUS_CONFIG = 10,
  SC_STATUS_UNKNOWN_SCENARIO = 11,
  SC_STATUS_IO = 12,
  SC_STATUS_CSV = 13,
  SC_STATUS_BUFFER_TOO_SMALL = 14,
  SC_STATUS_PANIC = 15,
} ScStatus;

// Collision-avoidance mode selected by [`sc_scenario_set_safety`].
typedef enum ScSafety {
  SC_SAFETY_OFF = 0,
  SC_SAFETY_ANALYTIC = 1,
  SC_SAFETY_GRID = 2,
} ScSafety;

// Opaque value-grid handle.
typedef struct ScGrid ScGrid;

// Opaque handle to a finished run.
typedef struct ScRun ScRun;

// Opaque scenario handle.
typedef struct ScScenario ScScenario;

// Fixed-wing input and speed limits.
typedef struct ScFwLimits {
  double s_min;
  double s_max;
  double u_theta_max;
  double u_s_max;
} ScFwLimits;

// End-of-run digest.
typedef struct ScSummary {
  uintptr_t n;
  uintptr_t steps;
  uintptr_t collision_events;
  bool final_cover;
  bool final_cover_exact;
  double final_min_pairwise;
  double final_max_signed_dist;
  double final_flock_pos_sum;
  double final_flock_vel_sum;
  double final_max_rel_speed;
  double final_energy;
  double wall_time_s;
} ScSummary;

// One logged vehicle state. `a, b` are `(vx, vy)` for double integrators
// and `(theta, s)` for fixed-wing vehicles; `u0, u1` are the applied
// inputs in the same convention. `avoiding` is the index of the vehicle
// being avoided, or -1 in coverage mode.
typedef struct ScRecord {
  double t;
  uintptr_t id;
  double x;
  double y;
  double a;
  double b;
  double u0;
  double u1;
  int64_t avoiding;
} ScRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sc_version(void);

// Message of the last failed call on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *sc_last_error(void);

// Builtin scenario by name (`square`, `square_<n>`, `triangle`, ...).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum ScStatus sc_scenario_builtin(const char *name, struct ScScenario **out);

// Scenario parsed from TOML text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum ScStatus sc_scenario_from_toml(const char *text, struct ScScenario **out);

// Scenario read from a TOML file; relative grid paths resolve against the
// file's directory.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum ScStatus sc_scenario_from_file(const char *path, struct ScScenario **out);

// # Safety
// `scenario` must come from an `sc_scenario_*` constructor or be NULL.
void sc_scenario_free(struct ScScenario *scenario);

// Number of vehicles, or 0 for NULL.
//
// # Safety
// `scenario` must be a live handle or NULL.
uintptr_t sc_scenario_vehicle_count(const struct ScScenario *scenario);

// True for fixed-wing scenarios.
//
// # Safety
// `scenario` must be a live handle or NULL.
bool sc_scenario_is_fixed_wing(const struct ScScenario *scenario);

// # Safety
// `scenario` must be a live handle.
enum ScStatus sc_scenario_set_seed(struct ScScenario *scenario, uint64_t seed);

// Sets the step and final time; the scenario is left unchanged when the
// new values are invalid.
//
// # Safety
// `scenario` must be a live handle.
enum ScStatus sc_scenario_set_horizon(struct ScScenario *scenario, double dt, double t_end);

// Selects the avoidance mode. `grid_path` is only read for
// `SC_SAFETY_GRID` and may be NULL to solve the default grid at run time.
//
// # Safety
// `scenario` must be a live handle; `grid_path` NULL or NUL-terminated.
enum ScStatus sc_scenario_set_safety(struct ScScenario *scenario,
                                     enum ScSafety safety,
                                     const char *grid_path);

// Writes the scenario as TOML into `buf` (NUL-terminated). `needed`
// receives the required size including the NUL; with a short buffer the
// call fails with `SC_STATUS_BUFFER_TOO_SMALL` and writes nothing.
//
// # Safety
// `buf` must hold `len` bytes or be NULL with `len == 0`; `needed` may be NULL.
enum ScStatus sc_scenario_to_toml(const struct ScScenario *scenario,
                                  char *buf,
                                  uintptr_t len,
                                  uintptr_t *needed);

// Solves the fixed-wing time-to-reach grid on the default resolution.
//
// # Safety
// `limits` and `out` must be valid pointers.
enum ScStatus sc_grid_solve_default(double c_r,
                                    const struct ScFwLimits *limits,
                                    struct ScGrid **out);

// # Safety
// `path` must be NUL-terminated and `out` a valid pointer.
enum ScStatus sc_grid_load(const char *path, struct ScGrid **out);

// # Safety
// `grid` must be a live handle and `path` NUL-terminated.
enum ScStatus sc_grid_save(const struct ScGrid *grid, const char *path);

// # Safety
// `grid` must come from an `sc_grid_*` constructor or be NULL.
void sc_grid_free(struct ScGrid *grid);

// Interpolated time to reach at the relative state `x[0..5]`
// (`x1, x2, heading difference, evader speed, pursuer speed`).
//
// # Safety
// `grid` must be a live handle, `x` point to 5 doubles and `out` be valid.
enum ScStatus sc_grid_query(const struct ScGrid *grid, const double *x, double *out);

// Closed-form double-integrator time to collision of the relative state
// `p = (px, py)`, `v = (vx, vy)`; `+inf` when no collision lies ahead.
double sc_time_to_collision(double px, double py, double vx, double vy, double c_r);

// Runs a scenario. `grid` may be NULL; grid-safety scenarios then load
// or solve their own grid.
//
// # Safety
// `scenario` must be a live handle, `grid` a live handle or NULL, `out` valid.
enum ScStatus sc_run(const struct ScScenario *scenario,
                     const struct ScGrid *grid,
                     struct ScRun **out);

// # Safety
// `run` must come from [`sc_run`] or be NULL.
void sc_run_free(struct ScRun *run);

// # Safety
// `run` must be a live handle and `out` valid.
enum ScStatus sc_run_summary(const struct ScRun *run, struct ScSummary *out);

// Number of trajectory records, or 0 for NULL.
//
// # Safety
// `run` must be a live handle or NULL.
uintptr_t sc_run_record_count(const struct ScRun *run);

// Copies up to `len` records starting at `offset` into `buf`; `written`
// receives the number copied.
//
// # Safety
// `run` must be a live handle, `buf` hold `len` records and `written` be valid.
enum ScStatus sc_run_records(const struct ScRun *run,
                             uintptr_t offset,
                             struct ScRecord *buf,
                             uintptr_t len,
                             uintptr_t *written);

// Writes the run directory (CSV files, summary and scenario echo).
//
// # Safety
// `run` must be a live handle and `dir` NUL-terminated.
enum ScStatus sc_run_write(const struct ScRun *run, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAFECOVER_H */
