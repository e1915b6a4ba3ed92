#ifndef SENTINEL_H
#define SENTINEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SentinelEngine {
  SENTINEL_ENGINE_EXACT = 0,
  SENTINEL_ENGINE_HEURISTIC = 1,
  SENTINEL_ENGINE_B0 = 2,
  SENTINEL_ENGINE_ORACLE = 3,
} SentinelEngine;

/**
 * Result codes. The first four match the command-line exit codes.
 */
typedef enum SentinelStatus {
  SENTINEL_STATUS_OK = 0,
  SENTINEL_STATUS_ERROR = 1,
  SENTINEL_STATUS_INFEASIBLE = 2,
  SENTINEL_STATUS_RESOURCE_LIMIT = 3,
  SENTINEL_STATUS_NULL_ARGUMENT = 4,
  SENTINEL_STATUS_INVALID_ARGUMENT = 5,
  SENTINEL_STATUS_PANIC = 6,
} SentinelStatus;

/**
 * Opaque scenario handle.
 */
typedef struct SentinelScenario SentinelScenario;

/**
 * Opaque solution handle.
 */
typedef struct SentinelSolution SentinelSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *sentinel_last_error(void);

/**
 * Parses a scenario from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SentinelStatus sentinel_scenario_from_json(const char *json, struct SentinelScenario **out);

/**
 * The bundled 13x13 example scenario.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SentinelStatus sentinel_scenario_example(struct SentinelScenario **out);

/**
 * Applies experiment preset `case_id` (1..5) in place. A negative `horizon`
 * keeps the preset's own horizon.
 *
 * # Safety
 * `scenario` must come from this library and not be freed.
 */
enum SentinelStatus sentinel_scenario_apply_case(struct SentinelScenario *scenario,
                                                 uint8_t case_id,
                                                 int64_t horizon);

/**
 * Sets the action budget.
 *
 * # Safety
 * `scenario` must come from this library and not be freed.
 */
enum SentinelStatus sentinel_scenario_set_budget(struct SentinelScenario *scenario, double budget);

/**
 * Serialises the scenario as JSON.
 *
 * # Safety
 * `scenario` must come from this library; `out` must be a valid pointer.
 */
enum SentinelStatus sentinel_scenario_to_json(const struct SentinelScenario *scenario, char **out);

/**
 * Writes the 0-1 program for the scenario as LP text, with reductions applied.
 *
 * # Safety
 * `scenario` must come from this library; `out` must be a valid pointer.
 */
enum SentinelStatus sentinel_export_lp(const struct SentinelScenario *scenario, char **out);

/**
 * Frees a scenario; null is ignored.
 *
 * # Safety
 * `scenario` must come from this library and not be used afterwards.
 */
void sentinel_scenario_free(struct SentinelScenario *scenario);

/**
 * Solves the scenario with the given engine.
 *
 * # Safety
 * `scenario` must come from this library; `out` must be a valid pointer.
 */
enum SentinelStatus sentinel_solve(const struct SentinelScenario *scenario,
                                   enum SentinelEngine engine,
                                   struct SentinelSolution **out);

/**
 * First arrival time at the target, or -1 if the plan never arrives.
 *
 * # Safety
 * `solution` must come from this library or be null.
 */
int64_t sentinel_solution_time_to_target(const struct SentinelSolution *solution);

/**
 * Probability of evading detection, or NaN outside the confusion modes.
 *
 * # Safety
 * `solution` must come from this library or be null.
 */
double sentinel_solution_ped(const struct SentinelSolution *solution);

/**
 * Number of knockout actions in the plan, or -1 for a null handle.
 *
 * # Safety
 * `solution` must come from this library or be null.
 */
int64_t sentinel_solution_knockouts(const struct SentinelSolution *solution);

/**
 * 1 if the plan passed independent validation, 0 if not, -1 for null.
 *
 * # Safety
 * `solution` must come from this library or be null.
 */
int32_t sentinel_solution_feasible(const struct SentinelSolution *solution);

/**
 * Serialises the solution in the command-line solution file format.
 *
 * # Safety
 * `solution` must come from this library; `out` must be a valid pointer.
 */
enum SentinelStatus sentinel_solution_to_json(const struct SentinelSolution *solution, char **out);

/**
 * Frees a solution; null is ignored.
 *
 * # Safety
 * `solution` must come from this library and not be used afterwards.
 */
void sentinel_solution_free(struct SentinelSolution *solution);

/**
 * Frees a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void sentinel_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SENTINEL_H */
