#ifndef PRSTL_H
#define PRSTL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum PrstlStatus {
  PRSTL_STATUS_OK = 0,
  PRSTL_STATUS_NULL_POINTER = 1,
  PRSTL_STATUS_INVALID_UTF8 = 2,
  PRSTL_STATUS_PARSE_ERROR = 3,
  PRSTL_STATUS_INVALID_ARGUMENT = 4,
  PRSTL_STATUS_EVAL_ERROR = 5,
  PRSTL_STATUS_SCENARIO_ERROR = 6,
  PRSTL_STATUS_SIMULATION_ERROR = 7,
  PRSTL_STATUS_PANIC = 8,
} PrstlStatus;

// Parsed formula.
typedef struct PrstlFormula PrstlFormula;

// Parsed scenario.
typedef struct PrstlScenario PrstlScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next call into this library on the same thread.
const char *prstl_last_error_message(void);

// Parses `text` into a new formula handle stored in `*out`.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum PrstlStatus prstl_formula_parse(const char *text, struct PrstlFormula **out);

// Releases a formula handle. NULL is ignored.
//
// # Safety
// `formula` must come from [`prstl_formula_parse`] and not be used again.
void prstl_formula_free(struct PrstlFormula *formula);

// Run length needed to evaluate the formula without truncation.
//
// # Safety
// `formula` must be a live handle; `out` must be writable.
enum PrstlStatus prstl_formula_horizon(const struct PrstlFormula *formula, uint64_t *out);

// Whether every temporal window of the formula starts at 0.
//
// # Safety
// `formula` must be a live handle; `out` must be writable.
enum PrstlStatus prstl_formula_is_synthesizable(const struct PrstlFormula *formula, bool *out);

// Canonical text of the formula; free with [`prstl_string_free`].
//
// # Safety
// `formula` must be a live handle; `out` must be writable.
enum PrstlStatus prstl_formula_to_string(const struct PrstlFormula *formula, char **out);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not be used again.
void prstl_string_free(char *s);

// Evaluates the formula at time `t` over a predicate table.
//
// `names` holds `n_predicates` predicate names. `values` is row-major with
// one row per predicate: the probability of predicate `p` at time `k` is
// `values[p * n_times + k]`. With `relaxed`, windows past the last time are
// truncated. Event formulas yield a probability; instance formulas yield 0
// or 1.
//
// # Safety
// `names` must point to `n_predicates` NUL-terminated strings, `values` to
// `n_predicates * n_times` doubles, and `out` must be writable.
enum PrstlStatus prstl_formula_eval(const struct PrstlFormula *formula,
                                    const char *const *names,
                                    size_t n_predicates,
                                    const double *values,
                                    size_t n_times,
                                    size_t t,
                                    bool relaxed,
                                    double *out);

// Parses a TOML scenario into a new handle stored in `*out`.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum PrstlStatus prstl_scenario_from_toml(const char *text, struct PrstlScenario **out);

// Replaces the scenario's random seed.
//
// # Safety
// `scenario` must be a live handle.
enum PrstlStatus prstl_scenario_set_seed(struct PrstlScenario *scenario, uint64_t seed);

// Releases a scenario handle. NULL is ignored.
//
// # Safety
// `scenario` must come from [`prstl_scenario_from_toml`] and not be used
// again.
void prstl_scenario_free(struct PrstlScenario *scenario);

// Runs the closed-loop mission and returns its trace as newline-delimited
// JSON; free with [`prstl_string_free`].
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum PrstlStatus prstl_scenario_simulate(const struct PrstlScenario *scenario, char **out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PRSTL_H */
