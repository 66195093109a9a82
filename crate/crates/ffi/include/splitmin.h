#ifndef SPLITMIN_H
#define SPLITMIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SmStatus {
  SM_STATUS_OK = 0,
  SM_STATUS_NULL_POINTER = 1,
  SM_STATUS_INVALID_ARGUMENT = 2,
  SM_STATUS_PARSE_ERROR = 3,
  SM_STATUS_CAP_EXCEEDED = 4,
  SM_STATUS_UNAVAILABLE = 5,
  SM_STATUS_BUFFER_TOO_SMALL = 6,
  SM_STATUS_PANIC = 7,
} SmStatus;

/**
 * Strongest optimality guarantee of a parameter vector.
 */
typedef enum SmClass {
  SM_CLASS_NONE = 0,
  SM_CLASS_LOCAL_ONLY = 1,
  SM_CLASS_GLOBAL_CONICAL = 2,
  SM_CLASS_GLOBAL_SIGN = 3,
} SmClass;

/**
 * Outcome of a solve.
 */
typedef enum SmRunStatus {
  SM_RUN_STATUS_CONVERGED = 0,
  SM_RUN_STATUS_MAX_ITERS = 1,
  SM_RUN_STATUS_INFINITE_MESSAGE = 2,
} SmRunStatus;

/**
 * Opaque factor graph.
 */
typedef struct SmGraph SmGraph;

/**
 * Opaque parameter vector.
 */
typedef struct SmParams SmParams;

/**
 * Opaque run report.
 */
typedef struct SmReport SmReport;

/**
 * Options for [`sm_solve`]; start from [`sm_solve_options_default`].
 */
typedef struct SmSolveOptions {
  /**
   * 0 for synchronous, 1 for asynchronous.
   */
  uint32_t schedule;
  /**
   * Visit variables in a seeded random order (asynchronous only).
   */
  bool random_order;
  uint64_t seed;
  double tol;
  size_t max_sweeps;
  double damping;
  double tie_tol;
} SmSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *sm_last_error(void);

/**
 * Creates a graph with `n` variables of the given cardinalities.
 *
 * # Safety
 * `cards` must point to `n` values and `out` must be writable.
 */
enum SmStatus sm_graph_new(const size_t *cards, size_t n, struct SmGraph **out);

/**
 * Parses a model in FGM text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` must be writable.
 */
enum SmStatus sm_graph_parse(const char *model, struct SmGraph **out);

/**
 * Sets the unary potential of `var`. Use `INFINITY` for `+inf`.
 *
 * # Safety
 * `graph` must be a live handle and `values` must point to `len` doubles.
 */
enum SmStatus sm_graph_set_unary(struct SmGraph *graph,
                                 size_t var,
                                 const double *values,
                                 size_t len);

/**
 * Appends a factor with a row-major table (last scope variable fastest).
 * Its index is written to `out_index` when that pointer is not NULL.
 *
 * # Safety
 * `graph` must be a live handle; `scope` and `values` must point to
 * `arity` and `len` elements.
 */
enum SmStatus sm_graph_add_factor(struct SmGraph *graph,
                                  const size_t *scope,
                                  size_t arity,
                                  const double *values,
                                  size_t len,
                                  size_t *out_index);

/**
 * Number of variables, or 0 for a NULL handle.
 *
 * # Safety
 * `graph` must be NULL or a live handle.
 */
size_t sm_graph_num_vars(const struct SmGraph *graph);

/**
 * Number of factors, or 0 for a NULL handle.
 *
 * # Safety
 * `graph` must be NULL or a live handle.
 */
size_t sm_graph_num_factors(const struct SmGraph *graph);

/**
 * Objective value at assignment `x` of length `n`.
 *
 * # Safety
 * `graph` must be a live handle, `x` must point to `n` values and `out`
 * must be writable.
 */
enum SmStatus sm_graph_evaluate(const struct SmGraph *graph,
                                const size_t *x,
                                size_t n,
                                double *out);

/**
 * Releases a graph. NULL is ignored.
 *
 * # Safety
 * `graph` must be NULL or a handle not yet freed.
 */
void sm_graph_free(struct SmGraph *graph);

/**
 * All-ones parameters (standard min-sum).
 *
 * # Safety
 * `graph` must be a live handle and `out` must be writable.
 */
enum SmStatus sm_params_ones(const struct SmGraph *graph, struct SmParams **out);

/**
 * `c_i = 1`, `c_α = 1/d` with `d` the largest variable degree.
 *
 * # Safety
 * `graph` must be a live handle and `out` must be writable.
 */
enum SmStatus sm_params_uniform(const struct SmGraph *graph, struct SmParams **out);

/**
 * Parses `cvar <i> <v>` / `cfac <a> <v>` lines over all-ones defaults.
 *
 * # Safety
 * `graph` must be a live handle, `text` NUL-terminated, `out` writable.
 */
enum SmStatus sm_params_parse(const struct SmGraph *graph,
                              const char *params,
                              struct SmParams **out);

/**
 * Sets `c_i` for variable `var`.
 *
 * # Safety
 * `params` must be a live handle.
 */
enum SmStatus sm_params_set_var(struct SmParams *params, size_t var, double value);

/**
 * Sets `c_α` for factor `factor`.
 *
 * # Safety
 * `params` must be a live handle.
 */
enum SmStatus sm_params_set_factor(struct SmParams *params, size_t factor, double value);

/**
 * Classifies parameters by the direct sign tests.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum SmStatus sm_params_classify(const struct SmParams *params,
                                 const struct SmGraph *graph,
                                 enum SmClass *out);

/**
 * Releases parameters. NULL is ignored.
 *
 * # Safety
 * `params` must be NULL or a handle not yet freed.
 */
void sm_params_free(struct SmParams *params);

/**
 * Default options: synchronous, natural order, tolerance 1e-8, 1000
 * sweeps, no damping, tie tolerance 1e-9.
 */
struct SmSolveOptions sm_solve_options_default(void);

/**
 * Runs message passing from zero messages. A run that hits an infinite
 * message still produces a report with that status.
 *
 * # Safety
 * Handles must be live; `options` may be NULL for defaults; `out` must be
 * writable.
 */
enum SmStatus sm_solve(const struct SmGraph *graph,
                       const struct SmParams *params,
                       const struct SmSolveOptions *options,
                       struct SmReport **out);

/**
 * Run status of a report.
 *
 * # Safety
 * `report` must be a live handle.
 */
enum SmRunStatus sm_report_status(const struct SmReport *report);

/**
 * Number of completed sweeps.
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
size_t sm_report_sweeps(const struct SmReport *report);

/**
 * Whether every variable belief has a single minimizer.
 *
 * # Safety
 * `report` must be NULL or a live handle.
 */
bool sm_report_unique(const struct SmReport *report);

/**
 * Copies the unique estimate into `out` (length `n`) and its objective
 * into `objective` (may be NULL). Returns `Unavailable` when the
 * estimate is not unique.
 *
 * # Safety
 * `report` must be a live handle and `out` must have room for `n` values.
 */
enum SmStatus sm_report_estimate(const struct SmReport *report,
                                 size_t *out,
                                 size_t n,
                                 double *objective);

/**
 * Final dual lower bound; `Unavailable` unless the parameters pass the
 * global sign test.
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum SmStatus sm_report_lower_bound(const struct SmReport *report, double *out);

/**
 * Copies the final belief of `var` into `out` (length `n`).
 *
 * # Safety
 * `report` must be a live handle and `out` must have room for `n` values.
 */
enum SmStatus sm_report_var_belief(const struct SmReport *report,
                                   size_t var,
                                   double *out,
                                   size_t n);

/**
 * Releases a report. NULL is ignored.
 *
 * # Safety
 * `report` must be NULL or a handle not yet freed.
 */
void sm_report_free(struct SmReport *report);

/**
 * Exhaustive minimum over at most `cap` joint states. Writes the minimum,
 * the first minimizer (into `out_x`, length `n`) and the number of
 * minimizers.
 *
 * # Safety
 * `graph` must be a live handle; outputs must be writable, `out_x` with
 * room for `n` values.
 */
enum SmStatus sm_oracle_minimize(const struct SmGraph *graph,
                                 size_t cap,
                                 double *out_value,
                                 size_t *out_x,
                                 size_t n,
                                 size_t *out_count);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPLITMIN_H */
