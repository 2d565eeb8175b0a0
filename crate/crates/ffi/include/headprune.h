#ifndef HEADPRUNE_H
#define HEADPRUNE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HpStatus {
  HP_STATUS_OK = 0,
  HP_STATUS_NULL_POINTER = 1,
  HP_STATUS_INVALID_UTF8 = 2,
  // Malformed JSON, bad geometry or a negative budget.
  HP_STATUS_INVALID_ARGUMENT = 3,
  HP_STATUS_OUT_OF_BOUNDS = 4,
  // The oracle failed. For prune calls a partial solution may still be
  // returned.
  HP_STATUS_ORACLE_FAILURE = 5,
  HP_STATUS_INVARIANT = 6,
  HP_STATUS_INDEX_OUT_OF_RANGE = 7,
  HP_STATUS_PANIC = 8,
} HpStatus;

typedef enum HpStrategy {
  HP_STRATEGY_ASTAR = 0,
  HP_STRATEGY_LOCAL = 1,
  HP_STRATEGY_GLOBAL = 2,
} HpStrategy;

typedef enum HpCostMode {
  HP_COST_MODE_INCREMENTAL = 0,
  HP_COST_MODE_BASELINE = 1,
} HpCostMode;

// Memoizing accuracy evaluator.
typedef struct HpEvaluator HpEvaluator;

// Result of a pruning run.
typedef struct HpSolution HpSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next call into this library from the same thread.
const char *hp_last_error_message(void);

// Builds an evaluator from a JSON description: exactly one of
// `{"additive": {...}}`, `{"supermodular": {...}}` or `{"table": {...}}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum HpStatus hp_evaluator_from_json(const char *json, struct HpEvaluator **out);

// # Safety
// `evaluator` must come from [`hp_evaluator_from_json`] or be NULL.
void hp_evaluator_free(struct HpEvaluator *evaluator);

// # Safety
// All pointers must be valid.
enum HpStatus hp_evaluator_geometry(const struct HpEvaluator *evaluator,
                                    size_t *layers,
                                    size_t *heads,
                                    double *baseline);

// Accuracy with the given heads pruned. `pairs` holds `count` (layer, head)
// pairs laid out flat; it may be NULL when `count` is 0.
//
// # Safety
// `pairs` must point to `2 * count` values; `evaluator` and `accuracy` must
// be valid.
enum HpStatus hp_evaluator_evaluate(const struct HpEvaluator *evaluator,
                                    const size_t *pairs,
                                    size_t count,
                                    double *accuracy);

// Evaluation requests served and distinct masks computed so far.
//
// # Safety
// All pointers must be valid.
enum HpStatus hp_evaluator_counts(const struct HpEvaluator *evaluator,
                                  uint64_t *requested,
                                  uint64_t *computed);

// Runs a pruning strategy. `budget` is in percentage points; pass
// `INFINITY` for an unbounded run. `workers` of 0 or 1 runs serially.
//
// On [`HpStatus::OracleFailure`] `*out` may still receive the partial
// solution built before the failure; it must be freed either way.
//
// # Safety
// `evaluator` and `out` must be valid.
enum HpStatus hp_prune(const struct HpEvaluator *evaluator,
                       enum HpStrategy strategy,
                       double budget,
                       enum HpCostMode mode,
                       size_t workers,
                       struct HpSolution **out);

// One random-order trial: number of heads pruned before the budget ran out.
//
// # Safety
// `evaluator` and `pruned` must be valid.
enum HpStatus hp_random_trial(const struct HpEvaluator *evaluator,
                              double budget,
                              uint64_t seed,
                              size_t *pruned);

// # Safety
// `solution` must come from [`hp_prune`] or be NULL.
void hp_solution_free(struct HpSolution *solution);

// # Safety
// `solution` must be valid or NULL.
size_t hp_solution_pruned_count(const struct HpSolution *solution);

// The `index`-th pruned head in prune order.
//
// # Safety
// All pointers must be valid.
enum HpStatus hp_solution_pruned_head(const struct HpSolution *solution,
                                      size_t index,
                                      size_t *layer,
                                      size_t *head);

// Final accuracy, budget charged and distinct masks evaluated.
//
// # Safety
// All pointers must be valid.
enum HpStatus hp_solution_summary(const struct HpSolution *solution,
                                  double *final_accuracy,
                                  double *budget_charged,
                                  uint64_t *searches);

// Full solution report as JSON. Release the string with [`hp_string_free`].
//
// # Safety
// `solution` and `out` must be valid.
enum HpStatus hp_solution_to_json(const struct HpSolution *solution, char **out);

// # Safety
// `s` must come from this library or be NULL.
void hp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEADPRUNE_H */
