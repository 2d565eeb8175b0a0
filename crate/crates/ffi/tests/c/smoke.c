#include <math.h>
#include <stdio.h>
#include <string.h>

#include "headprune.h"

#define CHECK(cond)                                              \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(void) {
  const char *json =
      "{\"additive\":{\"baseline\":90.0,\"weights\":[[-0.5,0.2],[0.4,1.0]]}}";
  HpEvaluator *ev = NULL;
  CHECK(hp_evaluator_from_json(json, &ev) == HP_STATUS_OK);

  size_t pairs[] = {0, 0, 1, 0};
  double acc = 0.0;
  CHECK(hp_evaluator_evaluate(ev, pairs, 2, &acc) == HP_STATUS_OK);
  CHECK(fabs(acc - 90.1) < 1e-9);

  size_t bad[] = {2, 0};
  CHECK(hp_evaluator_evaluate(ev, bad, 1, &acc) == HP_STATUS_OUT_OF_BOUNDS);
  CHECK(strstr(hp_last_error_message(), "out of bounds") != NULL);

  HpSolution *sol = NULL;
  CHECK(hp_prune(ev, HP_STRATEGY_ASTAR, 0.7, HP_COST_MODE_INCREMENTAL, 1, &sol) == HP_STATUS_OK);
  CHECK(hp_solution_pruned_count(sol) == 3);
  size_t layer = 9, head = 9;
  CHECK(hp_solution_pruned_head(sol, 0, &layer, &head) == HP_STATUS_OK);
  CHECK(layer == 0 && head == 0);

  char *text = NULL;
  CHECK(hp_solution_to_json(sol, &text) == HP_STATUS_OK);
  CHECK(strstr(text, "\"strategy\": \"astar\"") != NULL);
  hp_string_free(text);

  hp_solution_free(sol);
  hp_evaluator_free(ev);
  printf("ok\n");
  return 0;
}
