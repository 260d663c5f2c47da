#include <stdio.h>
#include <string.h>

#include "resvplan.h"

#define CHECK(cond)                                                        \
  do {                                                                     \
    if (!(cond)) {                                                         \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond,       \
              rvp_last_error_message());                                   \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  RvpContractSpec spec = {1, 2000, 4, 1000};
  RvpMarket *market = NULL;
  CHECK(rvp_market_new(&spec, 1, 2000, 1, &market) == RVP_STATUS_OK);

  uint32_t values[] = {1, 2, 3, 4};
  RvpDemand *demand = NULL;
  CHECK(rvp_demand_new(values, 4, &demand) == RVP_STATUS_OK);
  CHECK(rvp_demand_len(demand) == 4);

  RvpPlan *plan = NULL;
  CHECK(rvp_solve_exact(market, demand, 1000000, &plan) == RVP_STATUS_OK);
  uint32_t first = 0;
  CHECK(rvp_plan_get(plan, 0, 1, &first) == RVP_STATUS_OK);
  CHECK(first == 2);

  RvpCost cost;
  CHECK(rvp_evaluate(plan, demand, market, &cost) == RVP_STATUS_OK);
  CHECK(cost.grand_total_millicents == 17000);

  char *model = NULL;
  CHECK(rvp_export_model(demand, market, &model) == RVP_STATUS_OK);
  CHECK(strstr(model, "minimize total_cost:") != NULL);
  rvp_string_free(model);

  CHECK(rvp_plan_get(plan, 9, 1, &first) == RVP_STATUS_INVALID_ARGUMENT);
  CHECK(strlen(rvp_last_error_message()) > 0);

  rvp_plan_free(plan);
  rvp_demand_free(demand);
  rvp_market_free(market);
  printf("ok\n");
  return 0;
}
