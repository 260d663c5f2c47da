#ifndef RESVPLAN_H
#define RESVPLAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum RvpStatus {
  RVP_STATUS_OK = 0,
  RVP_STATUS_INVALID_ARGUMENT = 1,
  RVP_STATUS_NULL_POINTER = 2,
  RVP_STATUS_CONFIG = 3,
  RVP_STATUS_FORMAT = 4,
  RVP_STATUS_IO = 5,
  /**
   * The exact search ran out of nodes; the plan written is the best found.
   */
  RVP_STATUS_BUDGET_EXCEEDED = 6,
  RVP_STATUS_PANIC = 7,
} RvpStatus;

/**
 * Per-stage instance demand.
 */
typedef struct RvpDemand RvpDemand;

/**
 * Contract catalog plus on-demand rate and stage length.
 */
typedef struct RvpMarket RvpMarket;

/**
 * Reservation amounts per stage and contract.
 */
typedef struct RvpPlan RvpPlan;

typedef struct RvpContractSpec {
  uint32_t id;
  int64_t upfront_millicents;
  uint32_t duration_stages;
  int64_t usage_rate_millicents;
} RvpContractSpec;

typedef struct RvpCost {
  int64_t reservation_millicents;
  int64_t reserved_usage_millicents;
  int64_t ondemand_millicents;
  int64_t grand_total_millicents;
} RvpCost;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or an empty string.
 * Valid until the next call into this library on the same thread.
 */
const char *rvp_last_error_message(void);

/**
 * Builds a market from `count` contracts.
 *
 * # Safety
 * `contracts` must point to `count` readable specs (or be null with
 * `count == 0`); `out` must be writable.
 */
enum RvpStatus rvp_market_new(const struct RvpContractSpec *contracts,
                              size_t count,
                              int64_t ondemand_rate_millicents,
                              uint32_t stage_hours,
                              struct RvpMarket **out);

/**
 * Loads a TOML or JSON catalog file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RvpStatus rvp_market_from_file(const char *path, struct RvpMarket **out);

/**
 * The bundled EC2 standard-large catalog.
 *
 * # Safety
 * `out` must be writable.
 */
enum RvpStatus rvp_market_default(struct RvpMarket **out);

/**
 * # Safety
 * `market` must be null or a handle not yet freed.
 */
void rvp_market_free(struct RvpMarket *market);

/**
 * Copies `len` stage demands.
 *
 * # Safety
 * `values` must point to `len` readable integers; `out` must be writable.
 */
enum RvpStatus rvp_demand_new(const uint32_t *values, size_t len, struct RvpDemand **out);

/**
 * Derives demand from an SWF trace: peak concurrent processors per stage
 * (or the stage mean, rounded up, when `mean_aggregation` is set), divided
 * by `processors_per_vm` and rounded up. A zero `horizon_stages` keeps the
 * trace's own length.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RvpStatus rvp_demand_from_swf(const char *path,
                                   uint32_t stage_hours,
                                   uint32_t processors_per_vm,
                                   bool mean_aggregation,
                                   size_t horizon_stages,
                                   struct RvpDemand **out);

/**
 * Number of stages, or 0 for a null handle.
 *
 * # Safety
 * `demand` must be null or a live handle.
 */
size_t rvp_demand_len(const struct RvpDemand *demand);

/**
 * # Safety
 * `demand` must be null or a handle not yet freed.
 */
void rvp_demand_free(struct RvpDemand *demand);

/**
 * Plans contract `contract_id` alone, one term-long segment at a time.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum RvpStatus rvp_plan_single(const struct RvpMarket *market,
                               const struct RvpDemand *demand,
                               uint32_t contract_id,
                               struct RvpPlan **out);

/**
 * Plans every contract, longest term first, each on the demand the
 * previous ones leave uncovered.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum RvpStatus rvp_plan_multi(const struct RvpMarket *market,
                              const struct RvpDemand *demand,
                              struct RvpPlan **out);

/**
 * Minimum-cost plan by branch and bound. Returns
 * `RVP_STATUS_BUDGET_EXCEEDED` with the best plan found written to `out`
 * when `node_budget` runs out.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum RvpStatus rvp_solve_exact(const struct RvpMarket *market,
                               const struct RvpDemand *demand,
                               uint64_t node_budget,
                               struct RvpPlan **out);

/**
 * Number of stages the plan covers, or 0 for a null handle.
 *
 * # Safety
 * `plan` must be null or a live handle.
 */
size_t rvp_plan_horizon(const struct RvpPlan *plan);

/**
 * Instances of contract `contract_id` reserved at zero-based `stage`.
 *
 * # Safety
 * `plan` must be live; `out` must be writable.
 */
enum RvpStatus rvp_plan_get(const struct RvpPlan *plan,
                            size_t stage,
                            uint32_t contract_id,
                            uint32_t *out);

/**
 * Total reserved instances over all stages and contracts.
 *
 * # Safety
 * `plan` must be null or a live handle.
 */
uint64_t rvp_plan_total_reserved(const struct RvpPlan *plan);

/**
 * # Safety
 * `plan` must be null or a handle not yet freed.
 */
void rvp_plan_free(struct RvpPlan *plan);

/**
 * Dispatches `demand` against `plan` and reports the cost.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum RvpStatus rvp_evaluate(const struct RvpPlan *plan,
                            const struct RvpDemand *demand,
                            const struct RvpMarket *market,
                            struct RvpCost *out);

/**
 * The integer program as GNU MathProg text. Free with `rvp_string_free`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum RvpStatus rvp_export_model(const struct RvpDemand *demand,
                                const struct RvpMarket *market,
                                char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void rvp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RESVPLAN_H */
