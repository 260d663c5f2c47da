//! Cost model: per-stage usage cost, single-segment cost, the marginal
//! cost between adjacent order statistics, and plan evaluation.

use crate::error::{Error, Result};
use crate::model::{CostBreakdown, DemandVector, DispatchSchedule, MarketConfig, PricingContract, ReservationPlan};
use crate::money::Millicents;

/// Usage cost of `d` instances for one stage when `x` reserved instances
/// are available: `h * (r * min(x, d) + o * max(d - x, 0))`.
pub fn stage_usage_cost(x: u64, d: u64, r: Millicents, o: Millicents, h: u32) -> Result<Millicents> {
    if r.is_negative() || o.is_negative() {
        return Err(Error::invalid("rates must be non-negative"));
    }
    if r >= o {
        return Err(Error::invalid(format!("reserved rate {r} must be below on-demand rate {o}")));
    }
    if h == 0 {
        return Err(Error::invalid("stage must last at least one hour"));
    }
    let reserved = x.min(d);
    let spill = d.saturating_sub(x);
    Ok((r.times(reserved) + o.times(spill)).times(u64::from(h)))
}

/// Total cost of reserving `x` instances under `contract` at the start of
/// a segment whose per-stage demands are `demands`: the upfront charge
/// plus every stage's usage cost.
pub fn segment_cost(demands: &[u32], x: u32, contract: &PricingContract, market: &MarketConfig) -> Result<Millicents> {
    if demands.len() > contract.duration_stages as usize {
        return Err(Error::invalid(format!(
            "segment of {} stages exceeds contract {} duration of {}",
            demands.len(),
            contract.id,
            contract.duration_stages
        )));
    }
    let mut total = contract.upfront.times(u64::from(x));
    for &d in demands {
        total += stage_usage_cost(
            u64::from(x),
            u64::from(d),
            contract.usage_rate,
            market.ondemand_rate(),
            market.stage_hours(),
        )?;
    }
    Ok(total)
}

/// Change in segment cost when the reservation moves from the `j`-th to
/// the `(j+1)`-th smallest demand (`j` is one-based):
/// `(D[j+1] - D[j]) * (R - t_d * a + j * a)` with `a` the per-stage discount
/// and `t_d` the segment length.
pub fn delta_cost(sorted: &[u32], j: usize, contract: &PricingContract, market: &MarketConfig) -> Result<Millicents> {
    let len = sorted.len();
    if j == 0 || j >= len {
        return Err(Error::invalid(format!("index {j} outside 1..{len}")));
    }
    if sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("demand sequence must be sorted ascending"));
    }
    let step = i64::from(sorted[j] - sorted[j - 1]);
    let discount = market.discount_per_stage(contract);
    let slope = contract.upfront - discount * (len as i64) + discount * (j as i64);
    Ok(slope * step)
}

/// Active reserved capacity per contract and stage: reservations made in
/// the last `t_k` stages, inclusive.
pub(crate) fn active_capacity(plan: &ReservationPlan, market: &MarketConfig) -> Vec<Vec<u64>> {
    let horizon = plan.horizon();
    market
        .contracts()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let row = plan.by_index(k);
            let window = c.duration_stages as usize;
            let mut active = Vec::with_capacity(horizon);
            let mut running: u64 = 0;
            for t in 0..horizon {
                running += u64::from(row[t]);
                if t >= window {
                    running -= u64::from(row[t - window]);
                }
                active.push(running);
            }
            active
        })
        .collect()
}

/// Fills `demand` from active capacity, cheapest usage rate first, and
/// returns `(launches per contract index, on-demand launches)` via the
/// output slice.
pub(crate) fn fill_stage(
    market: &MarketConfig,
    demand: u64,
    active: impl Fn(usize) -> u64,
    launches: &mut [u64],
) -> u64 {
    let mut remaining = demand;
    for &k in market.dispatch_order() {
        let take = remaining.min(active(k));
        launches[k] = take;
        remaining -= take;
    }
    remaining
}

/// Usage cost of one stage under cheapest-first dispatch.
pub(crate) fn stage_dispatch_cost(market: &MarketConfig, demand: u64, active: impl Fn(usize) -> u64) -> Millicents {
    let h = u64::from(market.stage_hours());
    let mut remaining = demand;
    let mut cost = Millicents::ZERO;
    for &k in market.dispatch_order() {
        if remaining == 0 {
            break;
        }
        let take = remaining.min(active(k));
        cost += market.contracts()[k].usage_rate.times(take * h);
        remaining -= take;
    }
    cost + market.ondemand_rate().times(remaining * h)
}

fn check_conforms(plan: &ReservationPlan, demand: &DemandVector, market: &MarketConfig) -> Result<()> {
    if !plan.conforms_to(demand, market) {
        return Err(Error::invalid(format!(
            "plan covers {} stages x {} contracts, expected {} x {}",
            plan.horizon(),
            plan.contract_ids().len(),
            demand.horizon(),
            market.len()
        )));
    }
    Ok(())
}

/// Launch decisions for a fixed reservation plan: each stage's demand is
/// served from active reservations in ascending usage-rate order and the
/// remainder on demand. Never launches more than the demand.
pub fn dispatch(plan: &ReservationPlan, demand: &DemandVector, market: &MarketConfig) -> Result<DispatchSchedule> {
    check_conforms(plan, demand, market)?;
    let active = active_capacity(plan, market);
    let horizon = demand.horizon();
    let kk = market.len();
    let mut reserved = vec![vec![0u32; horizon]; kk];
    let mut ondemand = Vec::with_capacity(horizon);
    let mut launches = vec![0u64; kk];
    for (t, &d) in demand.as_slice().iter().enumerate() {
        let rest = fill_stage(market, u64::from(d), |k| active[k][t], &mut launches);
        for k in 0..kk {
            // bounded by d, so it fits
            reserved[k][t] = launches[k] as u32;
        }
        ondemand.push(rest as u32);
    }
    Ok(DispatchSchedule { contract_ids: market.contract_ids(), reserved, ondemand })
}

/// Objective value of a plan: dispatches, then sums
/// `C_t = sum_k (x_t^R_k * R_k + x_t^r_k * r_k * h) + x_t^o * o * h`.
pub fn evaluate(plan: &ReservationPlan, demand: &DemandVector, market: &MarketConfig) -> Result<CostBreakdown> {
    let schedule = dispatch(plan, demand, market)?;
    Ok(cost_of(plan, &schedule, market))
}

/// Sums the objective for an explicit plan and schedule without checking
/// feasibility.
pub fn cost_of(plan: &ReservationPlan, schedule: &DispatchSchedule, market: &MarketConfig) -> CostBreakdown {
    let horizon = plan.horizon();
    let h = u64::from(market.stage_hours());
    let mut per_stage = Vec::with_capacity(horizon);
    let mut reservation_total = Millicents::ZERO;
    let mut reserved_usage_total = Millicents::ZERO;
    let mut ondemand_total = Millicents::ZERO;
    for t in 0..horizon {
        let mut stage = Millicents::ZERO;
        for (k, c) in market.contracts().iter().enumerate() {
            let upfront = c.upfront.times(u64::from(plan.by_index(k)[t]));
            let usage = c.usage_rate.times(u64::from(schedule.reserved[k][t]) * h);
            reservation_total += upfront;
            reserved_usage_total += usage;
            stage += upfront + usage;
        }
        let od = market.ondemand_rate().times(u64::from(schedule.ondemand[t]) * h);
        ondemand_total += od;
        stage += od;
        per_stage.push(stage);
    }
    CostBreakdown {
        per_stage,
        reservation_total,
        reserved_usage_total,
        ondemand_total,
        grand_total: reservation_total + reserved_usage_total + ondemand_total,
    }
}
