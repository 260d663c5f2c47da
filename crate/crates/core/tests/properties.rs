mod support;

use proptest::prelude::*;

use resvplan::exact::{flatten, unflatten, DEFAULT_NODE_BUDGET};
use resvplan::{
    check_feasible, delta_cost, dispatch, evaluate, plan_multi_contract, plan_single_contract, segment_cost,
    solve_exact, ContractId, DemandVector, MarketConfig, Millicents, PricingContract, ReservationPlan,
};

use support::{brute_cost, random_double_market, random_single_market, rng, toy_two};

fn market_strategy() -> impl Strategy<Value = MarketConfig> {
    (any::<u64>(), any::<bool>()).prop_map(|(seed, two)| {
        let mut r = rng(seed);
        if two {
            random_double_market(&mut r, 6)
        } else {
            random_single_market(&mut r, 6)
        }
    })
}

fn plan_strategy(market: MarketConfig, horizon: usize) -> impl Strategy<Value = ReservationPlan> {
    prop::collection::vec(0u32..5, horizon * market.len()).prop_map(move |flat| unflatten(&flat, horizon, &market))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn evaluate_agrees_with_direct_costing(
        (market, demand, plan) in (market_strategy(), prop::collection::vec(0u32..8, 1..10))
            .prop_flat_map(|(m, d)| {
                let horizon = d.len();
                (Just(m.clone()), Just(d), plan_strategy(m, horizon))
            })
    ) {
        let dv = DemandVector::new(demand.clone()).unwrap();
        let cost = evaluate(&plan, &dv, &market).unwrap();
        prop_assert_eq!(cost.grand_total.raw(), brute_cost(&flatten(&plan), &demand, &market));
        prop_assert_eq!(
            cost.grand_total,
            cost.reservation_total + cost.reserved_usage_total + cost.ondemand_total
        );
        let schedule = dispatch(&plan, &dv, &market).unwrap();
        prop_assert!(check_feasible(&plan, &schedule, &dv, &market).is_empty());
    }

    #[test]
    fn heuristic_plans_are_feasible(
        market in market_strategy(),
        demand in prop::collection::vec(0u32..30, 1..60),
    ) {
        let dv = DemandVector::new(demand).unwrap();
        let multi = plan_multi_contract(&dv, &market).unwrap();
        let schedule = dispatch(&multi.plan, &dv, &market).unwrap();
        prop_assert!(check_feasible(&multi.plan, &schedule, &dv, &market).is_empty());
        for c in market.contracts() {
            let single = plan_single_contract(&dv, c, &market).unwrap();
            prop_assert_eq!(single.plan.total_reserved(), single.decisions.iter().map(|d| u64::from(d.amount)).sum::<u64>());
        }
    }

    #[test]
    fn delta_cost_is_a_difference(
        seed in any::<u64>(),
        raw in prop::collection::vec(0u32..100, 2..12),
    ) {
        let mut r = rng(seed);
        let market = random_single_market(&mut r, 12);
        let c = PricingContract::new(1, market.contracts()[0].upfront, 12, market.contracts()[0].usage_rate).unwrap();
        let mut sorted = raw;
        sorted.sort_unstable();
        for j in 1..sorted.len() {
            let diff = segment_cost(&sorted, sorted[j], &c, &market).unwrap()
                - segment_cost(&sorted, sorted[j - 1], &c, &market).unwrap();
            prop_assert_eq!(delta_cost(&sorted, j, &c, &market).unwrap(), diff);
        }
    }

    #[test]
    fn exact_never_loses_to_heuristics(
        seed in any::<u64>(),
        demand in prop::collection::vec(0u32..6, 1..7),
    ) {
        let mut r = rng(seed);
        let market = random_double_market(&mut r, 5);
        let dv = DemandVector::new(demand).unwrap();
        let exact = solve_exact(&dv, &market, DEFAULT_NODE_BUDGET).unwrap();
        prop_assert!(exact.optimal);
        prop_assert_eq!(exact.bound_violations, 0);
        let multi = evaluate(&plan_multi_contract(&dv, &market).unwrap().plan, &dv, &market).unwrap();
        prop_assert!(exact.cost.grand_total <= multi.grand_total);
        let none = evaluate(&ReservationPlan::empty(dv.horizon(), &market), &dv, &market).unwrap();
        prop_assert!(exact.cost.grand_total <= none.grand_total);
    }
}

#[test]
fn no_reservation_costs_every_stage_on_demand() {
    let market = toy_two();
    let demand = DemandVector::new(vec![3, 0, 7, 1]).unwrap();
    let cost = evaluate(&ReservationPlan::empty(4, &market), &demand, &market).unwrap();
    assert_eq!(cost.grand_total, Millicents(11 * 2000));
    assert_eq!(cost.ondemand_total, cost.grand_total);
}

#[test]
fn cascade_leaves_only_residual_to_shorter_contract() {
    let market = toy_two();
    let demand = DemandVector::new(vec![4, 4, 4, 4, 9, 9]).unwrap();
    let result = plan_multi_contract(&demand, &market).unwrap();
    let long = result.amounts_for(ContractId(1));
    let short = result.amounts_for(ContractId(2));
    // a two-stage tail never repays the long term; the burst goes short
    assert_eq!(long, vec![4, 0]);
    assert_eq!(short, vec![0, 0, 9]);
}

#[test]
fn exact_handles_the_default_catalog_on_short_horizons() {
    let market = resvplan::config::default_market().unwrap();
    let demand = DemandVector::new(vec![2, 3, 2, 4]).unwrap();
    let exact = solve_exact(&demand, &market, DEFAULT_NODE_BUDGET).unwrap();
    assert!(exact.optimal);
    // four hours never repay a month's upfront charge
    assert_eq!(exact.plan.total_reserved(), 0);
    assert_eq!(exact.cost.grand_total, Millicents(11 * 240));
}
