//! Instance generators and a brute-force oracle shared by the integration
//! and acceptance tests. Nothing here calls the branch-and-bound search.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resvplan::{DemandVector, MarketConfig, Millicents, PricingContract};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn m(s: &str) -> Millicents {
    s.parse().unwrap()
}

/// The two-contract toy catalog: (t=4, R=2, r=1) and (t=2, R=1.5, r=1), o=2.
pub fn toy_two() -> MarketConfig {
    MarketConfig::new(
        vec![
            PricingContract::new(1, m("2"), 4, m("1")).unwrap(),
            PricingContract::new(2, m("1.5"), 2, m("1")).unwrap(),
        ],
        m("2"),
        1,
    )
    .unwrap()
}

/// One admissible contract with a term of at most `max_term` stages.
pub fn random_single_market(rng: &mut ChaCha8Rng, max_term: u32) -> MarketConfig {
    loop {
        let hours = rng.random_range(1..=3u32);
        let ondemand = rng.random_range(100..=3000i64);
        let usage = rng.random_range(0..ondemand);
        let term = rng.random_range(1..=max_term);
        let bound = (ondemand - usage) * i64::from(hours) * i64::from(term);
        if bound < 2 {
            continue;
        }
        let upfront = rng.random_range(1..bound);
        let c = PricingContract::new(1, Millicents(upfront), term, Millicents(usage)).unwrap();
        return MarketConfig::new(vec![c], Millicents(ondemand), hours).unwrap();
    }
}

/// Two contracts satisfying both catalog orderings, terms at most `max_term`.
pub fn random_double_market(rng: &mut ChaCha8Rng, max_term: u32) -> MarketConfig {
    loop {
        let hours = rng.random_range(1..=2u32);
        let ondemand = rng.random_range(100..=2000i64);
        let t2 = rng.random_range(1..max_term);
        let t1 = rng.random_range(t2 + 1..=max_term);
        let r1 = rng.random_range(0..ondemand);
        let r2 = rng.random_range(0..ondemand);
        let a1 = (ondemand - r1) * i64::from(hours);
        let a2 = (ondemand - r2) * i64::from(hours);
        let up1 = rng.random_range(1..a1 * i64::from(t1));
        // need up2 * t1 > up1 * t2 and up2 < t2 * a2
        let lo = up1 * i64::from(t2) / i64::from(t1) + 1;
        let hi = a2 * i64::from(t2);
        if lo >= hi {
            continue;
        }
        let up2 = rng.random_range(lo..hi);
        let contracts = vec![
            PricingContract::new(1, Millicents(up1), t1, Millicents(r1)).unwrap(),
            PricingContract::new(2, Millicents(up2), t2, Millicents(r2)).unwrap(),
        ];
        if let Ok(market) = MarketConfig::new(contracts, Millicents(ondemand), hours) {
            return market;
        }
    }
}

pub fn random_demand(rng: &mut ChaCha8Rng, horizon: usize, max: u32) -> DemandVector {
    DemandVector::new((0..horizon).map(|_| rng.random_range(0..=max)).collect()).unwrap()
}

/// Objective of a stage-major flat reservation vector, computed straight
/// from the model: launches limited by reservations made in the last `t_k`
/// stages, filled cheapest usage rate first, the rest on demand.
pub fn brute_cost(flat: &[u32], demand: &[u32], market: &MarketConfig) -> i64 {
    let kk = market.len();
    let h = i64::from(market.stage_hours());
    let contracts = market.contracts();
    let mut by_rate: Vec<usize> = (0..kk).collect();
    by_rate.sort_by_key(|&k| (contracts[k].usage_rate, k));
    let mut total = 0i64;
    for (t, &d) in demand.iter().enumerate() {
        for (k, c) in contracts.iter().enumerate() {
            total += i64::from(flat[t * kk + k]) * c.upfront.raw();
        }
        let mut left = i64::from(d);
        for &k in &by_rate {
            let term = contracts[k].duration_stages as usize;
            let first = (t + 1).saturating_sub(term);
            let cap: i64 = (first..=t).map(|i| i64::from(flat[i * kk + k])).sum();
            let used = left.min(cap);
            total += used * contracts[k].usage_rate.raw() * h;
            left -= used;
        }
        total += left * market.ondemand_rate().raw() * h;
    }
    total
}

/// Every reservation vector in `{0..=max(D)}^(T*K)`, no pruning. Ties
/// resolve to fewer reserved instances, then to the vector that reserves
/// more at the first differing slot.
pub fn exhaustive(demand: &DemandVector, market: &MarketConfig) -> (i64, Vec<u32>) {
    let d = demand.as_slice();
    let n = d.len() * market.len();
    let top = demand.max();
    let mut flat = vec![0u32; n];
    let mut best: Option<(i64, u64, Vec<u32>)> = None;
    loop {
        let cost = brute_cost(&flat, d, market);
        let reserved: u64 = flat.iter().map(|&x| u64::from(x)).sum();
        let better = match &best {
            None => true,
            Some((bc, br, bf)) => (cost, reserved) < (*bc, *br) || ((cost, reserved) == (*bc, *br) && flat > *bf),
        };
        if better {
            best = Some((cost, reserved, flat.clone()));
        }
        // odometer
        let mut i = 0;
        loop {
            if i == n {
                let (c, _, f) = best.unwrap();
                return (c, f);
            }
            if flat[i] < top {
                flat[i] += 1;
                break;
            }
            flat[i] = 0;
            i += 1;
        }
    }
}
