//! Exact reservation planning by branch and bound, and export of the
//! integer program as a GNU MathProg model.
//!
//! Only the reservation variables are branched on. Launches follow from
//! cheapest-first dispatch, which is optimal once reservations are fixed.
//! Meant for desk-scale instances (a dozen stages, one or two contracts).

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use crate::cost::{dispatch, evaluate, stage_dispatch_cost};
use crate::error::{Error, Result};
use crate::heuristic::plan_multi_contract;
use crate::model::{CostBreakdown, DemandVector, DispatchSchedule, MarketConfig, ReservationPlan};
use crate::money::Millicents;

pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactSolution {
    pub plan: ReservationPlan,
    pub schedule: DispatchSchedule,
    pub cost: CostBreakdown,
    /// The search ran to completion within the node budget.
    pub optimal: bool,
    pub nodes_explored: u64,
    /// Leaves whose cost came in below a pruning bound computed on the path
    /// to them. Always zero for an admissible bound.
    pub bound_violations: u64,
}

/// Ranking of candidate plans: lower cost, then fewer reserved instances,
/// then reservations committed earlier (at the first differing
/// stage/contract slot, the larger amount wins).
fn compare_plans(a: (Millicents, u64, &[u32]), b: (Millicents, u64, &[u32])) -> Ordering {
    a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then_with(|| b.2.cmp(a.2))
}

struct Incumbent {
    cost: Millicents,
    reserved: u64,
    flat: Vec<u32>,
}

struct Search<'a> {
    demand: &'a [u32],
    market: &'a MarketConfig,
    horizon: usize,
    kk: usize,
    /// Reservation amounts, stage-major: `flat[t * kk + k]`.
    flat: Vec<u32>,
    /// Cheapest usage cost of one instance-stage, `min_k r_k * h`.
    usage_floor: Millicents,
    /// `uncovered_floor[a]`: cheapest cost of one instance-stage not covered
    /// by reservations already made, when new reservations start at `a` or
    /// later: on demand, or a fresh reservation with its upfront charge
    /// spread over every stage it can still cover.
    uncovered_floor: Vec<Millicents>,
    /// Scratch space for `remaining_floor`.
    uncovered: Vec<u64>,
    order: Vec<usize>,
    slack: Vec<Vec<i64>>,
    max_term: usize,
    single_window: bool,
    budget: u64,
    nodes: u64,
    exhausted_budget: bool,
    bound_violations: u64,
    best: Option<Incumbent>,
    /// Best prefix seen per (length, capacity left in open stages).
    seen: HashMap<Vec<u32>, Incumbent>,
}

/// Upper limit on remembered prefixes; past it the search goes on without
/// recording new ones.
const SEEN_LIMIT: usize = 1 << 20;

impl Search<'_> {
    /// Capacity active at stage `s` from decided reservations (positions
    /// before `t * K + k`) of contract `k` and of every contract whose
    /// usage rate is no higher.
    fn earlier_active(&self, t: usize, k: usize, s: usize) -> u64 {
        let contracts = self.market.contracts();
        let rate = contracts[k].usage_rate;
        let pos = t * self.kk + k;
        let mut total = 0;
        for (j, c) in contracts.iter().enumerate() {
            if j != k && c.usage_rate > rate {
                continue;
            }
            let from = (s + 1).saturating_sub(c.duration_stages as usize);
            let mut i = from;
            while i <= s && i * self.kk + j < pos {
                total += u64::from(self.flat[i * self.kk + j]);
                i += 1;
            }
        }
        total
    }

    /// Capacity that decided reservations (`flat[..len]`) provide at each
    /// stage from `open_from` on, per contract, prefixed by `len`.
    fn carried_capacity(&self, len: usize, open_from: usize) -> Vec<u32> {
        let mut key = vec![len as u32];
        for (k, c) in self.market.contracts().iter().enumerate() {
            let term = c.duration_stages as usize;
            let mut s = open_from;
            while s < self.horizon {
                let from = (s + 1).saturating_sub(term);
                let mut cap = 0;
                let mut any = false;
                let mut i = from;
                while i <= s && i * self.kk + k < len {
                    cap += self.flat[i * self.kk + k];
                    any = true;
                    i += 1;
                }
                if !any {
                    break;
                }
                key.push(cap);
                s += 1;
            }
            key.push(u32::MAX);
        }
        key
    }

    /// Records the prefix `flat[..len]`, or reports that an earlier prefix
    /// of the same length ranks at least as well while leaving the same
    /// capacity in every open stage. Both then face the same completions
    /// at the same cost, so the better prefix wins under every completion.
    fn dominated(&mut self, len: usize, open_from: usize, cost: Millicents, reserved: u64) -> bool {
        let key = self.carried_capacity(len, open_from);
        let prefix = &self.flat[..len];
        if let Some(prev) = self.seen.get_mut(&key) {
            if compare_plans((prev.cost, prev.reserved, &prev.flat), (cost, reserved, prefix)) != Ordering::Greater {
                return true;
            }
            *prev = Incumbent { cost, reserved, flat: prefix.to_vec() };
        } else if self.seen.len() < SEEN_LIMIT {
            self.seen.insert(key, Incumbent { cost, reserved, flat: prefix.to_vec() });
        }
        false
    }

    /// Values worth trying for the reservation at `(t, k)`, largest first.
    ///
    /// A unit beyond every stage's demand in the new reservation's window,
    /// net of decided capacity there that is no more expensive to use, can
    /// be dropped: another unit at the same rate takes over whatever it
    /// served, and the upfront charge is saved. Such plans are never
    /// optimal. With one contract and a horizon inside one term, the
    /// candidates shrink further to the residual demand levels.
    fn candidates(&self, t: usize, k: usize) -> Vec<u32> {
        let term = self.market.contracts()[k].duration_stages as usize;
        let end = (t + term).min(self.horizon);
        let residuals = (t..end).map(|s| {
            let r = i64::from(self.demand[s]) - self.earlier_active(t, k, s) as i64;
            r.max(0) as u32
        });
        if self.single_window {
            let mut vals: Vec<u32> = residuals.chain(std::iter::once(0)).collect();
            vals.sort_unstable_by(|a, b| b.cmp(a));
            vals.dedup();
            vals
        } else {
            let ub = residuals.max().unwrap_or(0);
            (0..=ub).rev().collect()
        }
    }

    fn stage_cost(&self, t: usize) -> Millicents {
        let kk = self.kk;
        let contracts = self.market.contracts();
        stage_dispatch_cost(self.market, u64::from(self.demand[t]), |k| {
            let term = contracts[k].duration_stages as usize;
            let from = (t + 1).saturating_sub(term);
            (from..=t).map(|i| u64::from(self.flat[i * kk + k])).sum()
        })
    }

    /// Admissible bound on the usage and future upfront cost of stages
    /// `open_from..`, given the reservations in `flat[..decided]`.
    ///
    /// Demand within decided capacity costs at least the cheapest usage
    /// rate. Each unit beyond it costs at least `min(o*h, r_k*h + p[s][k])`
    /// for any shares `p >= 0` of the upfront charges such that no
    /// reservation window (starting at `open_from` or later) collects more
    /// than `R_k`: this is a feasible dual of the linear relaxation. The
    /// shares go greedily to the stages with the most uncovered demand, and
    /// the result is never below the evenly amortized charge.
    fn remaining_floor(&mut self, open_from: usize, decided: usize) -> Millicents {
        let horizon = self.horizon;
        let contracts = self.market.contracts();
        let h = u64::from(self.market.stage_hours());
        // no decided reservation is active past `reach`
        let reach = if decided == 0 {
            open_from
        } else {
            ((decided - 1) / self.kk + self.max_term).min(horizon).max(open_from)
        };
        let mut base = Millicents::ZERO;
        self.order.clear();
        for s in open_from..horizon {
            let d = u64::from(self.demand[s]);
            let mut committed: u64 = 0;
            if s < reach {
                for (k, c) in contracts.iter().enumerate() {
                    let from = (s + 1).saturating_sub(c.duration_stages as usize);
                    let mut i = from;
                    while i <= s && i * self.kk + k < decided {
                        committed += u64::from(self.flat[i * self.kk + k]);
                        i += 1;
                    }
                }
            }
            let covered = d.min(committed);
            base += self.usage_floor.times(covered);
            self.uncovered[s] = d - covered;
            if d > covered {
                self.order.push(s);
            }
        }
        let uncovered_total: u64 = self.order.iter().map(|&s| self.uncovered[s]).sum();
        let even = self.uncovered_floor[open_from].times(uncovered_total);

        let uncovered = &self.uncovered;
        self.order.sort_unstable_by(|&a, &b| uncovered[b].cmp(&uncovered[a]).then(a.cmp(&b)));
        for (k, c) in contracts.iter().enumerate() {
            self.slack[k][open_from..horizon].fill(c.upfront.raw());
        }
        let ondemand = self.market.ondemand_per_stage().raw();
        let mut shared = 0i64;
        for &s in &self.order {
            let mut price = ondemand;
            for (k, c) in contracts.iter().enumerate() {
                let from = (s + 1).saturating_sub(c.duration_stages as usize).max(open_from);
                let room = self.slack[k][from..=s].iter().copied().min().unwrap_or(0);
                price = price.min(c.usage_rate.raw() * h as i64 + room);
            }
            for (k, c) in contracts.iter().enumerate() {
                let take = price - c.usage_rate.raw() * h as i64;
                if take > 0 {
                    let from = (s + 1).saturating_sub(c.duration_stages as usize).max(open_from);
                    self.slack[k][from..=s].iter_mut().for_each(|v| *v -= take);
                }
            }
            shared += price * self.uncovered[s] as i64;
        }
        base + even.max(Millicents(shared))
    }

    fn should_prune(&self, bound: Millicents, reserved: u64, pos: usize) -> bool {
        let Some(best) = &self.best else { return false };
        match bound.cmp(&best.cost) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match reserved.cmp(&best.reserved) {
                Ordering::Greater => true,
                Ordering::Less => false,
                // only all-zero completions can still tie; they win only if
                // this prefix commits earlier than the incumbent's
                Ordering::Equal => self.flat[..pos] <= best.flat[..pos],
            },
        }
    }

    fn offer(&mut self, cost: Millicents, reserved: u64) {
        let better = match &self.best {
            None => true,
            Some(b) => compare_plans((cost, reserved, &self.flat), (b.cost, b.reserved, &b.flat)) == Ordering::Less,
        };
        if better {
            self.best = Some(Incumbent { cost, reserved, flat: self.flat.clone() });
        }
    }

    /// Assigns variable `pos` onward. `cost` covers reservations so far and
    /// the usage of every completed stage.
    fn descend(&mut self, pos: usize, cost: Millicents, reserved: u64, path_bound: Millicents) {
        if self.exhausted_budget {
            return;
        }
        if pos == self.flat.len() {
            if path_bound > cost {
                self.bound_violations += 1;
            }
            self.offer(cost, reserved);
            return;
        }
        let (t, k) = (pos / self.kk, pos % self.kk);
        let upfront = self.market.contracts()[k].upfront;
        let closes_stage = k + 1 == self.kk;
        for v in self.candidates(t, k) {
            if self.nodes >= self.budget {
                self.exhausted_budget = true;
                break;
            }
            self.nodes += 1;
            self.flat[pos] = v;
            let mut next_cost = cost + upfront.times(u64::from(v));
            let next_reserved = reserved + u64::from(v);
            let open_from = if closes_stage {
                next_cost += self.stage_cost(t);
                t + 1
            } else {
                t
            };
            let bound = next_cost + self.remaining_floor(open_from, pos + 1);
            if self.should_prune(bound, next_reserved, pos + 1) {
                continue;
            }
            if pos + 1 < self.flat.len() && self.dominated(pos + 1, open_from, next_cost, next_reserved) {
                continue;
            }
            self.descend(pos + 1, next_cost, next_reserved, path_bound.max(bound));
        }
        self.flat[pos] = 0;
    }
}

/// Minimum-cost reservation plan by branch and bound over every
/// `(stage, contract)` reservation, overlapping reservations included.
///
/// The pruning bound is the cost committed so far plus a floor on every
/// remaining instance-stage (see `Search::remaining_floor`). Prefixes that
/// leave the same capacity in every open stage as a better-ranked earlier
/// prefix are cut. The multi-contract heuristic seeds the incumbent. When
/// `node_budget` runs out the best plan found so far is returned with
/// `optimal == false`.
pub fn solve_exact(demand: &DemandVector, market: &MarketConfig, node_budget: u64) -> Result<ExactSolution> {
    if node_budget == 0 {
        return Err(Error::invalid("node budget must be positive"));
    }
    let horizon = demand.horizon();
    let kk = market.len();
    let d = demand.as_slice();

    let cheapest = market
        .contracts()
        .iter()
        .map(|c| c.usage_rate)
        .min()
        .unwrap_or(market.ondemand_rate())
        .min(market.ondemand_rate());
    let h = u64::from(market.stage_hours());
    let usage_floor = cheapest.times(h);
    let uncovered_floor: Vec<Millicents> = (0..=horizon)
        .map(|a| {
            let left = (horizon - a).max(1) as i64;
            market
                .contracts()
                .iter()
                .map(|c| {
                    let span = left.min(i64::from(c.duration_stages));
                    c.usage_rate.times(h) + Millicents(c.upfront.raw() / span)
                })
                .fold(market.ondemand_per_stage(), Millicents::min)
        })
        .collect();
    let max_term = market.contracts().iter().map(|c| c.duration_stages as usize).max().unwrap_or(0);

    let single_window = kk == 1 && horizon <= market.contracts()[0].duration_stages as usize;

    let mut search = Search {
        demand: d,
        market,
        horizon,
        kk,
        flat: vec![0; horizon * kk],
        usage_floor,
        uncovered_floor,
        uncovered: vec![0; horizon],
        order: Vec::with_capacity(horizon),
        slack: vec![vec![0; horizon]; kk],
        max_term,
        single_window,
        budget: node_budget,
        nodes: 0,
        exhausted_budget: false,
        bound_violations: 0,
        best: None,
        seen: HashMap::new(),
    };

    if kk > 0 {
        let seed = plan_multi_contract(demand, market)?.plan;
        let cost = evaluate(&seed, demand, market)?.grand_total;
        search.best = Some(Incumbent { cost, reserved: seed.total_reserved(), flat: flatten(&seed) });
        search.descend(0, Millicents::ZERO, 0, Millicents::ZERO);
    }

    let flat = search.best.as_ref().map(|b| b.flat.clone()).unwrap_or_default();
    let plan = unflatten(&flat, horizon, market);
    let schedule = dispatch(&plan, demand, market)?;
    let cost = evaluate(&plan, demand, market)?;
    if let Some(b) = &search.best {
        debug_assert_eq!(b.cost, cost.grand_total);
    }
    Ok(ExactSolution {
        plan,
        schedule,
        cost,
        optimal: !search.exhausted_budget,
        nodes_explored: search.nodes,
        bound_violations: search.bound_violations,
    })
}

/// Reservation amounts in stage-major order, `flat[t * K + k]`.
pub fn flatten(plan: &ReservationPlan) -> Vec<u32> {
    let kk = plan.contract_ids().len();
    let mut flat = vec![0; plan.horizon() * kk];
    for k in 0..kk {
        for (t, &a) in plan.by_index(k).iter().enumerate() {
            flat[t * kk + k] = a;
        }
    }
    flat
}

/// Inverse of [`flatten`].
pub fn unflatten(flat: &[u32], horizon: usize, market: &MarketConfig) -> ReservationPlan {
    let kk = market.len();
    let mut plan = ReservationPlan::empty(horizon, market);
    for k in 0..kk {
        let row = plan.by_index_mut(k);
        for (t, slot) in row.iter_mut().enumerate() {
            *slot = flat.get(t * kk + k).copied().unwrap_or(0);
        }
    }
    plan
}

/// The planning problem as a GNU MathProg model, one explicit variable per
/// index (`xR_t_k` reservations, `xr_t_k` reserved launches, `xo_t`
/// on-demand launches; stages one-based, `k` the contract id). Output is
/// deterministic for a given instance.
pub fn export_model(demand: &DemandVector, market: &MarketConfig) -> String {
    let mut out = String::new();
    let d = demand.as_slice();
    let horizon = d.len();
    let h = i64::from(market.stage_hours());
    let ids: Vec<_> = market.contracts().iter().map(|c| c.id).collect();

    let _ = writeln!(out, "/* resvplan reservation model */");
    let _ = writeln!(
        out,
        "/* stages T={horizon}, contracts K={}, stage_hours h={}, on-demand rate {} */",
        market.len(),
        h,
        market.ondemand_rate()
    );
    for c in market.contracts() {
        let _ = writeln!(
            out,
            "/* contract {}: upfront {}, duration {} stages, usage rate {} */",
            c.id, c.upfront, c.duration_stages, c.usage_rate
        );
    }
    out.push('\n');

    for t in 1..=horizon {
        for id in &ids {
            let _ = writeln!(out, "var xR_{t}_{id} >= 0, integer;");
        }
        for id in &ids {
            let _ = writeln!(out, "var xr_{t}_{id} >= 0, integer;");
        }
        let _ = writeln!(out, "var xo_{t} >= 0, integer;");
    }
    out.push('\n');

    let mut terms = Vec::new();
    for t in 1..=horizon {
        for c in market.contracts() {
            terms.push(format!("{} * xR_{t}_{}", c.upfront, c.id));
            terms.push(format!("{} * xr_{t}_{}", c.usage_rate * h, c.id));
        }
        terms.push(format!("{} * xo_{t}", market.ondemand_rate() * h));
    }
    let _ = writeln!(out, "minimize total_cost:");
    let _ = writeln!(out, "    {};", terms.join("\n  + "));
    out.push('\n');

    for t in 1..=horizon {
        for c in market.contracts() {
            let from = (t + 1).saturating_sub(c.duration_stages as usize).max(1);
            let mut line = format!("s.t. cap_{t}_{}: xr_{t}_{}", c.id, c.id);
            for i in from..=t {
                let _ = write!(line, " - xR_{i}_{}", c.id);
            }
            let _ = writeln!(out, "{line} <= 0;");
        }
    }
    for (t, &dt) in d.iter().enumerate() {
        let t = t + 1;
        let mut line = format!("s.t. dem_{t}: xo_{t}");
        for id in &ids {
            let _ = write!(line, " + xr_{t}_{id}");
        }
        let _ = writeln!(out, "{line} >= {dt};");
    }
    out.push('\n');
    out.push_str("solve;\n\nend;\n");
    out
}

pub fn write_model<W: Write>(mut w: W, demand: &DemandVector, market: &MarketConfig) -> io::Result<()> {
    w.write_all(export_model(demand, market).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::check_feasible;
    use crate::model::{ContractId, PricingContract};

    fn m(s: &str) -> Millicents {
        s.parse().unwrap()
    }

    fn toy() -> MarketConfig {
        let c = PricingContract::new(1, m("2"), 4, m("1")).unwrap();
        MarketConfig::new(vec![c], m("2"), 1).unwrap()
    }

    #[test]
    fn toy_optimum() {
        let market = toy();
        let d = DemandVector::new(vec![1, 2, 3, 4]).unwrap();
        let sol = solve_exact(&d, &market, DEFAULT_NODE_BUDGET).unwrap();
        assert!(sol.optimal);
        assert_eq!(sol.cost.grand_total, m("17"));
        // 2 and 3 both cost 17; the smaller reservation wins
        assert_eq!(sol.plan.entries(), vec![(0, ContractId(1), 2)]);
        assert_eq!(sol.bound_violations, 0);
        assert!(check_feasible(&sol.plan, &sol.schedule, &d, &market).is_empty());
    }

    #[test]
    fn zero_demand_is_free() {
        let a = PricingContract::new(1, m("2"), 4, m("1")).unwrap();
        let b = PricingContract::new(2, m("1.5"), 2, m("1")).unwrap();
        let market = MarketConfig::new(vec![a, b], m("2"), 1).unwrap();
        let d = DemandVector::new(vec![0, 0, 0]).unwrap();
        let sol = solve_exact(&d, &market, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(sol.cost.grand_total, Millicents::ZERO);
        assert_eq!(sol.plan.total_reserved(), 0);
    }

    #[test]
    fn zero_budget_is_an_error() {
        let d = DemandVector::new(vec![1]).unwrap();
        assert!(solve_exact(&d, &toy(), 0).is_err());
    }

    #[test]
    fn tiny_budget_returns_incumbent() {
        let a = PricingContract::new(1, m("2"), 4, m("1")).unwrap();
        let b = PricingContract::new(2, m("1.5"), 2, m("1")).unwrap();
        let market = MarketConfig::new(vec![a, b], m("2"), 1).unwrap();
        let d = DemandVector::new(vec![5, 1, 7, 2, 6, 3, 8, 1]).unwrap();
        let sol = solve_exact(&d, &market, 3).unwrap();
        assert!(!sol.optimal);
        assert!(sol.nodes_explored <= 3);
        assert!(check_feasible(&sol.plan, &sol.schedule, &d, &market).is_empty());
        let full = solve_exact(&d, &market, DEFAULT_NODE_BUDGET).unwrap();
        assert!(full.optimal);
        assert!(full.cost.grand_total <= sol.cost.grand_total);
    }

    #[test]
    fn pure_ondemand_market() {
        let market = MarketConfig::new(vec![], m("0.24"), 2).unwrap();
        let d = DemandVector::new(vec![3, 1]).unwrap();
        let sol = solve_exact(&d, &market, 10).unwrap();
        assert_eq!(sol.cost.grand_total, m("1.92"));
        assert!(sol.optimal);
    }

    #[test]
    fn smallest_model_shape() {
        let market = toy();
        let d = DemandVector::new(vec![3]).unwrap();
        let text = export_model(&d, &market);
        assert_eq!(text.matches("\nvar ").count(), 3);
        assert_eq!(text.matches("s.t. ").count(), 2);
        assert_eq!(text.matches(" * x").count(), 3);
        assert!(text.contains("s.t. cap_1_1: xr_1_1 - xR_1_1 <= 0;"));
        assert!(text.contains("s.t. dem_1: xo_1 + xr_1_1 >= 3;"));
        assert!(text.ends_with("end;\n"));
        assert_eq!(text, export_model(&d, &market));
    }

    #[test]
    fn capacity_window_respects_duration() {
        let c = PricingContract::new(4, m("1"), 2, m("1")).unwrap();
        let market = MarketConfig::new(vec![c], m("2"), 1).unwrap();
        let d = DemandVector::new(vec![1, 1, 1]).unwrap();
        let text = export_model(&d, &market);
        assert!(text.contains("s.t. cap_3_4: xr_3_4 - xR_2_4 - xR_3_4 <= 0;"));
    }
}
