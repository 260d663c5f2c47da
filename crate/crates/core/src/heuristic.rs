//! Linear-time reservation heuristics.
//!
//! Within one contract term the cost of reserving `x` instances is
//! piecewise linear in `x`, with breakpoints at the sorted demands and a
//! slope between the `j`-th and `(j+1)`-th smallest demand of
//! `R - (t_d - j) * a` (upfront `R`, per-stage discount `a`, segment length
//! `t_d`). The slope changes sign at a rank that does not depend on the
//! demand values, so the optimum is a single order statistic and can be
//! picked with quickselect instead of a sort.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ContractId, DemandVector, MarketConfig, PricingContract, ReservationPlan};
use crate::select::{select_in_place, DEFAULT_SEED};

/// A window of consecutive stages planned as one unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    /// Zero-based first stage.
    pub start_stage: usize,
    pub length_stages: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentDecision {
    pub contract: ContractId,
    pub segment: Segment,
    pub amount: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HorizonPlanResult {
    pub plan: ReservationPlan,
    /// One decision per segment per contract pass, in planning order.
    pub decisions: Vec<SegmentDecision>,
}

impl HorizonPlanResult {
    /// Per-segment amounts chosen for one contract.
    pub fn amounts_for(&self, contract: ContractId) -> Vec<u32> {
        self.decisions.iter().filter(|d| d.contract == contract).map(|d| d.amount).collect()
    }
}

/// `floor(R / a)`: how many stages of a term the discount needs to repay
/// the upfront charge. Exact integer division on fixed-point values.
pub fn payback_stages(contract: &PricingContract, market: &MarketConfig) -> Result<u64> {
    let discount = market.discount_per_stage(contract);
    if !discount.is_positive() {
        return Err(Error::invalid(format!("contract {} has no discount over on-demand", contract.id)));
    }
    Ok((contract.upfront.raw() / discount.raw()) as u64)
}

/// Rank of the cost-minimising order statistic in a segment of
/// `segment_len` stages; zero or negative means reserve nothing.
pub fn optimal_rank(segment_len: usize, contract: &PricingContract, market: &MarketConfig) -> Result<i64> {
    Ok(segment_len as i64 - payback_stages(contract, market)? as i64)
}

/// Cheapest reservation for one segment no longer than the contract term.
///
/// When several amounts tie, the smallest is returned.
pub fn optimal_segment_reservation(segment: &[u32], contract: &PricingContract, market: &MarketConfig) -> Result<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut scratch = segment.to_vec();
    segment_amount(&mut scratch, contract, market, &mut rng)
}

fn segment_amount<R: Rng + ?Sized>(
    scratch: &mut [u32],
    contract: &PricingContract,
    market: &MarketConfig,
    rng: &mut R,
) -> Result<u32> {
    if scratch.len() > contract.duration_stages as usize {
        return Err(Error::invalid(format!(
            "segment of {} stages exceeds contract {} duration of {}",
            scratch.len(),
            contract.id,
            contract.duration_stages
        )));
    }
    if scratch.is_empty() {
        return Ok(0);
    }
    let rank = optimal_rank(scratch.len(), contract, market)?;
    if rank <= 0 {
        return Ok(0);
    }
    Ok(select_in_place(scratch, rank as usize - 1, rng))
}

fn catalog_index(contract: &PricingContract, market: &MarketConfig) -> Result<usize> {
    match market.index_of(contract.id) {
        Some(k) if market.contracts()[k] == *contract => Ok(k),
        _ => Err(Error::invalid(format!("contract {} is not part of the market catalog", contract.id))),
    }
}

/// Plans the contract at catalog index `k` over `demand`, in consecutive
/// non-overlapping segments of one term each (the last may be shorter).
fn plan_segments<R: Rng + ?Sized>(
    demand: &[u32],
    k: usize,
    market: &MarketConfig,
    rng: &mut R,
    plan: &mut ReservationPlan,
    decisions: &mut Vec<SegmentDecision>,
) -> Result<()> {
    let contract = &market.contracts()[k];
    let term = contract.duration_stages as usize;
    let mut scratch = Vec::with_capacity(term.min(demand.len()));
    let mut start = 0;
    while start < demand.len() {
        let len = term.min(demand.len() - start);
        scratch.clear();
        scratch.extend_from_slice(&demand[start..start + len]);
        let amount = segment_amount(&mut scratch, contract, market, rng)?;
        plan.by_index_mut(k)[start] += amount;
        decisions.push(SegmentDecision {
            contract: contract.id,
            segment: Segment { start_stage: start, length_stages: len },
            amount,
        });
        start += len;
    }
    Ok(())
}

/// Single-contract planning over an arbitrary horizon. Each segment gets
/// its own optimal order statistic, reserved at the segment's first stage.
pub fn plan_single_contract(
    demand: &DemandVector,
    contract: &PricingContract,
    market: &MarketConfig,
) -> Result<HorizonPlanResult> {
    plan_single_contract_seeded(demand, contract, market, DEFAULT_SEED)
}

pub fn plan_single_contract_seeded(
    demand: &DemandVector,
    contract: &PricingContract,
    market: &MarketConfig,
    seed: u64,
) -> Result<HorizonPlanResult> {
    let k = catalog_index(contract, market)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plan = ReservationPlan::empty(demand.horizon(), market);
    let mut decisions = Vec::with_capacity(demand.horizon().div_ceil(contract.duration_stages as usize));
    plan_segments(demand.as_slice(), k, market, &mut rng, &mut plan, &mut decisions)?;
    Ok(HorizonPlanResult { plan, decisions })
}

/// Multi-contract cascade: longest contract first, each pass planning the
/// demand left uncovered by the previous passes. Whatever remains is left
/// to on-demand capacity at dispatch time.
pub fn plan_multi_contract(demand: &DemandVector, market: &MarketConfig) -> Result<HorizonPlanResult> {
    plan_multi_contract_seeded(demand, market, DEFAULT_SEED)
}

pub fn plan_multi_contract_seeded(
    demand: &DemandVector,
    market: &MarketConfig,
    seed: u64,
) -> Result<HorizonPlanResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plan = ReservationPlan::empty(demand.horizon(), market);
    let mut decisions = Vec::new();
    let mut residual = demand.as_slice().to_vec();
    for k in 0..market.len() {
        let first = decisions.len();
        plan_segments(&residual, k, market, &mut rng, &mut plan, &mut decisions)?;
        for d in &decisions[first..] {
            let end = (d.segment.start_stage + d.segment.length_stages).min(residual.len());
            for r in &mut residual[d.segment.start_stage..end] {
                *r = r.saturating_sub(d.amount);
            }
        }
    }
    Ok(HorizonPlanResult { plan, decisions })
}
