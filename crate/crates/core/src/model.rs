//! Domain types: contracts, the market catalog, demand, plans and schedules.
//!
//! Stage indices are zero-based throughout the library. Reports and file
//! formats render them one-based.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Millicents;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContractId(pub u32);

impl fmt::Display for ContractId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// One reservation contract: pay `upfront` per instance once, then
/// `usage_rate` per instance-hour for `duration_stages` stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PricingContract {
    pub id: ContractId,
    pub upfront: Millicents,
    pub duration_stages: u32,
    pub usage_rate: Millicents,
}

impl PricingContract {
    pub fn new(id: u32, upfront: Millicents, duration_stages: u32, usage_rate: Millicents) -> Result<Self> {
        let c = PricingContract { id: ContractId(id), upfront, duration_stages, usage_rate };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if !self.upfront.is_positive() {
            return Err(Error::invalid(format!("contract {}: upfront charge must be positive", self.id)));
        }
        if self.duration_stages == 0 {
            return Err(Error::invalid(format!("contract {}: duration must be at least one stage", self.id)));
        }
        if self.usage_rate.is_negative() {
            return Err(Error::invalid(format!("contract {}: usage rate must be non-negative", self.id)));
        }
        Ok(())
    }
}

/// Contract catalog plus on-demand pricing and stage granularity.
///
/// Construction enforces the orderings the multi-contract planner relies
/// on: durations strictly decreasing and upfront-per-stage strictly
/// increasing. Every contract must also beat pure on-demand for a full
/// term of constant demand (`upfront < duration * discount_per_stage`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarketConfig {
    contracts: Vec<PricingContract>,
    ondemand_rate: Millicents,
    stage_hours: u32,
    #[serde(skip)]
    dispatch_order: Vec<usize>,
}

impl MarketConfig {
    pub fn new(contracts: Vec<PricingContract>, ondemand_rate: Millicents, stage_hours: u32) -> Result<Self> {
        if stage_hours == 0 {
            return Err(Error::invalid("stage_hours must be at least 1"));
        }
        if !ondemand_rate.is_positive() {
            return Err(Error::invalid("on-demand rate must be positive"));
        }
        for (i, c) in contracts.iter().enumerate() {
            c.validate()?;
            if contracts[..i].iter().any(|p| p.id == c.id) {
                return Err(Error::invalid(format!("duplicate contract id {}", c.id)));
            }
            if c.usage_rate >= ondemand_rate {
                return Err(Error::invalid(format!(
                    "contract {}: usage rate {} must be below the on-demand rate {}",
                    c.id, c.usage_rate, ondemand_rate
                )));
            }
            let discount = (ondemand_rate - c.usage_rate) * stage_hours as i64;
            let full_term = i128::from(discount.raw()) * i128::from(c.duration_stages);
            if i128::from(c.upfront.raw()) >= full_term {
                return Err(Error::invalid(format!(
                    "contract {}: upfront {} is not below duration x per-stage discount ({} x {}); \
                     reserving would never pay off",
                    c.id, c.upfront, c.duration_stages, discount
                )));
            }
        }
        for pair in contracts.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.duration_stages <= b.duration_stages {
                return Err(Error::invalid(format!(
                    "contracts must be listed by strictly decreasing duration ({} has {}, {} has {})",
                    a.id, a.duration_stages, b.id, b.duration_stages
                )));
            }
            // a.upfront / a.duration < b.upfront / b.duration
            let lhs = i128::from(a.upfront.raw()) * i128::from(b.duration_stages);
            let rhs = i128::from(b.upfront.raw()) * i128::from(a.duration_stages);
            if lhs >= rhs {
                return Err(Error::invalid(format!(
                    "upfront per stage must strictly increase as duration shrinks ({} vs {})",
                    a.id, b.id
                )));
            }
        }
        let mut dispatch_order: Vec<usize> = (0..contracts.len()).collect();
        dispatch_order.sort_by_key(|&k| (contracts[k].usage_rate, k));
        Ok(MarketConfig { contracts, ondemand_rate, stage_hours, dispatch_order })
    }

    pub fn contracts(&self) -> &[PricingContract] {
        &self.contracts
    }

    pub fn ondemand_rate(&self) -> Millicents {
        self.ondemand_rate
    }

    pub fn stage_hours(&self) -> u32 {
        self.stage_hours
    }

    pub fn len(&self) -> usize {
        self.contracts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contracts.is_empty()
    }

    pub fn index_of(&self, id: ContractId) -> Option<usize> {
        self.contracts.iter().position(|c| c.id == id)
    }

    pub fn contract(&self, id: ContractId) -> Option<&PricingContract> {
        self.contracts.iter().find(|c| c.id == id)
    }

    pub fn contract_ids(&self) -> Vec<ContractId> {
        self.contracts.iter().map(|c| c.id).collect()
    }

    /// Contract indices sorted by usage rate, cheapest first.
    pub fn dispatch_order(&self) -> &[usize] {
        &self.dispatch_order
    }

    /// On-demand cost of one instance for one stage, `o * h`.
    pub fn ondemand_per_stage(&self) -> Millicents {
        self.ondemand_rate * self.stage_hours as i64
    }

    /// Reserved usage cost of one instance for one stage, `r_k * h`.
    pub fn usage_per_stage(&self, contract: &PricingContract) -> Millicents {
        contract.usage_rate * self.stage_hours as i64
    }

    /// Saving of a reserved over an on-demand instance for one stage,
    /// `(o - r_k) * h`.
    pub fn discount_per_stage(&self, contract: &PricingContract) -> Millicents {
        (self.ondemand_rate - contract.usage_rate) * self.stage_hours as i64
    }

    /// The same market with a single contract from the catalog.
    pub fn restricted_to(&self, id: ContractId) -> Result<MarketConfig> {
        let c = self.contract(id).ok_or_else(|| Error::invalid(format!("unknown contract id {id}")))?;
        MarketConfig::new(vec![c.clone()], self.ondemand_rate, self.stage_hours)
    }
}

/// Per-stage instance demand. Never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct DemandVector(Vec<u32>);

impl DemandVector {
    pub fn new(demands: Vec<u32>) -> Result<Self> {
        if demands.is_empty() {
            return Err(Error::invalid("demand vector must cover at least one stage"));
        }
        Ok(DemandVector(demands))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn horizon(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, stage: usize) -> u32 {
        self.0[stage]
    }

    pub fn max(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&d| u64::from(d)).sum()
    }

    /// Ascending copy; the canonical order is left untouched.
    pub fn sorted(&self) -> Vec<u32> {
        let mut s = self.0.clone();
        s.sort_unstable();
        s
    }

    /// First `len` stages (at least one).
    pub fn prefix(&self, len: usize) -> Result<DemandVector> {
        if len == 0 || len > self.0.len() {
            return Err(Error::invalid(format!("prefix length {len} outside 1..={}", self.0.len())));
        }
        Ok(DemandVector(self.0[..len].to_vec()))
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

impl TryFrom<Vec<u32>> for DemandVector {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        DemandVector::new(v)
    }
}

impl From<DemandVector> for Vec<u32> {
    fn from(d: DemandVector) -> Self {
        d.0
    }
}

/// Instances reserved per (stage, contract). Dense storage, indexed by
/// catalog position then stage.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReservationPlan {
    horizon: usize,
    contract_ids: Vec<ContractId>,
    amounts: Vec<Vec<u32>>,
}

impl ReservationPlan {
    pub fn empty(horizon: usize, market: &MarketConfig) -> Self {
        ReservationPlan { horizon, contract_ids: market.contract_ids(), amounts: vec![vec![0; horizon]; market.len()] }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn contract_ids(&self) -> &[ContractId] {
        &self.contract_ids
    }

    fn slot(&self, stage: usize, id: ContractId) -> Result<usize> {
        if stage >= self.horizon {
            return Err(Error::invalid(format!("stage {stage} outside horizon {}", self.horizon)));
        }
        self.contract_ids
            .iter()
            .position(|&c| c == id)
            .ok_or_else(|| Error::invalid(format!("contract {id} not in plan catalog")))
    }

    pub fn get(&self, stage: usize, id: ContractId) -> u32 {
        self.slot(stage, id).map(|k| self.amounts[k][stage]).unwrap_or(0)
    }

    pub fn set(&mut self, stage: usize, id: ContractId, amount: u32) -> Result<()> {
        let k = self.slot(stage, id)?;
        self.amounts[k][stage] = amount;
        Ok(())
    }

    pub fn add(&mut self, stage: usize, id: ContractId, amount: u32) -> Result<()> {
        let k = self.slot(stage, id)?;
        self.amounts[k][stage] += amount;
        Ok(())
    }

    /// Reservations under the contract at catalog index `k`, per stage.
    pub fn by_index(&self, k: usize) -> &[u32] {
        &self.amounts[k]
    }

    pub(crate) fn by_index_mut(&mut self, k: usize) -> &mut [u32] {
        &mut self.amounts[k]
    }

    /// Non-zero entries as `(stage, contract, amount)`, stage-major.
    pub fn entries(&self) -> Vec<(usize, ContractId, u32)> {
        let mut out = Vec::new();
        for t in 0..self.horizon {
            for (k, &id) in self.contract_ids.iter().enumerate() {
                let a = self.amounts[k][t];
                if a > 0 {
                    out.push((t, id, a));
                }
            }
        }
        out
    }

    pub fn total_reserved(&self) -> u64 {
        self.amounts.iter().flatten().map(|&a| u64::from(a)).sum()
    }

    /// Whether the plan's dimensions agree with the demand and catalog.
    pub fn conforms_to(&self, demand: &DemandVector, market: &MarketConfig) -> bool {
        self.horizon == demand.horizon()
            && self.contract_ids.len() == market.len()
            && self.contract_ids.iter().zip(market.contracts()).all(|(&a, c)| a == c.id)
            && self.amounts.iter().all(|row| row.len() == self.horizon)
    }
}

/// Instances launched per stage, from each contract's active reservations
/// and on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispatchSchedule {
    pub contract_ids: Vec<ContractId>,
    /// `reserved[k][t]`: launches under the contract at catalog index `k`.
    pub reserved: Vec<Vec<u32>>,
    pub ondemand: Vec<u32>,
}

impl DispatchSchedule {
    pub fn horizon(&self) -> usize {
        self.ondemand.len()
    }

    pub fn reserved_launches(&self, stage: usize, id: ContractId) -> u32 {
        self.contract_ids.iter().position(|&c| c == id).map(|k| self.reserved[k][stage]).unwrap_or(0)
    }

    pub fn launched(&self, stage: usize) -> u64 {
        u64::from(self.ondemand[stage]) + self.reserved.iter().map(|row| u64::from(row[stage])).sum::<u64>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostBreakdown {
    pub per_stage: Vec<Millicents>,
    pub reservation_total: Millicents,
    pub reserved_usage_total: Millicents,
    pub ondemand_total: Millicents,
    pub grand_total: Millicents,
}
