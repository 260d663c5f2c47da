//! Checks a plan and launch schedule against the reservation model's
//! constraints.

use std::fmt;

use crate::cost::active_capacity;
use crate::model::{ContractId, DemandVector, DispatchSchedule, MarketConfig, ReservationPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Variables are non-negative integers over the right index set.
    Integrality,
    /// Launches under a contract never exceed its active reservations.
    ReservedCapacity,
    /// Launches cover the stage's demand.
    DemandCoverage,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::Integrality => "integrality",
            Constraint::ReservedCapacity => "reserved-capacity",
            Constraint::DemandCoverage => "demand-coverage",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub constraint: Constraint,
    pub stage: Option<usize>,
    pub contract: Option<ContractId>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constraint)?;
        if let Some(t) = self.stage {
            write!(f, " at stage {}", t + 1)?;
        }
        if let Some(k) = self.contract {
            write!(f, " contract {k}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Lists every violated constraint; empty means feasible.
///
/// Dimension mismatches are reported as integrality violations, since the
/// variables are then not defined over the model's index set, and stop
/// further checks.
pub fn check_feasible(
    plan: &ReservationPlan,
    schedule: &DispatchSchedule,
    demand: &DemandVector,
    market: &MarketConfig,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let horizon = demand.horizon();
    if !plan.conforms_to(demand, market) {
        out.push(Violation {
            constraint: Constraint::Integrality,
            stage: None,
            contract: None,
            detail: format!("plan dimensions do not match {horizon} stages x {} contracts", market.len()),
        });
    }
    let schedule_ok = schedule.ondemand.len() == horizon
        && schedule.reserved.len() == market.len()
        && schedule.reserved.iter().all(|row| row.len() == horizon)
        && schedule.contract_ids == market.contract_ids();
    if !schedule_ok {
        out.push(Violation {
            constraint: Constraint::Integrality,
            stage: None,
            contract: None,
            detail: format!("schedule dimensions do not match {horizon} stages x {} contracts", market.len()),
        });
    }
    if !out.is_empty() {
        return out;
    }

    let active = active_capacity(plan, market);
    for (k, c) in market.contracts().iter().enumerate() {
        for (t, &cap) in active[k].iter().enumerate() {
            let launched = u64::from(schedule.reserved[k][t]);
            if launched > cap {
                out.push(Violation {
                    constraint: Constraint::ReservedCapacity,
                    stage: Some(t),
                    contract: Some(c.id),
                    detail: format!("launched {launched} but only {cap} reserved and active"),
                });
            }
        }
    }
    for t in 0..horizon {
        let launched = schedule.launched(t);
        let d = u64::from(demand.get(t));
        if launched < d {
            out.push(Violation {
                constraint: Constraint::DemandCoverage,
                stage: Some(t),
                contract: None,
                detail: format!("launched {launched} of demand {d}"),
            });
        }
    }
    out
}
