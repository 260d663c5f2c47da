//! Reservation planning for cloud capacity.
//!
//! Given per-stage instance demand, a catalog of reservation contracts and
//! an on-demand rate, the crate computes reservation schedules with
//! linear-time order-statistic heuristics ([`heuristic`]) and an exact
//! branch-and-bound baseline ([`exact`]). All money is fixed point
//! ([`Millicents`]), so planners can be compared with exact equality.

pub mod bench;
pub mod config;
pub mod cost;
pub mod error;
pub mod exact;
pub mod feasibility;
pub mod heuristic;
pub mod model;
pub mod money;
pub mod select;
pub mod trace;

pub use cost::{delta_cost, dispatch, evaluate, segment_cost, stage_usage_cost};
pub use error::{Error, Result};

pub use exact::{export_model, solve_exact, ExactSolution};
pub use feasibility::{check_feasible, Constraint, Violation};
pub use heuristic::{optimal_segment_reservation, plan_multi_contract, plan_single_contract, HorizonPlanResult};
pub use model::{
    ContractId, CostBreakdown, DemandVector, DispatchSchedule, MarketConfig, PricingContract, ReservationPlan,
};
pub use money::Millicents;
pub use select::kth_smallest;
