//! C interface to `resvplan`.
//!
//! Objects are opaque handles created by `rvp_*_new`-style functions and
//! released with the matching `rvp_*_free`. Every fallible call returns an
//! [`RvpStatus`]; on failure `rvp_last_error_message` describes the error
//! for the calling thread. Currency crosses the boundary as integer
//! millicents (thousandths of a currency unit).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use resvplan::config::{default_market, load_market};
use resvplan::trace::{derive_demand, parse_swf, Aggregation, DemandDerivationConfig};
use resvplan::{
    evaluate, export_model, plan_multi_contract, plan_single_contract, solve_exact, ContractId, DemandVector, Error,
    MarketConfig, Millicents, PricingContract, ReservationPlan,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RvpStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Config = 3,
    Format = 4,
    Io = 5,
    /// The exact search ran out of nodes; the plan written is the best found.
    BudgetExceeded = 6,
    Panic = 7,
}

/// Contract catalog plus on-demand rate and stage length.
pub struct RvpMarket(MarketConfig);

/// Per-stage instance demand.
pub struct RvpDemand(DemandVector);

/// Reservation amounts per stage and contract.
pub struct RvpPlan(ReservationPlan);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RvpContractSpec {
    pub id: u32,
    pub upfront_millicents: i64,
    pub duration_stages: u32,
    pub usage_rate_millicents: i64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RvpCost {
    pub reservation_millicents: i64,
    pub reserved_usage_millicents: i64,
    pub ondemand_millicents: i64,
    pub grand_total_millicents: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

struct Failure(RvpStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidArgument(_) => RvpStatus::InvalidArgument,
            Error::Config(_) => RvpStatus::Config,
            Error::Format(_) => RvpStatus::Format,
            Error::Io(_) => RvpStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RvpStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, turning errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<RvpStatus, Failure>) -> RvpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => {
            if status == RvpStatus::Ok {
                set_error("");
            }
            status
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RvpStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes a handle from this library or null.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    // SAFETY: non-null, and the caller guarantees a NUL-terminated string.
    let s = unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(RvpStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(Path::new(s))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: non-null, and the caller guarantees it is writable.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        // SAFETY: the caller passes a pointer from `put` that was not yet freed.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Message for the last failed call on this thread, or an empty string.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn rvp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a market from `count` contracts.
///
/// # Safety
/// `contracts` must point to `count` readable specs (or be null with
/// `count == 0`); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_market_new(
    contracts: *const RvpContractSpec,
    count: usize,
    ondemand_rate_millicents: i64,
    stage_hours: u32,
    out: *mut *mut RvpMarket,
) -> RvpStatus {
    guard(|| {
        let specs = if count == 0 {
            &[][..]
        } else if contracts.is_null() {
            return Err(null("contracts"));
        } else {
            // SAFETY: non-null with `count` elements per the contract above.
            unsafe { std::slice::from_raw_parts(contracts, count) }
        };
        let list = specs
            .iter()
            .map(|s| {
                PricingContract::new(
                    s.id,
                    Millicents(s.upfront_millicents),
                    s.duration_stages,
                    Millicents(s.usage_rate_millicents),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let market = MarketConfig::new(list, Millicents(ondemand_rate_millicents), stage_hours)?;
        unsafe { put(out, RvpMarket(market))? };
        Ok(RvpStatus::Ok)
    })
}

/// Loads a TOML or JSON catalog file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_market_from_file(path: *const c_char, out: *mut *mut RvpMarket) -> RvpStatus {
    guard(|| {
        let market = load_market(unsafe { path_arg(path)? })?;
        unsafe { put(out, RvpMarket(market))? };
        Ok(RvpStatus::Ok)
    })
}

/// The bundled EC2 standard-large catalog.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_market_default(out: *mut *mut RvpMarket) -> RvpStatus {
    guard(|| {
        unsafe { put(out, RvpMarket(default_market()?))? };
        Ok(RvpStatus::Ok)
    })
}

/// # Safety
/// `market` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rvp_market_free(market: *mut RvpMarket) {
    unsafe { release(market) }
}

/// Copies `len` stage demands.
///
/// # Safety
/// `values` must point to `len` readable integers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_demand_new(values: *const u32, len: usize, out: *mut *mut RvpDemand) -> RvpStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        // SAFETY: non-null with `len` elements per the contract above.
        let slice = unsafe { std::slice::from_raw_parts(values, len) };
        let demand = DemandVector::new(slice.to_vec())?;
        unsafe { put(out, RvpDemand(demand))? };
        Ok(RvpStatus::Ok)
    })
}

/// Derives demand from an SWF trace: peak concurrent processors per stage
/// (or the stage mean, rounded up, when `mean_aggregation` is set), divided
/// by `processors_per_vm` and rounded up. A zero `horizon_stages` keeps the
/// trace's own length.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_demand_from_swf(
    path: *const c_char,
    stage_hours: u32,
    processors_per_vm: u32,
    mean_aggregation: bool,
    horizon_stages: usize,
    out: *mut *mut RvpDemand,
) -> RvpStatus {
    guard(|| {
        let file = std::fs::File::open(unsafe { path_arg(path)? }).map_err(Error::from)?;
        let (jobs, _) = parse_swf(std::io::BufReader::new(file))?;
        let config = DemandDerivationConfig {
            stage_hours,
            processors_per_vm,
            aggregation: if mean_aggregation { Aggregation::MeanCeiling } else { Aggregation::Peak },
            horizon_stages: (horizon_stages > 0).then_some(horizon_stages),
        };
        unsafe { put(out, RvpDemand(derive_demand(&jobs, &config)?))? };
        Ok(RvpStatus::Ok)
    })
}

/// Number of stages, or 0 for a null handle.
///
/// # Safety
/// `demand` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rvp_demand_len(demand: *const RvpDemand) -> usize {
    unsafe { demand.as_ref() }.map_or(0, |d| d.0.horizon())
}

/// # Safety
/// `demand` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rvp_demand_free(demand: *mut RvpDemand) {
    unsafe { release(demand) }
}

/// Plans contract `contract_id` alone, one term-long segment at a time.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_plan_single(
    market: *const RvpMarket,
    demand: *const RvpDemand,
    contract_id: u32,
    out: *mut *mut RvpPlan,
) -> RvpStatus {
    guard(|| {
        let market = &unsafe { as_ref(market, "market")? }.0;
        let demand = &unsafe { as_ref(demand, "demand")? }.0;
        let contract = market
            .contract(ContractId(contract_id))
            .ok_or_else(|| Failure(RvpStatus::InvalidArgument, format!("unknown contract id {contract_id}")))?;
        let result = plan_single_contract(demand, contract, market)?;
        unsafe { put(out, RvpPlan(result.plan))? };
        Ok(RvpStatus::Ok)
    })
}

/// Plans every contract, longest term first, each on the demand the
/// previous ones leave uncovered.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_plan_multi(
    market: *const RvpMarket,
    demand: *const RvpDemand,
    out: *mut *mut RvpPlan,
) -> RvpStatus {
    guard(|| {
        let market = &unsafe { as_ref(market, "market")? }.0;
        let demand = &unsafe { as_ref(demand, "demand")? }.0;
        let result = plan_multi_contract(demand, market)?;
        unsafe { put(out, RvpPlan(result.plan))? };
        Ok(RvpStatus::Ok)
    })
}

/// Minimum-cost plan by branch and bound. Returns
/// `RVP_STATUS_BUDGET_EXCEEDED` with the best plan found written to `out`
/// when `node_budget` runs out.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_solve_exact(
    market: *const RvpMarket,
    demand: *const RvpDemand,
    node_budget: u64,
    out: *mut *mut RvpPlan,
) -> RvpStatus {
    guard(|| {
        let market = &unsafe { as_ref(market, "market")? }.0;
        let demand = &unsafe { as_ref(demand, "demand")? }.0;
        let solution = solve_exact(demand, market, node_budget)?;
        unsafe { put(out, RvpPlan(solution.plan))? };
        if solution.optimal {
            Ok(RvpStatus::Ok)
        } else {
            set_error("node budget exhausted; plan is the best found");
            Ok(RvpStatus::BudgetExceeded)
        }
    })
}

/// Number of stages the plan covers, or 0 for a null handle.
///
/// # Safety
/// `plan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rvp_plan_horizon(plan: *const RvpPlan) -> usize {
    unsafe { plan.as_ref() }.map_or(0, |p| p.0.horizon())
}

/// Instances of contract `contract_id` reserved at zero-based `stage`.
///
/// # Safety
/// `plan` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_plan_get(
    plan: *const RvpPlan,
    stage: usize,
    contract_id: u32,
    out: *mut u32,
) -> RvpStatus {
    guard(|| {
        let plan = &unsafe { as_ref(plan, "plan")? }.0;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        if stage >= plan.horizon() || !plan.contract_ids().contains(&ContractId(contract_id)) {
            return Err(Failure(
                RvpStatus::InvalidArgument,
                format!("no slot for stage {stage}, contract {contract_id}"),
            ));
        }
        // SAFETY: checked non-null above.
        unsafe { *out = plan.get(stage, ContractId(contract_id)) };
        Ok(RvpStatus::Ok)
    })
}

/// Total reserved instances over all stages and contracts.
///
/// # Safety
/// `plan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rvp_plan_total_reserved(plan: *const RvpPlan) -> u64 {
    unsafe { plan.as_ref() }.map_or(0, |p| p.0.total_reserved())
}

/// # Safety
/// `plan` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rvp_plan_free(plan: *mut RvpPlan) {
    unsafe { release(plan) }
}

/// Dispatches `demand` against `plan` and reports the cost.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_evaluate(
    plan: *const RvpPlan,
    demand: *const RvpDemand,
    market: *const RvpMarket,
    out: *mut RvpCost,
) -> RvpStatus {
    guard(|| {
        let plan = &unsafe { as_ref(plan, "plan")? }.0;
        let demand = &unsafe { as_ref(demand, "demand")? }.0;
        let market = &unsafe { as_ref(market, "market")? }.0;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let cost = evaluate(plan, demand, market)?;
        let value = RvpCost {
            reservation_millicents: cost.reservation_total.raw(),
            reserved_usage_millicents: cost.reserved_usage_total.raw(),
            ondemand_millicents: cost.ondemand_total.raw(),
            grand_total_millicents: cost.grand_total.raw(),
        };
        // SAFETY: checked non-null above.
        unsafe { *out = value };
        Ok(RvpStatus::Ok)
    })
}

/// The integer program as GNU MathProg text. Free with `rvp_string_free`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_export_model(
    demand: *const RvpDemand,
    market: *const RvpMarket,
    out: *mut *mut c_char,
) -> RvpStatus {
    guard(|| {
        let demand = &unsafe { as_ref(demand, "demand")? }.0;
        let market = &unsafe { as_ref(market, "market")? }.0;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let text = CString::new(export_model(demand, market))
            .map_err(|_| Failure(RvpStatus::Format, "model text contains NUL".into()))?;
        // SAFETY: checked non-null above.
        unsafe { *out = text.into_raw() };
        Ok(RvpStatus::Ok)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rvp_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: allocated by `CString::into_raw` in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}
