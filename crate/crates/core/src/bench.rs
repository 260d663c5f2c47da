//! Benchmark harness: runs planning strategies over horizon prefixes and
//! reports total cost, cost increase over the exact optimum (or a named
//! baseline), and planning overhead.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use crate::cost::{dispatch, evaluate};
use crate::error::{Error, Result};
use crate::exact::{solve_exact, DEFAULT_NODE_BUDGET};
use crate::feasibility::check_feasible;
use crate::heuristic::{plan_multi_contract, plan_single_contract};
use crate::model::{ContractId, DemandVector, MarketConfig, PricingContract, ReservationPlan};
use crate::money::Millicents;

/// Shortens a contract term by `factor`, dividing the upfront charge by the
/// same factor and keeping the usage rate, so the hourly discount is
/// unchanged. Both the new duration and the new upfront must be exact.
pub fn scale_contract(contract: &PricingContract, factor: u32) -> Result<PricingContract> {
    if factor == 0 {
        return Err(Error::invalid("scale factor must be positive"));
    }
    if !contract.duration_stages.is_multiple_of(factor) {
        return Err(Error::invalid(format!("duration {} is not divisible by {factor}", contract.duration_stages)));
    }
    if contract.upfront.raw() % i64::from(factor) != 0 {
        return Err(Error::invalid(format!("upfront {} does not divide exactly by {factor}", contract.upfront)));
    }
    PricingContract::new(
        contract.id.0,
        Millicents(contract.upfront.raw() / i64::from(factor)),
        contract.duration_stages / factor,
        contract.usage_rate,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategySpec {
    /// Everything on demand.
    None,
    /// Single-contract heuristic with the given catalog contract.
    Single(ContractId),
    /// Multi-contract cascade over the whole catalog.
    Multi,
    /// Branch-and-bound optimum.
    Exact,
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategySpec::None => f.write_str("none"),
            StrategySpec::Single(id) => write!(f, "single:{id}"),
            StrategySpec::Multi => f.write_str("multi"),
            StrategySpec::Exact => f.write_str("exact"),
        }
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    /// Accepts `none`, `multi`, `exact`, and `single:<id>` (also
    /// `single(<id>)`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "none" => return Ok(StrategySpec::None),
            "multi" => return Ok(StrategySpec::Multi),
            "exact" => return Ok(StrategySpec::Exact),
            _ => {}
        }
        let id = s
            .strip_prefix("single:")
            .or_else(|| s.strip_prefix("single(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| Error::invalid(format!("unknown strategy {s:?}")))?;
        let id = id.trim().parse().map_err(|_| Error::invalid(format!("bad contract id in strategy {s:?}")))?;
        Ok(StrategySpec::Single(ContractId(id)))
    }
}

impl StrategySpec {
    pub fn parse_list(s: &str) -> Result<Vec<StrategySpec>> {
        s.split(',').filter(|p| !p.trim().is_empty()).map(str::parse).collect()
    }

    pub fn validate(&self, market: &MarketConfig) -> Result<()> {
        match self {
            StrategySpec::Single(id) if market.contract(*id).is_none() => {
                Err(Error::invalid(format!("strategy {self} names a contract not in the catalog")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanOutcome {
    pub plan: ReservationPlan,
    /// `Some(false)` when an exact search stopped at its node budget.
    pub optimal: Option<bool>,
}

/// Runs one planning strategy.
pub fn plan_with(
    strategy: StrategySpec,
    demand: &DemandVector,
    market: &MarketConfig,
    exact_budget: u64,
) -> Result<PlanOutcome> {
    strategy.validate(market)?;
    Ok(match strategy {
        StrategySpec::None => PlanOutcome { plan: ReservationPlan::empty(demand.horizon(), market), optimal: None },
        StrategySpec::Single(id) => {
            let contract = market.contract(id).expect("validated");
            PlanOutcome { plan: plan_single_contract(demand, contract, market)?.plan, optimal: None }
        }
        StrategySpec::Multi => PlanOutcome { plan: plan_multi_contract(demand, market)?.plan, optimal: None },
        StrategySpec::Exact => {
            let sol = solve_exact(demand, market, exact_budget)?;
            PlanOutcome { plan: sol.plan, optimal: Some(sol.optimal) }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    /// Exact search ran out of nodes; the cost is the best found.
    BudgetExceeded,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Ok => "ok",
            RowStatus::BudgetExceeded => "budget-exceeded",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub strategy: StrategySpec,
    pub horizon_stages: usize,
    pub grand_total: Millicents,
    pub reserved_instances: u64,
    /// Percentage over the reference cost, when a reference exists.
    pub cost_increase_pct: Option<f64>,
    /// What `cost_increase_pct` is measured against.
    pub reference: Option<StrategySpec>,
    /// Median wall-clock time of the planning call, in microseconds.
    pub overhead_us: f64,
    pub status: RowStatus,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub strategies: Vec<StrategySpec>,
    /// Horizon prefixes to plan; empty means the full demand vector.
    pub horizons: Vec<usize>,
    pub repetitions: usize,
    pub exact_budget: u64,
    /// Reference when no optimal exact row exists for a horizon.
    pub baseline: Option<StrategySpec>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            strategies: vec![StrategySpec::None, StrategySpec::Multi],
            horizons: Vec::new(),
            repetitions: 5,
            exact_budget: DEFAULT_NODE_BUDGET,
            baseline: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn budget_exceeded(&self) -> bool {
        self.rows.iter().any(|r| r.status == RowStatus::BudgetExceeded)
    }

    pub fn row(&self, strategy: StrategySpec, horizon: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.strategy == strategy && r.horizon_stages == horizon)
    }

    pub const CSV_HEADER: &'static str =
        "strategy,horizon_stages,grand_total,reserved_instances,cost_increase_pct,reference,overhead_us,status";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{:.3},{}",
                r.strategy,
                r.horizon_stages,
                r.grand_total,
                r.reserved_instances,
                r.cost_increase_pct.map(|p| format!("{p:.3}")).unwrap_or_default(),
                r.reference.map(|s| s.to_string()).unwrap_or_default(),
                r.overhead_us,
                r.status
            )?;
        }
        Ok(())
    }

    /// Plot-ready data: one block per strategy (separated by two blank
    /// lines, so gnuplot's `index` selects them), columns
    /// `horizon total increase overhead`.
    pub fn write_gnuplot<W: Write>(&self, mut w: W) -> Result<()> {
        let mut order: Vec<StrategySpec> = Vec::new();
        for r in &self.rows {
            if !order.contains(&r.strategy) {
                order.push(r.strategy);
            }
        }
        for (i, s) in order.iter().enumerate() {
            if i > 0 {
                writeln!(w, "\n")?;
            }
            writeln!(w, "# {s}")?;
            writeln!(w, "# horizon_stages grand_total cost_increase_pct overhead_us")?;
            for r in self.rows.iter().filter(|r| r.strategy == *s) {
                let inc = r.cost_increase_pct.map(|p| format!("{p:.3}")).unwrap_or_else(|| "NaN".into());
                writeln!(w, "{} {} {} {:.3}", r.horizon_stages, r.grand_total, inc, r.overhead_us)?;
            }
        }
        Ok(())
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

fn increase_pct(cost: Millicents, reference: Millicents) -> Option<f64> {
    if reference.raw() == 0 {
        return (cost.raw() == 0).then_some(0.0);
    }
    Some((cost.raw() - reference.raw()) as f64 / reference.raw() as f64 * 100.0)
}

/// Plans, evaluates and times every (strategy, horizon) cell.
///
/// Rows are ordered by strategy (as listed) then horizon. Only the planning
/// call is timed; the reported overhead is the median over the
/// repetitions. Costs are deterministic for fixed inputs.
pub fn run_bench(demand: &DemandVector, market: &MarketConfig, config: &BenchConfig) -> Result<BenchReport> {
    if config.strategies.is_empty() {
        return Err(Error::invalid("no strategies to run"));
    }
    if config.repetitions == 0 {
        return Err(Error::invalid("repetitions must be at least 1"));
    }
    for s in config.strategies.iter().chain(config.baseline.iter()) {
        s.validate(market)?;
    }
    let mut horizons = if config.horizons.is_empty() { vec![demand.horizon()] } else { config.horizons.clone() };
    horizons.sort_unstable();
    horizons.dedup();

    let mut rows = Vec::new();
    for &horizon in &horizons {
        let prefix = demand.prefix(horizon)?;
        let mut cells = Vec::new();
        for &strategy in &config.strategies {
            let mut times = Vec::with_capacity(config.repetitions);
            let mut outcome = None;
            for _ in 0..config.repetitions {
                let started = Instant::now();
                let out = plan_with(strategy, &prefix, market, config.exact_budget)?;
                times.push(started.elapsed().as_secs_f64() * 1e6);
                outcome = Some(out);
            }
            let outcome = outcome.expect("at least one repetition");
            let schedule = dispatch(&outcome.plan, &prefix, market)?;
            let feasible = check_feasible(&outcome.plan, &schedule, &prefix, market).is_empty();
            let cost = evaluate(&outcome.plan, &prefix, market)?;
            cells.push(BenchRow {
                strategy,
                horizon_stages: horizon,
                grand_total: cost.grand_total,
                reserved_instances: outcome.plan.total_reserved(),
                cost_increase_pct: None,
                reference: None,
                overhead_us: median(times),
                status: if outcome.optimal == Some(false) { RowStatus::BudgetExceeded } else { RowStatus::Ok },
                feasible,
            });
        }

        let optimum = cells
            .iter()
            .find(|r| r.strategy == StrategySpec::Exact && r.status == RowStatus::Ok)
            .map(|r| (StrategySpec::Exact, r.grand_total));
        let reference = match optimum {
            Some(o) => Some(o),
            None => match config.baseline {
                Some(b) => match cells.iter().find(|r| r.strategy == b) {
                    Some(r) => Some((b, r.grand_total)),
                    None => {
                        let out = plan_with(b, &prefix, market, config.exact_budget)?;
                        Some((b, evaluate(&out.plan, &prefix, market)?.grand_total))
                    }
                },
                None => None,
            },
        };
        if let Some((spec, total)) = reference {
            for r in &mut cells {
                r.cost_increase_pct = increase_pct(r.grand_total, total);
                r.reference = Some(spec);
            }
        }
        rows.extend(cells);
    }
    let position = |s: &StrategySpec| config.strategies.iter().position(|x| x == s).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (position(&r.strategy), r.horizon_stages));
    Ok(BenchReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Millicents {
        s.parse().unwrap()
    }

    fn toy() -> MarketConfig {
        let c = PricingContract::new(1, m("2"), 4, m("1")).unwrap();
        MarketConfig::new(vec![c], m("2"), 1).unwrap()
    }

    #[test]
    fn scaling_table_contracts() {
        let one_year = PricingContract::new(2, m("384"), 8760, m("0.136")).unwrap();
        let month = scale_contract(&one_year, 12).unwrap();
        assert_eq!((month.upfront, month.duration_stages, month.usage_rate), (m("32"), 730, m("0.136")));
        let three_year = PricingContract::new(1, m("243"), 26280, m("0.108")).unwrap();
        let quarter = scale_contract(&three_year, 12).unwrap();
        assert_eq!((quarter.upfront, quarter.duration_stages, quarter.usage_rate), (m("20.25"), 2190, m("0.108")));
        assert_eq!(scale_contract(&one_year, 1).unwrap(), one_year);
    }

    #[test]
    fn scaling_rejects_fractional_results() {
        let c = PricingContract::new(1, m("384"), 8760, m("0.136")).unwrap();
        assert!(scale_contract(&c, 7).is_err());
        assert!(scale_contract(&c, 0).is_err());
        let odd = PricingContract::new(1, m("0.001"), 12, m("0.1")).unwrap();
        assert!(scale_contract(&odd, 12).is_err());
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!(
            StrategySpec::parse_list("none, single:1,single(2),multi,exact").unwrap(),
            vec![
                StrategySpec::None,
                StrategySpec::Single(ContractId(1)),
                StrategySpec::Single(ContractId(2)),
                StrategySpec::Multi,
                StrategySpec::Exact
            ]
        );
        assert!("greedy".parse::<StrategySpec>().is_err());
        assert!("single:x".parse::<StrategySpec>().is_err());
        assert_eq!(StrategySpec::Single(ContractId(3)).to_string(), "single:3");
    }

    #[test]
    fn toy_bench() {
        let d = DemandVector::new(vec![1, 2, 3, 4]).unwrap();
        let cfg = BenchConfig {
            strategies: vec![StrategySpec::None, StrategySpec::Single(ContractId(1)), StrategySpec::Exact],
            repetitions: 5,
            ..Default::default()
        };
        let report = run_bench(&d, &toy(), &cfg).unwrap();
        let none = report.row(StrategySpec::None, 4).unwrap();
        let single = report.row(StrategySpec::Single(ContractId(1)), 4).unwrap();
        assert_eq!(none.grand_total, m("20"));
        assert_eq!(single.grand_total, m("17"));
        assert!((none.cost_increase_pct.unwrap() - 300.0 / 17.0).abs() < 1e-9);
        assert_eq!(single.cost_increase_pct, Some(0.0));
        assert_eq!(none.reference, Some(StrategySpec::Exact));
        assert!(report.rows.iter().all(|r| r.feasible && r.overhead_us > 0.0));
        assert!(!report.budget_exceeded());
    }

    #[test]
    fn unknown_contract_is_rejected() {
        let d = DemandVector::new(vec![1]).unwrap();
        let cfg = BenchConfig { strategies: vec![StrategySpec::Single(ContractId(9))], ..Default::default() };
        assert!(run_bench(&d, &toy(), &cfg).is_err());
    }

    #[test]
    fn baseline_reference_without_exact() {
        let d = DemandVector::new(vec![1, 2, 3, 4]).unwrap();
        let cfg = BenchConfig {
            strategies: vec![StrategySpec::None],
            baseline: Some(StrategySpec::Multi),
            repetitions: 1,
            ..Default::default()
        };
        let report = run_bench(&d, &toy(), &cfg).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.reference, Some(StrategySpec::Multi));
        assert!((row.cost_increase_pct.unwrap() - 300.0 / 17.0).abs() < 1e-9);
    }

    #[test]
    fn budget_exceeded_is_flagged() {
        let a = PricingContract::new(1, m("2"), 4, m("1")).unwrap();
        let b = PricingContract::new(2, m("1.5"), 2, m("1")).unwrap();
        let market = MarketConfig::new(vec![a, b], m("2"), 1).unwrap();
        let d = DemandVector::new(vec![5, 1, 7, 2, 6, 3, 8, 1]).unwrap();
        let cfg = BenchConfig {
            strategies: vec![StrategySpec::Exact, StrategySpec::Multi],
            exact_budget: 5,
            baseline: Some(StrategySpec::Multi),
            repetitions: 1,
            ..Default::default()
        };
        let report = run_bench(&d, &market, &cfg).unwrap();
        assert!(report.budget_exceeded());
        assert_eq!(report.rows[0].status, RowStatus::BudgetExceeded);
        assert_eq!(report.rows[0].reference, Some(StrategySpec::Multi));
    }

    #[test]
    fn rows_sorted_and_csv_rendered() {
        let d = DemandVector::new(vec![1, 2, 3, 4]).unwrap();
        let cfg = BenchConfig {
            strategies: vec![StrategySpec::Multi, StrategySpec::None],
            horizons: vec![4, 2],
            repetitions: 1,
            ..Default::default()
        };
        let report = run_bench(&d, &toy(), &cfg).unwrap();
        let keys: Vec<_> = report.rows.iter().map(|r| (r.strategy, r.horizon_stages)).collect();
        assert_eq!(
            keys,
            vec![(StrategySpec::Multi, 2), (StrategySpec::Multi, 4), (StrategySpec::None, 2), (StrategySpec::None, 4)]
        );
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with(BenchReport::CSV_HEADER));
        assert!(text.contains("\nnone,4,20.000,0,,,"));
        let mut gp = Vec::new();
        report.write_gnuplot(&mut gp).unwrap();
        let gp = String::from_utf8(gp).unwrap();
        assert_eq!(gp.matches("# multi").count(), 1);
        assert!(gp.contains("\n\n\n# none"));
    }
}
