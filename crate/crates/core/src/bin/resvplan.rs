use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use resvplan::bench::{plan_with, run_bench, BenchConfig, StrategySpec};
use resvplan::config::{default_market, load_market};
use resvplan::exact::{write_model, DEFAULT_NODE_BUDGET};
use resvplan::trace::{
    derive_demand, parse_swf, read_demand_cache, read_demand_csv, synth_demand, write_demand_cache, write_demand_csv,
    Aggregation, DemandDerivationConfig, SynthKind,
};
use resvplan::{evaluate, DemandVector, Error, MarketConfig};

const EXIT_INVALID: u8 = 1;
const EXIT_BUDGET: u8 = 2;

#[derive(Parser)]
#[command(name = "resvplan", version, about = "Plan reserved cloud capacity against a demand forecast")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a reservation plan and print it as CSV.
    Plan(PlanArgs),
    /// Compare strategies over horizon prefixes.
    Bench(BenchArgs),
    /// Write the integer program as a GNU MathProg model.
    ExportModel(ExportArgs),
    /// Convert a trace (or synthetic generator) into a demand file.
    Ingest(IngestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthArg {
    Uniform,
    Bursty,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    Peak,
    Mean,
}

#[derive(Args)]
struct DemandArgs {
    /// SWF trace file.
    #[arg(long, conflicts_with_all = ["synth", "demand"])]
    trace: Option<PathBuf>,
    /// Synthetic demand generator.
    #[arg(long, conflicts_with = "demand")]
    synth: Option<SynthArg>,
    /// Demand file written by `ingest` (.csv or .rvpd).
    #[arg(long)]
    demand: Option<PathBuf>,
    /// Number of stages (synthetic demand, or a cap for traces).
    #[arg(long = "T")]
    stages: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Lower bound for uniform synthetic demand.
    #[arg(long, default_value_t = 0)]
    lo: u32,
    /// Upper bound for uniform synthetic demand.
    #[arg(long, default_value_t = 10)]
    hi: u32,
    /// Processors per VM when deriving demand from a trace.
    #[arg(long, default_value_t = 2)]
    procs_per_vm: u32,
    #[arg(long, value_enum, default_value = "peak")]
    aggregation: AggregationArg,
    /// Stage length in hours for trace derivation (defaults to the catalog's).
    #[arg(long)]
    stage_hours: Option<u32>,
}

#[derive(Args)]
struct CatalogArgs {
    /// Contract catalog (TOML or JSON); defaults to the bundled EC2 catalog.
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    demand: DemandArgs,
    #[command(flatten)]
    catalog: CatalogArgs,
    /// none | single:<id> | multi | exact
    #[arg(long, alias = "strategies", default_value = "multi")]
    strategy: String,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    exact_budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    demand: DemandArgs,
    #[command(flatten)]
    catalog: CatalogArgs,
    /// Comma-separated strategies: none, single:<id>, multi, exact.
    #[arg(long, default_value = "none,multi")]
    strategies: String,
    /// Comma-separated horizon prefixes in stages (default: full horizon).
    #[arg(long)]
    horizons: Option<String>,
    /// Reference strategy when no exact optimum is available.
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    exact_budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write plot-ready data next to the CSV (`<out>.dat`).
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    demand: DemandArgs,
    #[command(flatten)]
    catalog: CatalogArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    demand: DemandArgs,
    /// Output file; `.rvpd` selects the binary cache, anything else CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn market_from(args: &CatalogArgs) -> Result<MarketConfig, Error> {
    match &args.catalog {
        Some(p) => load_market(p),
        None => default_market(),
    }
}

fn load_demand(args: &DemandArgs, default_stage_hours: u32) -> Result<DemandVector, Error> {
    if let Some(path) = &args.trace {
        let (jobs, report) = parse_swf(BufReader::new(File::open(path)?))?;
        eprintln!("parsed {} jobs ({} malformed lines, {} jobs dropped)", jobs.len(), report.malformed, report.dropped);
        let cfg = DemandDerivationConfig {
            stage_hours: args.stage_hours.unwrap_or(default_stage_hours),
            processors_per_vm: args.procs_per_vm,
            aggregation: match args.aggregation {
                AggregationArg::Peak => Aggregation::Peak,
                AggregationArg::Mean => Aggregation::MeanCeiling,
            },
            horizon_stages: args.stages,
        };
        return derive_demand(&jobs, &cfg);
    }
    if let Some(kind) = args.synth {
        let stages = args.stages.ok_or_else(|| Error::InvalidArgument("--synth needs --T <stages>".into()))?;
        let kind = match kind {
            SynthArg::Uniform => SynthKind::uniform(args.lo, args.hi),
            SynthArg::Bursty => SynthKind::bursty_default(),
        };
        return synth_demand(kind, stages, args.seed);
    }
    if let Some(path) = &args.demand {
        let demand = if is_cache(path) {
            read_demand_cache(File::open(path)?)?
        } else {
            read_demand_csv(BufReader::new(File::open(path)?))?
        };
        return match args.stages {
            Some(n) if n < demand.horizon() => demand.prefix(n),
            _ => Ok(demand),
        };
    }
    Err(Error::InvalidArgument("one of --trace, --synth or --demand is required".into()))
}

fn is_cache(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("rvpd"))
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad {what} {p:?}"))))
        .collect()
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Plan(args) => {
            let market = market_from(&args.catalog)?;
            let demand = load_demand(&args.demand, market.stage_hours())?;
            let strategy: StrategySpec = args.strategy.parse()?;
            let outcome = plan_with(strategy, &demand, &market, args.exact_budget)?;
            let cost = evaluate(&outcome.plan, &demand, &market)?;
            let mut w = output(&args.out)?;
            writeln!(w, "stage,contract,amount")?;
            for (t, id, amount) in outcome.plan.entries() {
                writeln!(w, "{},{},{}", t + 1, id, amount)?;
            }
            w.flush()?;
            eprintln!(
                "{strategy}: {} stages, total {} (reservations {}, reserved usage {}, on-demand {})",
                demand.horizon(),
                cost.grand_total,
                cost.reservation_total,
                cost.reserved_usage_total,
                cost.ondemand_total
            );
            if outcome.optimal == Some(false) {
                eprintln!("exact search hit its node budget; plan is the best found");
                return Ok(EXIT_BUDGET);
            }
            Ok(0)
        }
        Command::Bench(args) => {
            let market = market_from(&args.catalog)?;
            let demand = load_demand(&args.demand, market.stage_hours())?;
            let config = BenchConfig {
                strategies: StrategySpec::parse_list(&args.strategies)?,
                horizons: match &args.horizons {
                    Some(h) => parse_list(h, "horizon")?,
                    None => Vec::new(),
                },
                repetitions: args.repetitions,
                exact_budget: args.exact_budget,
                baseline: args.baseline.as_deref().map(str::parse).transpose()?,
            };
            let report = run_bench(&demand, &market, &config)?;
            let mut w = output(&args.out)?;
            report.write_csv(&mut w)?;
            w.flush()?;
            if args.gnuplot {
                let path = match &args.out {
                    Some(p) => p.with_extension("dat"),
                    None => PathBuf::from("bench.dat"),
                };
                report.write_gnuplot(BufWriter::new(File::create(&path)?))?;
                eprintln!("wrote {}", path.display());
            }
            if report.rows.iter().any(|r| !r.feasible) {
                return Err(Error::InvalidArgument("a strategy produced an infeasible plan".into()));
            }
            Ok(if report.budget_exceeded() { EXIT_BUDGET } else { 0 })
        }
        Command::ExportModel(args) => {
            let market = market_from(&args.catalog)?;
            let demand = load_demand(&args.demand, market.stage_hours())?;
            let mut w = output(&args.out)?;
            write_model(&mut w, &demand, &market)?;
            w.flush()?;
            Ok(0)
        }
        Command::Ingest(args) => {
            let demand = load_demand(&args.demand, 1)?;
            match &args.out {
                Some(p) if is_cache(p) => write_demand_cache(BufWriter::new(File::create(p)?), &demand)?,
                other => {
                    let mut w = output(other)?;
                    write_demand_csv(&mut w, &demand)?;
                    w.flush()?;
                }
            }
            eprintln!("{} stages, peak {}, total {}", demand.horizon(), demand.max(), demand.total());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
