use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cmde_core::baselines::{
    binomial_american_call, binomial_european_call, bs_call_price, lognormal_exceed_prob, BinomialConfig,
};
use cmde_core::biobjective::generate_pareto_front;
use cmde_core::cmde::{run_cmde, BenchSuite, DeConfig, StrategyId};
use cmde_core::dataio::{
    export_pareto_csv, export_report_csv, load_config, parse_contracts_with, parse_methods, report_methods, RunConfig,
};
use cmde_core::market_model::{probcal, ContractSpec, ExerciseStyle, PathConfig};
use cmde_core::valuation::{build_comparison_report, extract_price, ComparisonRow, ExtractionStrategy};

const OUT_DIR_ENV: &str = "CMDE_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "cmde-out";

#[derive(Parser)]
#[command(name = "cmde", version, about = "Bi-objective vanilla call pricing with combinational-mutation DE")]
struct Cli {
    /// Exit with status 2 when the optimizer reports diagnostics.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one Pareto-front CSV per contract.
    Pareto(PipelineArgs),
    /// Print the price extracted from each contract's front.
    Price(PipelineArgs),
    /// Compare baselines, single-strategy DE and CmDE against market prices.
    Compare(CompareArgs),
    /// Black-Scholes and binomial prices for one call.
    Baseline(BaselineArgs),
    /// Run the optimizer on sphere or Rosenbrock over many seeds.
    Bench(BenchArgs),
    /// Monte Carlo exceedance probability against the lognormal formula.
    Simulate(SimulateArgs),
}

#[derive(Args, Clone)]
struct SeedArgs {
    /// Base random seed [default: 20240601]
    #[arg(long)]
    seed: Option<u64>,
    /// Draw a fresh seed from the clock (printed on stderr).
    #[arg(long, conflicts_with = "seed")]
    random_seed: bool,
}

impl SeedArgs {
    fn resolve(&self) -> Option<u64> {
        if self.random_seed {
            let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
            let seed = nanos as u64;
            eprintln!("using seed {seed}");
            return Some(seed);
        }
        self.seed
    }
}

#[derive(Args, Clone)]
struct OptimizerArgs {
    /// Population size [default: 200]
    #[arg(long)]
    population_size: Option<usize>,
    /// Number of iterations [default: 600]
    #[arg(long)]
    iterations: Option<usize>,
    /// Mutation scale factor [default: 0.5]
    #[arg(long)]
    scale_factor: Option<f64>,
    /// Crossover probability [default: 0.9]
    #[arg(long)]
    crossover_prob: Option<f64>,
    /// Monte Carlo paths inside the optimizer [default: 10000]
    #[arg(long)]
    mc_paths_inner: Option<usize>,
    /// Refinement rounds of the weighted-sum front [default: 3]
    #[arg(long)]
    refinement_rounds: Option<usize>,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// Contract CSV file.
    #[arg(long)]
    contracts: PathBuf,
    /// Key-value run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: $CMDE_OUT_DIR, else cmde-out]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Price extraction rule: expected-discounted, knee or weighted:<w1> [default: expected-discounted]
    #[arg(long)]
    strategy: Option<String>,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Report CSV path [default: <out-dir>/report.csv]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of bs,binomial,de,cmde [default: all]
    #[arg(long)]
    methods: Option<String>,
    /// Population size of the single-strategy DE column [default: same as CmDE]
    #[arg(long)]
    de_population_size: Option<usize>,
    /// Iterations of the single-strategy DE column [default: same as CmDE]
    #[arg(long)]
    de_iterations: Option<usize>,
    /// Mutation scheme of the single-strategy DE column [default: rand1]
    #[arg(long)]
    de_strategy: Option<StrategyId>,
}

#[derive(Args)]
struct ContractFlags {
    /// Current price of the underlying
    #[arg(long)]
    spot: f64,
    /// Continuously compounded risk-free rate
    #[arg(long)]
    rate: f64,
    /// Annualized volatility
    #[arg(long)]
    vol: f64,
    /// Trading days per year
    #[arg(long, default_value_t = 252)]
    days_per_year: u32,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    market: ContractFlags,
    /// Strike price
    #[arg(long)]
    strike: f64,
    /// Trading days to expiry
    #[arg(long)]
    days: u32,
    /// Binomial lattice steps
    #[arg(long, default_value_t = BinomialConfig::DEFAULT_STEPS)]
    steps: usize,
}

#[derive(Args)]
struct BenchArgs {
    /// sphere or rosenbrock
    #[arg(long, default_value = "sphere")]
    suite: String,
    /// Number of seeded trials
    #[arg(long, default_value_t = 30)]
    trials: u64,
    /// Problem dimension
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// First trial seed; trial i uses seed + i [default: 20240601]
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    market: ContractFlags,
    /// Target asset level
    #[arg(long)]
    target: f64,
    /// Time horizon in years
    #[arg(long)]
    time: f64,
    /// Number of paths
    #[arg(long, default_value_t = PathConfig::REPORT_PATHS)]
    paths: usize,
    /// Time steps per path
    #[arg(long, default_value_t = 1)]
    steps: usize,
    /// Random seed [default: 20240601]
    #[arg(long)]
    seed: Option<u64>,
}

/// Failure classes mapped to exit codes.
enum Outcome {
    Clean,
    Diagnostics(usize),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Diagnostics(n)) if cli.strict => {
            eprintln!("error: {n} optimizer diagnostics (strict mode)");
            ExitCode::from(2)
        }
        Ok(Outcome::Diagnostics(_)) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Pareto(a) => cmd_pareto(a),
        Command::Price(a) => cmd_price(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn apply_optimizer(cfg: &mut RunConfig, o: &OptimizerArgs) {
    if let Some(v) = o.population_size {
        cfg.de.population_size = v;
    }
    if let Some(v) = o.iterations {
        cfg.de.max_iterations = v;
    }
    if let Some(v) = o.scale_factor {
        cfg.de.scale_factor = v;
    }
    if let Some(v) = o.crossover_prob {
        cfg.de.crossover_prob = v;
    }
    if let Some(v) = o.mc_paths_inner {
        cfg.aws.mc_paths_inner = v;
    }
    if let Some(v) = o.refinement_rounds {
        cfg.aws.max_refinement_rounds = v;
    }
}

/// Defaults, then the config file, then flags.
fn resolve_config(a: &PipelineArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(path) => load_config(path).with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    apply_optimizer(&mut cfg, &a.optimizer);
    if let Some(seed) = a.seed.resolve() {
        cfg.set_seed(seed);
    }
    if let Some(s) = &a.strategy {
        cfg.extraction = s.parse::<ExtractionStrategy>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(a: &PipelineArgs, cfg: &RunConfig) -> PathBuf {
    a.out_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn load(a: &PipelineArgs, cfg: &RunConfig) -> Result<Vec<ContractSpec>> {
    let path = &a.contracts;
    let file = std::fs::File::open(path).with_context(|| format!("cannot open contracts file {}", path.display()))?;
    parse_contracts_with(file, cfg.days_per_year).with_context(|| format!("in {}", path.display()))
}

fn file_stem(i: usize, label: &str) -> String {
    let clean: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    if clean.is_empty() {
        format!("{i:03}")
    } else {
        format!("{i:03}_{clean}")
    }
}

fn report_diagnostics(label: &str, diagnostics: &[String]) -> usize {
    for d in diagnostics {
        eprintln!("  {label}: {d}");
    }
    diagnostics.len()
}

fn outcome(diagnostics: usize) -> Outcome {
    if diagnostics == 0 {
        Outcome::Clean
    } else {
        Outcome::Diagnostics(diagnostics)
    }
}

fn cmd_pareto(a: &PipelineArgs) -> Result<Outcome> {
    let cfg = resolve_config(a)?;
    let specs = load(a, &cfg)?;
    let dir = out_dir(a, &cfg);
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut diagnostics = 0;
    for (i, spec) in specs.iter().enumerate() {
        let start = Instant::now();
        let front = generate_pareto_front(spec, &cfg.de, &cfg.aws).with_context(|| format!("contract {}", spec.label))?;
        let path = dir.join(format!("{}.csv", file_stem(i + 1, &spec.label)));
        export_pareto_csv(&front.points, &path)?;
        eprintln!(
            "[{}/{}] {}: {} points in {:.1}s -> {}",
            i + 1,
            specs.len(),
            spec.label,
            front.points.len(),
            start.elapsed().as_secs_f64(),
            path.display()
        );
        diagnostics += report_diagnostics(&spec.label, &front.diagnostics);
    }
    Ok(outcome(diagnostics))
}

fn cmd_price(a: &PipelineArgs) -> Result<Outcome> {
    let cfg = resolve_config(a)?;
    let specs = load(a, &cfg)?;
    let mut diagnostics = 0;
    println!("label,style,price,exercise_time,asset_value,payoff,probability,market_price,pct_err");
    for (i, spec) in specs.iter().enumerate() {
        let front = generate_pareto_front(spec, &cfg.de, &cfg.aws).with_context(|| format!("contract {}", spec.label))?;
        let est = extract_price(&front.points, spec, cfg.extraction)?;
        eprintln!("[{}/{}] {}: {} ({})", i + 1, specs.len(), spec.label, est.value, est.strategy);
        diagnostics += report_diagnostics(&spec.label, &front.diagnostics);
        let p = &est.source_point;
        let pct = spec
            .market_price
            .and_then(|m| cmde_core::valuation::percent_error(est.value, m).ok())
            .map(|v| v.to_string())
            .unwrap_or_default();
        println!(
            "{},{},{},{},{},{},{},{},{}",
            spec.label,
            spec.style,
            est.value,
            p.candidate.time,
            p.candidate.asset_value,
            p.objectives.payoff,
            p.objectives.probability,
            spec.market_price.map(|m| m.to_string()).unwrap_or_default(),
            pct
        );
    }
    Ok(outcome(diagnostics))
}

fn cmd_compare(a: &CompareArgs) -> Result<Outcome> {
    let mut cfg = resolve_config(&a.pipeline)?;
    if let Some(m) = &a.methods {
        cfg.methods = parse_methods(m).map_err(anyhow::Error::msg)?;
    }
    if let Some(v) = a.de_population_size {
        cfg.single_de_population = v;
    }
    if let Some(v) = a.de_iterations {
        cfg.single_de_iterations = v;
    }
    if let Some(s) = a.de_strategy {
        cfg.single_strategy = s;
    }
    cfg.validate()?;
    let specs = load(&a.pipeline, &cfg)?;
    let out = match &a.out {
        Some(p) => p.clone(),
        None => out_dir(&a.pipeline, &cfg).join("report.csv"),
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    let report_cfg = cfg.report_config();
    let mut rows = Vec::with_capacity(specs.len());
    let mut diagnostics = 0;
    for (i, spec) in specs.iter().enumerate() {
        let start = Instant::now();
        let row = build_comparison_report(std::slice::from_ref(spec), &report_cfg)?.remove(0);
        eprintln!("[{}/{}] {} priced in {:.1}s", i + 1, specs.len(), spec.label, start.elapsed().as_secs_f64());
        if let Some(w) = &row.warning {
            eprintln!("  warning: {}: {w}", row.label);
        }
        diagnostics += report_diagnostics(&row.label, &row.diagnostics);
        rows.push(row);
    }
    export_report_csv(&rows, &out)?;
    eprintln!("report written to {} (extraction: {})", out.display(), cfg.extraction);
    print!("{}", render_table(&rows));
    Ok(outcome(diagnostics))
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into())
}

fn render_table(rows: &[ComparisonRow]) -> String {
    let methods = report_methods(rows);
    let mut header = vec!["contract".to_string(), "market".to_string()];
    header.extend(methods.iter().map(|m| m.name().to_string()));
    header.extend(methods.iter().map(|m| format!("%err {m}")));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut line = vec![r.label.clone(), cell(r.market_price)];
            line.extend(methods.iter().map(|&m| cell(r.price(m))));
            line.extend(methods.iter().map(|&m| cell(r.pct_err(m))));
            line
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| body.iter().map(|l| l[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for line in std::iter::once(&header).chain(body.iter()) {
        let cells: Vec<String> = line
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

fn contract_from(flags: &ContractFlags, strike: f64, days: u32) -> Result<ContractSpec> {
    let spec = ContractSpec::new(flags.spot, strike, days, flags.rate, flags.vol)
        .with_calendar(days, flags.days_per_year)
        .with_label("cli");
    spec.validate()?;
    Ok(spec)
}

fn cmd_baseline(a: &BaselineArgs) -> Result<Outcome> {
    if a.steps == 0 {
        bail!("--steps must be at least 1");
    }
    let spec = contract_from(&a.market, a.strike, a.days)?;
    let t = spec.maturity_years();
    let bs = bs_call_price(spec.spot, spec.strike, spec.rate, spec.volatility, t)?;
    println!("black_scholes_call: {bs}");
    let cfg = BinomialConfig { steps: a.steps };
    let eu = binomial_european_call(&spec, cfg);
    let am = binomial_american_call(&spec.clone().with_style(ExerciseStyle::American), cfg);
    for (name, r) in [("binomial_european_call", eu), ("binomial_american_call", am)] {
        match r {
            Ok(v) => println!("{name}: {v}"),
            Err(e) => {
                println!("{name}: n/a");
                eprintln!("note: {name}: {e}");
            }
        }
    }
    Ok(Outcome::Clean)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn cmd_bench(a: &BenchArgs) -> Result<Outcome> {
    let suite: BenchSuite = a.suite.parse().map_err(anyhow::Error::msg)?;
    if a.trials == 0 || a.dim == 0 {
        bail!("--trials and --dim must be at least 1");
    }
    let mut cfg = RunConfig::default();
    apply_optimizer(&mut cfg, &a.optimizer);
    let base = a.seed.unwrap_or(cmde_core::dataio::DEFAULT_SEED);
    let template = DeConfig {
        bounds: suite.bounds(a.dim),
        ..cfg.de
    };
    template.validate()?;
    let objective = move |x: &[f64]| suite.evaluate(x);
    let mut per_strategy: Vec<Vec<f64>> = vec![Vec::new(); StrategyId::ALL.len()];
    let mut combined = Vec::new();
    let mut mismatches = 0;
    for i in 0..a.trials {
        let out = run_cmde(&objective, &DeConfig { seed: base.wrapping_add(i), ..template.clone() })?;
        let champions: Vec<f64> = out.traces.iter().map(|t| t.best_fitness).collect();
        if champions.iter().copied().fold(f64::INFINITY, f64::min) != out.best_fitness {
            mismatches += 1;
        }
        for (slot, c) in per_strategy.iter_mut().zip(&champions) {
            slot.push(*c);
        }
        combined.push(out.best_fitness);
    }
    println!("suite={suite} dim={} trials={} population={} iterations={}", a.dim, a.trials, template.population_size, template.max_iterations);
    println!("{:<18}{:>14}{:>14}{:>14}", "optimizer", "median", "mean", "worst");
    let rows = StrategyId::ALL
        .iter()
        .map(|s| s.name().to_string())
        .zip(per_strategy)
        .chain([("cmde".to_string(), combined)]);
    for (name, mut v) in rows {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let worst = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("{name:<18}{:>14.3e}{mean:>14.3e}{worst:>14.3e}", median(&mut v));
    }
    if mismatches > 0 {
        bail!("global selection differed from the best per-strategy champion in {mismatches} trials");
    }
    Ok(Outcome::Clean)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Outcome> {
    if !(a.time.is_finite() && a.time > 0.0) {
        bail!("--time must be positive");
    }
    let days = (a.time * f64::from(a.market.days_per_year)).ceil().max(1.0) as u32;
    let spec = contract_from(&a.market, 0.0, days)?;
    let cfg = PathConfig::new(a.paths, a.steps, a.seed.unwrap_or(cmde_core::dataio::DEFAULT_SEED));
    let mc = probcal(&spec, a.target, a.time, &cfg)?;
    let exact = lognormal_exceed_prob(&spec, a.target, a.time)?;
    let se = (exact * (1.0 - exact) / a.paths as f64).sqrt();
    println!("monte_carlo: {mc}");
    println!("analytic: {exact}");
    println!("difference: {}", mc - exact);
    println!("standard_error: {se}");
    Ok(Outcome::Clean)
}
