//! Contract CSV input, flat key-value run configuration, and CSV export of
//! fronts and comparison reports.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use crate::baselines::BinomialConfig;
use crate::biobjective::{AwsConfig, ParetoPoint};
use crate::cmde::{DeConfig, DeError, RepairPolicy, StrategyId};
use crate::market_model::{ContractSpec, ExerciseStyle, MarketError, PathConfig, DEFAULT_DAYS_PER_YEAR};
use crate::valuation::{ComparisonRow, ExtractionStrategy, Method, ReportConfig};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("missing column `{0}` in header")]
    MissingColumn(&'static str),
    #[error("row {row}, field `{field}`: {message}")]
    Row { row: usize, field: String, message: String },
    #[error("config line {line}, key `{key}`: {message}")]
    Config { line: usize, key: String, message: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("cannot export an empty front")]
    EmptyFront,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub const CONTRACT_COLUMNS: [&str; 10] = [
    "label",
    "expiration_date",
    "initial_date",
    "spot",
    "strike",
    "market_days",
    "market_price",
    "style",
    "rate",
    "volatility",
];

const DATE_FORMAT: &str = "%Y-%m-%d";

/// Parses contract rows in file order. Rows are numbered from 1 (the first
/// line after the header). Empty `market_price` and date cells are allowed.
pub fn parse_contracts<R: Read>(reader: R) -> Result<Vec<ContractSpec>, DataError> {
    parse_contracts_with(reader, DEFAULT_DAYS_PER_YEAR)
}

pub fn parse_contracts_with<R: Read>(reader: R, days_per_year: u32) -> Result<Vec<ContractSpec>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| DataError::Csv(e.to_string()))?.clone();
    let mut index = [0usize; 10];
    for (slot, name) in index.iter_mut().zip(CONTRACT_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or(DataError::MissingColumn(name))?;
    }
    let mut specs = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| DataError::Csv(format!("row {row}: {e}")))?;
        let cell = |k: usize| record.get(index[k]).unwrap_or("");
        let fail = |k: usize, message: String| DataError::Row {
            row,
            field: CONTRACT_COLUMNS[k].to_string(),
            message,
        };
        let number = |k: usize| -> Result<f64, DataError> {
            cell(k)
                .parse::<f64>()
                .map_err(|_| fail(k, format!("`{}` is not a number", cell(k))))
        };
        let date = |k: usize| -> Result<Option<NaiveDate>, DataError> {
            match cell(k) {
                "" => Ok(None),
                s => NaiveDate::parse_from_str(s, DATE_FORMAT)
                    .map(Some)
                    .map_err(|_| fail(k, format!("`{s}` is not an ISO-8601 date"))),
            }
        };
        let spec = ContractSpec {
            label: cell(0).to_string(),
            expiration_date: date(1)?,
            initial_date: date(2)?,
            spot: number(3)?,
            strike: number(4)?,
            maturity_days: cell(5)
                .parse::<u32>()
                .map_err(|_| fail(5, format!("`{}` is not a whole number of days", cell(5))))?,
            market_price: match cell(6) {
                "" => None,
                _ => Some(number(6)?),
            },
            style: cell(7).parse::<ExerciseStyle>().map_err(|e| fail(7, e))?,
            rate: number(8)?,
            volatility: number(9)?,
            days_per_year,
        };
        if let Err(MarketError::InvalidContract { field, reason }) = spec.validate() {
            return Err(DataError::Row {
                row,
                field: field.to_string(),
                message: reason,
            });
        }
        if let (Some(start), Some(end)) = (spec.initial_date, spec.expiration_date) {
            if end < start {
                return Err(fail(1, format!("{end} precedes initial_date {start}")));
            }
        }
        specs.push(spec);
    }
    Ok(specs)
}

pub fn load_contracts(path: impl AsRef<Path>) -> Result<Vec<ContractSpec>, DataError> {
    let path = path.as_ref();
    parse_contracts(File::open(path).map_err(io_err(path))?)
}

fn opt_date(d: Option<NaiveDate>) -> String {
    d.map(|d| d.format(DATE_FORMAT).to_string()).unwrap_or_default()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_contracts<W: Write>(specs: &[ContractSpec], writer: W) -> Result<(), DataError> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    w.write_record(CONTRACT_COLUMNS).map_err(csv_err)?;
    for s in specs {
        w.write_record([
            s.label.clone(),
            opt_date(s.expiration_date),
            opt_date(s.initial_date),
            s.spot.to_string(),
            s.strike.to_string(),
            s.maturity_days.to_string(),
            opt_num(s.market_price),
            s.style.as_str().to_string(),
            s.rate.to_string(),
            s.volatility.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| DataError::Csv(e.to_string()))
}

/// Everything a CLI run needs besides the contracts themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// CmDE settings; bounds are filled in per problem.
    pub de: DeConfig,
    pub single_de_population: usize,
    pub single_de_iterations: usize,
    pub single_strategy: StrategyId,
    pub aws: AwsConfig,
    /// Paths used when probabilities are reported directly.
    pub paths: PathConfig,
    pub days_per_year: u32,
    pub binomial: BinomialConfig,
    pub extraction: ExtractionStrategy,
    pub methods: Vec<Method>,
    pub output_dir: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            de: DeConfig::standard(Vec::new(), DEFAULT_SEED),
            single_de_population: DeConfig::POPULATION_SIZE,
            single_de_iterations: DeConfig::MAX_ITERATIONS,
            single_strategy: StrategyId::Rand1,
            aws: AwsConfig::default(),
            paths: PathConfig::report(DEFAULT_SEED),
            days_per_year: DEFAULT_DAYS_PER_YEAR,
            binomial: BinomialConfig::default(),
            extraction: ExtractionStrategy::default(),
            methods: Method::ALL.to_vec(),
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub const KEYS: [&'static str; 21] = [
        "population_size",
        "max_iterations",
        "scale_factor",
        "crossover_prob",
        "repair",
        "seed",
        "de_population_size",
        "de_max_iterations",
        "de_strategy",
        "initial_weight_count",
        "delta",
        "max_refinement_rounds",
        "segment_gap_threshold",
        "mc_paths_inner",
        "mc_paths",
        "mc_steps",
        "days_per_year",
        "binomial_steps",
        "extraction",
        "methods",
        "output_dir",
    ];

    pub fn seed(&self) -> u64 {
        self.de.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.de.seed = seed;
        self.paths.seed = seed;
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let invalid = |e: String| DataError::InvalidConfig(e);
        let probe = |population_size, max_iterations| -> Result<(), DeError> {
            DeConfig {
                population_size,
                max_iterations,
                bounds: vec![(0.0, 1.0)],
                ..self.de.clone()
            }
            .validate()
        };
        probe(self.de.population_size, self.de.max_iterations).map_err(|e| invalid(e.to_string()))?;
        probe(self.single_de_population, self.single_de_iterations)
            .map_err(|e| invalid(format!("single-strategy DE: {e}")))?;
        self.aws.validate().map_err(|e| invalid(e.to_string()))?;
        self.paths.validate().map_err(|e| invalid(e.to_string()))?;
        if self.days_per_year == 0 {
            return Err(invalid("days_per_year must be at least 1".into()));
        }
        if self.binomial.steps == 0 {
            return Err(invalid("binomial_steps must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods must name at least one method".into()));
        }
        Ok(())
    }

    pub fn report_config(&self) -> ReportConfig {
        let single_de = DeConfig {
            population_size: self.single_de_population,
            max_iterations: self.single_de_iterations,
            ..self.de.clone()
        };
        ReportConfig {
            methods: self.methods.clone(),
            cmde: self.de.clone(),
            single_de,
            single_strategy: self.single_strategy,
            aws: self.aws.clone(),
            binomial: self.binomial,
            strategy: self.extraction,
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse::<T>().map_err(|_| format!("`{v}` is not a valid {}", std::any::type_name::<T>()))
        }
        fn within(v: f64, lo: f64, hi: f64, what: &str) -> Result<f64, String> {
            if (lo..=hi).contains(&v) {
                Ok(v)
            } else {
                Err(format!("{what} {v} is outside [{lo}, {hi}]"))
            }
        }
        fn at_least(v: usize, lo: usize) -> Result<usize, String> {
            if v >= lo {
                Ok(v)
            } else {
                Err(format!("{v} is below the minimum of {lo}"))
            }
        }
        match key {
            "population_size" => self.de.population_size = at_least(num(value)?, 4)?,
            "max_iterations" => self.de.max_iterations = num(value)?,
            "scale_factor" => {
                let f = within(num(value)?, 0.0, 1.0, "scale factor")?;
                if f == 0.0 {
                    return Err("scale factor must be positive".into());
                }
                self.de.scale_factor = f;
            }
            "crossover_prob" => self.de.crossover_prob = within(num(value)?, 0.0, 1.0, "crossover probability")?,
            "repair" => self.de.repair = value.parse::<RepairPolicy>()?,
            "seed" => self.set_seed(num(value)?),
            "de_population_size" => self.single_de_population = at_least(num(value)?, 4)?,
            "de_max_iterations" => self.single_de_iterations = num(value)?,
            "de_strategy" => self.single_strategy = value.parse::<StrategyId>()?,
            "initial_weight_count" => self.aws.initial_weight_count = at_least(num(value)?, 2)?,
            "delta" => {
                let d: f64 = num(value)?;
                if !(d > 0.0 && d < 1.0) {
                    return Err(format!("delta {d} is outside (0, 1)"));
                }
                self.aws.delta = d;
            }
            "max_refinement_rounds" => self.aws.max_refinement_rounds = num(value)?,
            "segment_gap_threshold" => {
                self.aws.segment_gap_threshold = within(num(value)?, 0.0, f64::MAX, "gap threshold")?
            }
            "mc_paths_inner" => self.aws.mc_paths_inner = at_least(num(value)?, 1)?,
            "mc_paths" => self.paths.num_paths = at_least(num(value)?, 1)?,
            "mc_steps" => self.paths.num_steps = at_least(num(value)?, 1)?,
            "days_per_year" => self.days_per_year = at_least(num::<u32>(value)? as usize, 1)? as u32,
            "binomial_steps" => self.binomial.steps = at_least(num(value)?, 1)?,
            "extraction" => self.extraction = value.parse().map_err(|e: crate::valuation::ValuationError| e.to_string())?,
            "methods" => self.methods = parse_methods(value)?,
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key (expected one of: {})", Self::KEYS.join(", "))),
        }
        Ok(())
    }
}

/// Comma-separated method names, e.g. `bs,binomial`. Duplicates collapse.
pub fn parse_methods(value: &str) -> Result<Vec<Method>, String> {
    let mut out: Vec<Method> = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let m = part.parse::<Method>().map_err(|e| e.to_string())?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err("no methods given".into());
    }
    Ok(out)
}

/// Parses `key = value` lines. `#` starts a comment; absent keys keep their
/// defaults. Each key may appear at most once.
pub fn parse_config(text: &str) -> Result<RunConfig, DataError> {
    let mut cfg = RunConfig::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(DataError::Config {
                line,
                key: content.to_string(),
                message: "expected `key = value`".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let err = |message: String| DataError::Config {
            line,
            key: key.to_string(),
            message,
        };
        if let Some(prev) = seen.insert(key.to_string(), line) {
            return Err(err(format!("duplicate key, first set on line {prev}")));
        }
        cfg.set(key, value).map_err(err)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig, DataError> {
    let path = path.as_ref();
    parse_config(&std::fs::read_to_string(path).map_err(io_err(path))?)
}

pub const PARETO_COLUMNS: [&str; 8] = [
    "exercise_time",
    "asset_value",
    "payoff",
    "probability",
    "payoff_norm",
    "probability_norm",
    "w1",
    "w2",
];

/// Front rows by descending payoff (ties: higher probability first).
pub fn write_pareto_csv<W: Write>(front: &[ParetoPoint], writer: W) -> Result<(), DataError> {
    if front.is_empty() {
        return Err(DataError::EmptyFront);
    }
    let mut rows: Vec<&ParetoPoint> = front.iter().collect();
    rows.sort_by(|a, b| {
        b.objectives
            .payoff
            .total_cmp(&a.objectives.payoff)
            .then(b.objectives.probability.total_cmp(&a.objectives.probability))
    });
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    w.write_record(PARETO_COLUMNS).map_err(csv_err)?;
    for p in rows {
        w.write_record(
            [
                p.candidate.time,
                p.candidate.asset_value,
                p.objectives.payoff,
                p.objectives.probability,
                p.normalized[0],
                p.normalized[1],
                p.weight.w1,
                p.weight.w2,
            ]
            .map(|v| v.to_string()),
        )
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| DataError::Csv(e.to_string()))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<(), DataError>) -> Result<(), DataError> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    f(&mut out)?;
    out.flush().map_err(io_err(path))
}

pub fn export_pareto_csv(front: &[ParetoPoint], path: impl AsRef<Path>) -> Result<(), DataError> {
    if front.is_empty() {
        return Err(DataError::EmptyFront);
    }
    let path = path.as_ref();
    write_file(path, |w| write_pareto_csv(front, w))
}

/// Report columns for the given methods: label, market price, one price
/// column per method, then percentage and absolute errors per method.
pub fn report_columns(methods: &[Method]) -> Vec<String> {
    let mut cols = vec!["label".to_string(), "market_price".to_string()];
    cols.extend(methods.iter().map(|m| format!("{m}_price")));
    cols.extend(methods.iter().map(|m| format!("pct_err_{m}")));
    cols.extend(methods.iter().map(|m| format!("abs_err_{m}")));
    cols.push("warning".to_string());
    cols
}

/// Methods in canonical order that have a price in at least one row; all
/// methods when there are no rows.
pub fn report_methods(rows: &[ComparisonRow]) -> Vec<Method> {
    if rows.is_empty() {
        return Method::ALL.to_vec();
    }
    Method::ALL
        .into_iter()
        .filter(|&m| rows.iter().any(|r| r.price(m).is_some()))
        .collect()
}

pub fn write_report_csv<W: Write>(rows: &[ComparisonRow], writer: W) -> Result<(), DataError> {
    let methods = report_methods(rows);
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    w.write_record(report_columns(&methods)).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.label.clone(), opt_num(r.market_price)];
        rec.extend(methods.iter().map(|&m| opt_num(r.price(m))));
        rec.extend(methods.iter().map(|&m| opt_num(r.pct_err(m))));
        rec.extend(methods.iter().map(|&m| opt_num(r.abs_err(m))));
        rec.push(r.warning.clone().unwrap_or_default());
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| DataError::Csv(e.to_string()))
}

pub fn export_report_csv(rows: &[ComparisonRow], path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    write_file(path, |w| write_report_csv(rows, w))
}
