//! Reading a scalar price off a Pareto front, error metrics, and
//! comparison reports against market prices and baselines.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::baselines::{binomial_american_call, black_scholes_call, BaselineError, BinomialConfig};
use crate::biobjective::{generate_pareto_front_with, AwsConfig, FrontError, Optimizer, ParetoPoint};
use crate::cmde::{DeConfig, StrategyId};
use crate::market_model::ContractSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValuationError {
    #[error("cannot extract a price from an empty front")]
    EmptyFront,
    #[error("no front point was produced by weight w1 = {0}")]
    NoPointForWeight(f64),
    #[error("market price must be positive, got {0}")]
    NonPositiveMarket(f64),
    #[error("unknown extraction strategy `{0}` (expected expected-discounted, knee or weighted:<w1>)")]
    UnknownStrategy(String),
    #[error("unknown pricing method `{0}` (expected bs, binomial, de or cmde)")]
    UnknownMethod(String),
    #[error("contract {label}: {source}")]
    Front { label: String, source: FrontError },
    #[error("contract {label}: {source}")]
    Baseline { label: String, source: BaselineError },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ExtractionStrategy {
    /// Maximum of `exp(-r t) * payoff * probability` over the front.
    #[default]
    ExpectedDiscounted,
    /// Point farthest from the chord between the two extremes.
    Knee,
    /// The point produced by weight `w1` on payoff.
    Weighted(f64),
}

impl fmt::Display for ExtractionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractionStrategy::ExpectedDiscounted => f.write_str("expected-discounted"),
            ExtractionStrategy::Knee => f.write_str("knee"),
            ExtractionStrategy::Weighted(w) => write!(f, "weighted:{w}"),
        }
    }
}

impl FromStr for ExtractionStrategy {
    type Err = ValuationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "expected-discounted" => return Ok(ExtractionStrategy::ExpectedDiscounted),
            "knee" => return Ok(ExtractionStrategy::Knee),
            _ => {}
        }
        let w = t
            .strip_prefix("weighted:")
            .or_else(|| t.strip_prefix("weighted(").and_then(|r| r.strip_suffix(')')))
            .and_then(|w| w.trim().parse::<f64>().ok())
            .filter(|w| (0.0..=1.0).contains(w));
        w.map(ExtractionStrategy::Weighted)
            .ok_or_else(|| ValuationError::UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceEstimate {
    pub value: f64,
    pub source_point: ParetoPoint,
    pub strategy: ExtractionStrategy,
    pub discount_applied: bool,
}

fn discounted(p: &ParetoPoint, rate: f64) -> f64 {
    p.discounted_value(rate)
}

/// Total order used to break ties: higher probability first, then the
/// remaining coordinates, so the choice never depends on input order.
fn tie_break(a: &ParetoPoint, b: &ParetoPoint) -> Ordering {
    a.objectives
        .probability
        .total_cmp(&b.objectives.probability)
        .then(a.objectives.payoff.total_cmp(&b.objectives.payoff))
        .then(b.candidate.time.total_cmp(&a.candidate.time))
        .then(b.candidate.asset_value.total_cmp(&a.candidate.asset_value))
}

fn best_by<'a>(front: &'a [ParetoPoint], score: impl Fn(&ParetoPoint) -> f64) -> Option<&'a ParetoPoint> {
    front
        .iter()
        .max_by(|a, b| score(a).total_cmp(&score(b)).then_with(|| tie_break(a, b)))
}

fn knee_scores(front: &[ParetoPoint]) -> impl Fn(&ParetoPoint) -> f64 {
    let lo_x = front.iter().map(|p| p.objectives.payoff).fold(f64::INFINITY, f64::min);
    let hi_x = front.iter().map(|p| p.objectives.payoff).fold(f64::NEG_INFINITY, f64::max);
    let lo_y = front.iter().map(|p| p.objectives.probability).fold(f64::INFINITY, f64::min);
    let hi_y = front.iter().map(|p| p.objectives.probability).fold(f64::NEG_INFINITY, f64::max);
    let sx = if hi_x > lo_x { hi_x - lo_x } else { 1.0 };
    let sy = if hi_y > lo_y { hi_y - lo_y } else { 1.0 };
    let payoff_end = best_by(front, |p| p.objectives.payoff).map(|p| p.objectives);
    let prob_end = best_by(front, |p| p.objectives.probability).map(|p| p.objectives);
    let (ax, ay, bx, by) = match (payoff_end, prob_end) {
        (Some(a), Some(b)) => (
            (a.payoff - lo_x) / sx,
            (a.probability - lo_y) / sy,
            (b.payoff - lo_x) / sx,
            (b.probability - lo_y) / sy,
        ),
        _ => (0.0, 0.0, 0.0, 0.0),
    };
    let (dx, dy) = (bx - ax, by - ay);
    let len = dx.hypot(dy);
    move |p: &ParetoPoint| {
        if len == 0.0 {
            return 0.0;
        }
        let px = (p.objectives.payoff - lo_x) / sx - ax;
        let py = (p.objectives.probability - lo_y) / sy - ay;
        // Positive on the side of the chord away from the origin.
        (dy * px - dx * py) / len
    }
}

/// Scalar price estimate from a front.
///
/// All strategies report the discounted expected payoff at the chosen point;
/// they differ only in which point is chosen.
pub fn extract_price(
    front: &[ParetoPoint],
    spec: &ContractSpec,
    strategy: ExtractionStrategy,
) -> Result<PriceEstimate, ValuationError> {
    if front.is_empty() {
        return Err(ValuationError::EmptyFront);
    }
    let rate = spec.rate;
    let chosen = match strategy {
        ExtractionStrategy::ExpectedDiscounted => best_by(front, |p| discounted(p, rate)),
        ExtractionStrategy::Knee => {
            let score = knee_scores(front);
            best_by(front, score)
        }
        ExtractionStrategy::Weighted(w) => {
            let produced: Vec<ParetoPoint> = front
                .iter()
                .filter(|p| (p.weight.w1 - w).abs() <= 1e-9)
                .cloned()
                .collect();
            let pick = best_by(&produced, |p| w * p.normalized[0] + (1.0 - w) * p.normalized[1]).cloned();
            return match pick {
                Some(p) => Ok(PriceEstimate {
                    value: discounted(&p, rate).max(0.0),
                    source_point: p,
                    strategy,
                    discount_applied: true,
                }),
                None => Err(ValuationError::NoPointForWeight(w)),
            };
        }
    };
    let p = chosen.ok_or(ValuationError::EmptyFront)?.clone();
    Ok(PriceEstimate {
        value: discounted(&p, rate).max(0.0),
        source_point: p,
        strategy,
        discount_applied: true,
    })
}

pub fn absolute_error(approx: f64, market: f64) -> f64 {
    (approx - market).abs()
}

pub fn percent_error(approx: f64, market: f64) -> Result<f64, ValuationError> {
    if !(market > 0.0) {
        return Err(ValuationError::NonPositiveMarket(market));
    }
    Ok(100.0 * absolute_error(approx, market) / market)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    BlackScholes,
    Binomial,
    De,
    Cmde,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::BlackScholes, Method::Binomial, Method::De, Method::Cmde];

    pub fn name(self) -> &'static str {
        match self {
            Method::BlackScholes => "bs",
            Method::Binomial => "binomial",
            Method::De => "de",
            Method::Cmde => "cmde",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ValuationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ValuationError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonRow {
    pub label: String,
    pub market_price: Option<f64>,
    pub bs_price: Option<f64>,
    pub binomial_price: Option<f64>,
    pub de_price: Option<f64>,
    pub cmde_price: Option<f64>,
    pub warning: Option<String>,
    pub diagnostics: Vec<String>,
}

impl ComparisonRow {
    /// Row built from already known prices, e.g. reference quotes.
    pub fn from_prices(label: impl Into<String>, market: Option<f64>, prices: &[(Method, f64)]) -> Self {
        let mut row = ComparisonRow {
            label: label.into(),
            market_price: market,
            ..Default::default()
        };
        for &(m, p) in prices {
            *row.price_slot(m) = Some(p);
        }
        if market.is_none() {
            row.warning = Some("no market price; error columns left empty".into());
        }
        row
    }

    fn price_slot(&mut self, m: Method) -> &mut Option<f64> {
        match m {
            Method::BlackScholes => &mut self.bs_price,
            Method::Binomial => &mut self.binomial_price,
            Method::De => &mut self.de_price,
            Method::Cmde => &mut self.cmde_price,
        }
    }

    pub fn price(&self, m: Method) -> Option<f64> {
        match m {
            Method::BlackScholes => self.bs_price,
            Method::Binomial => self.binomial_price,
            Method::De => self.de_price,
            Method::Cmde => self.cmde_price,
        }
    }

    pub fn abs_err(&self, m: Method) -> Option<f64> {
        Some(absolute_error(self.price(m)?, self.market_price?))
    }

    pub fn pct_err(&self, m: Method) -> Option<f64> {
        percent_error(self.price(m)?, self.market_price?).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportConfig {
    pub methods: Vec<Method>,
    pub cmde: DeConfig,
    /// Budget of the single-strategy DE column; may differ from `cmde`.
    pub single_de: DeConfig,
    pub single_strategy: StrategyId,
    pub aws: AwsConfig,
    pub binomial: BinomialConfig,
    pub strategy: ExtractionStrategy,
}

impl ReportConfig {
    pub fn new(seed: u64) -> Self {
        let de = DeConfig::standard(Vec::new(), seed);
        Self {
            methods: Method::ALL.to_vec(),
            cmde: de.clone(),
            single_de: de,
            single_strategy: StrategyId::Rand1,
            aws: AwsConfig::default(),
            binomial: BinomialConfig::default(),
            strategy: ExtractionStrategy::default(),
        }
    }
}

fn price_contract(spec: &ContractSpec, cfg: &ReportConfig) -> Result<ComparisonRow, ValuationError> {
    let label = spec.label.clone();
    let baseline = |source| ValuationError::Baseline { label: label.clone(), source };
    let front_err = |source| ValuationError::Front { label: label.clone(), source };
    let mut row = ComparisonRow::from_prices(label.clone(), spec.market_price, &[]);
    for &m in &cfg.methods {
        let price = match m {
            // A call on a non-dividend asset is never exercised early, so
            // the closed form also serves American contracts.
            Method::BlackScholes => black_scholes_call(spec).map_err(baseline)?,
            Method::Binomial => binomial_american_call(spec, cfg.binomial).map_err(baseline)?,
            Method::De | Method::Cmde => {
                let (de, optimizer) = if m == Method::De {
                    (&cfg.single_de, Optimizer::Single(cfg.single_strategy))
                } else {
                    (&cfg.cmde, Optimizer::Cmde)
                };
                let front = generate_pareto_front_with(spec, de, &cfg.aws, optimizer).map_err(front_err)?;
                row.diagnostics
                    .extend(front.diagnostics.iter().map(|d| format!("{m}: {d}")));
                extract_price(&front.points, spec, cfg.strategy)?.value
            }
        };
        *row.price_slot(m) = Some(price);
    }
    Ok(row)
}

/// One row per contract, in input order. Contracts are priced in parallel.
pub fn build_comparison_report(contracts: &[ContractSpec], cfg: &ReportConfig) -> Result<Vec<ComparisonRow>, ValuationError> {
    contracts.par_iter().map(|spec| price_contract(spec, cfg)).collect()
}
