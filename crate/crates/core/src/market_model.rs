//! Contract data, vanilla payoffs and risk-neutral GBM sampling.
//!
//! The Monte Carlo exceedance estimate (`probcal`) counts simulated
//! terminal prices at or above a target level. All randomness flows from a
//! seeded ChaCha stream, so every estimate is reproducible.

use std::fmt;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Trading-day annualization used when a contract does not say otherwise.
pub const DEFAULT_DAYS_PER_YEAR: u32 = 252;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketError {
    #[error("invalid contract field `{field}`: {reason}")]
    InvalidContract { field: &'static str, reason: String },
    #[error("time {time} outside (0, {maturity}]")]
    InvalidTime { time: f64, maturity: f64 },
    #[error("invalid target level {0}")]
    InvalidTarget(f64),
    #[error("invalid path configuration: {0}")]
    InvalidPathConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExerciseStyle {
    European,
    American,
}

impl ExerciseStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            ExerciseStyle::European => "European",
            ExerciseStyle::American => "American",
        }
    }
}

impl fmt::Display for ExerciseStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ExerciseStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "european" | "e" => Ok(ExerciseStyle::European),
            "american" | "a" => Ok(ExerciseStyle::American),
            other => Err(format!("unknown exercise style `{other}`")),
        }
    }
}

/// One quoted option contract.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractSpec {
    pub label: String,
    pub spot: f64,
    pub strike: f64,
    /// Trading days from the quote date to expiry.
    pub maturity_days: u32,
    pub days_per_year: u32,
    pub rate: f64,
    pub volatility: f64,
    pub style: ExerciseStyle,
    pub market_price: Option<f64>,
    pub initial_date: Option<NaiveDate>,
    pub expiration_date: Option<NaiveDate>,
}

impl ContractSpec {
    /// Unlabelled European contract on the default 252-day calendar.
    pub fn new(spot: f64, strike: f64, maturity_days: u32, rate: f64, volatility: f64) -> Self {
        Self {
            label: String::new(),
            spot,
            strike,
            maturity_days,
            days_per_year: DEFAULT_DAYS_PER_YEAR,
            rate,
            volatility,
            style: ExerciseStyle::European,
            market_price: None,
            initial_date: None,
            expiration_date: None,
        }
    }

    /// Contract whose maturity is exactly `maturity_days / days_per_year` years.
    pub fn with_calendar(mut self, maturity_days: u32, days_per_year: u32) -> Self {
        self.maturity_days = maturity_days;
        self.days_per_year = days_per_year;
        self
    }

    pub fn with_style(mut self, style: ExerciseStyle) -> Self {
        self.style = style;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_market_price(mut self, price: f64) -> Self {
        self.market_price = Some(price);
        self
    }

    pub fn maturity_years(&self) -> f64 {
        f64::from(self.maturity_days) / f64::from(self.days_per_year)
    }

    pub fn validate(&self) -> Result<(), MarketError> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Result<(), MarketError> {
            Err(MarketError::InvalidContract {
                field,
                reason: reason.into(),
            })
        }
        if !(self.spot.is_finite() && self.spot > 0.0) {
            return bad("spot", format!("must be positive, got {}", self.spot));
        }
        if !(self.strike.is_finite() && self.strike >= 0.0) {
            return bad("strike", format!("must be non-negative, got {}", self.strike));
        }
        if self.maturity_days == 0 {
            return bad("market_days", "must be at least 1");
        }
        if self.days_per_year == 0 {
            return bad("days_per_year", "must be at least 1");
        }
        if !(self.rate.is_finite() && self.rate >= 0.0) {
            return bad("rate", format!("must be non-negative, got {}", self.rate));
        }
        if !(self.volatility.is_finite() && self.volatility > 0.0) {
            return bad(
                "volatility",
                format!("must be positive, got {}", self.volatility),
            );
        }
        if let Some(p) = self.market_price {
            if !(p.is_finite() && p >= 0.0) {
                return bad("market_price", format!("must be non-negative, got {p}"));
            }
        }
        Ok(())
    }

    /// Accepts `t` in `(0, T]`, allowing a relative slack of 1e-12 at the top.
    pub fn check_exercise_time(&self, t: f64) -> Result<(), MarketError> {
        let maturity = self.maturity_years();
        if t.is_finite() && t > 0.0 && t <= maturity * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(MarketError::InvalidTime { time: t, maturity })
        }
    }

    /// Deterministic forward `S0 * exp(r t)`.
    pub fn forward(&self, t: f64) -> f64 {
        self.spot * (self.rate * t).exp()
    }
}

/// A point of the two-dimensional search space: when to exercise and the
/// asset level aimed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExerciseCandidate {
    pub time: f64,
    pub asset_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathConfig {
    pub num_paths: usize,
    pub num_steps: usize,
    pub seed: u64,
}

impl PathConfig {
    pub const INNER_PATHS: usize = 10_000;
    pub const REPORT_PATHS: usize = 100_000;

    pub fn new(num_paths: usize, num_steps: usize, seed: u64) -> Self {
        Self {
            num_paths,
            num_steps,
            seed,
        }
    }

    /// Path count used inside the optimizer loop.
    pub fn inner(seed: u64) -> Self {
        Self::new(Self::INNER_PATHS, 1, seed)
    }

    /// Path count used for reported probabilities.
    pub fn report(seed: u64) -> Self {
        Self::new(Self::REPORT_PATHS, 1, seed)
    }

    pub fn validate(&self) -> Result<(), MarketError> {
        if self.num_paths == 0 {
            return Err(MarketError::InvalidPathConfig("num_paths must be >= 1".into()));
        }
        if self.num_steps == 0 {
            return Err(MarketError::InvalidPathConfig("num_steps must be >= 1".into()));
        }
        Ok(())
    }
}

pub fn call_payoff(asset_value: f64, strike: f64) -> f64 {
    (asset_value - strike).max(0.0)
}

pub fn put_payoff(asset_value: f64, strike: f64) -> f64 {
    (strike - asset_value).max(0.0)
}

/// Per-path standardized Brownian shocks `W_t / sqrt(t)`.
///
/// With `num_steps > 1` each path sums that many independent exact
/// log-increments, which is the same as scaling the summed normals by
/// `1/sqrt(num_steps)`. Draws are path-major from `ChaCha8Rng(seed)`.
fn draw_shocks(cfg: &PathConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if cfg.num_steps == 1 {
        return (0..cfg.num_paths)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
    }
    let scale = 1.0 / (cfg.num_steps as f64).sqrt();
    (0..cfg.num_paths)
        .map(|_| {
            let sum: f64 = (0..cfg.num_steps)
                .map(|_| -> f64 { StandardNormal.sample(&mut rng) })
                .sum();
            sum * scale
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Lognormal {
    spot: f64,
    drift: f64,
    diffusion: f64,
}

impl Lognormal {
    fn new(spec: &ContractSpec, t: f64) -> Self {
        let sigma = spec.volatility;
        Self {
            spot: spec.spot,
            drift: (spec.rate - 0.5 * sigma * sigma) * t,
            diffusion: sigma * t.sqrt(),
        }
    }

    #[inline]
    fn terminal(&self, shock: f64) -> f64 {
        self.spot * (self.drift + self.diffusion * shock).exp()
    }
}

/// Terminal values of risk-neutral GBM at `t`, one per path, in path order.
pub fn simulate_gbm_terminal(
    spec: &ContractSpec,
    t: f64,
    cfg: &PathConfig,
) -> Result<Vec<f64>, MarketError> {
    spec.validate()?;
    cfg.validate()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(MarketError::InvalidTime {
            time: t,
            maturity: spec.maturity_years(),
        });
    }
    let law = Lognormal::new(spec, t);
    Ok(draw_shocks(cfg).into_iter().map(|z| law.terminal(z)).collect())
}

/// Fraction of simulated paths with `S_t >= target`.
///
/// Builds a fresh [`ExceedanceSampler`]; callers evaluating many targets
/// against the same paths should hold a sampler instead.
pub fn probcal(
    spec: &ContractSpec,
    target: f64,
    t: f64,
    cfg: &PathConfig,
) -> Result<f64, MarketError> {
    spec.validate()?;
    spec.check_exercise_time(t)?;
    ExceedanceSampler::new(cfg)?.probability(spec, target, t)
}

/// A fixed set of Monte Carlo paths answering exceedance queries.
///
/// Terminal prices are monotone in the standardized shock, so with the
/// shocks sorted the exceedance count is a binary search instead of a scan.
/// The count is exactly the one a scan over [`simulate_gbm_terminal`] with
/// the same configuration would produce.
#[derive(Debug, Clone)]
pub struct ExceedanceSampler {
    sorted_shocks: Vec<f64>,
}

impl ExceedanceSampler {
    pub fn new(cfg: &PathConfig) -> Result<Self, MarketError> {
        cfg.validate()?;
        let mut sorted_shocks = draw_shocks(cfg);
        sorted_shocks.sort_by(f64::total_cmp);
        Ok(Self { sorted_shocks })
    }

    pub fn num_paths(&self) -> usize {
        self.sorted_shocks.len()
    }

    /// Number of paths whose price at `t` is at least `target`.
    pub fn count_at_or_above(&self, spec: &ContractSpec, target: f64, t: f64) -> usize {
        let n = self.sorted_shocks.len();
        if target <= 0.0 {
            return n;
        }
        let law = Lognormal::new(spec, t);
        let guess = if law.diffusion > 0.0 {
            let threshold = ((target / law.spot).ln() - law.drift) / law.diffusion;
            self.sorted_shocks.partition_point(|&z| z < threshold)
        } else {
            0
        };
        // The shock-space threshold can be off by an ulp; settle on the
        // exact boundary of the price-space comparison.
        let mut idx = guess;
        while idx > 0 && law.terminal(self.sorted_shocks[idx - 1]) >= target {
            idx -= 1;
        }
        while idx < n && law.terminal(self.sorted_shocks[idx]) < target {
            idx += 1;
        }
        n - idx
    }

    pub fn probability(&self, spec: &ContractSpec, target: f64, t: f64) -> Result<f64, MarketError> {
        if !(target >= 0.0) {
            return Err(MarketError::InvalidTarget(target));
        }
        spec.check_exercise_time(t)?;
        Ok(self.count_at_or_above(spec, target, t) as f64 / self.num_paths() as f64)
    }
}
