//! Closed-form and lattice reference prices.

use thiserror::Error;

use crate::market_model::{call_payoff, put_payoff, ContractSpec, MarketError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error(transparent)]
    Contract(#[from] MarketError),
    #[error("{0}")]
    InvalidInput(String),
    #[error("risk-neutral up probability {q} outside (0, 1) with {steps} steps; use more steps")]
    Arbitrage { q: f64, steps: usize },
}

/// Standard normal CDF via `erfc`, accurate to well below 1e-10 absolute.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn check_positive(name: &str, v: f64) -> Result<(), BaselineError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(BaselineError::InvalidInput(format!("{name} must be positive, got {v}")))
    }
}

fn d1_d2(spot: f64, strike: f64, rate: f64, vol: f64, t: f64) -> (f64, f64) {
    let sd = vol * t.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * vol * vol) * t) / sd;
    (d1, d1 - sd)
}

/// Black–Scholes European call from raw parameters.
pub fn bs_call_price(spot: f64, strike: f64, rate: f64, vol: f64, t: f64) -> Result<f64, BaselineError> {
    check_positive("maturity", t)?;
    check_positive("volatility", vol)?;
    check_positive("spot", spot)?;
    if !(strike >= 0.0) {
        return Err(BaselineError::InvalidInput(format!("strike must be non-negative, got {strike}")));
    }
    if strike == 0.0 {
        return Ok(spot);
    }
    let (d1, d2) = d1_d2(spot, strike, rate, vol, t);
    Ok(spot * norm_cdf(d1) - strike * (-rate * t).exp() * norm_cdf(d2))
}

/// Black–Scholes European put from raw parameters.
pub fn bs_put_price(spot: f64, strike: f64, rate: f64, vol: f64, t: f64) -> Result<f64, BaselineError> {
    check_positive("maturity", t)?;
    check_positive("volatility", vol)?;
    check_positive("spot", spot)?;
    if !(strike >= 0.0) {
        return Err(BaselineError::InvalidInput(format!("strike must be non-negative, got {strike}")));
    }
    if strike == 0.0 {
        return Ok(0.0);
    }
    let (d1, d2) = d1_d2(spot, strike, rate, vol, t);
    Ok(strike * (-rate * t).exp() * norm_cdf(-d2) - spot * norm_cdf(-d1))
}

pub fn black_scholes_call(spec: &ContractSpec) -> Result<f64, BaselineError> {
    spec.validate()?;
    bs_call_price(spec.spot, spec.strike, spec.rate, spec.volatility, spec.maturity_years())
}

pub fn black_scholes_put(spec: &ContractSpec) -> Result<f64, BaselineError> {
    spec.validate()?;
    bs_put_price(spec.spot, spec.strike, spec.rate, spec.volatility, spec.maturity_years())
}

/// Value of a call with no time left: its intrinsic value.
pub fn call_at_expiry(spot: f64, strike: f64) -> f64 {
    call_payoff(spot, strike)
}

pub fn put_at_expiry(spot: f64, strike: f64) -> f64 {
    put_payoff(spot, strike)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinomialConfig {
    pub steps: usize,
}

impl BinomialConfig {
    pub const DEFAULT_STEPS: usize = 1000;
}

impl Default for BinomialConfig {
    fn default() -> Self {
        Self {
            steps: Self::DEFAULT_STEPS,
        }
    }
}

/// Cox–Ross–Rubinstein lattice, optionally with early exercise.
pub fn crr_call_price(
    spot: f64,
    strike: f64,
    rate: f64,
    vol: f64,
    t: f64,
    steps: usize,
    american: bool,
) -> Result<f64, BaselineError> {
    check_positive("maturity", t)?;
    check_positive("volatility", vol)?;
    check_positive("spot", spot)?;
    if steps == 0 {
        return Err(BaselineError::InvalidInput("binomial steps must be >= 1".into()));
    }
    let dt = t / steps as f64;
    let u = (vol * dt.sqrt()).exp();
    let d = 1.0 / u;
    let growth = (rate * dt).exp();
    let q = (growth - d) / (u - d);
    if !(q > 0.0 && q < 1.0) {
        return Err(BaselineError::Arbitrage { q, steps });
    }
    let disc = 1.0 / growth;
    let node = |i: usize, j: usize| spot * u.powi(i as i32 - 2 * j as i32);

    // values[j] holds the node with j down-moves.
    let mut values: Vec<f64> = (0..=steps).map(|j| call_payoff(node(steps, j), strike)).collect();
    for i in (0..steps).rev() {
        for j in 0..=i {
            let cont = disc * (q * values[j] + (1.0 - q) * values[j + 1]);
            values[j] = if american {
                cont.max(call_payoff(node(i, j), strike))
            } else {
                cont
            };
        }
    }
    Ok(values[0])
}

pub fn binomial_american_call(spec: &ContractSpec, cfg: BinomialConfig) -> Result<f64, BaselineError> {
    spec.validate()?;
    crr_call_price(
        spec.spot,
        spec.strike,
        spec.rate,
        spec.volatility,
        spec.maturity_years(),
        cfg.steps,
        true,
    )
}

pub fn binomial_european_call(spec: &ContractSpec, cfg: BinomialConfig) -> Result<f64, BaselineError> {
    spec.validate()?;
    crr_call_price(
        spec.spot,
        spec.strike,
        spec.rate,
        spec.volatility,
        spec.maturity_years(),
        cfg.steps,
        false,
    )
}

/// `P(S_t >= target)` under risk-neutral GBM. A zero target has probability 1.
pub fn lognormal_exceed_prob(spec: &ContractSpec, target: f64, t: f64) -> Result<f64, BaselineError> {
    spec.validate()?;
    check_positive("time", t)?;
    if !(target >= 0.0) || target.is_nan() {
        return Err(BaselineError::InvalidInput(format!("target must be non-negative, got {target}")));
    }
    if target == 0.0 {
        return Ok(1.0);
    }
    let sigma = spec.volatility;
    let z = ((spec.spot / target).ln() + (spec.rate - 0.5 * sigma * sigma) * t) / (sigma * t.sqrt());
    Ok(norm_cdf(z))
}
