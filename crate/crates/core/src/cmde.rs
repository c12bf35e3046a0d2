//! Combinational-mutation differential evolution.
//!
//! Three mutation schemes (rand/1, best/1, current-to-best/1) each evolve
//! their own copy of a common initial population with binomial crossover
//! and one-to-one greedy selection. After the last generation the champion
//! of every scheme is compared and the overall minimum is returned.
//!
//! Every random draw comes from a per-scheme ChaCha stream and all draws of
//! a generation happen before any objective evaluation, so results do not
//! depend on how the schemes are scheduled across threads.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeError {
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("population of {size} cannot supply {needed} distinct indices besides the target")]
    PopulationTooSmall { size: usize, needed: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("objective failed at {vector:?}: {message}")]
    Objective { vector: Vec<f64>, message: String },
}

/// Failure reported by an [`Objective`].
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct ObjectiveError(pub String);

/// A function to minimize over a box.
pub trait Objective: Sync {
    fn evaluate(&self, x: &[f64]) -> Result<f64, ObjectiveError>;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        Ok(self(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyId {
    Rand1,
    Best1,
    CurrentToBest1,
}

impl StrategyId {
    pub const ALL: [StrategyId; 3] = [
        StrategyId::Rand1,
        StrategyId::Best1,
        StrategyId::CurrentToBest1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyId::Rand1 => "rand1",
            StrategyId::Best1 => "best1",
            StrategyId::CurrentToBest1 => "current-to-best1",
        }
    }

    fn stream(self) -> u64 {
        match self {
            StrategyId::Rand1 => 1,
            StrategyId::Best1 => 2,
            StrategyId::CurrentToBest1 => 3,
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for StrategyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rand1" => Ok(StrategyId::Rand1),
            "best1" => Ok(StrategyId::Best1),
            "current-to-best1" | "current_to_best1" => Ok(StrategyId::CurrentToBest1),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// What to do with a trial component that left its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepairPolicy {
    #[default]
    Clip,
    /// Mirror back across the violated bound, clipping if still outside.
    Reflect,
    /// Redraw uniformly inside the bounds.
    Reinitialize,
}

impl std::str::FromStr for RepairPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clip" => Ok(RepairPolicy::Clip),
            "reflect" => Ok(RepairPolicy::Reflect),
            "reinitialize" | "reinit" => Ok(RepairPolicy::Reinitialize),
            other => Err(format!("unknown repair policy `{other}`")),
        }
    }
}

impl fmt::Display for RepairPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RepairPolicy::Clip => "clip",
            RepairPolicy::Reflect => "reflect",
            RepairPolicy::Reinitialize => "reinitialize",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeConfig {
    pub population_size: usize,
    pub max_iterations: usize,
    /// Mutation scale factor λ.
    pub scale_factor: f64,
    pub crossover_prob: f64,
    pub bounds: Vec<(f64, f64)>,
    pub seed: u64,
    pub repair: RepairPolicy,
}

impl DeConfig {
    pub const POPULATION_SIZE: usize = 200;
    pub const MAX_ITERATIONS: usize = 600;
    pub const SCALE_FACTOR: f64 = 0.5;
    pub const CROSSOVER_PROB: f64 = 0.9;

    /// Population 200, 600 iterations, λ = 0.5, Cr = 0.9.
    pub fn standard(bounds: Vec<(f64, f64)>, seed: u64) -> Self {
        Self {
            population_size: Self::POPULATION_SIZE,
            max_iterations: Self::MAX_ITERATIONS,
            scale_factor: Self::SCALE_FACTOR,
            crossover_prob: Self::CROSSOVER_PROB,
            bounds,
            seed,
            repair: RepairPolicy::Clip,
        }
    }

    pub fn dimension(&self) -> usize {
        self.bounds.len()
    }

    pub fn validate(&self) -> Result<(), DeError> {
        if self.population_size < 4 {
            return Err(DeError::InvalidConfig(format!(
                "population_size must be at least 4, got {}",
                self.population_size
            )));
        }
        if !(self.scale_factor > 0.0 && self.scale_factor <= 1.0) {
            return Err(DeError::InvalidConfig(format!(
                "scale_factor must lie in (0, 1], got {}",
                self.scale_factor
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err(DeError::InvalidConfig(format!(
                "crossover_prob must lie in [0, 1], got {}",
                self.crossover_prob
            )));
        }
        if self.bounds.is_empty() {
            return Err(DeError::InvalidConfig("bounds must not be empty".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(DeError::InvalidConfig(format!(
                    "bounds[{j}] = ({lo}, {hi}) must be finite with low < high"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub vectors: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    pub generation: usize,
}

impl Population {
    pub fn from_parts(vectors: Vec<Vec<f64>>, fitness: Vec<f64>) -> Self {
        assert_eq!(vectors.len(), fitness.len());
        Self {
            vectors,
            fitness,
            generation: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Index of the minimum fitness; the first one wins ties.
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, &f) in self.fitness.iter().enumerate().skip(1) {
            if f < self.fitness[best] {
                best = i;
            }
        }
        best
    }

    fn initialize(cfg: &DeConfig, objective: &dyn Objective) -> Result<Self, DeError> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let vectors: Vec<Vec<f64>> = (0..cfg.population_size)
            .map(|_| {
                cfg.bounds
                    .iter()
                    .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                    .collect()
            })
            .collect();
        let fitness = evaluate_all(objective, &vectors)?;
        Ok(Self::from_parts(vectors, fitness))
    }
}

fn evaluate(objective: &dyn Objective, x: &[f64]) -> Result<f64, DeError> {
    match objective.evaluate(x) {
        Ok(f) if f.is_nan() => Err(DeError::Objective {
            vector: x.to_vec(),
            message: "objective returned NaN".into(),
        }),
        Ok(f) => Ok(f),
        Err(e) => Err(DeError::Objective {
            vector: x.to_vec(),
            message: e.0,
        }),
    }
}

fn evaluate_all(objective: &dyn Objective, vectors: &[Vec<f64>]) -> Result<Vec<f64>, DeError> {
    vectors.iter().map(|x| evaluate(objective, x)).collect()
}

/// `base + λ (a − b)`.
pub fn rand1(base: &[f64], a: &[f64], b: &[f64], scale: f64) -> Vec<f64> {
    base.iter()
        .zip(a.iter().zip(b))
        .map(|(&x, (&p, &q))| x + scale * (p - q))
        .collect()
}

/// `best + λ (a − b)`.
pub fn best1(best: &[f64], a: &[f64], b: &[f64], scale: f64) -> Vec<f64> {
    rand1(best, a, b, scale)
}

/// `current + λ (best − current) + λ (a − b)`.
pub fn current_to_best1(current: &[f64], best: &[f64], a: &[f64], b: &[f64], scale: f64) -> Vec<f64> {
    current
        .iter()
        .zip(best)
        .zip(a.iter().zip(b))
        .map(|((&x, &xb), (&p, &q))| x + scale * (xb - x) + scale * (p - q))
        .collect()
}

/// `k` indices in `0..n`, distinct from each other and from `exclude`.
///
/// Each index is drawn uniformly and redrawn on collision.
pub fn distinct_indices<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    exclude: usize,
    k: usize,
) -> Result<Vec<usize>, DeError> {
    if n < k + 1 {
        return Err(DeError::PopulationTooSmall { size: n, needed: k });
    }
    let mut picked = Vec::with_capacity(k);
    while picked.len() < k {
        let r = rng.random_range(0..n);
        if r != exclude && !picked.contains(&r) {
            picked.push(r);
        }
    }
    Ok(picked)
}

pub fn mutate_rand1<R: Rng + ?Sized>(
    pop: &Population,
    i: usize,
    scale: f64,
    rng: &mut R,
) -> Result<Vec<f64>, DeError> {
    let r = distinct_indices(rng, pop.len(), i, 3)?;
    let v = &pop.vectors;
    Ok(rand1(&v[r[0]], &v[r[1]], &v[r[2]], scale))
}

pub fn mutate_best1<R: Rng + ?Sized>(
    pop: &Population,
    i: usize,
    scale: f64,
    rng: &mut R,
) -> Result<Vec<f64>, DeError> {
    let r = distinct_indices(rng, pop.len(), i, 2)?;
    let v = &pop.vectors;
    Ok(best1(&v[pop.best_index()], &v[r[0]], &v[r[1]], scale))
}

pub fn mutate_current_to_best1<R: Rng + ?Sized>(
    pop: &Population,
    i: usize,
    scale: f64,
    rng: &mut R,
) -> Result<Vec<f64>, DeError> {
    let r = distinct_indices(rng, pop.len(), i, 2)?;
    let v = &pop.vectors;
    Ok(current_to_best1(
        &v[i],
        &v[pop.best_index()],
        &v[r[0]],
        &v[r[1]],
        scale,
    ))
}

pub fn mutate<R: Rng + ?Sized>(
    strategy: StrategyId,
    pop: &Population,
    i: usize,
    scale: f64,
    rng: &mut R,
) -> Result<Vec<f64>, DeError> {
    match strategy {
        StrategyId::Rand1 => mutate_rand1(pop, i, scale, rng),
        StrategyId::Best1 => mutate_best1(pop, i, scale, rng),
        StrategyId::CurrentToBest1 => mutate_current_to_best1(pop, i, scale, rng),
    }
}

/// Binomial crossover with a forced mutant component at `j_rand`.
///
/// Draw order: `j_rand` first, then one uniform per component.
pub fn binomial_crossover<R: Rng + ?Sized>(
    target: &[f64],
    mutant: &[f64],
    crossover_prob: f64,
    rng: &mut R,
) -> Result<Vec<f64>, DeError> {
    if target.len() != mutant.len() {
        return Err(DeError::DimensionMismatch {
            expected: target.len(),
            actual: mutant.len(),
        });
    }
    if target.is_empty() {
        return Ok(Vec::new());
    }
    let j_rand = rng.random_range(0..target.len());
    Ok(target
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(j, (&t, &m))| {
            let u: f64 = rng.random();
            if u < crossover_prob || j == j_rand {
                m
            } else {
                t
            }
        })
        .collect())
}

/// Clip every component into its bounds.
pub fn repair_bounds(v: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    v.iter()
        .zip(bounds)
        .map(|(&x, &(lo, hi))| x.clamp(lo, hi))
        .collect()
}

pub fn repair_with<R: Rng + ?Sized>(
    v: &[f64],
    bounds: &[(f64, f64)],
    policy: RepairPolicy,
    rng: &mut R,
) -> Vec<f64> {
    match policy {
        RepairPolicy::Clip => repair_bounds(v, bounds),
        RepairPolicy::Reflect => v
            .iter()
            .zip(bounds)
            .map(|(&x, &(lo, hi))| {
                let r = if x < lo {
                    2.0 * lo - x
                } else if x > hi {
                    2.0 * hi - x
                } else {
                    x
                };
                r.clamp(lo, hi)
            })
            .collect(),
        RepairPolicy::Reinitialize => v
            .iter()
            .zip(bounds)
            .map(|(&x, &(lo, hi))| {
                if (lo..=hi).contains(&x) {
                    x
                } else {
                    lo + (hi - lo) * rng.random::<f64>()
                }
            })
            .collect(),
    }
}

/// Per-scheme record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTrace {
    pub strategy: StrategyId,
    /// Best fitness after initialization, then after every generation.
    pub best_per_generation: Vec<f64>,
    pub best_vector: Vec<f64>,
    pub best_fitness: f64,
    pub final_population: Population,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeOutcome {
    pub best_vector: Vec<f64>,
    pub best_fitness: f64,
    pub traces: Vec<StrategyTrace>,
    pub evaluations: usize,
}

impl DeOutcome {
    pub fn trace(&self, strategy: StrategyId) -> Option<&StrategyTrace> {
        self.traces.iter().find(|t| t.strategy == strategy)
    }
}

fn evolve(
    objective: &dyn Objective,
    cfg: &DeConfig,
    strategy: StrategyId,
    mut pop: Population,
) -> Result<StrategyTrace, DeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(strategy.stream());
    let mut history = Vec::with_capacity(cfg.max_iterations + 1);
    history.push(pop.fitness[pop.best_index()]);
    for _ in 0..cfg.max_iterations {
        let trials = (0..pop.len())
            .map(|i| {
                let mutant = mutate(strategy, &pop, i, cfg.scale_factor, &mut rng)?;
                let trial = binomial_crossover(&pop.vectors[i], &mutant, cfg.crossover_prob, &mut rng)?;
                Ok(repair_with(&trial, &cfg.bounds, cfg.repair, &mut rng))
            })
            .collect::<Result<Vec<_>, DeError>>()?;
        let trial_fitness = evaluate_all(objective, &trials)?;
        for (i, (trial, f)) in trials.into_iter().zip(trial_fitness).enumerate() {
            if f <= pop.fitness[i] {
                pop.vectors[i] = trial;
                pop.fitness[i] = f;
            }
        }
        pop.generation += 1;
        history.push(pop.fitness[pop.best_index()]);
    }
    let best = pop.best_index();
    Ok(StrategyTrace {
        strategy,
        best_per_generation: history,
        best_vector: pop.vectors[best].clone(),
        best_fitness: pop.fitness[best],
        final_population: pop,
    })
}

/// Runs the given schemes from a shared initial population and returns the
/// best champion. Ties go to the scheme listed first.
pub fn run_strategies(
    objective: &dyn Objective,
    cfg: &DeConfig,
    strategies: &[StrategyId],
) -> Result<DeOutcome, DeError> {
    cfg.validate()?;
    if strategies.is_empty() {
        return Err(DeError::InvalidConfig("no mutation strategy selected".into()));
    }
    let initial = Population::initialize(cfg, objective)?;
    let traces = strategies
        .par_iter()
        .map(|&s| evolve(objective, cfg, s, initial.clone()))
        .collect::<Result<Vec<_>, DeError>>()?;
    let mut winner = &traces[0];
    for t in &traces[1..] {
        if t.best_fitness < winner.best_fitness {
            winner = t;
        }
    }
    Ok(DeOutcome {
        best_vector: winner.best_vector.clone(),
        best_fitness: winner.best_fitness,
        evaluations: cfg.population_size * (1 + cfg.max_iterations * strategies.len()),
        traces,
    })
}

/// All three schemes with global selection across their champions.
pub fn run_cmde(objective: &dyn Objective, cfg: &DeConfig) -> Result<DeOutcome, DeError> {
    run_strategies(objective, cfg, &StrategyId::ALL)
}

/// Classical single-scheme DE (e.g. rand/1/bin).
pub fn run_single_strategy_de(
    objective: &dyn Objective,
    cfg: &DeConfig,
    strategy: StrategyId,
) -> Result<DeOutcome, DeError> {
    run_strategies(objective, cfg, &[strategy])
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

/// Test functions for checking the optimizer, all with minimum 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchSuite {
    Sphere,
    Rosenbrock,
}

impl BenchSuite {
    pub const ALL: [BenchSuite; 2] = [BenchSuite::Sphere, BenchSuite::Rosenbrock];

    pub fn name(self) -> &'static str {
        match self {
            BenchSuite::Sphere => "sphere",
            BenchSuite::Rosenbrock => "rosenbrock",
        }
    }

    pub fn bounds(self, dim: usize) -> Vec<(f64, f64)> {
        vec![(-5.0, 5.0); dim]
    }

    pub fn evaluate(self, x: &[f64]) -> f64 {
        match self {
            BenchSuite::Sphere => sphere(x),
            BenchSuite::Rosenbrock => rosenbrock(x),
        }
    }
}

impl fmt::Display for BenchSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BenchSuite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BenchSuite::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown suite `{s}` (expected sphere or rosenbrock)"))
    }
}
