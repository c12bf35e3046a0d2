//! Option pricing as a bi-objective problem: maximize the call payoff at a
//! target asset level and the probability of reaching that level.
//!
//! The front is generated with an adaptive weighted-sum scheme:
//!
//! 1. Each objective is maximized on its own (lexicographically, so ties in
//!    the primary objective are broken by the secondary one). The two
//!    optima fix the utopia/nadir normalization.
//! 2. A uniform grid of interior weights is swept over the normalized
//!    weighted sum.
//! 3. Adjacent front points that are too far apart in normalized space are
//!    refined. The feasible region is cut down by offsets of `delta` times
//!    the segment extent from each endpoint and the segment-normal weighted
//!    sum is optimized inside it. Each objective is also maximized subject
//!    to the offset bound on the other one alone, which reaches the
//!    non-convex stretches that a plain sweep misses.
//!
//! Every optimization is a DE run; both objectives enter the optimizer as
//! a negated weighted sum because DE minimizes.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::cmde::{run_cmde, run_single_strategy_de, DeConfig, DeError, DeOutcome, Objective, ObjectiveError, StrategyId};
use crate::market_model::{
    call_payoff, ContractSpec, ExceedanceSampler, ExerciseCandidate, ExerciseStyle, MarketError, PathConfig,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrontError {
    #[error(transparent)]
    Optimizer(#[from] DeError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("invalid front configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate normalization on objective {axis}: utopia {utopia} equals nadir {nadir}")]
    DegenerateNormalization { axis: usize, utopia: f64, nadir: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectivePair {
    pub payoff: f64,
    pub probability: f64,
}

impl ObjectivePair {
    pub fn as_array(self) -> [f64; 2] {
        [self.payoff, self.probability]
    }
}

/// Convex weights for (payoff, probability).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightPair {
    pub w1: f64,
    pub w2: f64,
}

impl WeightPair {
    /// `(w1, 1 - w1)`; `w1` must lie in `[0, 1]`.
    pub fn new(w1: f64) -> Result<Self, FrontError> {
        if !(0.0..=1.0).contains(&w1) {
            return Err(FrontError::InvalidConfig(format!("weight {w1} outside [0, 1]")));
        }
        Ok(Self { w1, w2: 1.0 - w1 })
    }

    pub const PAYOFF_ONLY: WeightPair = WeightPair { w1: 1.0, w2: 0.0 };
    pub const PROBABILITY_ONLY: WeightPair = WeightPair { w1: 0.0, w2: 1.0 };
}

impl fmt::Display for WeightPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.w1, self.w2)
    }
}

/// Min–max scaling of both (maximized) objectives onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    utopia: [f64; 2],
    nadir: [f64; 2],
}

impl Normalization {
    pub fn new(utopia: [f64; 2], nadir: [f64; 2]) -> Result<Self, FrontError> {
        for axis in 0..2 {
            let (u, n) = (utopia[axis], nadir[axis]);
            if !(u.is_finite() && n.is_finite()) || u - n <= 1e-12 * u.abs().max(1.0) {
                return Err(FrontError::DegenerateNormalization { axis, utopia: u, nadir: n });
            }
        }
        Ok(Self { utopia, nadir })
    }

    pub fn utopia(&self) -> [f64; 2] {
        self.utopia
    }

    pub fn nadir(&self) -> [f64; 2] {
        self.nadir
    }

    pub fn normalize(&self, values: [f64; 2]) -> [f64; 2] {
        [0, 1].map(|k| (values[k] - self.nadir[k]) / (self.utopia[k] - self.nadir[k]))
    }
}

fn weighted(values: [f64; 2], w: WeightPair, norm: &Normalization) -> f64 {
    let n = norm.normalize(values);
    -(w.w1 * n[0] + w.w2 * n[1])
}

/// Negated weighted sum of the normalized objectives (lower is better).
pub fn scalarized_fitness(obj: ObjectivePair, w: WeightPair, norm: &Normalization) -> f64 {
    weighted(obj.as_array(), w, norm)
}

/// Anything carrying a (payoff, probability)-like pair of maximized values.
pub trait HasObjectives {
    fn objective_values(&self) -> [f64; 2];
}

impl HasObjectives for ObjectivePair {
    fn objective_values(&self) -> [f64; 2] {
        self.as_array()
    }
}

impl HasObjectives for [f64; 2] {
    fn objective_values(&self) -> [f64; 2] {
        *self
    }
}

/// `a` weakly dominates `b` with at least one strict improvement.
pub fn dominates(a: [f64; 2], b: [f64; 2]) -> bool {
    a[0] >= b[0] && a[1] >= b[1] && (a[0] > b[0] || a[1] > b[1])
}

/// Maximal non-dominated subset, ordered by descending first objective.
///
/// Exact duplicates keep the earliest occurrence.
pub fn nondominated_filter<T: HasObjectives + Clone>(points: &[T]) -> Vec<T> {
    let values: Vec<[f64; 2]> = points.iter().map(HasObjectives::objective_values).collect();
    nondominated_indices(&values).into_iter().map(|i| points[i].clone()).collect()
}

/// Indices of the non-dominated values, by descending first objective.
pub fn nondominated_indices(values: &[[f64; 2]]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len())
        .filter(|&i| values[i].iter().all(|v| !v.is_nan()))
        .collect();
    order.sort_by(|&a, &b| {
        let (va, vb) = (values[a], values[b]);
        vb[0].total_cmp(&va[0]).then(vb[1].total_cmp(&va[1])).then(a.cmp(&b))
    });
    let mut best_second = f64::NEG_INFINITY;
    order.retain(|&i| {
        let keep = values[i][1] > best_second;
        best_second = best_second.max(values[i][1]);
        keep
    });
    order
}

/// A box-bounded problem with two objectives, both maximized.
pub trait BiObjectiveProblem: Sync {
    fn bounds(&self) -> Vec<(f64, f64)>;
    fn evaluate(&self, x: &[f64]) -> Result<[f64; 2], ObjectiveError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    #[default]
    Cmde,
    Single(StrategyId),
}

impl Optimizer {
    pub fn run(&self, objective: &dyn Objective, cfg: &DeConfig) -> Result<DeOutcome, DeError> {
        match *self {
            Optimizer::Cmde => run_cmde(objective, cfg),
            Optimizer::Single(s) => run_single_strategy_de(objective, cfg, s),
        }
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Optimizer::Cmde => f.write_str("cmde"),
            Optimizer::Single(s) => write!(f, "de-{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AwsConfig {
    pub initial_weight_count: usize,
    /// Fraction of a segment's extent cut off at each end during refinement.
    pub delta: f64,
    pub max_refinement_rounds: usize,
    /// Normalized distance above which a front segment is refined.
    pub segment_gap_threshold: f64,
    pub mc_paths_inner: usize,
}

impl Default for AwsConfig {
    fn default() -> Self {
        Self {
            initial_weight_count: 11,
            delta: 0.1,
            max_refinement_rounds: 3,
            segment_gap_threshold: 0.05,
            mc_paths_inner: PathConfig::INNER_PATHS,
        }
    }
}

impl AwsConfig {
    pub fn validate(&self) -> Result<(), FrontError> {
        if self.initial_weight_count < 2 {
            return Err(FrontError::InvalidConfig("initial_weight_count must be >= 2".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(FrontError::InvalidConfig(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.segment_gap_threshold.is_finite() && self.segment_gap_threshold >= 0.0) {
            return Err(FrontError::InvalidConfig("segment_gap_threshold must be >= 0".into()));
        }
        if self.mc_paths_inner == 0 {
            return Err(FrontError::InvalidConfig("mc_paths_inner must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointOrigin {
    /// Lexicographic maximum of the first objective.
    FirstExtreme,
    /// Lexicographic maximum of the second objective.
    SecondExtreme,
    Sweep,
    Refinement { round: usize },
}

/// The scalarized problem a point was obtained from: its weight plus lower
/// bounds on the normalized objectives (`-inf` when unconstrained).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubProblem {
    pub weight: WeightPair,
    pub floor: [f64; 2],
}

impl SubProblem {
    pub fn unconstrained(weight: WeightPair) -> Self {
        Self {
            weight,
            floor: [f64::NEG_INFINITY; 2],
        }
    }

    pub fn violation(&self, normalized: [f64; 2]) -> f64 {
        (self.floor[0] - normalized[0]).max(0.0) + (self.floor[1] - normalized[1]).max(0.0)
    }

    pub fn admits(&self, normalized: [f64; 2]) -> bool {
        self.violation(normalized) <= FEASIBILITY_TOL
    }
}

const FEASIBILITY_TOL: f64 = 1e-9;
/// Exact-penalty multiplier; large against any slope of a normalized front.
const PENALTY: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontPoint {
    pub x: Vec<f64>,
    pub values: [f64; 2],
    pub normalized: [f64; 2],
    pub sub_problem: SubProblem,
    pub origin: PointOrigin,
}

impl HasObjectives for FrontPoint {
    fn objective_values(&self) -> [f64; 2] {
        self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontOutcome {
    /// Non-dominated points by descending first objective.
    pub points: Vec<FrontPoint>,
    pub normalization: Normalization,
    pub diagnostics: Vec<String>,
    /// Front size after the sweep, then after each refinement round.
    pub round_sizes: Vec<usize>,
}

fn derive_seed(base: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Scalarized<'a, P: ?Sized> {
    problem: &'a P,
    eval: Box<dyn Fn([f64; 2]) -> f64 + Sync + 'a>,
}

impl<P: BiObjectiveProblem + ?Sized> Objective for Scalarized<'_, P> {
    fn evaluate(&self, x: &[f64]) -> Result<f64, ObjectiveError> {
        Ok((self.eval)(self.problem.evaluate(x)?))
    }
}

struct Engine<'a, P: ?Sized> {
    problem: &'a P,
    template: DeConfig,
    optimizer: Optimizer,
}

impl<P: BiObjectiveProblem + ?Sized> Engine<'_, P> {
    fn minimize(&self, tag: u64, eval: impl Fn([f64; 2]) -> f64 + Sync) -> Result<(Vec<f64>, [f64; 2]), FrontError> {
        let mut cfg = self.template.clone();
        cfg.seed = derive_seed(self.template.seed, tag);
        let objective = Scalarized {
            problem: self.problem,
            eval: Box::new(eval),
        };
        let out = self.optimizer.run(&objective, &cfg)?;
        let values = self
            .problem
            .evaluate(&out.best_vector)
            .map_err(|e| DeError::Objective {
                vector: out.best_vector.clone(),
                message: e.0,
            })?;
        Ok((out.best_vector, values))
    }

    /// Maximize objective `k`, then the other one while holding `k` at its
    /// optimum (within a small tolerance of `scale[k]`).
    fn lexicographic(&self, k: usize, star: f64, scale: [f64; 2], tag: u64) -> Result<(Vec<f64>, [f64; 2]), FrontError> {
        let o = 1 - k;
        let floor = star - 1e-6 * scale[k];
        self.minimize(tag, move |v| -v[o] / scale[o] + PENALTY * (floor - v[k]).max(0.0) / scale[k])
    }
}

/// Adaptive weighted-sum front of a generic bi-objective problem.
pub fn adaptive_weighted_sum<P: BiObjectiveProblem + ?Sized>(
    problem: &P,
    de_template: &DeConfig,
    aws: &AwsConfig,
    optimizer: Optimizer,
) -> Result<FrontOutcome, FrontError> {
    aws.validate()?;
    let mut template = de_template.clone();
    template.bounds = problem.bounds();
    template.validate()?;
    let engine = Engine {
        problem,
        template,
        optimizer,
    };
    let mut diagnostics = Vec::new();

    // Single-objective optima; their spread sets the tie-break scales.
    let (xa0, va0) = engine.minimize(0, |v| -v[0])?;
    let (xb0, vb0) = engine.minimize(1, |v| -v[1])?;
    let mut scale = [(va0[0] - vb0[0]).abs(), (vb0[1] - va0[1]).abs()];
    for (k, s) in scale.iter_mut().enumerate() {
        let peak = if k == 0 { va0[0] } else { vb0[1] };
        if !(*s > 1e-12 * peak.abs().max(1.0)) {
            *s = peak.abs().max(1.0);
        }
    }
    let (first, second) = rayon::join(
        || engine.lexicographic(0, va0[0], scale, 2),
        || engine.lexicographic(1, vb0[1], scale, 3),
    );
    let ((xa, va), (xb, vb)) = match (first, second) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    // Keep the stage-one optimum if the tie-break run drifted below it.
    let (xa, va) = if va[0] >= va0[0] - 1e-6 * scale[0] { (xa, va) } else { (xa0, va0) };
    let (xb, vb) = if vb[1] >= vb0[1] - 1e-6 * scale[1] { (xb, vb) } else { (xb0, vb0) };

    let mut utopia = [va[0], vb[1]];
    let mut nadir = [vb[0], va[1]];
    for axis in 0..2 {
        if utopia[axis] - nadir[axis] <= 1e-12 * utopia[axis].abs().max(1.0) {
            diagnostics.push(format!(
                "objective {axis} does not vary between the extremes ({}); using unit range",
                utopia[axis]
            ));
            nadir[axis] = utopia[axis] - 1.0;
            utopia[axis] = utopia[axis].max(nadir[axis] + 1.0);
        }
    }
    let norm = Normalization::new(utopia, nadir)?;
    let make = |x: Vec<f64>, values: [f64; 2], sub_problem: SubProblem, origin: PointOrigin| FrontPoint {
        normalized: norm.normalize(values),
        x,
        values,
        sub_problem,
        origin,
    };

    let mut candidates = vec![
        make(xa, va, SubProblem::unconstrained(WeightPair::PAYOFF_ONLY), PointOrigin::FirstExtreme),
        make(xb, vb, SubProblem::unconstrained(WeightPair::PROBABILITY_ONLY), PointOrigin::SecondExtreme),
    ];
    let n = aws.initial_weight_count;
    let sweep: Vec<SubProblem> = (1..n - 1)
        .rev()
        .map(|i| SubProblem::unconstrained(WeightPair { w1: i as f64 / (n - 1) as f64, w2: 1.0 - i as f64 / (n - 1) as f64 }))
        .collect();
    let swept = sweep
        .par_iter()
        .enumerate()
        .map(|(i, sp)| {
            let sp = *sp;
            let (x, v) = engine.minimize(100 + i as u64, move |v| weighted(v, sp.weight, &norm))?;
            Ok(make(x, v, sp, PointOrigin::Sweep))
        })
        .collect::<Result<Vec<_>, FrontError>>()?;
    candidates.extend(swept);
    let mut front = merge(Vec::new(), candidates, "sweep", &mut diagnostics);
    let mut round_sizes = vec![front.len()];

    for round in 1..=aws.max_refinement_rounds {
        let mut ordered = front.clone();
        ordered.sort_by(|a, b| a.values[0].total_cmp(&b.values[0]));
        let mut subs = Vec::new();
        for pair in ordered.windows(2) {
            let (a, b) = (pair[0].normalized, pair[1].normalized);
            let (dx, dy) = (b[0] - a[0], a[1] - b[1]);
            if dx.hypot(dy) <= aws.segment_gap_threshold {
                continue;
            }
            let floor = [a[0] + aws.delta * dx, b[1] + aws.delta * dy];
            let normal = WeightPair { w1: dy / (dx + dy), w2: dx / (dx + dy) };
            let free = f64::NEG_INFINITY;
            subs.push(SubProblem { weight: normal, floor });
            // One-sided bounds are always satisfied by an endpoint, so these
            // two make progress even when the offset box misses the front.
            subs.push(SubProblem { weight: WeightPair::PROBABILITY_ONLY, floor: [floor[0], free] });
            subs.push(SubProblem { weight: WeightPair::PAYOFF_ONLY, floor: [free, floor[1]] });
        }
        if subs.is_empty() {
            break;
        }
        let results = subs
            .par_iter()
            .enumerate()
            .map(|(i, sp)| {
                let sp = *sp;
                let tag = 10_000 * round as u64 + i as u64;
                let (x, v) = engine.minimize(tag, move |v| {
                    let nv = norm.normalize(v);
                    -(sp.weight.w1 * nv[0] + sp.weight.w2 * nv[1]) + PENALTY * sp.violation(nv)
                })?;
                Ok((sp, x, v))
            })
            .collect::<Result<Vec<_>, FrontError>>()?;
        let mut fresh = Vec::new();
        let mut infeasible = 0;
        for (sp, x, v) in results {
            let p = make(x, v, sp, PointOrigin::Refinement { round });
            if sp.admits(p.normalized) {
                fresh.push(p);
            } else {
                infeasible += 1;
            }
        }
        if infeasible > 0 {
            diagnostics.push(format!(
                "round {round}: {infeasible} of {} sub-problems found no point inside their offset region",
                subs.len()
            ));
        }
        front = merge(front, fresh, &format!("round {round}"), &mut diagnostics);
        round_sizes.push(front.len());
    }

    Ok(FrontOutcome {
        points: front,
        normalization: norm,
        diagnostics,
        round_sizes,
    })
}

/// Adds `fresh` to `front`, keeping the non-dominated union. Existing points
/// win exact ties, so a duplicate never displaces an earlier point.
fn merge(front: Vec<FrontPoint>, fresh: Vec<FrontPoint>, stage: &str, diagnostics: &mut Vec<String>) -> Vec<FrontPoint> {
    let old_len = front.len();
    let offered = fresh.len();
    let mut all = front;
    all.extend(fresh);
    let values: Vec<[f64; 2]> = all.iter().map(|p| p.values).collect();
    let kept = nondominated_indices(&values);
    let mut survives = vec![false; all.len()];
    for &i in &kept {
        survives[i] = true;
    }
    // Dropped points that merely repeat a survivor are not worth reporting.
    let dominated = |i: usize| !survives[i] && !kept.iter().any(|&k| values[k] == values[i]);
    let dominated_new = (old_len..all.len()).filter(|&i| dominated(i)).count();
    let displaced = (0..old_len).filter(|&i| dominated(i)).count();
    if dominated_new > 0 {
        diagnostics.push(format!("{stage}: discarded {dominated_new} of {offered} new points as dominated"));
    }
    if displaced > 0 {
        diagnostics.push(format!("{stage}: {displaced} earlier points were dominated by new ones"));
    }
    let mut slots: Vec<Option<FrontPoint>> = all.into_iter().map(Some).collect();
    kept.into_iter().filter_map(|i| slots[i].take()).collect()
}

/// The option contract seen as a bi-objective problem over
/// (exercise time, target asset value).
pub struct OptionProblem<'a> {
    spec: &'a ContractSpec,
    sampler: ExceedanceSampler,
    free_time: Option<(f64, f64)>,
    asset_upper: f64,
}

impl<'a> OptionProblem<'a> {
    pub fn new(spec: &'a ContractSpec, paths: &PathConfig) -> Result<Self, FrontError> {
        spec.validate()?;
        let maturity = spec.maturity_years();
        let t_min = 1.0 / f64::from(spec.days_per_year);
        let free_time = match spec.style {
            ExerciseStyle::American if t_min < maturity => Some((t_min, maturity)),
            _ => None,
        };
        Ok(Self {
            spec,
            sampler: ExceedanceSampler::new(paths)?,
            free_time,
            asset_upper: asset_upper_bound(spec),
        })
    }

    pub fn candidate(&self, x: &[f64]) -> ExerciseCandidate {
        match self.free_time {
            Some(_) => ExerciseCandidate { time: x[0], asset_value: x[1] },
            None => ExerciseCandidate {
                time: self.spec.maturity_years(),
                asset_value: x[0],
            },
        }
    }

    pub fn objectives(&self, cand: ExerciseCandidate) -> Result<ObjectivePair, MarketError> {
        Ok(ObjectivePair {
            payoff: call_payoff(cand.asset_value, self.spec.strike),
            probability: self.sampler.probability(self.spec, cand.asset_value, cand.time)?,
        })
    }
}

impl BiObjectiveProblem for OptionProblem<'_> {
    fn bounds(&self) -> Vec<(f64, f64)> {
        let asset = (0.0, self.asset_upper);
        match self.free_time {
            Some(t) => vec![t, asset],
            None => vec![asset],
        }
    }

    fn evaluate(&self, x: &[f64]) -> Result<[f64; 2], ObjectiveError> {
        self.objectives(self.candidate(x))
            .map(ObjectivePair::as_array)
            .map_err(|e| ObjectiveError(e.to_string()))
    }
}

/// Upper search bound for the target asset value: `S0 exp((r + 4σ) T)`.
pub fn asset_upper_bound(spec: &ContractSpec) -> f64 {
    spec.spot * ((spec.rate + 4.0 * spec.volatility) * spec.maturity_years()).exp()
}

pub fn evaluate_objectives(
    spec: &ContractSpec,
    cand: ExerciseCandidate,
    cfg: &PathConfig,
) -> Result<ObjectivePair, MarketError> {
    spec.validate()?;
    if !(cand.asset_value >= 0.0) {
        return Err(MarketError::InvalidTarget(cand.asset_value));
    }
    spec.check_exercise_time(cand.time)?;
    Ok(ObjectivePair {
        payoff: call_payoff(cand.asset_value, spec.strike),
        probability: ExceedanceSampler::new(cfg)?.probability(spec, cand.asset_value, cand.time)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub candidate: ExerciseCandidate,
    pub objectives: ObjectivePair,
    pub normalized: [f64; 2],
    pub weight: WeightPair,
    pub sub_problem: SubProblem,
    pub origin: PointOrigin,
}

impl ParetoPoint {
    /// `exp(-r t) * payoff * probability` at the point's exercise time.
    pub fn discounted_value(&self, rate: f64) -> f64 {
        (-rate * self.candidate.time).exp() * self.objectives.payoff * self.objectives.probability
    }
}

impl HasObjectives for ParetoPoint {
    fn objective_values(&self) -> [f64; 2] {
        self.objectives.as_array()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub points: Vec<ParetoPoint>,
    pub normalization: Normalization,
    pub diagnostics: Vec<String>,
    pub round_sizes: Vec<usize>,
    pub optimizer: Optimizer,
}

impl ParetoFront {
    /// Structural checks on the front; an empty list means all hold.
    ///
    /// Covers mutual non-dominance, the monotone trade-off, presence and
    /// consistency of both extremes, and that every point is optimal for
    /// its own sub-problem among the returned points it admits (within
    /// `tol` in normalized units).
    pub fn violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let pts = &self.points;
        if nondominated_filter(pts).len() != pts.len() {
            out.push("front contains dominated or duplicate points".into());
        }
        for w in pts.windows(2) {
            if !(w[0].objectives.payoff > w[1].objectives.payoff && w[0].objectives.probability < w[1].objectives.probability) {
                out.push(format!("trade-off not monotone between {:?} and {:?}", w[0].objectives, w[1].objectives));
            }
        }
        let max_payoff = pts.iter().map(|p| p.objectives.payoff).fold(f64::NEG_INFINITY, f64::max);
        let max_prob = pts.iter().map(|p| p.objectives.probability).fold(f64::NEG_INFINITY, f64::max);
        match pts.iter().find(|p| p.origin == PointOrigin::FirstExtreme) {
            Some(p) if p.objectives.payoff < max_payoff => out.push("payoff extreme is not the payoff maximum".into()),
            Some(_) => {}
            None => out.push("payoff extreme missing".into()),
        }
        match pts.iter().find(|p| p.origin == PointOrigin::SecondExtreme) {
            Some(p) if p.objectives.probability < max_prob => {
                out.push("probability extreme is not the probability maximum".into())
            }
            Some(_) => {}
            None => out.push("probability extreme missing".into()),
        }
        for p in pts {
            let w = p.sub_problem.weight;
            let own = w.w1 * p.normalized[0] + w.w2 * p.normalized[1];
            for q in pts.iter().filter(|q| p.sub_problem.admits(q.normalized)) {
                let other = w.w1 * q.normalized[0] + w.w2 * q.normalized[1];
                if other > own + tol {
                    out.push(format!(
                        "{:?} point {:?} beaten at its own weight {} by {:?}",
                        p.origin, p.objectives, w, q.objectives
                    ));
                }
            }
        }
        out
    }
}

/// Pareto front of (payoff, probability) for one contract, optimized by CmDE.
///
/// The Monte Carlo paths are shared by every sub-problem and seeded from
/// `de_cfg.seed`, so the whole front is reproducible.
pub fn generate_pareto_front(spec: &ContractSpec, de_cfg: &DeConfig, aws_cfg: &AwsConfig) -> Result<ParetoFront, FrontError> {
    generate_pareto_front_with(spec, de_cfg, aws_cfg, Optimizer::Cmde)
}

pub fn generate_pareto_front_with(
    spec: &ContractSpec,
    de_cfg: &DeConfig,
    aws_cfg: &AwsConfig,
    optimizer: Optimizer,
) -> Result<ParetoFront, FrontError> {
    aws_cfg.validate()?;
    let paths = PathConfig::new(aws_cfg.mc_paths_inner, 1, de_cfg.seed);
    let problem = OptionProblem::new(spec, &paths)?;
    let outcome = adaptive_weighted_sum(&problem, de_cfg, aws_cfg, optimizer)?;
    let points = outcome
        .points
        .into_iter()
        .map(|p| ParetoPoint {
            candidate: problem.candidate(&p.x),
            objectives: ObjectivePair {
                payoff: p.values[0],
                probability: p.values[1],
            },
            normalized: p.normalized,
            weight: p.sub_problem.weight,
            sub_problem: p.sub_problem,
            origin: p.origin,
        })
        .collect();
    Ok(ParetoFront {
        points,
        normalization: outcome.normalization,
        diagnostics: outcome.diagnostics,
        round_sizes: outcome.round_sizes,
        optimizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(payoff: f64, probability: f64) -> ObjectivePair {
        ObjectivePair { payoff, probability }
    }

    #[test]
    fn nondominated_examples() {
        let pts = [pair(1.0, 0.5), pair(2.0, 0.4), pair(1.5, 0.3)];
        assert_eq!(nondominated_filter(&pts), vec![pair(2.0, 0.4), pair(1.0, 0.5)]);
        assert_eq!(nondominated_filter(&[pair(3.0, 0.1)]), vec![pair(3.0, 0.1)]);
        assert_eq!(nondominated_filter(&[pair(3.0, 0.1), pair(3.0, 0.1)]), vec![pair(3.0, 0.1)]);
        assert!(nondominated_filter::<ObjectivePair>(&[]).is_empty());
    }

    #[test]
    fn scalarized_examples() {
        let norm = Normalization::new([10.0, 1.0], [0.0, 0.0]).unwrap();
        let w = WeightPair::PAYOFF_ONLY;
        assert!(scalarized_fitness(pair(10.0, 0.2), w, &norm) < scalarized_fitness(pair(5.0, 0.9), w, &norm));
        let w = WeightPair::PROBABILITY_ONLY;
        assert!(scalarized_fitness(pair(5.0, 0.9), w, &norm) < scalarized_fitness(pair(10.0, 0.2), w, &norm));
        for w1 in [0.0, 0.3, 0.5, 1.0] {
            let w = WeightPair::new(w1).unwrap();
            assert!((scalarized_fitness(pair(10.0, 1.0), w, &norm) + 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_normalization_rejected() {
        assert!(matches!(
            Normalization::new([1.0, 1.0], [1.0, 0.0]),
            Err(FrontError::DegenerateNormalization { axis: 0, .. })
        ));
        assert!(WeightPair::new(1.2).is_err());
    }

    #[test]
    fn objectives_at_edges() {
        let spec = ContractSpec::new(100.0, 100.0, 252, 0.05, 0.2);
        let cfg = PathConfig::new(20_000, 1, 1);
        let at_strike = evaluate_objectives(&spec, ExerciseCandidate { time: 1.0, asset_value: 100.0 }, &cfg).unwrap();
        assert_eq!(at_strike.payoff, 0.0);
        let direct = crate::market_model::probcal(&spec, 100.0, 1.0, &cfg).unwrap();
        assert_eq!(at_strike.probability, direct);
        let zero = evaluate_objectives(&spec, ExerciseCandidate { time: 1.0, asset_value: 0.0 }, &cfg).unwrap();
        assert_eq!(zero, pair(0.0, 1.0));
        assert!(evaluate_objectives(&spec, ExerciseCandidate { time: 2.0, asset_value: 10.0 }, &cfg).is_err());
    }

    fn small_de(seed: u64) -> DeConfig {
        DeConfig {
            population_size: 30,
            max_iterations: 80,
            ..DeConfig::standard(vec![(0.0, 1.0)], seed)
        }
    }

    struct Toy;
    impl BiObjectiveProblem for Toy {
        fn bounds(&self) -> Vec<(f64, f64)> {
            vec![(-1.0, 3.0)]
        }
        fn evaluate(&self, x: &[f64]) -> Result<[f64; 2], ObjectiveError> {
            Ok([-x[0] * x[0], -(x[0] - 2.0).powi(2)])
        }
    }

    #[test]
    fn toy_front_structure() {
        let out = adaptive_weighted_sum(&Toy, &small_de(5), &AwsConfig::default(), Optimizer::Cmde).unwrap();
        assert!(out.points.len() >= 9);
        assert_eq!(nondominated_filter(&out.points).len(), out.points.len());
        for p in &out.points {
            assert!((-1e-3..=2.0 + 1e-3).contains(&p.x[0]), "{:?}", p.x);
        }
        assert!(out.points.iter().any(|p| p.origin == PointOrigin::FirstExtreme));
        assert!(out.points.iter().any(|p| p.origin == PointOrigin::SecondExtreme));
    }

    #[test]
    fn european_front_is_reproducible() {
        let spec = ContractSpec::new(100.0, 95.0, 126, 0.03, 0.25);
        let aws = AwsConfig {
            mc_paths_inner: 2_000,
            max_refinement_rounds: 2,
            ..AwsConfig::default()
        };
        let a = generate_pareto_front(&spec, &small_de(9), &aws).unwrap();
        let b = generate_pareto_front(&spec, &small_de(9), &aws).unwrap();
        assert_eq!(a, b);
        assert!(a.points.len() >= 2);
        let upper = asset_upper_bound(&spec);
        for p in &a.points {
            assert!(p.candidate.asset_value >= 0.0 && p.candidate.asset_value <= upper);
            assert_eq!(p.candidate.time, spec.maturity_years());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn filter_output_is_mutually_nondominated(
            raw in proptest::collection::vec((0.0f64..10.0, 0.0f64..1.0), 0..40),
        ) {
            let pts: Vec<ObjectivePair> = raw.iter().map(|&(a, b)| pair((a * 4.0).round() / 4.0, (b * 8.0).round() / 8.0)).collect();
            let kept = nondominated_filter(&pts);
            for a in &kept {
                for b in &kept {
                    prop_assert!(!dominates(a.as_array(), b.as_array()));
                }
            }
            for p in &pts {
                prop_assert!(kept.iter().any(|k| dominates(k.as_array(), p.as_array()) || k == p));
            }
            for w in kept.windows(2) {
                prop_assert!(w[0].payoff > w[1].payoff && w[0].probability < w[1].probability);
            }
            prop_assert_eq!(nondominated_filter(&kept), kept.clone());
        }
    }
}
