//! Bi-objective option pricing with combinational-mutation differential
//! evolution.

pub mod baselines;
pub mod biobjective;
pub mod cmde;
pub mod dataio;
pub mod market_model;
pub mod valuation;

pub use biobjective::{generate_pareto_front, AwsConfig, ObjectivePair, ParetoFront, ParetoPoint, WeightPair};
pub use cmde::{run_cmde, run_single_strategy_de, DeConfig, StrategyId};
pub use market_model::{ContractSpec, ExerciseCandidate, ExerciseStyle, PathConfig};
