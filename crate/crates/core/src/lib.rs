//! Deterministic engine for coalition formation among federated-learning
//! agents with unreliable uplinks.
//!
//! The pipeline: synthetic scenarios assign each agent a local model, a data
//! size, and a link reliability (`learning`); expected losses of federated
//! clusters turn into monetary gains, minimal prices, and marginal gains
//! (`gains`); gain allocations induce hedonic preferences whose Nash-stable
//! partitions can be enumerated exactly (`hedonic`), searched for via
//! budget-balance + stability constraint systems and a built-in simplex
//! solver (`stable_set`, `lp_solver`), reached by decentralized best-reply
//! dynamics over the induced potential game (`dynamics`), or traded off
//! against the aggregator's clustering objective (`clustering`).
//!
//! Everything is seed-deterministic: identical inputs produce bit-identical
//! outputs across runs and platforms.

pub mod clustering;
pub mod combinatorics;
pub mod dynamics;
pub mod error;
pub mod gains;
pub mod hedonic;
pub mod learning;
pub mod lp_solver;
pub mod stable_set;

pub use combinatorics::{Coalition, Partition, ReceptionVector};
pub use dynamics::{DynamicsTrace, Schedule, StrategyTuple};
pub use error::{Error, Result};
pub use gains::{GainFnSpec, GainReport};
pub use hedonic::{AllocationTable, MutualGainVector, StabilityCertificate};
pub use learning::{GenSpec, ModelParams, Scenario};
pub use lp_solver::{LpProblem, LpSolution, LpStatus};
pub use stable_set::{StableSetResult, StableStatus};
