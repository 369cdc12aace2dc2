//! Decentralized coalition formation as a non-cooperative game over strategy
//! labels.
//!
//! Each agent picks one of `n` labels; agents sharing a label form a
//! coalition, so `n` labels suffice to express every partition. Under
//! additively separable symmetric gains the game is an exact potential game:
//! the sum of co-located mutual gains changes by exactly the deviator's gain
//! change on every unilateral move. Best-reply dynamics therefore terminate,
//! and every terminal tuple induces a Nash-stable partition.
//!
//! Moves require strict improvement (weak moves could cycle); ties among
//! equally good strict improvements go to the smallest label, and the
//! deviator schedule is either round-robin or a seeded per-round shuffle, so
//! runs are reproducible.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{enumerate_partitions, Partition, PARTITION_CAP};
use crate::error::{Error, Result};
use crate::hedonic::MutualGainVector;

/// One strategy label per agent, each in `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyTuple(Vec<usize>);

impl StrategyTuple {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Contract("strategy tuple must be non-empty".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n) {
            return Err(Error::Contract(format!(
                "label {bad} out of range (only {n} strategies exist)"
            )));
        }
        Ok(StrategyTuple(labels))
    }

    /// Every agent on its own label: the all-singletons start.
    pub fn distinct(n: usize) -> Self {
        StrategyTuple((0..n).collect())
    }

    /// Uniformly random tuple, deterministic in the seed.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        StrategyTuple((0..n).map(|_| rng.random_range(0..n)).collect())
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn label(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Groups agents sharing a label into a partition.
pub fn partition_of(sigma: &StrategyTuple) -> Partition {
    Partition::from_labels(sigma.as_slice())
}

/// Gain of agent `i` under `sigma`: mutual gains summed over co-located
/// agents.
pub fn player_gain(i: usize, sigma: &StrategyTuple, v: &MutualGainVector) -> f64 {
    let label = sigma.label(i);
    (0..sigma.n())
        .filter(|&j| j != i && sigma.label(j) == label)
        .map(|j| v.get(i, j))
        .sum()
}

/// Exact potential: mutual gains summed over all co-located pairs.
pub fn potential(sigma: &StrategyTuple, v: &MutualGainVector) -> f64 {
    let n = sigma.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if sigma.label(i) == sigma.label(j) {
                total += v.get(i, j);
            }
        }
    }
    total
}

/// Potential of a partition directly (the potential depends on the tuple
/// only through the partition it induces).
pub fn partition_potential(partition: &Partition, v: &MutualGainVector) -> f64 {
    partition
        .blocks()
        .iter()
        .map(|block| {
            crate::combinatorics::pairs_of(block)
                .into_iter()
                .map(|(i, j)| v.get(i, j))
                .sum::<f64>()
        })
        .sum()
}

/// Best strictly improving label for agent `i`, or `None` when the current
/// label is weakly maximal. Ties among strict improvements break to the
/// smallest label.
pub fn best_reply(i: usize, sigma: &StrategyTuple, v: &MutualGainVector) -> Option<usize> {
    let n = sigma.n();
    let gain_at = |label: usize| -> f64 {
        (0..n)
            .filter(|&j| j != i && sigma.label(j) == label)
            .map(|j| v.get(i, j))
            .sum()
    };
    let current = gain_at(sigma.label(i));
    let mut best: Option<(usize, f64)> = None;
    for label in 0..n {
        let g = gain_at(label);
        if best.map_or(true, |(_, bg)| g > bg) {
            best = Some((label, g));
        }
    }
    match best {
        Some((label, g)) if g > current => Some(label),
        _ => None,
    }
}

/// How the deviating agent is picked in each round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    RoundRobin,
    /// Fresh seeded permutation of the agents every round.
    Random { seed: u64 },
}

/// One applied improvement step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub deviator: usize,
    pub old_label: usize,
    pub new_label: usize,
    pub gain_before: f64,
    pub gain_after: f64,
    pub potential_before: f64,
    pub potential_after: f64,
}

/// Full record of a best-reply run.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsTrace {
    pub steps: Vec<StepRecord>,
    pub terminal: StrategyTuple,
    pub converged: bool,
    /// Full passes over the agents, including the final moveless one.
    pub rounds: usize,
}

impl DynamicsTrace {
    pub fn final_potential(&self, v: &MutualGainVector) -> f64 {
        potential(&self.terminal, v)
    }
}

/// Runs best-reply dynamics until a full pass applies no move (converged) or
/// `max_steps` moves have been applied.
pub fn run_dynamics(
    sigma0: &StrategyTuple,
    v: &MutualGainVector,
    schedule: Schedule,
    max_steps: usize,
) -> Result<DynamicsTrace> {
    if sigma0.n() != v.n() {
        return Err(Error::Contract("tuple/gains population mismatch".into()));
    }
    if max_steps == 0 {
        return Err(Error::Contract("max_steps must be >= 1".into()));
    }
    let n = sigma0.n();
    let mut sigma = sigma0.clone();
    let mut steps: Vec<StepRecord> = Vec::new();
    let mut rounds = 0usize;
    let mut rng = match schedule {
        Schedule::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Schedule::RoundRobin => None,
    };
    let mut order: Vec<usize> = (0..n).collect();
    loop {
        rounds += 1;
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        let mut moved = false;
        for &i in &order {
            let Some(new_label) = best_reply(i, &sigma, v) else {
                continue;
            };
            let old_label = sigma.label(i);
            let gain_before = player_gain(i, &sigma, v);
            let potential_before = potential(&sigma, v);
            sigma.0[i] = new_label;
            let gain_after = player_gain(i, &sigma, v);
            let potential_after = potential(&sigma, v);
            steps.push(StepRecord {
                step: steps.len() + 1,
                deviator: i,
                old_label,
                new_label,
                gain_before,
                gain_after,
                potential_before,
                potential_after,
            });
            moved = true;
            if steps.len() >= max_steps {
                // Out of budget; the tuple may or may not be terminal.
                return Ok(DynamicsTrace {
                    steps,
                    terminal: sigma,
                    converged: false,
                    rounds,
                });
            }
        }
        if !moved {
            return Ok(DynamicsTrace {
                steps,
                terminal: sigma,
                converged: true,
                rounds,
            });
        }
    }
}

/// Exhaustive potential maximizer over partitions. The argmax partition is
/// Nash-stable: any improving unilateral move would raise the potential.
pub fn argmax_potential(v: &MutualGainVector) -> Result<Partition> {
    let n = v.n();
    if n > PARTITION_CAP {
        return Err(Error::capacity("potential maximization", PARTITION_CAP, n));
    }
    let mut best: Option<(Partition, f64)> = None;
    for p in enumerate_partitions(n)? {
        let value = partition_potential(&p, v);
        if best.as_ref().map_or(true, |(_, bv)| value > *bv) {
            best = Some((p, value));
        }
    }
    Ok(best.expect("at least one partition exists").0)
}
