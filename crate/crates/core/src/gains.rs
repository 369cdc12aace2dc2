//! Monetary layer: cluster gains, minimal prices, and marginal gains.
//!
//! A cluster's gain is an increasing function of its inverse expected loss,
//! net of a per-agent communication cost `c(S) = c0·|S|`. Each agent's
//! minimal price is what it charges for participating, increasing in its link
//! reliability and decreasing in its local loss. The marginal gain
//! `Δ(S) = u(S) − Σ π_i` (zero on singletons by convention, which pins
//! `u({i}) = π_i`) is what the stable-set constraint systems budget against.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::Coalition;
use crate::error::{Error, Result};
use crate::learning::{expected_loss, Scenario};

/// Cap applied to an inverse loss before the gain function sees it, so
/// zero-loss clusters in noise-free synthetic scenarios stay finite.
pub const INVERSE_LOSS_CAP: f64 = 1e12;

/// Cap on the population size for full 2^n gain tables (building one costs
/// on the order of 3^n loss evaluations).
pub const GAIN_TABLE_CAP: usize = 12;

/// Monotonically increasing map from inverse expected loss to money.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GainFnSpec {
    /// `f(z) = alpha·z`
    Linear { alpha: f64 },
    /// `f(z) = alpha·ln(1+z)`
    Log { alpha: f64 },
}

impl GainFnSpec {
    pub fn validate(&self) -> Result<()> {
        let alpha = match self {
            GainFnSpec::Linear { alpha } | GainFnSpec::Log { alpha } => *alpha,
        };
        if alpha > 0.0 && alpha.is_finite() {
            Ok(())
        } else {
            Err(Error::Contract(format!("gain scale must be positive, got {alpha}")))
        }
    }
}

/// Evaluates the gain function. `z` must be nonnegative; both kinds map zero
/// to zero, which is what a zero-reliability agent's price needs.
pub fn gain_fn_eval(spec: &GainFnSpec, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(Error::Domain(format!("gain function needs z >= 0, got {z}")));
    }
    Ok(match spec {
        GainFnSpec::Linear { alpha } => alpha * z,
        GainFnSpec::Log { alpha } => alpha * (1.0 + z).ln(),
    })
}

fn capped_inverse(loss: f64, what: &str) -> f64 {
    let inv = if loss > 0.0 { 1.0 / loss } else { f64::INFINITY };
    if inv > INVERSE_LOSS_CAP {
        log::warn!("{what}: inverse loss capped at {INVERSE_LOSS_CAP:e} (loss = {loss:e})");
        INVERSE_LOSS_CAP
    } else {
        inv
    }
}

/// Monetary gain of cluster `s`: `f(1/E[L(θ_S)]) − c0·|S|` for two or more
/// members, the member's minimal price for singletons, and zero for the
/// empty set.
pub fn cluster_gain(s: &Coalition, scenario: &Scenario) -> Result<f64> {
    match s.size() {
        0 => Ok(0.0),
        1 => minimal_price(s.min_member().unwrap(), scenario),
        k => {
            let el = expected_loss(s, scenario)?;
            let z = capped_inverse(el, "cluster gain");
            Ok(gain_fn_eval(&scenario.gain_fn, z)? - scenario.cost_per_agent * k as f64)
        }
    }
}

/// Least payment agent `i` accepts: `f(p_i / L(θ_i))`, weakly increasing in
/// the link reliability.
pub fn minimal_price(i: usize, scenario: &Scenario) -> Result<f64> {
    if i >= scenario.n {
        return Err(Error::Contract(format!("agent {i} out of range")));
    }
    let agent = &scenario.agents[i];
    let z = if agent.reliability == 0.0 {
        0.0
    } else {
        let inv = capped_inverse(agent.local_loss, "minimal price");
        (agent.reliability * inv).min(INVERSE_LOSS_CAP)
    };
    gain_fn_eval(&scenario.gain_fn, z)
}

/// Marginal gain `Δ(S)`: cluster gain net of members' minimal prices, and
/// exactly zero for singletons and the empty set.
pub fn marginal_gain(s: &Coalition, scenario: &Scenario) -> Result<f64> {
    if s.size() <= 1 {
        return Ok(0.0);
    }
    let mut total = cluster_gain(s, scenario)?;
    for i in s.members() {
        total -= minimal_price(i, scenario)?;
    }
    Ok(total)
}

/// Full gain table over every coalition: `u(S)`, `Δ(S)`, and the price
/// vector. Indexed by coalition bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct GainReport {
    n: usize,
    u: Vec<f64>,
    delta: Vec<f64>,
    pi: Vec<f64>,
}

impl GainReport {
    /// Evaluates every coalition of the scenario. Cells are independent and
    /// evaluated in parallel; the result does not depend on thread count.
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        let n = scenario.n;
        if n > GAIN_TABLE_CAP {
            return Err(Error::capacity("gain table", GAIN_TABLE_CAP, n));
        }
        let pi: Vec<f64> = (0..n)
            .map(|i| minimal_price(i, scenario))
            .collect::<Result<_>>()?;
        let size = 1usize << n;
        let u: Vec<f64> = (0..size)
            .into_par_iter()
            .map(|mask| {
                let s = Coalition::from_mask(n, mask as u32).expect("mask in range");
                cluster_gain(&s, scenario)
            })
            .collect::<Result<_>>()?;
        let delta = derive_delta(n, &u, &pi);
        Ok(GainReport { n, u, delta, pi })
    }

    /// Builds a report from explicit tables, validating the singleton
    /// convention `u({i}) = π_i` and `u(∅) = 0`.
    pub fn from_raw(n: usize, u: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::Contract(format!("population {n} out of range")));
        }
        if u.len() != 1 << n {
            return Err(Error::Contract(format!(
                "gain table has {} entries, expected {}",
                u.len(),
                1 << n
            )));
        }
        if pi.len() != n {
            return Err(Error::Contract("price vector length mismatch".into()));
        }
        if u[0] != 0.0 {
            return Err(Error::Contract("empty-set gain must be 0".into()));
        }
        for i in 0..n {
            if (u[1 << i] - pi[i]).abs() > 1e-9 {
                return Err(Error::Contract(format!(
                    "singleton gain u({{{i}}}) = {} must equal the minimal price {}",
                    u[1 << i],
                    pi[i]
                )));
            }
        }
        let delta = derive_delta(n, &u, &pi);
        Ok(GainReport { n, u, delta, pi })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn u(&self, s: &Coalition) -> f64 {
        self.u[s.mask() as usize]
    }

    pub fn delta(&self, s: &Coalition) -> f64 {
        self.delta[s.mask() as usize]
    }

    pub fn u_by_mask(&self, mask: u32) -> f64 {
        self.u[mask as usize]
    }

    pub fn delta_by_mask(&self, mask: u32) -> f64 {
        self.delta[mask as usize]
    }

    pub fn pi(&self, i: usize) -> f64 {
        self.pi[i]
    }

    pub fn prices(&self) -> &[f64] {
        &self.pi
    }
}

fn derive_delta(n: usize, u: &[f64], pi: &[f64]) -> Vec<f64> {
    (0..u.len())
        .map(|mask| {
            if (mask as u32).count_ones() <= 1 {
                0.0
            } else {
                let mut d = u[mask];
                for (i, price) in pi.iter().enumerate().take(n) {
                    if mask & (1 << i) != 0 {
                        d -= price;
                    }
                }
                d
            }
        })
        .collect()
}

/// Outcome of the exhaustive superadditivity scan.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperadditivityCheck {
    pub holds: bool,
    /// First disjoint pair violating `Δ(S∪T) >= Δ(S) + Δ(T)`, in ascending
    /// (S, T) bitmask order.
    pub witness: Option<(Coalition, Coalition)>,
}

/// Checks `Δ(S∪T) >= Δ(S) + Δ(T) − 1e−9` over every ordered pair of disjoint
/// non-empty coalitions.
pub fn is_superadditive(report: &GainReport) -> Result<SuperadditivityCheck> {
    let n = report.n;
    if n > GAIN_TABLE_CAP {
        return Err(Error::capacity("superadditivity scan", GAIN_TABLE_CAP, n));
    }
    let size = 1u32 << n;
    for s in 1..size {
        for t in 1..size {
            if s & t != 0 {
                continue;
            }
            let lhs = report.delta_by_mask(s | t);
            let rhs = report.delta_by_mask(s) + report.delta_by_mask(t);
            if lhs < rhs - 1e-9 {
                return Ok(SuperadditivityCheck {
                    holds: false,
                    witness: Some((
                        Coalition::from_mask(n, s).unwrap(),
                        Coalition::from_mask(n, t).unwrap(),
                    )),
                });
            }
        }
    }
    Ok(SuperadditivityCheck {
        holds: true,
        witness: None,
    })
}
