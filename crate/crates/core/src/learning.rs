//! Synthetic local models, parameter aggregation, and loss evaluation.
//!
//! A [`Scenario`] fixes everything downstream gain computations consume:
//! per-agent data sizes, link reliabilities, local model parameters with
//! their cached losses, the aggregator's own model and mixing weight, the
//! gain-function settings, and the RNG seed. Generation is fully
//! deterministic in the seed (ChaCha8, 64-bit floats throughout), so two runs
//! with identical knobs produce byte-identical scenarios.
//!
//! Expected losses are computed by exact enumeration over reception vectors,
//! never by sampling; the all-zeros vector (no agent upload received) charges
//! the scenario's configured `fallback_loss`, and parameter aggregation falls
//! back to the aggregator's own model in that case.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{enumerate_receptions, Coalition, ReceptionVector, SUBSET_CAP};
use crate::error::{Error, Result};
use crate::gains::GainFnSpec;

/// Trainable weights of one learning model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelParams(pub Vec<f64>);

impl ModelParams {
    pub fn zeros(dim: usize) -> Self {
        ModelParams(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One data-owning agent: sample count, uplink reliability, local model, and
/// its cached loss on the scenario evaluator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    #[serde(rename = "m")]
    pub data_size: u64,
    #[serde(rename = "p")]
    pub reliability: f64,
    pub theta: ModelParams,
    pub local_loss: f64,
}

/// How model parameters map to a loss value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossEvaluator {
    /// `L(θ) = (θ-target)ᵀ H (θ-target) + noise_floor`, convex by the PSD
    /// requirement on `H`, so Jensen-style bounds are exact.
    Quadratic {
        target: ModelParams,
        curvature: Vec<Vec<f64>>,
        noise_floor: f64,
    },
    /// Mean squared error on a shared held-out evaluation set.
    Regression {
        features: Vec<Vec<f64>>,
        labels: Vec<f64>,
    },
}

impl LossEvaluator {
    pub fn evaluate(&self, theta: &ModelParams) -> f64 {
        match self {
            LossEvaluator::Quadratic {
                target,
                curvature,
                noise_floor,
            } => {
                let d: Vec<f64> = theta
                    .0
                    .iter()
                    .zip(&target.0)
                    .map(|(a, b)| a - b)
                    .collect();
                let mut acc = 0.0;
                for (i, row) in curvature.iter().enumerate() {
                    let hd: f64 = row.iter().zip(&d).map(|(h, v)| h * v).sum();
                    acc += d[i] * hd;
                }
                acc + noise_floor
            }
            LossEvaluator::Regression { features, labels } => {
                let mut acc = 0.0;
                for (x, y) in features.iter().zip(labels) {
                    let pred: f64 = x.iter().zip(&theta.0).map(|(a, b)| a * b).sum();
                    let e = pred - y;
                    acc += e * e;
                }
                acc / features.len() as f64
            }
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            LossEvaluator::Quadratic {
                target,
                curvature,
                noise_floor,
            } => {
                if target.dim() != dim {
                    return Err(Error::Contract(format!(
                        "quadratic target has dim {}, expected {dim}",
                        target.dim()
                    )));
                }
                if curvature.len() != dim || curvature.iter().any(|r| r.len() != dim) {
                    return Err(Error::Contract("curvature matrix is not M x M".into()));
                }
                for i in 0..dim {
                    for j in 0..dim {
                        if !curvature[i][j].is_finite() {
                            return Err(Error::Contract("curvature entry not finite".into()));
                        }
                        if (curvature[i][j] - curvature[j][i]).abs() > 1e-9 {
                            return Err(Error::Contract("curvature matrix not symmetric".into()));
                        }
                    }
                }
                if sym_min_eigenvalue(curvature) < -1e-10 {
                    return Err(Error::Contract(
                        "curvature matrix not positive semidefinite".into(),
                    ));
                }
                if !(*noise_floor >= 0.0) {
                    return Err(Error::Contract("noise floor must be >= 0".into()));
                }
                Ok(())
            }
            LossEvaluator::Regression { features, labels } => {
                if features.is_empty() {
                    return Err(Error::Contract("regression evaluation set is empty".into()));
                }
                if features.iter().any(|r| r.len() != dim) {
                    return Err(Error::Contract("regression feature row has wrong dim".into()));
                }
                if labels.len() != features.len() {
                    return Err(Error::Contract("regression labels/features mismatch".into()));
                }
                Ok(())
            }
        }
    }
}

/// The aggregator's own model and how strongly it is favored in federation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaeModel {
    pub theta: ModelParams,
    pub w: f64,
}

/// Complete problem instance. See module docs; serializes to the documented
/// JSON schema (field names `n`, `M`, `agents[{m,p,theta,local_loss}]`, …).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n: usize,
    #[serde(rename = "M")]
    pub dim: usize,
    pub agents: Vec<AgentProfile>,
    pub evaluator: LossEvaluator,
    pub mae: MaeModel,
    pub gain_fn: GainFnSpec,
    pub cost_per_agent: f64,
    pub fallback_loss: f64,
    pub seed: u64,
}

impl Scenario {
    /// The full agent set.
    pub fn all_agents(&self) -> Coalition {
        Coalition::grand(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.agents.len() != self.n {
            return Err(Error::Contract(format!(
                "agent list has {} entries, expected n = {}",
                self.agents.len(),
                self.n
            )));
        }
        for (i, a) in self.agents.iter().enumerate() {
            if a.data_size < 1 {
                return Err(Error::Contract(format!("agent {i} has zero data size")));
            }
            if !(0.0..=1.0).contains(&a.reliability) {
                return Err(Error::Contract(format!("agent {i} reliability outside [0,1]")));
            }
            if a.theta.dim() != self.dim {
                return Err(Error::Contract(format!("agent {i} theta has wrong dim")));
            }
            if !a.local_loss.is_finite() || a.local_loss < 0.0 {
                return Err(Error::Contract(format!("agent {i} local loss invalid")));
            }
        }
        self.evaluator.validate(self.dim)?;
        if self.mae.theta.dim() != self.dim {
            return Err(Error::Contract("aggregator theta has wrong dim".into()));
        }
        if !(0.0..=1.0).contains(&self.mae.w) {
            return Err(Error::Contract("aggregator weight outside [0,1]".into()));
        }
        self.gain_fn.validate()?;
        if !(self.cost_per_agent >= 0.0) {
            return Err(Error::Contract("cost per agent must be >= 0".into()));
        }
        if !(self.fallback_loss > 0.0) {
            return Err(Error::Contract("fallback loss must be > 0".into()));
        }
        Ok(())
    }
}

/// Which built-in evaluator a generated scenario uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    Quadratic,
    Regression,
}

/// Generation knobs for [`generate_scenario`].
#[derive(Clone, Debug)]
pub struct GenSpec {
    pub evaluator: EvaluatorKind,
    /// Inclusive range for per-agent sample counts.
    pub data_size_range: (u64, u64),
    /// Inclusive range for per-agent link reliabilities.
    pub reliability_range: (f64, f64),
    /// Spread of local models around the truth (quadratic mode) or label
    /// noise (regression mode). Zero makes every local model exact.
    pub noise: f64,
    /// Additive loss floor for the quadratic evaluator.
    pub noise_floor: f64,
    /// Aggregator mixing weight w.
    pub mae_weight: f64,
    pub gain_fn: GainFnSpec,
    pub cost_per_agent: f64,
    pub fallback_loss: f64,
    /// Held-out evaluation set size for the regression evaluator.
    pub heldout_size: usize,
}

impl Default for GenSpec {
    fn default() -> Self {
        // Small, noisy local datasets with moderately reliable links: local
        // losses are large relative to pooled losses, so minimal prices stay
        // low and a few clusters are genuinely profitable.
        GenSpec {
            evaluator: EvaluatorKind::Quadratic,
            data_size_range: (1, 8),
            reliability_range: (0.5, 0.95),
            noise: 2.5,
            noise_floor: 0.02,
            mae_weight: 0.5,
            gain_fn: GainFnSpec::Linear { alpha: 1.0 },
            cost_per_agent: 0.01,
            fallback_loss: 2.0,
            heldout_size: 256,
        }
    }
}

const FIT_RETRIES: usize = 3;

/// Generates a scenario deterministically from the seed.
///
/// Draw order: data sizes, then reliabilities, then mode-specific content
/// (truth model, curvature or held-out set, aggregator model, per-agent
/// models in index order).
pub fn generate_scenario(n: usize, dim: usize, seed: u64, spec: &GenSpec) -> Result<Scenario> {
    if n == 0 {
        return Err(Error::Contract("need at least one agent".into()));
    }
    if dim == 0 {
        return Err(Error::Contract("model dimension must be >= 1".into()));
    }
    let (m_lo, m_hi) = spec.data_size_range;
    if m_lo < 1 || m_lo > m_hi {
        return Err(Error::Contract("bad data size range".into()));
    }
    let (p_lo, p_hi) = spec.reliability_range;
    if !(0.0..=1.0).contains(&p_lo) || !(0.0..=1.0).contains(&p_hi) || p_lo > p_hi {
        return Err(Error::Contract("bad reliability range".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data_sizes: Vec<u64> = (0..n).map(|_| rng.random_range(m_lo..=m_hi)).collect();
    let reliabilities: Vec<f64> = (0..n).map(|_| rng.random_range(p_lo..=p_hi)).collect();

    let (evaluator, mae_theta, thetas) = match spec.evaluator {
        EvaluatorKind::Quadratic => {
            let target = ModelParams(normal_vec(&mut rng, dim));
            let g: Vec<Vec<f64>> = (0..dim).map(|_| normal_vec(&mut rng, dim)).collect();
            let mut curvature = vec![vec![0.0; dim]; dim];
            for i in 0..dim {
                for j in 0..dim {
                    let mut acc = 0.0;
                    for row in &g {
                        acc += row[i] * row[j];
                    }
                    curvature[i][j] = acc / dim as f64;
                }
            }
            let mae_theta = perturbed(&mut rng, &target, spec.noise);
            let thetas: Vec<ModelParams> = data_sizes
                .iter()
                .map(|&m| perturbed(&mut rng, &target, spec.noise / (m as f64).sqrt()))
                .collect();
            (
                LossEvaluator::Quadratic {
                    target,
                    curvature,
                    noise_floor: spec.noise_floor,
                },
                mae_theta,
                thetas,
            )
        }
        EvaluatorKind::Regression => {
            let truth = normal_vec(&mut rng, dim);
            let mut features = Vec::with_capacity(spec.heldout_size);
            let mut labels = Vec::with_capacity(spec.heldout_size);
            if spec.heldout_size == 0 {
                return Err(Error::Contract("held-out set must be non-empty".into()));
            }
            for _ in 0..spec.heldout_size {
                let x = normal_vec(&mut rng, dim);
                let y = dot(&x, &truth) + spec.noise * normal(&mut rng);
                features.push(x);
                labels.push(y);
            }
            let mae_samples = (4 * dim).max(16);
            let mae_theta =
                ModelParams(fit_with_retries(&mut rng, &truth, dim, mae_samples, spec.noise)?);
            let mut thetas = Vec::with_capacity(n);
            for &m in &data_sizes {
                thetas.push(ModelParams(fit_with_retries(
                    &mut rng,
                    &truth,
                    dim,
                    m as usize,
                    spec.noise,
                )?));
            }
            (
                LossEvaluator::Regression { features, labels },
                mae_theta,
                thetas,
            )
        }
    };

    let agents: Vec<AgentProfile> = (0..n)
        .map(|i| AgentProfile {
            data_size: data_sizes[i],
            reliability: reliabilities[i],
            local_loss: evaluator.evaluate(&thetas[i]),
            theta: thetas[i].clone(),
        })
        .collect();

    let scenario = Scenario {
        n,
        dim,
        agents,
        evaluator,
        mae: MaeModel {
            theta: mae_theta,
            w: spec.mae_weight,
        },
        gain_fn: spec.gain_fn.clone(),
        cost_per_agent: spec.cost_per_agent,
        fallback_loss: spec.fallback_loss,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Data-size-weighted average of the received members' parameters; falls
/// back to the aggregator's own model when nothing in `s` was received.
pub fn aggregate(s: &Coalition, x: &ReceptionVector, scenario: &Scenario) -> ModelParams {
    debug_assert!(!s.is_empty(), "aggregate needs a non-empty coalition");
    let mut num = vec![0.0; scenario.dim];
    let mut den = 0.0;
    for i in s.members() {
        if x.received(i) {
            let w = scenario.agents[i].data_size as f64;
            den += w;
            for (acc, t) in num.iter_mut().zip(&scenario.agents[i].theta.0) {
                *acc += w * t;
            }
        }
    }
    if den == 0.0 {
        return scenario.mae.theta.clone();
    }
    ModelParams(num.into_iter().map(|v| v / den).collect())
}

/// Probability of reception vector `x` restricted to the members of `s`.
pub fn reception_probability(s: &Coalition, x: &ReceptionVector, scenario: &Scenario) -> f64 {
    let mut p = 1.0;
    for i in s.members() {
        let pi = scenario.agents[i].reliability;
        p *= if x.received(i) { pi } else { 1.0 - pi };
    }
    p
}

/// Exact expected loss of the cluster `s`: enumeration over all `2^|S|`
/// reception vectors, with the all-zeros vector charging `fallback_loss`.
pub fn expected_loss(s: &Coalition, scenario: &Scenario) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::Contract("expected_loss needs a non-empty coalition".into()));
    }
    let mut total = 0.0;
    for x in enumerate_receptions(s)? {
        let w = reception_probability(s, &x, scenario);
        let loss = if x.mask() == 0 {
            scenario.fallback_loss
        } else {
            scenario.evaluator.evaluate(&aggregate(s, &x, scenario))
        };
        total += w * loss;
    }
    Ok(total)
}

/// Federation aggregation: `w·θ_mae + (1-w)·aggregate(N, x)`.
pub fn mae_aggregate(x: &ReceptionVector, scenario: &Scenario) -> ModelParams {
    let all = scenario.all_agents();
    let agg = aggregate(&all, x, scenario);
    let w = scenario.mae.w;
    ModelParams(
        scenario
            .mae
            .theta
            .0
            .iter()
            .zip(&agg.0)
            .map(|(mae, a)| w * mae + (1.0 - w) * a)
            .collect(),
    )
}

/// Expected federation parameters `w·θ_mae + (1-w)·E_x[aggregate(N, x)]`,
/// exact over all `2^n` reception vectors.
pub fn expected_mae_params(scenario: &Scenario) -> Result<ModelParams> {
    let all = scenario.all_agents();
    if all.size() > SUBSET_CAP {
        return Err(Error::capacity("reception enumeration", SUBSET_CAP, all.size()));
    }
    let mut avg = vec![0.0; scenario.dim];
    for x in enumerate_receptions(&all)? {
        let w = reception_probability(&all, &x, scenario);
        let agg = aggregate(&all, &x, scenario);
        for (acc, v) in avg.iter_mut().zip(&agg.0) {
            *acc += w * v;
        }
    }
    let w = scenario.mae.w;
    Ok(ModelParams(
        scenario
            .mae
            .theta
            .0
            .iter()
            .zip(&avg)
            .map(|(mae, a)| w * mae + (1.0 - w) * a)
            .collect(),
    ))
}

/// Exact expected loss of the federation parameters, `E_x[L(θ_F(x))]`.
///
/// Together with [`expected_mae_params`] this makes the Jensen lower bound
/// testable: for a convex evaluator the value here is at least
/// `L(expected_mae_params)`.
pub fn expected_federation_loss(scenario: &Scenario) -> Result<f64> {
    let all = scenario.all_agents();
    let mut total = 0.0;
    for x in enumerate_receptions(&all)? {
        let w = reception_probability(&all, &x, scenario);
        total += w * scenario.evaluator.evaluate(&mae_aggregate(&x, scenario));
    }
    Ok(total)
}

/// Tally of one modeling inequality across reception vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityStats {
    pub checked: usize,
    pub satisfied: usize,
    /// Smallest observed `rhs - lhs`; infinity when nothing was checked.
    pub min_margin: f64,
}

impl InequalityStats {
    fn new() -> Self {
        InequalityStats {
            checked: 0,
            satisfied: 0,
            min_margin: f64::INFINITY,
        }
    }

    fn record(&mut self, margin: f64) {
        self.checked += 1;
        if margin >= -1e-12 {
            self.satisfied += 1;
        }
        if margin < self.min_margin {
            self.min_margin = margin;
        }
    }

    pub fn fraction_satisfied(&self) -> f64 {
        if self.checked == 0 {
            1.0
        } else {
            self.satisfied as f64 / self.checked as f64
        }
    }
}

/// Report on the merging-reduces-loss modeling assumptions. These are
/// diagnostics only; violations are reported, never asserted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeDiagnostics {
    /// Pooled-cluster loss vs. the average of received members' local
    /// losses, tallied over S, T, and S∪T.
    pub pooled_vs_average: InequalityStats,
    /// Merged-cluster loss vs. the reception-weighted mixture of the two
    /// clusters' losses.
    pub merge_vs_mixture: InequalityStats,
}

/// Evaluates both merge inequalities for every reception vector over `S∪T`.
/// Vectors with no received agent on a side are skipped for the checks that
/// need that side.
pub fn loss_merge_diagnostics(
    s: &Coalition,
    t: &Coalition,
    scenario: &Scenario,
) -> Result<MergeDiagnostics> {
    if s.is_empty() || t.is_empty() {
        return Err(Error::Contract("merge diagnostics need non-empty clusters".into()));
    }
    if !s.is_disjoint(t) {
        return Err(Error::Contract("merge diagnostics need disjoint clusters".into()));
    }
    let union = s.union(t);
    let mut pooled = InequalityStats::new();
    let mut merged = InequalityStats::new();
    for x in enumerate_receptions(&union)? {
        for cluster in [s, t, &union] {
            let k = x.count_in(cluster);
            if k == 0 {
                continue;
            }
            let lhs = scenario.evaluator.evaluate(&aggregate(cluster, &x, scenario));
            let avg: f64 = cluster
                .members()
                .filter(|&i| x.received(i))
                .map(|i| scenario.agents[i].local_loss)
                .sum::<f64>()
                / k as f64;
            pooled.record(avg - lhs);
        }
        let ks = x.count_in(s);
        let kt = x.count_in(t);
        if ks == 0 || kt == 0 {
            continue;
        }
        let ku = (ks + kt) as f64;
        let lhs = scenario.evaluator.evaluate(&aggregate(&union, &x, scenario));
        let rhs = (ks as f64 / ku) * scenario.evaluator.evaluate(&aggregate(s, &x, scenario))
            + (kt as f64 / ku) * scenario.evaluator.evaluate(&aggregate(t, &x, scenario));
        merged.record(rhs - lhs);
    }
    Ok(MergeDiagnostics {
        pooled_vs_average: pooled,
        merge_vs_mixture: merged,
    })
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn normal_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| normal(rng)).collect()
}

fn perturbed(rng: &mut ChaCha8Rng, base: &ModelParams, scale: f64) -> ModelParams {
    ModelParams(base.0.iter().map(|v| v + scale * normal(rng)).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least-squares fit of a fresh synthetic dataset, retrying with new data on
/// singular normal equations.
fn fit_with_retries(
    rng: &mut ChaCha8Rng,
    truth: &[f64],
    dim: usize,
    samples: usize,
    noise: f64,
) -> Result<Vec<f64>> {
    for _ in 0..=FIT_RETRIES {
        let xs: Vec<Vec<f64>> = (0..samples).map(|_| normal_vec(rng, dim)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| dot(x, truth) + noise * normal(rng))
            .collect();
        if let Some(theta) = least_squares(&xs, &ys, dim) {
            return Ok(theta);
        }
    }
    Err(Error::Generation(format!(
        "normal equations stayed singular after {FIT_RETRIES} retries \
         ({samples} samples, dim {dim})"
    )))
}

/// Solves `XᵀX θ = Xᵀy`; `None` when the system is singular.
fn least_squares(xs: &[Vec<f64>], ys: &[f64], dim: usize) -> Option<Vec<f64>> {
    let mut gram = vec![vec![0.0; dim]; dim];
    let mut rhs = vec![0.0; dim];
    for (x, &y) in xs.iter().zip(ys) {
        for i in 0..dim {
            rhs[i] += x[i] * y;
            for j in 0..dim {
                gram[i][j] += x[i] * x[j];
            }
        }
    }
    solve_linear(&mut gram, &mut rhs)
}

/// Gaussian elimination with partial pivoting; `None` on a singular matrix.
fn solve_linear(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-10 * scale {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// Smallest eigenvalue of a symmetric matrix via cyclic Jacobi rotations.
fn sym_min_eigenvalue(h: &[Vec<f64>]) -> f64 {
    let m = h.len();
    if m == 0 {
        return 0.0;
    }
    if m == 1 {
        return h[0][0];
    }
    let mut a: Vec<Vec<f64>> = h.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    for _sweep in 0..64 {
        let mut off = 0.0;
        let (mut p, mut q) = (0, 1);
        for i in 0..m {
            for j in i + 1..m {
                if a[i][j].abs() > off {
                    off = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        for k in 0..m {
            let akp = a[k][p];
            let akq = a[k][q];
            a[k][p] = c * akp - s * akq;
            a[k][q] = s * akp + c * akq;
        }
        for k in 0..m {
            let apk = a[p][k];
            let aqk = a[q][k];
            a[p][k] = c * apk - s * aqk;
            a[q][k] = s * apk + c * aqk;
        }
    }
    (0..m).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}
