//! Artifact schemas and file I/O shared by the subcommands.
//!
//! Every stage output embeds `{tool_version, scenario_hash, seed}` so a
//! report is reproducible from its header alone. The scenario file itself is
//! the root artifact: it follows the fixed scenario schema (which already
//! carries the seed), and its SHA-256 content hash is what every downstream
//! artifact references.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fedcoal_core::clustering::Direction;
use fedcoal_core::dynamics::{Schedule, StepRecord};
use fedcoal_core::Scenario;

use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Header {
    pub tool_version: String,
    pub scenario_hash: String,
    pub seed: u64,
}

impl Header {
    pub fn new(scenario_hash: &str, seed: u64) -> Self {
        Header {
            tool_version: TOOL_VERSION.to_string(),
            scenario_hash: scenario_hash.to_string(),
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GainCell {
    pub u: f64,
    pub delta: f64,
}

/// `gains` output: prices plus the full per-coalition table keyed by decimal
/// bitmask.
#[derive(Debug, Serialize, Deserialize)]
pub struct GainsArtifact {
    #[serde(flatten)]
    pub header: Header,
    pub n: usize,
    pub pi: Vec<f64>,
    pub superadditive: bool,
    pub coalitions: BTreeMap<String, GainCell>,
}

/// `lp` output: optimal mutual gains with the optimality certificate.
#[derive(Debug, Serialize, Deserialize)]
pub struct LpArtifact {
    #[serde(flatten)]
    pub header: Header,
    pub n: usize,
    pub objective: f64,
    /// Upper bound `Δ(N)/2` on the objective.
    pub objective_bound: f64,
    pub v: BTreeMap<String, f64>,
    pub dual: Vec<f64>,
    pub duality_gap: f64,
    pub certified: bool,
    pub certified_partition: Vec<Vec<usize>>,
}

/// `stable-set` output.
#[derive(Debug, Serialize, Deserialize)]
pub struct StableSetArtifact {
    #[serde(flatten)]
    pub header: Header,
    pub n: usize,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certified_partition: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub membership_check: Option<bool>,
}

/// First line of the `dynamics` JSONL trace.
#[derive(Debug, Serialize, Deserialize)]
pub struct DynamicsHeader {
    #[serde(flatten)]
    pub header: Header,
    pub schedule: Schedule,
    pub start: Vec<usize>,
    pub max_steps: usize,
}

/// Last line of the `dynamics` JSONL trace.
#[derive(Debug, Serialize, Deserialize)]
pub struct DynamicsFooter {
    pub terminal: Vec<usize>,
    pub converged: bool,
    pub rounds: usize,
    pub final_potential: f64,
}

/// `oracle` output: every Nash-stable partition of the chosen allocation.
#[derive(Debug, Serialize, Deserialize)]
pub struct OracleArtifact {
    #[serde(flatten)]
    pub header: Header,
    pub n: usize,
    pub phi_source: String,
    pub count: usize,
    pub partitions: Vec<Vec<Vec<usize>>>,
}

/// `optimal` output.
#[derive(Debug, Serialize, Deserialize)]
pub struct OptimalArtifact {
    #[serde(flatten)]
    pub header: Header,
    pub n: usize,
    pub direction: Direction,
    pub objective: f64,
    pub partition: Vec<Vec<usize>>,
    pub feasible_count: usize,
    /// Stability of the returned partition under the symmetric-LP gains,
    /// reported as an annotation only.
    pub nash_stable_under_lp_gains: bool,
}

/// Merged summary emitted by `report`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ReportArtifact {
    #[serde(flatten)]
    pub header: Header,
    pub stages: StageSummaries,
    pub consistency: Consistency,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StageSummaries {
    pub gains: GainsSummary,
    pub lp: LpSummary,
    pub stable_set: StableSetSummary,
    pub dynamics: DynamicsSummary,
    pub oracle: OracleSummary,
    pub optimal: OptimalSummary,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GainsSummary {
    pub n: usize,
    pub superadditive: bool,
    pub delta_grand: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LpSummary {
    pub objective: f64,
    pub objective_bound: f64,
    pub duality_gap: f64,
    pub certified: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StableSetSummary {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DynamicsSummary {
    pub steps: usize,
    pub rounds: usize,
    pub converged: bool,
    pub final_potential: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OracleSummary {
    pub count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OptimalSummary {
    pub direction: Direction,
    pub objective: f64,
    pub feasible_count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Consistency {
    /// The dynamics terminal partition appears in the oracle listing.
    pub dynamics_terminal_in_oracle: bool,
    /// LP objective respects its `Δ(N)/2` bound.
    pub lp_objective_within_bound: bool,
}

/// Parsed `dynamics` trace.
pub struct DynamicsTraceFile {
    pub header: DynamicsHeader,
    pub steps: Vec<StepRecord>,
    pub footer: DynamicsFooter,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Loads and validates a scenario, returning it with its content hash.
pub fn read_scenario(path: &Path) -> Result<(Scenario, String), CliError> {
    let bytes = read_bytes(path)?;
    let scenario: Scenario = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Usage(format!("invalid scenario {}: {e}", path.display())))?;
    scenario
        .validate()
        .map_err(|e| CliError::Usage(format!("invalid scenario {}: {e}", path.display())))?;
    Ok((scenario, sha256_hex(&bytes)))
}

pub fn read_json<T: DeserializeOwned>(path: &Path, stage: &str) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(|_| {
        CliError::Usage(format!(
            "missing stage output: {stage} (expected {})",
            path.display()
        ))
    })?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Usage(format!("invalid {stage} artifact {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Failure(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))
}

/// Parses the three-part JSONL trace written by the `dynamics` command.
pub fn read_dynamics_trace(path: &Path) -> Result<DynamicsTraceFile, CliError> {
    let bytes = fs::read(path).map_err(|_| {
        CliError::Usage(format!(
            "missing stage output: dynamics (expected {})",
            path.display()
        ))
    })?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::Usage(format!("dynamics trace {} is not UTF-8", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let bad = |what: &str| CliError::Usage(format!("dynamics trace {}: {what}", path.display()));
    let header: DynamicsHeader = serde_json::from_str(lines.next().ok_or_else(|| bad("empty"))?)
        .map_err(|_| bad("malformed header line"))?;
    let rest: Vec<&str> = lines.collect();
    let (&footer_line, step_lines) = rest.split_last().ok_or_else(|| bad("missing footer"))?;
    let footer: DynamicsFooter =
        serde_json::from_str(footer_line).map_err(|_| bad("malformed footer line"))?;
    let steps: Vec<StepRecord> = step_lines
        .iter()
        .map(|l| serde_json::from_str(l).map_err(|_| bad("malformed step line")))
        .collect::<Result<_, _>>()?;
    Ok(DynamicsTraceFile {
        header,
        steps,
        footer,
    })
}
