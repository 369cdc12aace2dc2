//! Implementations of the subcommands.

use std::collections::BTreeMap;
use std::path::Path;

use fedcoal_core::clustering::{optimal_clustering, Direction};
use fedcoal_core::combinatorics::Partition;
use fedcoal_core::dynamics::{partition_of, run_dynamics, Schedule, StrategyTuple};
use fedcoal_core::gains::{is_superadditive, GainReport};
use fedcoal_core::hedonic::{check_nash_stable, mapping_m, phi_from_v, AllocationTable, MutualGainVector};
use fedcoal_core::learning::{generate_scenario, GenSpec, Scenario};
use fedcoal_core::lp_solver::{self, LpStatus};
use fedcoal_core::stable_set::{
    build_c1, find_general_allocation, membership_check, solve_symmetric_lp, AllocationMethod,
    ConstraintMode, StableStatus, SYMMETRIC_LP_CAP,
};
use serde::Deserialize;

use crate::artifacts::*;
use crate::CliError;

/// Cap for the exhaustive oracle listing exposed on the command line.
pub const ORACLE_CLI_CAP: usize = 10;

pub fn cmd_gen(n: usize, dim: usize, seed: u64, spec: &GenSpec, out: &Path) -> Result<(), CliError> {
    let scenario = generate_scenario(n, dim, seed, spec)?;
    let mut text = serde_json::to_string_pretty(&scenario)
        .map_err(|e| CliError::Failure(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_text(out, &text)?;
    println!("{}  {}", sha256_hex(text.as_bytes()), out.display());
    Ok(())
}

fn report_of(scenario: &Scenario) -> Result<GainReport, CliError> {
    Ok(GainReport::from_scenario(scenario)?)
}

pub fn cmd_gains(input: &Path, out: &Path) -> Result<(), CliError> {
    let (scenario, hash) = read_scenario(input)?;
    let report = report_of(&scenario)?;
    let check = is_superadditive(&report)?;
    let coalitions: BTreeMap<String, GainCell> = (1u32..(1 << scenario.n))
        .map(|mask| {
            (
                mask.to_string(),
                GainCell {
                    u: report.u_by_mask(mask),
                    delta: report.delta_by_mask(mask),
                },
            )
        })
        .collect();
    let artifact = GainsArtifact {
        header: Header::new(&hash, scenario.seed),
        n: scenario.n,
        pi: report.prices().to_vec(),
        superadditive: check.holds,
        coalitions,
    };
    write_json(out, &artifact)
}

/// Solves the symmetric LP through its public pieces so the artifact can
/// carry the full certificate; results match `solve_symmetric_lp` exactly.
pub fn cmd_lp(input: &Path, out: &Path, mps: Option<&Path>) -> Result<(), CliError> {
    let (scenario, hash) = read_scenario(input)?;
    if scenario.n < 2 {
        return Err(CliError::Usage("lp needs a scenario with at least 2 agents".into()));
    }
    if scenario.n > SYMMETRIC_LP_CAP {
        return Err(CliError::Capacity(format!(
            "symmetric LP caps at {SYMMETRIC_LP_CAP} agents, scenario has {}",
            scenario.n
        )));
    }
    let report = report_of(&scenario)?;
    let system = build_c1(&report, ConstraintMode::Symmetric);
    if let Some(mps_path) = mps {
        write_text(mps_path, &system.to_mps())?;
    }
    let (lp, _, _) = system.to_lp_problem();
    let solution = lp_solver::solve(&lp)?;
    if solution.status != LpStatus::Optimal {
        return Err(CliError::Failure(format!(
            "symmetric LP ended {:?}, expected an optimum",
            solution.status
        )));
    }
    let certified = lp_solver::verify(&lp, &solution);
    let x = solution.x.as_ref().unwrap();
    let y = solution.dual.as_ref().unwrap();
    let cx = solution.objective.unwrap();
    let by: f64 = lp.rows.iter().zip(y).map(|(row, v)| row.bound * v).sum();

    let mut v = MutualGainVector::new(scenario.n)?;
    for (idx, var) in system.variables.iter().enumerate() {
        let fedcoal_core::stable_set::VarId::Pair { i, j } = var else {
            unreachable!("symmetric system has pair variables only")
        };
        v.set(*i, *j, x[idx]);
    }
    let phi = phi_from_v(&v)?;
    let stable = mapping_m(&phi)?;
    let certified_partition = stable
        .first()
        .ok_or_else(|| CliError::Failure("no stable partition for separable gains".into()))?
        .to_member_lists();

    let grand_mask = (1u32 << scenario.n) - 1;
    let artifact = LpArtifact {
        header: Header::new(&hash, scenario.seed),
        n: scenario.n,
        objective: cx,
        objective_bound: report.delta_by_mask(grand_mask) / 2.0,
        v: v.to_map(),
        dual: y.clone(),
        duality_gap: (by - cx).abs(),
        certified,
        certified_partition,
    };
    write_json(out, &artifact)
}

pub fn cmd_stable_set(input: &Path, out: &Path) -> Result<(), CliError> {
    let (scenario, hash) = read_scenario(input)?;
    let report = report_of(&scenario)?;
    let result = find_general_allocation(&report)?;
    match result.status {
        StableStatus::MemberFound => {
            let Some(AllocationMethod::General(table)) = &result.allocation else {
                return Err(CliError::Failure("search returned no allocation".into()));
            };
            let ok = membership_check(table, &report)?;
            let artifact = StableSetArtifact {
                header: Header::new(&hash, scenario.seed),
                n: scenario.n,
                status: "member_found".into(),
                objective: result.objective_value,
                phi: Some(table.to_map()),
                certified_partition: result
                    .certified_partition
                    .as_ref()
                    .map(Partition::to_member_lists),
                membership_check: Some(ok),
            };
            write_json(out, &artifact)
        }
        StableStatus::InfeasibleAtCap => {
            let artifact = StableSetArtifact {
                header: Header::new(&hash, scenario.seed),
                n: scenario.n,
                status: "infeasible_at_cap".into(),
                objective: None,
                phi: None,
                certified_partition: None,
                membership_check: None,
            };
            write_json(out, &artifact)?;
            Err(CliError::Infeasible(
                "no allocation satisfies budget balance and stability for any partition".into(),
            ))
        }
    }
}

fn lp_mutual_gains(scenario: &Scenario, report: &GainReport) -> Result<MutualGainVector, CliError> {
    if scenario.n < 2 {
        return Err(CliError::Usage(
            "this stage needs a scenario with at least 2 agents".into(),
        ));
    }
    let result = solve_symmetric_lp(report)?;
    match result.allocation {
        Some(AllocationMethod::Symmetric(v)) => Ok(v),
        _ => Err(CliError::Failure("symmetric LP returned no mutual gains".into())),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_dynamics(
    input: &Path,
    out: &Path,
    schedule: Schedule,
    start_random_seed: Option<u64>,
    max_steps: Option<usize>,
) -> Result<(), CliError> {
    let (scenario, hash) = read_scenario(input)?;
    let report = report_of(&scenario)?;
    let v = lp_mutual_gains(&scenario, &report)?;
    let n = scenario.n;
    let start = match start_random_seed {
        Some(seed) => StrategyTuple::random(n, seed),
        None => StrategyTuple::distinct(n),
    };
    let max_steps = max_steps.unwrap_or(10 * n * n * n);
    let trace = run_dynamics(&start, &v, schedule, max_steps)?;

    let mut text = String::new();
    let header = DynamicsHeader {
        header: Header::new(&hash, scenario.seed),
        schedule,
        start: start.as_slice().to_vec(),
        max_steps,
    };
    let err = |e| CliError::Failure(format!("serialization failed: {e}"));
    text.push_str(&serde_json::to_string(&header).map_err(err)?);
    text.push('\n');
    for step in &trace.steps {
        text.push_str(&serde_json::to_string(step).map_err(err)?);
        text.push('\n');
    }
    let footer = DynamicsFooter {
        terminal: trace.terminal.as_slice().to_vec(),
        converged: trace.converged,
        rounds: trace.rounds,
        final_potential: trace.final_potential(&v),
    };
    text.push_str(&serde_json::to_string(&footer).map_err(err)?);
    text.push('\n');
    write_text(out, &text)
}

#[derive(Deserialize)]
struct PhiFile {
    n: usize,
    phi: BTreeMap<String, f64>,
}

pub fn cmd_oracle(input: &Path, out: &Path, phi_path: Option<&Path>) -> Result<(), CliError> {
    let (scenario, hash) = read_scenario(input)?;
    if scenario.n > ORACLE_CLI_CAP {
        return Err(CliError::Capacity(format!(
            "oracle caps at {ORACLE_CLI_CAP} agents, scenario has {}",
            scenario.n
        )));
    }
    let (phi, phi_source) = match phi_path {
        Some(path) => {
            let file: PhiFile = read_json(path, "allocation")?;
            if file.n != scenario.n {
                return Err(CliError::Usage(format!(
                    "allocation is for {} agents, scenario has {}",
                    file.n, scenario.n
                )));
            }
            (AllocationTable::from_map(file.n, &file.phi)?, "file".to_string())
        }
        None if scenario.n == 1 => (AllocationTable::new(1)?, "symmetric_lp".to_string()),
        None => {
            let report = report_of(&scenario)?;
            let v = lp_mutual_gains(&scenario, &report)?;
            (phi_from_v(&v)?, "symmetric_lp".to_string())
        }
    };
    let stable = mapping_m(&phi)?;
    let artifact = OracleArtifact {
        header: Header::new(&hash, scenario.seed),
        n: scenario.n,
        phi_source,
        count: stable.len(),
        partitions: stable.iter().map(Partition::to_member_lists).collect(),
    };
    write_json(out, &artifact)
}

pub fn cmd_optimal(input: &Path, out: &Path, direction: Direction) -> Result<(), CliError> {
    let (scenario, hash) = read_scenario(input)?;
    let report = report_of(&scenario)?;
    let solution = optimal_clustering(&report, direction)?;
    let stable_annotation = if scenario.n == 1 {
        true
    } else {
        let v = lp_mutual_gains(&scenario, &report)?;
        check_nash_stable(&solution.partition, &phi_from_v(&v)?).is_stable()
    };
    let artifact = OptimalArtifact {
        header: Header::new(&hash, scenario.seed),
        n: scenario.n,
        direction,
        objective: solution.objective,
        partition: solution.partition.to_member_lists(),
        feasible_count: solution.feasible_count,
        nash_stable_under_lp_gains: stable_annotation,
    };
    write_json(out, &artifact)
}

pub fn cmd_report(dir: &Path, out: &Path, csv: Option<&Path>) -> Result<(), CliError> {
    let (scenario, hash) = read_scenario(&dir.join("scenario.json"))?;
    let gains: GainsArtifact = read_json(&dir.join("gains.json"), "gains")?;
    let lp: LpArtifact = read_json(&dir.join("lp.json"), "lp")?;
    let stable: StableSetArtifact = read_json(&dir.join("stable_set.json"), "stable-set")?;
    let dynamics = read_dynamics_trace(&dir.join("dynamics.jsonl"))?;
    let oracle: OracleArtifact = read_json(&dir.join("oracle.json"), "oracle")?;
    let optimal: OptimalArtifact = read_json(&dir.join("optimal.json"), "optimal")?;

    for (stage, stage_hash) in [
        ("gains", &gains.header.scenario_hash),
        ("lp", &lp.header.scenario_hash),
        ("stable-set", &stable.header.scenario_hash),
        ("dynamics", &dynamics.header.header.scenario_hash),
        ("oracle", &oracle.header.scenario_hash),
        ("optimal", &optimal.header.scenario_hash),
    ] {
        if stage_hash != &hash {
            return Err(CliError::Usage(format!(
                "stage {stage} was produced from a different scenario \
                 (hash {stage_hash} != {hash})"
            )));
        }
    }

    let grand_mask = ((1u64 << scenario.n) - 1).to_string();
    let delta_grand = gains
        .coalitions
        .get(&grand_mask)
        .map(|c| c.delta)
        .unwrap_or(0.0);
    let terminal_partition =
        partition_of(&StrategyTuple::new(dynamics.footer.terminal.clone())?);
    let terminal_lists = terminal_partition.to_member_lists();
    let consistency = Consistency {
        dynamics_terminal_in_oracle: oracle.partitions.contains(&terminal_lists),
        lp_objective_within_bound: lp.objective <= lp.objective_bound + 1e-9,
    };
    let artifact = ReportArtifact {
        header: Header::new(&hash, scenario.seed),
        stages: StageSummaries {
            gains: GainsSummary {
                n: gains.n,
                superadditive: gains.superadditive,
                delta_grand,
            },
            lp: LpSummary {
                objective: lp.objective,
                objective_bound: lp.objective_bound,
                duality_gap: lp.duality_gap,
                certified: lp.certified,
            },
            stable_set: StableSetSummary {
                status: stable.status.clone(),
                objective: stable.objective,
            },
            dynamics: DynamicsSummary {
                steps: dynamics.steps.len(),
                rounds: dynamics.footer.rounds,
                converged: dynamics.footer.converged,
                final_potential: dynamics.footer.final_potential,
            },
            oracle: OracleSummary {
                count: oracle.count,
            },
            optimal: OptimalSummary {
                direction: optimal.direction,
                objective: optimal.objective,
                feasible_count: optimal.feasible_count,
            },
        },
        consistency,
    };
    write_json(out, &artifact)?;

    let csv_path = csv
        .map(Path::to_path_buf)
        .unwrap_or_else(|| dir.join("potential.csv"));
    let mut writer = csv::Writer::from_path(&csv_path)
        .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", csv_path.display())))?;
    writer
        .write_record(["step", "deviator", "potential", "gain_delta"])
        .map_err(|e| CliError::Failure(e.to_string()))?;
    for step in &dynamics.steps {
        writer
            .write_record([
                step.step.to_string(),
                step.deviator.to_string(),
                step.potential_after.to_string(),
                (step.gain_after - step.gain_before).to_string(),
            ])
            .map_err(|e| CliError::Failure(e.to_string()))?;
    }
    writer.flush().map_err(|e| CliError::Failure(e.to_string()))?;
    Ok(())
}
