//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Expected values come from independent oracles computed inside this file
//! (Bell triangle, Monte-Carlo estimation, recursive partition folds,
//! hand-constructed instances), never from the code paths under test.

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use fedcoal_core::combinatorics::{bell, enumerate_partitions, Coalition};
use fedcoal_core::dynamics::{
    partition_of, player_gain, potential, run_dynamics, Schedule, StrategyTuple,
};
use fedcoal_core::gains::{is_superadditive, GainReport};
use fedcoal_core::hedonic::{
    check_nash_stable, mapping_m, phi_from_v, MutualGainVector,
};
use fedcoal_core::learning::{
    expected_federation_loss, expected_loss, expected_mae_params, generate_scenario, GenSpec,
    Scenario,
};
use fedcoal_core::lp_solver;
use fedcoal_core::stable_set::{
    build_c1, find_general_allocation, membership_check, solve_symmetric_lp, AllocationMethod,
    ConstraintMode, StableStatus,
};
use fedcoal_core::clustering::{optimal_clustering, Direction};

fn random_v(rng: &mut ChaCha8Rng, n: usize) -> MutualGainVector {
    MutualGainVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0)).unwrap()
}

/// The 600 mutual-gain instances shared by criteria 3 and 4.
fn shared_instances() -> Vec<(usize, MutualGainVector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xFEDC0A1);
    let mut out = Vec::with_capacity(600);
    for n in 2..=7 {
        for _ in 0..100 {
            out.push((n, random_v(&mut rng, n)));
        }
    }
    out
}

fn random_report(rng: &mut ChaCha8Rng, n: usize) -> GainReport {
    let pi: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    let mut u = vec![0.0; 1 << n];
    for (i, &p) in pi.iter().enumerate() {
        u[1 << i] = p;
    }
    for mask in 1u32..(1 << n) {
        if mask.count_ones() >= 2 {
            let sum_pi: f64 = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| pi[i])
                .sum();
            u[mask as usize] = sum_pi + rng.random_range(-2.0..4.0);
        }
    }
    GainReport::from_raw(n, u, pi).unwrap()
}

#[test]
fn criterion_01_bell_count() {
    let start = Instant::now();
    let count = enumerate_partitions(10).unwrap().count();
    let elapsed = start.elapsed();
    assert_eq!(count, 115_975, "Bell(10) reproduction failed");
    assert_eq!(count as u64, bell(10));
    assert!(
        elapsed.as_secs_f64() < 5.0,
        "enumeration took {elapsed:?}, cap is 5 s"
    );
    println!("criterion 1 (Bell-count reproduction): PASS ({elapsed:?})");
}

#[test]
fn criterion_02_potential_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..1000 {
        let n = rng.random_range(2..=8);
        let v = random_v(&mut rng, n);
        let sigma =
            StrategyTuple::new((0..n).map(|_| rng.random_range(0..n)).collect()).unwrap();
        let agent = rng.random_range(0..n);
        let new_label = rng.random_range(0..n);
        let mut labels = sigma.as_slice().to_vec();
        labels[agent] = new_label;
        let sigma_prime = StrategyTuple::new(labels).unwrap();

        let dp = potential(&sigma_prime, &v) - potential(&sigma, &v);
        let dg = player_gain(agent, &sigma_prime, &v) - player_gain(agent, &sigma, &v);
        assert!(
            (dp - dg).abs() <= 1e-10,
            "potential identity failed on trial {trial}: dP = {dp}, dφ = {dg}"
        );
    }
    println!("criterion 2 (potential identity, 1000 quadruples): PASS");
}

#[test]
fn criterion_03_existence_of_stable_partitions() {
    for (idx, (_, v)) in shared_instances().iter().enumerate() {
        let phi = phi_from_v(v).unwrap();
        let stable = mapping_m(&phi).unwrap();
        assert!(!stable.is_empty(), "instance {idx} admits no stable partition");
    }
    println!("criterion 3 (existence over 600 instances): PASS");
}

#[test]
fn criterion_04_dynamics_soundness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (idx, (n, v)) in shared_instances().iter().enumerate() {
        let n = *n;
        let phi = phi_from_v(v).unwrap();
        let stable = mapping_m(&phi).unwrap();
        for _ in 0..3 {
            let start_tuple = StrategyTuple::random(n, rng.random());
            let trace =
                run_dynamics(&start_tuple, v, Schedule::RoundRobin, 10 * n * n * n).unwrap();
            assert!(trace.converged, "instance {idx} did not converge in 10n^3 steps");
            for step in &trace.steps {
                assert!(
                    step.potential_after > step.potential_before,
                    "potential not strictly increasing on instance {idx}"
                );
            }
            let terminal = partition_of(&trace.terminal);
            assert!(
                check_nash_stable(&terminal, &phi).is_stable(),
                "terminal partition unstable on instance {idx}"
            );
            assert!(
                stable.contains(&terminal),
                "terminal partition missing from oracle on instance {idx}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "dynamics suite took {elapsed:?}, cap is 60 s"
    );
    println!("criterion 4 (dynamics soundness, 1800 runs): PASS ({elapsed:?})");
}

#[test]
fn criterion_05_symmetric_lp_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..200usize {
        let n = 2 + (trial % 7); // cycles 2..=8
        let report = random_report(&mut rng, n);

        let result = solve_symmetric_lp(&report).unwrap();
        assert_eq!(result.status, StableStatus::MemberFound, "trial {trial}");
        let objective = result.objective_value.unwrap();

        // Independent solve of the same system for the certificate.
        let (lp, _, _) = build_c1(&report, ConstraintMode::Symmetric).to_lp_problem();
        let solution = lp_solver::solve(&lp).unwrap();
        assert_eq!(solution.status, lp_solver::LpStatus::Optimal, "trial {trial}");
        assert!(
            lp_solver::verify(&lp, &solution),
            "certificate failed on trial {trial}"
        );
        let x = solution.x.as_ref().unwrap();
        let y = solution.dual.as_ref().unwrap();
        let cx: f64 = lp.objective.iter().zip(x).map(|(c, v)| c * v).sum();
        let by: f64 = lp.rows.iter().zip(y).map(|(row, v)| row.bound * v).sum();
        assert!(
            (by - cx).abs() <= 1e-8,
            "duality gap {} on trial {trial}",
            (by - cx).abs()
        );
        assert!(
            (solution.objective.unwrap() - objective).abs() <= 1e-9,
            "two solve routes disagree on trial {trial}"
        );

        let grand = (1u32 << n) - 1;
        let bound = report.delta_by_mask(grand) / 2.0;
        assert!(
            objective <= bound + 1e-9,
            "objective {objective} exceeds bound {bound} on trial {trial}"
        );
        if n == 2 {
            assert!(
                (objective - bound).abs() <= 1e-9,
                "n=2 optimum {objective} != Δ/2 = {bound} on trial {trial}"
            );
        }
    }
    println!("criterion 5 (symmetric LP on 200 reports): PASS");
}

#[test]
fn criterion_06_general_search_pipeline() {
    let mut found = 0usize;
    let mut exhausted = 0usize;
    for trial in 0..50u64 {
        let n = 2 + (trial as usize % 5); // cycles 2..=6
        let scenario = generate_scenario(n, 2, 600 + trial, &GenSpec::default()).unwrap();
        let report = GainReport::from_scenario(&scenario).unwrap();
        let start = Instant::now();
        let result = find_general_allocation(&report).unwrap();
        let elapsed = start.elapsed();
        assert!(
            elapsed.as_secs_f64() < 30.0,
            "run {trial} took {elapsed:?}, cap is 30 s"
        );
        match result.status {
            StableStatus::MemberFound => {
                found += 1;
                let table = result.allocation.unwrap().as_table().unwrap();
                assert!(
                    membership_check(&table, &report).unwrap(),
                    "allocation fails membership on trial {trial}"
                );
            }
            StableStatus::InfeasibleAtCap => {
                exhausted += 1;
                assert!(result.allocation.is_none());
            }
        }
    }
    println!(
        "criterion 6 (general search on 50 scenarios): PASS \
         ({found} member_found, {exhausted} exhausted)"
    );
}

/// Monte-Carlo estimate of a cluster's expected loss: independent of the
/// exact enumeration path under test.
fn monte_carlo_loss(
    s: &Coalition,
    scenario: &Scenario,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let mut mask = 0u32;
        for i in s.members() {
            if rng.random_bool(scenario.agents[i].reliability) {
                mask |= 1 << i;
            }
        }
        let loss = if mask == 0 {
            scenario.fallback_loss
        } else {
            let x = fedcoal_core::ReceptionVector::from_mask(scenario.n, mask).unwrap();
            scenario
                .evaluator
                .evaluate(&fedcoal_core::learning::aggregate(s, &x, scenario))
        };
        sum += loss;
        sum_sq += loss * loss;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
    (mean, (var / samples as f64).sqrt())
}

#[test]
fn criterion_07_expected_loss_exactness_and_jensen() {
    // Monte-Carlo cross-check on coalitions of up to three agents.
    let spec = GenSpec::default();
    let mut checked = 0usize;
    for (n, seed) in [(1usize, 70u64), (2, 71), (3, 72)] {
        let scenario = generate_scenario(n, 2, seed, &spec).unwrap();
        for mask in 1u32..(1 << n) {
            let s = Coalition::from_mask(n, mask).unwrap();
            let exact = expected_loss(&s, &scenario).unwrap();
            let (mean, se) = monte_carlo_loss(&s, &scenario, 1_000_000, 7000 + mask as u64);
            assert!(
                (exact - mean).abs() <= 3.0 * se + 1e-12,
                "n={n} mask={mask}: exact {exact} vs MC {mean} ± {se}"
            );
            checked += 1;
        }
    }

    // Jensen bound: exact for the convex quadratic evaluator.
    let mut jensen = 0usize;
    for trial in 0..100u64 {
        let n = 2 + (trial as usize % 7); // cycles 2..=8
        let scenario = generate_scenario(n, 2, 7100 + trial, &spec).unwrap();
        let upper = expected_federation_loss(&scenario).unwrap();
        let lower = scenario
            .evaluator
            .evaluate(&expected_mae_params(&scenario).unwrap());
        assert!(
            upper >= lower - 1e-10,
            "Jensen violated on trial {trial}: E[L] = {upper} < L(E) = {lower}"
        );
        jensen += 1;
    }
    println!(
        "criterion 7 (expected-loss exactness): PASS \
         ({checked} Monte-Carlo checks, {jensen} Jensen checks)"
    );
}

#[test]
fn criterion_08_superadditive_grand_coalition() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..24usize {
        let n = 2 + (trial % 5); // cycles 2..=6
        // Dyadic construction keeps every downstream sum exact: target
        // mutual gains in {0, 1/8, …, 2}, prices in {0, …, 1}.
        let vbar =
            MutualGainVector::from_fn(n, |_, _| rng.random_range(0..=16) as f64 / 8.0).unwrap();
        let pi: Vec<f64> = (0..n).map(|_| rng.random_range(0..=8) as f64 / 8.0).collect();
        let mut u = vec![0.0; 1 << n];
        for (i, &p) in pi.iter().enumerate() {
            u[1 << i] = p;
        }
        for mask in 1u32..(1 << n) {
            if mask.count_ones() < 2 {
                continue;
            }
            let s = Coalition::from_mask(n, mask).unwrap();
            let sum_pi: f64 = s.members().map(|i| pi[i]).sum();
            let pair_sum: f64 = fedcoal_core::combinatorics::pairs_of(&s)
                .into_iter()
                .map(|(i, j)| vbar.get(i, j))
                .sum();
            u[mask as usize] = sum_pi + 2.0 * pair_sum;
        }
        let report = GainReport::from_raw(n, u, pi).unwrap();
        assert!(
            is_superadditive(&report).unwrap().holds,
            "construction not superadditive on trial {trial}"
        );

        let result = solve_symmetric_lp(&report).unwrap();
        let Some(AllocationMethod::Symmetric(vstar)) = result.allocation else {
            panic!("expected mutual gains on trial {trial}");
        };
        for (i, j, value) in vstar.pairs() {
            assert!(
                value >= 0.0,
                "v*({i},{j}) = {value} negative on trial {trial}"
            );
        }
        // Every agent is best off in the grand coalition, exactly.
        let phi = phi_from_v(&vstar).unwrap();
        let grand = Coalition::grand(n);
        for agent in 0..n {
            let top = phi.get(agent, &grand);
            for mask in 1u32..(1 << n) {
                if mask & (1 << agent) != 0 {
                    let s = Coalition::from_mask(n, mask).unwrap();
                    assert!(
                        top >= phi.get(agent, &s),
                        "phi_{agent}^N < phi_{agent}^{s} on trial {trial}"
                    );
                }
            }
        }
    }
    println!("criterion 8 (superadditive grand-coalition dominance, 24 instances): PASS");
}

/// Recursive set-partition fold, independent of the restricted-growth-string
/// enumerator: extends partitions one agent at a time.
fn fold_partitions<F: FnMut(&[Vec<usize>])>(n: usize, f: &mut F) {
    fn recurse<F: FnMut(&[Vec<usize>])>(n: usize, next: usize, blocks: &mut Vec<Vec<usize>>, f: &mut F) {
        if next == n {
            f(blocks);
            return;
        }
        for k in 0..blocks.len() {
            blocks[k].push(next);
            recurse(n, next + 1, blocks, f);
            blocks[k].pop();
        }
        blocks.push(vec![next]);
        recurse(n, next + 1, blocks, f);
        blocks.pop();
    }
    recurse(n, 0, &mut Vec::new(), f);
}

#[test]
fn criterion_09_optimal_clustering_matches_brute_force() {
    for trial in 0..50u64 {
        let n = 1 + (trial as usize % 6); // cycles 1..=6
        let scenario = generate_scenario(n, 2, 900 + trial, &GenSpec::default()).unwrap();
        let report = GainReport::from_scenario(&scenario).unwrap();

        // Independent fold: recompute feasibility and objective from the raw
        // u and pi tables over a recursively generated partition stream.
        let mut best_min = f64::INFINITY;
        let mut best_max = f64::NEG_INFINITY;
        let mut feasible = 0usize;
        fold_partitions(n, &mut |blocks| {
            let mut ok = true;
            let mut total = 0.0;
            for block in blocks {
                let mask: u32 = block.iter().map(|&i| 1u32 << i).sum();
                let paid: f64 = block.iter().map(|&i| report.pi(i)).sum();
                let gain = report.u_by_mask(mask);
                if paid > gain + 1e-9 {
                    ok = false;
                    break;
                }
                total += gain;
            }
            if ok {
                feasible += 1;
                if total < best_min {
                    best_min = total;
                }
                if total > best_max {
                    best_max = total;
                }
            }
        });

        let lo = optimal_clustering(&report, Direction::Min).unwrap();
        let hi = optimal_clustering(&report, Direction::Max).unwrap();
        assert_eq!(lo.objective, best_min, "min objective differs on trial {trial}");
        assert_eq!(hi.objective, best_max, "max objective differs on trial {trial}");
        assert_eq!(lo.feasible_count, feasible, "feasible count differs on trial {trial}");
        // Returned partition is itself feasible and achieves the objective.
        let recomputed: f64 = lo.partition.blocks().iter().map(|b| report.u(b)).sum();
        assert_eq!(recomputed, lo.objective);
        for block in lo.partition.blocks() {
            let paid: f64 = block.members().map(|i| report.pi(i)).sum();
            assert!(paid <= report.u(block) + 1e-9);
        }
    }
    println!("criterion 9 (optimal clustering vs brute force, 50 scenarios): PASS");
}
