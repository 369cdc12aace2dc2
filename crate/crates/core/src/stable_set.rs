//! The Nash-stable set: budget-balance constraints, per-partition stability
//! constraints, the general feasibility search, and the symmetric linear
//! program for additively separable preferences.
//!
//! Budget balance caps what a coalition can pay out by its marginal gain;
//! stability constraints pin a candidate partition as Nash-stable. The
//! general search discharges the existential over partitions by exhaustive
//! iteration, solving one LP per candidate partition and returning the first
//! feasible one. The symmetric program over mutual gains is always feasible
//! and its optimal value is bounded by `Δ(N)/2`.
//!
//! Own-singleton gains are pinned to zero, so they enter the systems as
//! constants rather than variables; every remaining table entry appears in
//! its coalition's budget row, which keeps each per-partition LP bounded.

use crate::combinatorics::{enumerate_partitions, Coalition, Partition, PARTITION_CAP};
use crate::error::{Error, Result};
use crate::gains::GainReport;
use crate::hedonic::{
    check_nash_stable_with_tol, phi_from_v, AllocationTable, MutualGainVector,
};
use crate::lp_solver::{self, LpProblem, LpRow, LpStatus};

/// Absolute tolerance for constraint satisfaction.
pub const CONSTRAINT_TOL: f64 = 1e-9;
/// Cap for the general per-partition search (`n·(2^(n-1)-1)` variables).
pub const GENERAL_SEARCH_CAP: usize = 8;
/// Cap for the symmetric LP (row count grows as `2^n`).
pub const SYMMETRIC_LP_CAP: usize = 10;

/// A symbolic LP variable: one allocation-table entry or one mutual gain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarId {
    /// `φ_i^S` for coalition mask `mask` containing `agent` (`|S| >= 2`).
    Phi { agent: usize, mask: u32 },
    /// `v(i,j)` with `i < j`.
    Pair { i: usize, j: usize },
}

impl VarId {
    pub fn name(&self) -> String {
        match self {
            VarId::Phi { agent, mask } => format!("phi_{agent}_{mask}"),
            VarId::Pair { i, j } => format!("v_{i}_{j}"),
        }
    }
}

/// One sparse inequality `coeffs · x <= bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRow {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub bound: f64,
}

/// A named system of inequalities over a declared variable list, plus an
/// objective to maximize.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSystem {
    pub name: String,
    pub variables: Vec<VarId>,
    pub rows: Vec<LinearRow>,
    pub objective: Vec<(usize, f64)>,
}

impl ConstraintSystem {
    /// Dense LP form plus variable and row names.
    pub fn to_lp_problem(&self) -> (LpProblem, Vec<String>, Vec<String>) {
        let num_vars = self.variables.len();
        let mut objective = vec![0.0; num_vars];
        for &(j, c) in &self.objective {
            objective[j] = c;
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut coeffs = vec![0.0; num_vars];
                for &(j, c) in &row.coeffs {
                    coeffs[j] += c;
                }
                LpRow {
                    coeffs,
                    bound: row.bound,
                }
            })
            .collect();
        let var_names = self.variables.iter().map(|v| v.name()).collect();
        let row_names = self.rows.iter().map(|r| r.name.clone()).collect();
        (
            LpProblem {
                num_vars,
                objective,
                rows,
            },
            var_names,
            row_names,
        )
    }

    /// Plain-text dump (free MPS) for offline cross-checking.
    pub fn to_mps(&self) -> String {
        let (lp, var_names, row_names) = self.to_lp_problem();
        lp_solver::to_mps(&lp, &self.name, &var_names, &row_names)
    }

    /// Concatenates the rows of `other` onto `self`. Both systems must
    /// declare the same variable list.
    pub fn stack(&self, other: &ConstraintSystem) -> Result<ConstraintSystem> {
        if self.variables != other.variables {
            return Err(Error::Contract(
                "cannot stack constraint systems over different variables".into(),
            ));
        }
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(ConstraintSystem {
            name: format!("{}+{}", self.name, other.name),
            variables: self.variables.clone(),
            rows,
            objective: self.objective.clone(),
        })
    }
}

/// Which allocation space a constraint system ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintMode {
    /// One variable per (agent, coalition) pair with `|S| >= 2`.
    General,
    /// One variable per unordered agent pair.
    Symmetric,
}

/// Lookup table for the general variable space over population `n`.
struct GeneralVars {
    n: usize,
    list: Vec<(usize, u32)>,
    index: Vec<usize>, // keyed by agent * 2^n + mask; usize::MAX when absent
}

impl GeneralVars {
    fn new(n: usize) -> Self {
        let size = 1usize << n;
        let mut list = Vec::new();
        let mut index = vec![usize::MAX; n * size];
        for agent in 0..n {
            for mask in 1u32..(1 << n) {
                if mask & (1 << agent) != 0 && mask.count_ones() >= 2 {
                    index[agent * size + mask as usize] = list.len();
                    list.push((agent, mask));
                }
            }
        }
        GeneralVars { n, list, index }
    }

    fn var(&self, agent: usize, mask: u32) -> usize {
        let idx = self.index[agent * (1 << self.n) + mask as usize];
        debug_assert_ne!(idx, usize::MAX, "not a declared variable");
        idx
    }

    fn as_var_ids(&self) -> Vec<VarId> {
        self.list
            .iter()
            .map(|&(agent, mask)| VarId::Phi { agent, mask })
            .collect()
    }
}

fn pair_vars(n: usize) -> Vec<VarId> {
    let mut vars = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            vars.push(VarId::Pair { i, j });
        }
    }
    vars
}

fn pair_var_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Budget-balance system: one row per coalition with two or more members.
///
/// General mode: `Σ_{i∈S} φ_i^S <= Δ(S)`. Symmetric mode:
/// `Σ_{(i,j)∈pairs(S)} v(i,j) <= Δ(S)/2` (the factor 2 comes from the
/// symmetry of mutual gains). Singleton rows are `0 <= 0` and omitted. The
/// objective maximizes the sum of all declared variables.
pub fn build_c1(report: &GainReport, mode: ConstraintMode) -> ConstraintSystem {
    let n = report.n();
    match mode {
        ConstraintMode::General => {
            let vars = GeneralVars::new(n);
            let mut rows = Vec::new();
            for mask in 1u32..(1 << n) {
                if mask.count_ones() < 2 {
                    continue;
                }
                let coeffs = (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| (vars.var(i, mask), 1.0))
                    .collect();
                rows.push(LinearRow {
                    name: format!("c1_{mask}"),
                    coeffs,
                    bound: report.delta_by_mask(mask),
                });
            }
            let variables = vars.as_var_ids();
            let objective = (0..variables.len()).map(|j| (j, 1.0)).collect();
            ConstraintSystem {
                name: format!("c1_general_n{n}"),
                variables,
                rows,
                objective,
            }
        }
        ConstraintMode::Symmetric => {
            let variables = pair_vars(n);
            let mut rows = Vec::new();
            for mask in 1u32..(1 << n) {
                if mask.count_ones() < 2 {
                    continue;
                }
                let s = Coalition::from_mask(n, mask).unwrap();
                let coeffs = crate::combinatorics::pairs_of(&s)
                    .into_iter()
                    .map(|(i, j)| (pair_var_index(n, i, j), 1.0))
                    .collect();
                rows.push(LinearRow {
                    name: format!("c1_{mask}"),
                    coeffs,
                    bound: report.delta_by_mask(mask) / 2.0,
                });
            }
            let objective = (0..variables.len()).map(|j| (j, 1.0)).collect();
            ConstraintSystem {
                name: format!("c1_symmetric_n{n}"),
                variables,
                rows,
                objective,
            }
        }
    }
}

/// Stability system for a fixed candidate partition, over the general
/// variable space: `φ_i^{T∪i} − φ_i^{S_Π(i)} <= 0` for every agent and every
/// deviation target `T ∈ Π ∪ {∅}` other than the agent's own block.
/// Own-singleton gains are the constant zero, so rows that reduce to
/// `0 <= 0` are omitted.
pub fn build_c2_for_partition(partition: &Partition) -> ConstraintSystem {
    let n = partition.n();
    let vars = GeneralVars::new(n);
    let mut rows = Vec::new();
    for i in 0..n {
        let home = partition.block_of(i);
        let home_term = (home.size() >= 2).then(|| (vars.var(i, home.mask()), -1.0));
        for block in partition.blocks() {
            if block.contains(i) {
                continue;
            }
            let target = block.with(i);
            let mut coeffs = vec![(vars.var(i, target.mask()), 1.0)];
            coeffs.extend(home_term);
            rows.push(LinearRow {
                name: format!("c2_{i}_{}", block.mask()),
                coeffs,
                bound: 0.0,
            });
        }
        // Going alone: −φ_i^{S_Π(i)} <= 0, vacuous for singleton blocks.
        if let Some(term) = home_term {
            rows.push(LinearRow {
                name: format!("c2_{i}_alone"),
                coeffs: vec![term],
                bound: 0.0,
            });
        }
    }
    ConstraintSystem {
        name: format!("c2_n{n}_{partition}"),
        variables: vars.as_var_ids(),
        rows,
        objective: Vec::new(),
    }
}

/// Search status for [`find_general_allocation`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StableStatus {
    MemberFound,
    InfeasibleAtCap,
}

/// The allocation that certified membership.
#[derive(Clone, Debug, PartialEq)]
pub enum AllocationMethod {
    General(AllocationTable),
    Symmetric(MutualGainVector),
}

impl AllocationMethod {
    /// View as a full allocation table (expanding mutual gains if needed).
    pub fn as_table(&self) -> Result<AllocationTable> {
        match self {
            AllocationMethod::General(t) => Ok(t.clone()),
            AllocationMethod::Symmetric(v) => phi_from_v(v),
        }
    }
}

/// Result of a stable-set membership search.
#[derive(Clone, Debug, PartialEq)]
pub struct StableSetResult {
    pub status: StableStatus,
    pub allocation: Option<AllocationMethod>,
    pub certified_partition: Option<Partition>,
    pub objective_value: Option<f64>,
}

/// Decides non-emptiness of the Nash-stable set by exhaustive partition
/// iteration: for each candidate partition, maximizes the total allocated
/// gain subject to budget balance plus that partition's stability rows, and
/// returns the first feasible optimum. The returned allocation is verified
/// stable before being reported.
pub fn find_general_allocation(report: &GainReport) -> Result<StableSetResult> {
    let n = report.n();
    if n > GENERAL_SEARCH_CAP {
        return Err(Error::capacity("general stable-set search", GENERAL_SEARCH_CAP, n));
    }
    if n == 1 {
        // κ = 1 and the only entry is the pinned own-singleton zero.
        return Ok(StableSetResult {
            status: StableStatus::MemberFound,
            allocation: Some(AllocationMethod::General(AllocationTable::new(1)?)),
            certified_partition: Some(Partition::grand(1)),
            objective_value: Some(0.0),
        });
    }
    let c1 = build_c1(report, ConstraintMode::General);
    for partition in enumerate_partitions(n)? {
        let c2 = build_c2_for_partition(&partition);
        let system = c1.stack(&c2)?;
        let (lp, _, _) = system.to_lp_problem();
        let solution = lp_solver::solve(&lp)?;
        match solution.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(Error::Solver(
                    "per-partition LP unbounded despite budget rows".into(),
                ))
            }
            LpStatus::Optimal => {
                let x = solution.x.as_ref().expect("optimal solution has a point");
                let vars = GeneralVars::new(n);
                let mut table = AllocationTable::new(n)?;
                for (idx, &(agent, mask)) in vars.list.iter().enumerate() {
                    let s = Coalition::from_mask(n, mask).unwrap();
                    table.set(agent, &s, x[idx])?;
                }
                let cert = check_nash_stable_with_tol(&partition, &table, CONSTRAINT_TOL);
                if !cert.is_stable() {
                    return Err(Error::Solver(format!(
                        "LP-feasible allocation failed stability verification at {partition}"
                    )));
                }
                return Ok(StableSetResult {
                    status: StableStatus::MemberFound,
                    allocation: Some(AllocationMethod::General(table)),
                    certified_partition: Some(partition),
                    objective_value: solution.objective,
                });
            }
        }
    }
    Ok(StableSetResult {
        status: StableStatus::InfeasibleAtCap,
        allocation: None,
        certified_partition: None,
        objective_value: None,
    })
}

/// Maximizes the total mutual gain subject to the symmetric budget rows.
/// Always feasible; the optimum is bounded by `Δ(N)/2`. The optimal mutual
/// gains always admit a Nash-stable partition, and the first one (in
/// enumeration order) is returned as the certificate.
pub fn solve_symmetric_lp(report: &GainReport) -> Result<StableSetResult> {
    let n = report.n();
    if n < 2 {
        return Err(Error::Contract("symmetric LP needs at least two agents".into()));
    }
    if n > SYMMETRIC_LP_CAP {
        return Err(Error::capacity("symmetric LP", SYMMETRIC_LP_CAP, n));
    }
    let c1 = build_c1(report, ConstraintMode::Symmetric);
    let (lp, _, _) = c1.to_lp_problem();
    let solution = lp_solver::solve(&lp)?;
    if solution.status != LpStatus::Optimal {
        return Err(Error::Solver(format!(
            "symmetric LP ended {:?}, expected an optimum",
            solution.status
        )));
    }
    let x = solution.x.as_ref().unwrap();
    let mut v = MutualGainVector::new(n)?;
    for (idx, var) in c1.variables.iter().enumerate() {
        let VarId::Pair { i, j } = var else {
            unreachable!("symmetric system declares pair variables only")
        };
        v.set(*i, *j, x[idx]);
    }
    let phi = phi_from_v(&v)?;
    let stable = crate::hedonic::mapping_m(&phi)?;
    let certified = stable.into_iter().next().ok_or_else(|| {
        Error::Solver("separable allocation unexpectedly admits no stable partition".into())
    })?;
    Ok(StableSetResult {
        status: StableStatus::MemberFound,
        allocation: Some(AllocationMethod::Symmetric(v)),
        certified_partition: Some(certified),
        objective_value: solution.objective,
    })
}

/// Membership test for an explicit allocation: every budget row holds within
/// tolerance and at least one partition is Nash-stable (within the same
/// tolerance, so LP vertex solutions are not rejected over roundoff).
pub fn membership_check(phi: &AllocationTable, report: &GainReport) -> Result<bool> {
    let n = report.n();
    if phi.n() != n {
        return Err(Error::Contract("allocation/report population mismatch".into()));
    }
    if n > PARTITION_CAP {
        return Err(Error::capacity("membership check", PARTITION_CAP, n));
    }
    for mask in 1u32..(1 << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        let s = Coalition::from_mask(n, mask).unwrap();
        let paid: f64 = s.members().map(|i| phi.get(i, &s)).sum();
        if paid > report.delta_by_mask(mask) + CONSTRAINT_TOL {
            return Ok(false);
        }
    }
    Ok(enumerate_partitions(n)?
        .any(|p| check_nash_stable_with_tol(&p, phi, CONSTRAINT_TOL).is_stable()))
}
