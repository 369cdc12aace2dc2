//! Dense two-phase simplex for the small linear programs produced by the
//! stable-set searches.
//!
//! Problems are `max c·x` subject to `A x <= b` with all variables free.
//! Free variables are handled by the classic `x = x⁺ − x⁻` split; rows with a
//! negative bound get an artificial variable and a phase-1 solve. Pivoting
//! starts with Dantzig's rule and falls back to Bland's rule after a fixed
//! number of iterations, so every solve terminates and identical inputs give
//! identical outputs.
//!
//! Tolerances are centralized: feasibility and optimality at 1e-9, the
//! duality-gap certificate at 1e-8.

use crate::error::{Error, Result};

/// Absolute feasibility / optimality tolerance.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Absolute tolerance for the duality-gap certificate.
pub const CERTIFICATE_TOL: f64 = 1e-8;

const PIVOT_EPS: f64 = 1e-9;

/// `max objective·x` subject to `rows[i].coeffs · x <= rows[i].bound`,
/// all variables free.
#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
}

/// One inequality `coeffs · x <= bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

impl LpProblem {
    fn validate(&self) -> Result<()> {
        if self.num_vars == 0 {
            return Err(Error::Contract("LP must have at least one variable".into()));
        }
        if self.objective.len() != self.num_vars {
            return Err(Error::Contract(format!(
                "objective has {} coefficients, expected {}",
                self.objective.len(),
                self.num_vars
            )));
        }
        if !self.objective.iter().all(|c| c.is_finite()) {
            return Err(Error::Contract("objective has non-finite coefficient".into()));
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != self.num_vars {
                return Err(Error::Contract(format!(
                    "row {k} has {} coefficients, expected {}",
                    row.coeffs.len(),
                    self.num_vars
                )));
            }
            if !row.coeffs.iter().all(|c| c.is_finite()) || !row.bound.is_finite() {
                return Err(Error::Contract(format!("row {k} has non-finite data")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

/// Solver output. `dual` carries one multiplier per row and acts as the
/// optimality certificate checked by [`verify`].
#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub dual: Option<Vec<f64>>,
}

impl LpSolution {
    fn of_status(status: LpStatus) -> Self {
        LpSolution {
            status,
            x: None,
            objective: None,
            dual: None,
        }
    }
}

enum LoopOutcome {
    Optimal,
    Unbounded,
}

/// Dense simplex tableau over columns `[x⁺ | x⁻ | slacks | artificials]`.
struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    value: f64,
    cols: usize,
    dantzig_budget: usize,
    iterations: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let pivot = self.rows[r][c];
        debug_assert!(pivot.abs() > PIVOT_EPS / 10.0, "pivot too small");
        let inv = 1.0 / pivot;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][c];
            if factor != 0.0 {
                for (v, pr) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= factor * pr;
                }
                self.rows[i][c] = 0.0;
                self.rhs[i] -= factor * pivot_rhs;
            }
        }
        let rc = self.reduced[c];
        if rc != 0.0 {
            for (v, pr) in self.reduced.iter_mut().zip(&pivot_row) {
                *v -= rc * pr;
            }
            self.reduced[c] = 0.0;
            self.value += rc * pivot_rhs;
        }
        self.basis[r] = c;
    }

    /// Runs pivots until optimality or an unbounded ray.
    fn run(&mut self) -> Result<LoopOutcome> {
        let iter_cap = 20_000 + 100 * (self.rows.len() + self.cols);
        loop {
            self.iterations += 1;
            if self.iterations > iter_cap {
                return Err(Error::Solver("pivot iteration cap exceeded".into()));
            }
            let entering = if self.iterations <= self.dantzig_budget {
                // Dantzig: most positive reduced cost, smallest index on ties.
                let mut best: Option<(usize, f64)> = None;
                for (j, &rc) in self.reduced.iter().enumerate().take(self.cols) {
                    if rc > PIVOT_EPS && best.map_or(true, |(_, b)| rc > b) {
                        best = Some((j, rc));
                    }
                }
                best.map(|(j, _)| j)
            } else {
                // Bland: smallest index with positive reduced cost.
                (0..self.cols).find(|&j| self.reduced[j] > PIVOT_EPS)
            };
            let Some(c) = entering else {
                return Ok(LoopOutcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs[i] / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-12
                                || ((ratio - lr).abs() <= 1e-12 && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(LoopOutcome::Unbounded);
            };
            self.pivot(r, c);
        }
    }
}

/// Solves the LP. Returns a vertex optimum with duals on success; statuses
/// `Infeasible` / `Unbounded` otherwise. Deterministic for identical input.
pub fn solve(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let n0 = p.num_vars;
    let ns = 2 * n0;
    let m = p.rows.len();
    let flipped: Vec<bool> = p.rows.iter().map(|r| r.bound < 0.0).collect();
    let art_rows: Vec<usize> = (0..m).filter(|&i| flipped[i]).collect();
    let num_art = art_rows.len();
    let cols = ns + m + num_art;

    let mut rows = vec![vec![0.0; cols]; m];
    let mut rhs = vec![0.0; m];
    let mut basis = vec![0usize; m];
    for i in 0..m {
        let sign = if flipped[i] { -1.0 } else { 1.0 };
        for j in 0..n0 {
            let a = sign * p.rows[i].coeffs[j];
            rows[i][j] = a;
            rows[i][n0 + j] = -a;
        }
        rows[i][ns + i] = sign;
        rhs[i] = sign * p.rows[i].bound;
        basis[i] = ns + i;
    }
    for (k, &i) in art_rows.iter().enumerate() {
        rows[i][ns + m + k] = 1.0;
        basis[i] = ns + m + k;
    }

    let mut tab = Tableau {
        rows,
        rhs,
        basis,
        reduced: vec![0.0; cols],
        value: 0.0,
        cols,
        dantzig_budget: 100 + 5 * (m + cols),
        iterations: 0,
    };

    if num_art > 0 {
        // Phase 1: maximize -(sum of artificials). Basic artificials make the
        // initial reduced costs the column sums over artificial rows.
        for j in 0..cols {
            let mut r = 0.0;
            for &i in &art_rows {
                r += tab.rows[i][j];
            }
            if j >= ns + m {
                r -= 1.0;
            }
            tab.reduced[j] = r;
        }
        tab.value = -art_rows.iter().map(|&i| tab.rhs[i]).sum::<f64>();
        match tab.run()? {
            LoopOutcome::Optimal => {}
            LoopOutcome::Unbounded => {
                return Err(Error::Solver("phase-1 objective unbounded".into()));
            }
        }
        if tab.value < -FEASIBILITY_TOL {
            return Ok(LpSolution::of_status(LpStatus::Infeasible));
        }
        // Drive any artificial still basic (at value zero) out of the basis.
        // Rows always carry their own slack, so the equation system has full
        // row rank and a non-artificial pivot must exist.
        for r in 0..m {
            if tab.basis[r] >= ns + m {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..ns + m {
                    let a = tab.rows[r][j].abs();
                    if a > PIVOT_EPS && best.map_or(true, |(_, b)| a > b) {
                        best = Some((j, a));
                    }
                }
                match best {
                    Some((j, _)) => tab.pivot(r, j),
                    None => {
                        return Err(Error::Solver(
                            "numerically degenerate basis after phase 1".into(),
                        ))
                    }
                }
            }
        }
        for row in &mut tab.rows {
            row.truncate(ns + m);
        }
        tab.cols = ns + m;
        tab.iterations = 0;
    }

    // Phase 2 objective over the split columns.
    let mut cost = vec![0.0; tab.cols];
    for j in 0..n0 {
        cost[j] = p.objective[j];
        cost[n0 + j] = -p.objective[j];
    }
    tab.reduced.truncate(tab.cols);
    for j in 0..tab.cols {
        let mut r = cost[j];
        for i in 0..m {
            let cb = cost[tab.basis[i]];
            if cb != 0.0 {
                r -= cb * tab.rows[i][j];
            }
        }
        tab.reduced[j] = r;
    }
    tab.value = (0..m).map(|i| cost[tab.basis[i]] * tab.rhs[i]).sum();

    match tab.run()? {
        LoopOutcome::Optimal => {}
        LoopOutcome::Unbounded => return Ok(LpSolution::of_status(LpStatus::Unbounded)),
    }

    let mut split = vec![0.0; ns];
    for i in 0..m {
        if tab.basis[i] < ns {
            split[tab.basis[i]] = tab.rhs[i];
        }
    }
    let x: Vec<f64> = (0..n0).map(|j| split[j] - split[n0 + j]).collect();
    let objective: f64 = x.iter().zip(&p.objective).map(|(a, b)| a * b).sum();
    let dual: Vec<f64> = (0..m).map(|i| -tab.reduced[ns + i]).collect();

    Ok(LpSolution {
        status: LpStatus::Optimal,
        x: Some(x),
        objective: Some(objective),
        dual: Some(dual),
    })
}

/// Checks an optimal solution against its problem: primal feasibility,
/// objective consistency, dual feasibility, and the duality gap.
pub fn verify(p: &LpProblem, s: &LpSolution) -> bool {
    if s.status != LpStatus::Optimal {
        return false;
    }
    let (Some(x), Some(objective), Some(y)) = (&s.x, s.objective, &s.dual) else {
        return false;
    };
    if x.len() != p.num_vars || y.len() != p.rows.len() {
        return false;
    }
    if !x.iter().all(|v| v.is_finite()) || !y.iter().all(|v| v.is_finite()) {
        return false;
    }
    for row in &p.rows {
        let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        if lhs > row.bound + FEASIBILITY_TOL {
            return false;
        }
    }
    let cx: f64 = p.objective.iter().zip(x).map(|(c, v)| c * v).sum();
    if (cx - objective).abs() > FEASIBILITY_TOL {
        return false;
    }
    // Dual feasibility: y >= 0 and Aᵀy = c (free primal variables force
    // equality).
    if y.iter().any(|&v| v < -FEASIBILITY_TOL) {
        return false;
    }
    for j in 0..p.num_vars {
        let aty: f64 = p.rows.iter().zip(y).map(|(row, v)| row.coeffs[j] * v).sum();
        if (aty - p.objective[j]).abs() > CERTIFICATE_TOL {
            return false;
        }
    }
    let by: f64 = p.rows.iter().zip(y).map(|(row, v)| row.bound * v).sum();
    (by - cx).abs() <= CERTIFICATE_TOL
}

/// Renders the problem in free MPS form (`OBJSENSE MAX`, `L` rows, all
/// variables free) for cross-checking with third-party solvers.
pub fn to_mps(p: &LpProblem, name: &str, var_names: &[String], row_names: &[String]) -> String {
    assert_eq!(var_names.len(), p.num_vars);
    assert_eq!(row_names.len(), p.rows.len());
    let mut out = String::new();
    out.push_str(&format!("NAME {name}\n"));
    out.push_str("OBJSENSE\n    MAX\nROWS\n N  OBJ\n");
    for rn in row_names {
        out.push_str(&format!(" L  {rn}\n"));
    }
    out.push_str("COLUMNS\n");
    for (j, vn) in var_names.iter().enumerate() {
        out.push_str(&format!("    {vn}  OBJ  {}\n", p.objective[j]));
        for (i, row) in p.rows.iter().enumerate() {
            if row.coeffs[j] != 0.0 {
                out.push_str(&format!("    {vn}  {}  {}\n", row_names[i], row.coeffs[j]));
            }
        }
    }
    out.push_str("RHS\n");
    for (i, row) in p.rows.iter().enumerate() {
        out.push_str(&format!("    RHS  {}  {}\n", row_names[i], row.bound));
    }
    out.push_str("BOUNDS\n");
    for vn in var_names {
        out.push_str(&format!(" FR  BND  {vn}\n"));
    }
    out.push_str("ENDATA\n");
    out
}

/// Parses the MPS subset produced by [`to_mps`]. Returns the problem plus
/// variable and row names in declaration order.
pub fn parse_mps(text: &str) -> Result<(LpProblem, Vec<String>, Vec<String>)> {
    #[derive(PartialEq)]
    enum Section {
        None,
        ObjSense,
        Rows,
        Columns,
        Rhs,
        Bounds,
        Done,
    }
    let mut section = Section::None;
    let mut row_names: Vec<String> = Vec::new();
    let mut var_names: Vec<String> = Vec::new();
    let mut obj_coeffs: Vec<f64> = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new(); // per var: (row, coef)
    let mut rhs: Vec<f64> = Vec::new();
    let mut free: Vec<bool> = Vec::new();
    let mut sense_max = false;

    let row_index = |names: &[String], name: &str| -> Result<usize> {
        names
            .iter()
            .position(|r| r == name)
            .ok_or_else(|| Error::Parse(format!("unknown row {name}")))
    };
    let var_index = |names: &[String], name: &str| -> Result<usize> {
        names
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::Parse(format!("unknown variable {name}")))
    };
    let parse_num = |tok: &str| -> Result<f64> {
        tok.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad number {tok}")))
    };

    for raw in text.lines() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let starts_section = !raw.starts_with(' ');
        if starts_section {
            section = match toks[0] {
                "NAME" => Section::None,
                "OBJSENSE" => Section::ObjSense,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                other => return Err(Error::Parse(format!("unknown section {other}"))),
            };
            continue;
        }
        match section {
            Section::ObjSense => {
                sense_max = match toks[0] {
                    "MAX" | "MAXIMIZE" => true,
                    other => return Err(Error::Parse(format!("unsupported objective sense {other}"))),
                };
            }
            Section::Rows => {
                let [kind, name] = toks[..] else {
                    return Err(Error::Parse(format!("malformed ROWS line: {line}")));
                };
                match kind {
                    "N" => {
                        if name != "OBJ" {
                            return Err(Error::Parse("objective row must be named OBJ".into()));
                        }
                    }
                    "L" => {
                        row_names.push(name.to_string());
                        rhs.push(0.0);
                    }
                    other => return Err(Error::Parse(format!("unsupported row type {other}"))),
                }
            }
            Section::Columns => {
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(Error::Parse(format!("malformed COLUMNS line: {line}")));
                }
                let var = toks[0];
                let j = match var_names.iter().position(|v| v == var) {
                    Some(j) => j,
                    None => {
                        var_names.push(var.to_string());
                        obj_coeffs.push(0.0);
                        entries.push(Vec::new());
                        free.push(false);
                        var_names.len() - 1
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let value = parse_num(pair[1])?;
                    if pair[0] == "OBJ" {
                        obj_coeffs[j] = value;
                    } else {
                        let r = row_index(&row_names, pair[0])?;
                        entries[j].push((r, value));
                    }
                }
            }
            Section::Rhs => {
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(Error::Parse(format!("malformed RHS line: {line}")));
                }
                for pair in toks[1..].chunks(2) {
                    let r = row_index(&row_names, pair[0])?;
                    rhs[r] = parse_num(pair[1])?;
                }
            }
            Section::Bounds => {
                let [kind, _set, name] = toks[..] else {
                    return Err(Error::Parse(format!("malformed BOUNDS line: {line}")));
                };
                if kind != "FR" {
                    return Err(Error::Parse(format!("unsupported bound type {kind}")));
                }
                let j = var_index(&var_names, name)?;
                free[j] = true;
            }
            Section::None | Section::Done => {
                return Err(Error::Parse(format!("unexpected data line: {line}")));
            }
        }
    }
    if !sense_max {
        return Err(Error::Parse("missing OBJSENSE MAX".into()));
    }
    if let Some(j) = free.iter().position(|&f| !f) {
        return Err(Error::Parse(format!(
            "variable {} lacks an FR bound (only free variables are supported)",
            var_names[j]
        )));
    }
    let num_vars = var_names.len();
    let mut rows: Vec<LpRow> = rhs
        .iter()
        .map(|&b| LpRow {
            coeffs: vec![0.0; num_vars],
            bound: b,
        })
        .collect();
    for (j, var_entries) in entries.iter().enumerate() {
        for &(r, v) in var_entries {
            rows[r].coeffs[j] = v;
        }
    }
    Ok((
        LpProblem {
            num_vars,
            objective: obj_coeffs,
            rows,
        },
        var_names,
        row_names,
    ))
}
