//! Exact-rational linear programming returning basic (vertex) optimal solutions.
//!
//! A problem has free variables, a minimisation objective and two-sided rows
//! `lower ≤ a·x ≤ upper` where either side may be absent. The solver runs a
//! two-phase tableau simplex under Bland's rule on the dual standard form
//!
//! ```text
//!     min  Σ −l_i α_i + Σ u_i β_i
//!     s.t. Σ a_i (α_i − β_i) = c,   α, β ≥ 0
//! ```
//!
//! so the tableau has one row per primal variable. A dual basis consists of
//! `n` columns, each naming a primal row at one of its bounds, which makes the
//! recovered primal point a vertex by construction. Extra primal rows are
//! extra dual columns, so rows can be supplied lazily by a [`RowOracle`] and
//! the current basis stays dual-feasible when they arrive.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub coeffs: Vec<Rational>,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Row {
    pub fn new(coeffs: Vec<Rational>, lower: Option<Rational>, upper: Option<Rational>) -> Self {
        Row { coeffs, lower, upper }
    }

    pub fn activity(&self, x: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .zip(x)
            .filter(|(a, _)| !a.is_zero())
            .fold(Rational::zero(), |acc, (a, v)| acc + a * v)
    }

    pub fn is_satisfied_at(&self, activity: &Rational) -> bool {
        self.lower.as_ref().is_none_or(|l| activity >= l)
            && self.upper.as_ref().is_none_or(|u| activity <= u)
    }

    pub fn is_tight_at(&self, activity: &Rational) -> bool {
        self.lower.as_ref() == Some(activity) || self.upper.as_ref() == Some(activity)
    }

    /// Amount by which `activity` falls outside the row's bounds (zero if inside).
    pub fn violation_at(&self, activity: &Rational) -> Rational {
        if let Some(l) = &self.lower {
            if activity < l {
                return l - activity;
            }
        }
        if let Some(u) = &self.upper {
            if activity > u {
                return activity - u;
            }
        }
        Rational::zero()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    /// Minimised objective, one coefficient per variable.
    pub objective: Vec<Rational>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(objective: Vec<Rational>) -> Self {
        LinearProgram { objective, rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<Rational>, lower: Option<Rational>, upper: Option<Rational>) {
        self.rows.push(Row::new(coeffs, lower, upper));
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::Malformed(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if row.lower.is_none() && row.upper.is_none() {
                return Err(LpError::Malformed(format!("row {i} has no finite bound")));
            }
        }
        Ok(())
    }

    pub fn objective_at(&self, x: &[Rational]) -> Rational {
        dot(&self.objective, x)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasicSolution {
    pub values: Vec<Rational>,
    /// Indices of rows satisfied with equality at `values`.
    pub tight_rows: Vec<usize>,
    pub objective_value: Rational,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("feasible region has no vertex: constraint rows do not span the variable space")]
    NoVertex,
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

/// Source of constraint rows that are not part of the initial working set.
pub trait RowOracle {
    /// Rows violated at `x`, most useful first. Empty iff `x` satisfies all rows.
    fn violated(&mut self, x: &[Rational]) -> Vec<Row>;
    /// Rows whose finite bound is eventually crossed when moving along `ray`.
    fn blocking(&mut self, ray: &[Rational]) -> Vec<Row>;
    /// Rows with at least one finite bound and `a·d ≠ 0`.
    fn transverse(&mut self, d: &[Rational]) -> Vec<Row>;
}

/// Oracle with no rows beyond the initial ones.
pub struct NoMoreRows;

impl RowOracle for NoMoreRows {
    fn violated(&mut self, _x: &[Rational]) -> Vec<Row> {
        Vec::new()
    }
    fn blocking(&mut self, _ray: &[Rational]) -> Vec<Row> {
        Vec::new()
    }
    fn transverse(&mut self, _d: &[Rational]) -> Vec<Row> {
        Vec::new()
    }
}

/// Optimum found with a lazily grown working set of rows.
#[derive(Debug, Clone)]
pub struct LazySolution {
    pub values: Vec<Rational>,
    pub objective_value: Rational,
    /// Working rows at termination; `values` is a vertex of their intersection.
    pub rows: Vec<Row>,
    /// Working rows that define the vertex (one per variable, linearly independent).
    pub basis_rows: Vec<usize>,
    pub separation_rounds: usize,
}

/// Solve an explicit linear program to a basic optimal solution.
pub fn solve(lp: &LinearProgram) -> Result<BasicSolution, LpError> {
    lp.validate()?;
    let lazy = solve_lazy(&lp.objective, lp.rows.clone(), &mut NoMoreRows)?;
    let tight_rows = lp
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_tight_at(&r.activity(&lazy.values)))
        .map(|(i, _)| i)
        .collect();
    Ok(BasicSolution {
        objective_value: lazy.objective_value,
        values: lazy.values,
        tight_rows,
    })
}

/// True iff `s` is feasible for `lp`, reports its objective correctly, lists
/// only rows that are really tight, and the tight rows have full rank.
pub fn verify_basic(lp: &LinearProgram, s: &BasicSolution) -> bool {
    let n = lp.num_vars();
    if s.values.len() != n || lp.validate().is_err() {
        return false;
    }
    if lp.objective_at(&s.values) != s.objective_value {
        return false;
    }
    let mut tight = Vec::new();
    for (i, row) in lp.rows.iter().enumerate() {
        let act = row.activity(&s.values);
        if !row.is_satisfied_at(&act) {
            return false;
        }
        if row.is_tight_at(&act) {
            tight.push(i);
        } else if s.tight_rows.contains(&i) {
            return false;
        }
    }
    rank(tight.iter().map(|&i| lp.rows[i].coeffs.clone()).collect()) == n
}

/// Solve `min objective·x` over `initial` rows plus whatever `oracle` reports.
///
/// The returned point satisfies every row the oracle knows about and is a
/// vertex of the working set, hence of the full system too.
pub fn solve_lazy(
    objective: &[Rational],
    initial: Vec<Row>,
    oracle: &mut dyn RowOracle,
) -> Result<LazySolution, LpError> {
    let n = objective.len();
    if n == 0 {
        // Only the empty point exists; each row must admit activity zero.
        let zero = Rational::zero();
        let mut rows = initial;
        rows.extend(oracle.violated(&[]));
        if rows.iter().all(|r| r.is_satisfied_at(&zero)) {
            return Ok(LazySolution {
                values: Vec::new(),
                objective_value: zero,
                rows,
                basis_rows: Vec::new(),
                separation_rounds: 0,
            });
        }
        return Err(LpError::Infeasible);
    }

    let mut tableau = DualTableau::new(objective);
    let mut rows: Vec<Row> = Vec::new();
    let push = |tableau: &mut DualTableau, rows: &mut Vec<Row>, row: Row| -> Result<(), LpError> {
        if row.coeffs.len() != n {
            return Err(LpError::Malformed(format!(
                "row has {} coefficients, expected {n}",
                row.coeffs.len()
            )));
        }
        if row.lower.is_none() && row.upper.is_none() {
            return Err(LpError::Malformed("row has no finite bound".into()));
        }
        tableau.add_row(rows.len(), &row);
        rows.push(row);
        Ok(())
    };
    for row in initial {
        push(&mut tableau, &mut rows, row)?;
    }

    let mut rounds = 0usize;
    loop {
        match tableau.optimize() {
            Outcome::Optimal => {
                if let Some(d) = tableau.lineality_direction() {
                    let extra = oracle.transverse(&d);
                    if extra.is_empty() {
                        return Err(LpError::NoVertex);
                    }
                    for row in extra {
                        push(&mut tableau, &mut rows, row)?;
                    }
                    continue;
                }
                let x = tableau.primal_point();
                let extra = oracle.violated(&x);
                if extra.is_empty() {
                    let basis_rows = tableau.basis_rows();
                    return Ok(LazySolution {
                        objective_value: dot(objective, &x),
                        values: x,
                        rows,
                        basis_rows,
                        separation_rounds: rounds,
                    });
                }
                rounds += 1;
                for row in extra {
                    push(&mut tableau, &mut rows, row)?;
                }
            }
            Outcome::PrimalRay(ray) => {
                let extra = oracle.blocking(&ray);
                if extra.is_empty() {
                    // Relaxation is unbounded along a direction no row stops:
                    // either the full problem is unbounded or it is empty.
                    let zero = vec![Rational::zero(); n];
                    return match solve_lazy(&zero, rows, oracle) {
                        Ok(_) | Err(LpError::NoVertex) => Err(LpError::Unbounded),
                        Err(e) => Err(e),
                    };
                }
                rounds += 1;
                for row in extra {
                    push(&mut tableau, &mut rows, row)?;
                }
            }
            Outcome::PrimalInfeasible => return Err(LpError::Infeasible),
        }
    }
}

pub(crate) fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .filter(|(u, _)| !u.is_zero())
        .fold(Rational::zero(), |acc, (u, v)| acc + u * v)
}

/// Rank over the rationals by Gaussian elimination.
pub fn rank(mut m: Vec<Vec<Rational>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pivot = m[r][c].clone();
        let prow = m[r].clone();
        for i in (r + 1)..rows {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] / &pivot;
            for k in c..cols {
                if !prow[k].is_zero() {
                    let delta = &f * &prow[k];
                    m[i][k] -= delta;
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

#[derive(Debug, Clone)]
struct DualColumn {
    row: usize,
    cost: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Basic {
    Art(usize),
    Col(usize),
}

impl Basic {
    /// Position in the fixed variable order used for Bland tie-breaking:
    /// artificials first, then dual columns in insertion order.
    fn order(self, n: usize) -> usize {
        match self {
            Basic::Art(j) => j,
            Basic::Col(k) => n + k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum Outcome {
    Optimal,
    /// Dual infeasible: the primal relaxation improves without bound along this ray
    /// (or is empty; the caller decides).
    PrimalRay(Vec<Rational>),
    /// Dual unbounded.
    PrimalInfeasible,
}

struct DualTableau {
    n: usize,
    flip: Vec<bool>,
    columns: Vec<DualColumn>,
    body: Vec<Vec<Rational>>,
    art: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<Basic>,
    rc: Vec<Rational>,
    rc_art: Vec<Rational>,
    value: Rational,
    phase: Phase,
}

impl DualTableau {
    fn new(objective: &[Rational]) -> Self {
        let n = objective.len();
        let flip: Vec<bool> = objective.iter().map(|c| c.is_negative()).collect();
        let rhs: Vec<Rational> = objective.iter().map(|c| c.abs()).collect();
        let art = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Rational::from_integer(1.into()) } else { Rational::zero() })
                    .collect()
            })
            .collect();
        let value = rhs.iter().fold(Rational::zero(), |a, v| a + v);
        DualTableau {
            n,
            flip,
            columns: Vec::new(),
            body: vec![Vec::new(); n],
            art,
            rhs,
            basis: (0..n).map(Basic::Art).collect(),
            rc: Vec::new(),
            rc_art: vec![Rational::zero(); n],
            value,
            phase: Phase::One,
        }
    }

    fn phase_cost(&self, b: Basic) -> Rational {
        match (self.phase, b) {
            (Phase::One, Basic::Art(_)) => Rational::from_integer(1.into()),
            (Phase::One, Basic::Col(_)) => Rational::zero(),
            (Phase::Two, Basic::Art(_)) => Rational::zero(),
            (Phase::Two, Basic::Col(k)) => self.columns[k].cost.clone(),
        }
    }

    fn add_row(&mut self, index: usize, row: &Row) {
        if let Some(l) = &row.lower {
            self.add_column(index, -l.clone(), &row.coeffs, false);
        }
        if let Some(u) = &row.upper {
            self.add_column(index, u.clone(), &row.coeffs, true);
        }
        if self.phase == Phase::Two {
            self.drive_out_artificials();
        }
    }

    fn add_column(&mut self, row: usize, cost: Rational, coeffs: &[Rational], negate: bool) {
        let k = self.columns.len();
        self.columns.push(DualColumn { row, cost });
        // Transformed column σ∘m with m = ±a.
        let m: Vec<Rational> = coeffs
            .iter()
            .enumerate()
            .map(|(j, a)| if self.flip[j] != negate { -a.clone() } else { a.clone() })
            .collect();
        let mut entries = Vec::with_capacity(self.n);
        for i in 0..self.n {
            entries.push(dot(&m, &self.art[i]));
        }
        let mut reduced = self.phase_cost(Basic::Col(k));
        for (i, e) in entries.iter().enumerate() {
            if !e.is_zero() {
                reduced -= self.phase_cost(self.basis[i]) * e;
            }
        }
        for (i, e) in entries.into_iter().enumerate() {
            self.body[i].push(e);
        }
        self.rc.push(reduced);
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.body[r][e].clone();
        for v in self.body[r].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
        for v in self.art[r].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
        self.rhs[r] /= &p;
        self.basis[r] = Basic::Col(e);

        let prow = self.body[r].clone();
        let part = self.art[r].clone();
        let prhs = self.rhs[r].clone();
        let nz: Vec<usize> = (0..prow.len()).filter(|&k| !prow[k].is_zero()).collect();
        let nz_art: Vec<usize> = (0..part.len()).filter(|&k| !part[k].is_zero()).collect();

        for i in 0..self.n {
            if i == r || self.body[i][e].is_zero() {
                continue;
            }
            let f = self.body[i][e].clone();
            for &k in &nz {
                let d = &f * &prow[k];
                self.body[i][k] -= d;
            }
            for &k in &nz_art {
                let d = &f * &part[k];
                self.art[i][k] -= d;
            }
            if !prhs.is_zero() {
                let d = &f * &prhs;
                self.rhs[i] -= d;
            }
        }
        let f = self.rc[e].clone();
        if !f.is_zero() {
            for &k in &nz {
                let d = &f * &prow[k];
                self.rc[k] -= d;
            }
            for &k in &nz_art {
                let d = &f * &part[k];
                self.rc_art[k] -= d;
            }
            self.value += &f * &prhs;
        }
    }

    /// Bland's rule: lowest-index improving column enters; among tied ratios
    /// the basic variable with the lowest index leaves.
    fn run(&mut self) -> bool {
        loop {
            let Some(e) = self.rc.iter().position(|v| v.is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.n {
                let a = &self.body[i][e];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => match ratio.cmp(br) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[i].order(self.n) < self.basis[*bi].order(self.n),
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, e),
                None => return false,
            }
        }
    }

    fn drive_out_artificials(&mut self) {
        for r in 0..self.n {
            if let Basic::Art(_) = self.basis[r] {
                debug_assert!(self.rhs[r].is_zero());
                if let Some(k) = self.body[r].iter().position(|v| !v.is_zero()) {
                    self.pivot(r, k);
                }
            }
        }
    }

    fn enter_phase_two(&mut self) {
        self.drive_out_artificials();
        self.phase = Phase::Two;
        let costs: Vec<Rational> = self.basis.iter().map(|&b| self.phase_cost(b)).collect();
        for k in 0..self.columns.len() {
            let mut v = self.columns[k].cost.clone();
            for i in 0..self.n {
                if !costs[i].is_zero() && !self.body[i][k].is_zero() {
                    v -= &costs[i] * &self.body[i][k];
                }
            }
            self.rc[k] = v;
        }
        for j in 0..self.n {
            let mut v = Rational::zero();
            for i in 0..self.n {
                if !costs[i].is_zero() && !self.art[i][j].is_zero() {
                    v -= &costs[i] * &self.art[i][j];
                }
            }
            self.rc_art[j] = v;
        }
        self.value = costs
            .iter()
            .zip(&self.rhs)
            .fold(Rational::zero(), |acc, (c, b)| acc + c * b);
    }

    fn optimize(&mut self) -> Outcome {
        if self.phase == Phase::One {
            let finished = self.run();
            debug_assert!(finished, "phase one is bounded below");
            if self.value.is_positive() {
                // Farkas certificate from the phase-one multipliers.
                let ray = (0..self.n)
                    .map(|j| {
                        let pi = Rational::from_integer(1.into()) - &self.rc_art[j];
                        if self.flip[j] {
                            pi
                        } else {
                            -pi
                        }
                    })
                    .collect();
                return Outcome::PrimalRay(ray);
            }
            self.enter_phase_two();
        }
        if self.run() {
            Outcome::Optimal
        } else {
            Outcome::PrimalInfeasible
        }
    }

    /// Direction orthogonal to every working row, present when an artificial
    /// could not be pivoted out of the optimal basis.
    fn lineality_direction(&self) -> Option<Vec<Rational>> {
        let r = self.basis.iter().position(|b| matches!(b, Basic::Art(_)))?;
        Some(
            (0..self.n)
                .map(|j| if self.flip[j] { -self.art[r][j].clone() } else { self.art[r][j].clone() })
                .collect(),
        )
    }

    fn primal_point(&self) -> Vec<Rational> {
        (0..self.n)
            .map(|j| if self.flip[j] { -self.rc_art[j].clone() } else { self.rc_art[j].clone() })
            .collect()
    }

    fn basis_rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self
            .basis
            .iter()
            .filter_map(|b| match b {
                Basic::Col(k) => Some(self.columns[*k].row),
                Basic::Art(_) => None,
            })
            .collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }
}
