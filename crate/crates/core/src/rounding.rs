//! Iterative relaxation for the degree-bounded g-polymatroid element problem
//! with multiplicities.
//!
//! Each iteration solves the LP relaxation to a vertex, deletes elements at
//! zero, moves integer parts into the output and contracts, drops hyperedges
//! whose remaining slack is small enough, and after the first iteration
//! confines the residual problem to the unit cube.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::gpoly::{BorderPair, GpolyError, IntVector, Subset};
use crate::lp::{self, LazySolution, LinearProgram, LpError, Row, RowOracle};
use crate::rational::{floor_i64, rat, Ext, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Both,
    LowerOnly,
    UpperOnly,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Both => "both",
            Regime::LowerOnly => "lower",
            Regime::UpperOnly => "upper",
        }
    }

    pub fn parse(s: &str) -> Option<Regime> {
        match s {
            "both" => Some(Regime::Both),
            "lower" | "lower_only" => Some(Regime::LowerOnly),
            "upper" | "upper_only" => Some(Regime::UpperOnly),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hyperedge {
    /// Member positions in the ground set, strictly increasing.
    pub members: Vec<usize>,
    /// Positive multiplicity per member.
    pub m: Vec<i64>,
    pub f: Option<i64>,
    pub g: Option<i64>,
}

impl Hyperedge {
    pub fn new(members: Vec<usize>, m: Vec<i64>, f: Option<i64>, g: Option<i64>) -> Self {
        Hyperedge { members, m, f, g }
    }

    /// `Σ_{s ∈ ε} m_ε(s) z(s)`.
    pub fn weighted_sum(&self, z: &IntVector) -> i64 {
        self.members.iter().zip(&self.m).map(|(&s, &k)| k * z.0[s]).sum()
    }

    pub fn total_multiplicity(&self) -> i64 {
        self.m.iter().sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HypergraphConstraints {
    pub hyperedges: Vec<Hyperedge>,
}

#[derive(Debug, Clone)]
pub struct BdgpeInstance {
    pub pair: BorderPair,
    pub costs: Vec<Rational>,
    pub constraints: HypergraphConstraints,
    pub regime: Regime,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoundingError {
    #[error("the LP relaxation is infeasible")]
    Infeasible,
    #[error("the LP relaxation is unbounded")]
    Unbounded,
    #[error("no progress after {lp_solves} LP solves (bound {bound})")]
    NonTermination { lp_solves: usize, bound: usize },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error(transparent)]
    Gpoly(#[from] GpolyError),
    #[error("LP solver failure: {0}")]
    Lp(LpError),
}

impl From<LpError> for RoundingError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::Infeasible => RoundingError::Infeasible,
            LpError::Unbounded => RoundingError::Unbounded,
            other => RoundingError::Lp(other),
        }
    }
}

/// Achieved value and signed violation of one original hyperedge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperedgeReport {
    pub index: usize,
    pub achieved: i64,
    pub f: Option<i64>,
    pub g: Option<i64>,
    /// `achieved − f` when below `f`, `achieved − g` when above `g`, else 0.
    pub violation: i64,
    /// Lost all its members to deletions before it could be relaxed.
    pub emptied: bool,
}

/// What one loop iteration saw and did.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    /// Original indices of the elements alive at the start of the iteration.
    pub alive: Vec<usize>,
    /// Basic optimal solution, one value per alive element.
    pub x: Vec<Rational>,
    pub lp_value: Rational,
    /// Cost of the accumulated output before this iteration's contraction.
    pub z_cost_before: Rational,
    pub deleted: Vec<usize>,
    pub contracted: Vec<(usize, i64)>,
    pub removed_hyperedges: Vec<usize>,
    pub separation_rounds: usize,
    /// The LP answer passed `lp::verify_basic` against its generated rows.
    pub verified_basic: bool,
}

#[derive(Debug, Clone)]
pub struct RoundingResult {
    pub z: IntVector,
    pub lp_optimum: Rational,
    pub cost: Rational,
    pub delta: i64,
    pub iterations: usize,
    pub lp_solves: usize,
    pub report: Vec<HyperedgeReport>,
    pub trace: Vec<IterationRecord>,
}

/// `Δ = max_s Σ_{ε ∋ s} m_ε(s)`, 0 for an empty hypergraph.
pub fn delta(constraints: &HypergraphConstraints, size: usize) -> i64 {
    let mut load = vec![0i64; size];
    for e in &constraints.hyperedges {
        for (&s, &k) in e.members.iter().zip(&e.m) {
            load[s] += k;
        }
    }
    load.into_iter().max().unwrap_or(0)
}

pub fn validate(instance: &BdgpeInstance) -> Result<(), RoundingError> {
    let size = instance.pair.len();
    let bad = |msg: String| Err(RoundingError::InvalidInstance(msg));
    if instance.costs.len() != size {
        return bad(format!("{} costs for {size} elements", instance.costs.len()));
    }
    for (i, e) in instance.constraints.hyperedges.iter().enumerate() {
        if e.members.is_empty() {
            return bad(format!("hyperedge {i} has no members"));
        }
        if e.members.len() != e.m.len() {
            return bad(format!("hyperedge {i}: members and multiplicities differ in length"));
        }
        if e.members.windows(2).any(|w| w[0] >= w[1]) || e.members.iter().any(|&s| s >= size) {
            return bad(format!("hyperedge {i}: members must be distinct valid positions"));
        }
        if e.m.iter().any(|&k| k <= 0) {
            return bad(format!("hyperedge {i}: multiplicities must be positive"));
        }
        if e.f.is_some_and(|v| v < 0) || e.g.is_some_and(|v| v < 0) {
            return bad(format!("hyperedge {i}: bounds must be nonnegative"));
        }
        if let (Some(f), Some(g)) = (e.f, e.g) {
            if f > g {
                return bad(format!("hyperedge {i}: f > g"));
            }
        }
        let ok = match instance.regime {
            Regime::Both => e.f.is_some() || e.g.is_some(),
            Regime::LowerOnly => e.f.is_some() && e.g.is_none(),
            Regime::UpperOnly => e.f.is_none() && e.g.is_some(),
        };
        if !ok {
            return bad(format!("hyperedge {i}: bounds do not match the {} regime", instance.regime.name()));
        }
    }
    Ok(())
}

/// Full relaxation: one two-sided row per nonempty subset with a finite
/// border, then one row per hyperedge.
pub fn build_lp(instance: &BdgpeInstance) -> Result<LinearProgram, RoundingError> {
    validate(instance)?;
    let size = instance.pair.len();
    let (p, b) = instance.pair.tables()?;
    let mut lp = LinearProgram::new(instance.costs.clone());
    for y in 1..p.len() {
        if let Some(row) = subset_row(size, y as Subset, p[y], b[y]) {
            lp.rows.push(row);
        }
    }
    for e in &instance.constraints.hyperedges {
        lp.rows.push(hyperedge_row(size, &e.members, &e.m, e.f, e.g));
    }
    Ok(lp)
}

fn subset_row(size: usize, y: Subset, p: Ext, b: Ext) -> Option<Row> {
    if !p.is_finite() && !b.is_finite() {
        return None;
    }
    let coeffs = (0..size).map(|i| if y >> i & 1 == 1 { Rational::one() } else { Rational::zero() }).collect();
    Some(Row::new(coeffs, p.to_rational(), b.to_rational()))
}

fn hyperedge_row(size: usize, members: &[usize], m: &[i64], f: Option<i64>, g: Option<i64>) -> Row {
    let mut coeffs = vec![Rational::zero(); size];
    for (&s, &k) in members.iter().zip(m) {
        coeffs[s] = rat(k);
    }
    Row::new(coeffs, f.map(rat), g.map(rat))
}

/// Separation over every subset row of a tabulated pair.
struct SubsetRows {
    size: usize,
    p: Vec<Ext>,
    b: Vec<Ext>,
    /// Most rows handed back per call.
    limit: usize,
}

/// Subset sums `v(Y)` of a rational vector, scaled by a common denominator.
struct ScaledSums {
    scale: BigInt,
    sums: Vec<BigInt>,
}

impl ScaledSums {
    fn new(v: &[Rational]) -> Self {
        let scale = v.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let scaled: Vec<BigInt> = v.iter().map(|r| r.numer() * (&scale / r.denom())).collect();
        let size = 1usize << v.len();
        // i128 fast path; BigInt only when the scaled values are huge.
        let small: Option<Vec<i128>> = scaled.iter().map(|x| x.to_i128()).collect();
        let sums = match small.filter(|s| s.iter().map(|x| x.unsigned_abs()).sum::<u128>() < (1u128 << 120)) {
            Some(s) => {
                let mut out = vec![0i128; size];
                for y in 1..size {
                    out[y] = out[y & (y - 1)] + s[y.trailing_zeros() as usize];
                }
                out.into_iter().map(BigInt::from).collect()
            }
            None => {
                let mut out = vec![BigInt::zero(); size];
                for y in 1..size {
                    out[y] = &out[y & (y - 1)] + &scaled[y.trailing_zeros() as usize];
                }
                out
            }
        };
        ScaledSums { scale, sums }
    }

    fn bound(&self, e: Ext) -> Option<BigInt> {
        e.finite().map(|v| BigInt::from(v) * &self.scale)
    }
}

impl SubsetRows {
    fn pick(&self, mut scored: Vec<(BigInt, usize)>) -> Vec<Row> {
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.truncate(self.limit);
        scored
            .into_iter()
            .filter_map(|(_, y)| subset_row(self.size, y as Subset, self.p[y], self.b[y]))
            .collect()
    }
}

impl RowOracle for SubsetRows {
    fn violated(&mut self, x: &[Rational]) -> Vec<Row> {
        let s = ScaledSums::new(x);
        let mut scored = Vec::new();
        for y in 1..self.p.len() {
            let v = &s.sums[y];
            if let Some(lo) = s.bound(self.p[y]) {
                if *v < lo {
                    scored.push((lo - v, y));
                    continue;
                }
            }
            if let Some(hi) = s.bound(self.b[y]) {
                if *v > hi {
                    scored.push((v - hi, y));
                }
            }
        }
        self.pick(scored)
    }

    fn blocking(&mut self, ray: &[Rational]) -> Vec<Row> {
        let s = ScaledSums::new(ray);
        let mut scored = Vec::new();
        for y in 1..self.p.len() {
            let v = &s.sums[y];
            let blocks = (v.is_positive() && self.b[y].is_finite()) || (v.is_negative() && self.p[y].is_finite());
            if blocks {
                scored.push((v.abs(), y));
            }
        }
        self.pick(scored)
    }

    fn transverse(&mut self, d: &[Rational]) -> Vec<Row> {
        let s = ScaledSums::new(d);
        let mut scored = Vec::new();
        for y in 1..self.p.len() {
            let v = &s.sums[y];
            if !v.is_zero() && (self.p[y].is_finite() || self.b[y].is_finite()) {
                scored.push((v.abs(), y));
            }
        }
        self.pick(scored)
    }
}

/// Working copy of a hyperedge in original element indices.
#[derive(Debug, Clone)]
struct LiveEdge {
    index: usize,
    members: Vec<(usize, i64)>,
    f: Option<i64>,
    g: Option<i64>,
}

/// Solve the relaxation of the current residual problem.
fn solve_relaxation(
    pair: &BorderPair,
    alive: &[usize],
    costs: &[Rational],
    edges: &[LiveEdge],
    cube: bool,
) -> Result<LazySolution, RoundingError> {
    let size = alive.len();
    let (p, b) = pair.tables()?;
    let mut pos = vec![usize::MAX; costs.len()];
    for (i, &s) in alive.iter().enumerate() {
        pos[s] = i;
    }
    let mut initial = Vec::new();
    if cube {
        for i in 0..size {
            let mut coeffs = vec![Rational::zero(); size];
            coeffs[i] = Rational::one();
            initial.push(Row::new(coeffs, Some(Rational::zero()), Some(Rational::one())));
        }
    }
    for i in 0..size {
        let y = 1usize << i;
        initial.extend(subset_row(size, y as Subset, p[y], b[y]));
    }
    if size > 1 {
        let full = p.len() - 1;
        initial.extend(subset_row(size, full as Subset, p[full], b[full]));
    }
    for e in edges {
        let members: Vec<usize> = e.members.iter().map(|&(s, _)| pos[s]).collect();
        let m: Vec<i64> = e.members.iter().map(|&(_, k)| k).collect();
        initial.push(hyperedge_row(size, &members, &m, e.f, e.g));
    }
    let objective: Vec<Rational> = alive.iter().map(|&s| costs[s].clone()).collect();
    let mut oracle = SubsetRows { size, p, b, limit: size.max(4) };
    Ok(lp::solve_lazy(&objective, initial, &mut oracle)?)
}

/// Independent recheck that a lazy solution is a vertex of the rows it generated.
fn is_basic(costs: &[Rational], alive: &[usize], sol: &LazySolution) -> bool {
    let lp = LinearProgram { objective: alive.iter().map(|&s| costs[s].clone()).collect(), rows: sol.rows.clone() };
    let basic = lp::BasicSolution {
        values: sol.values.clone(),
        tight_rows: sol.basis_rows.clone(),
        objective_value: sol.objective_value.clone(),
    };
    lp::verify_basic(&lp, &basic)
}

fn live_edges(instance: &BdgpeInstance) -> Vec<LiveEdge> {
    instance
        .constraints
        .hyperedges
        .iter()
        .enumerate()
        .map(|(index, e)| LiveEdge {
            index,
            members: e.members.iter().copied().zip(e.m.iter().copied()).collect(),
            f: e.f,
            g: e.g,
        })
        .collect()
}

/// Optimum of the initial relaxation, by the same path the rounding loop uses.
pub fn initial_relaxation(instance: &BdgpeInstance) -> Result<LazySolution, RoundingError> {
    validate(instance)?;
    let alive: Vec<usize> = (0..instance.pair.len()).collect();
    solve_relaxation(&instance.pair, &alive, &instance.costs, &live_edges(instance), false)
}

pub fn cost_of(costs: &[Rational], z: &IntVector) -> Rational {
    costs
        .iter()
        .zip(&z.0)
        .filter(|(_, &v)| v != 0)
        .fold(Rational::zero(), |acc, (c, &v)| acc + c * rat(v))
}

/// Per-hyperedge achieved values of `z` against the original bounds.
pub fn violation_report(instance: &BdgpeInstance, z: &IntVector) -> Vec<HyperedgeReport> {
    instance
        .constraints
        .hyperedges
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let achieved = e.weighted_sum(z);
            let violation = match (e.f, e.g) {
                (Some(f), _) if achieved < f => achieved - f,
                (_, Some(g)) if achieved > g => achieved - g,
                _ => 0,
            };
            HyperedgeReport { index, achieved, f: e.f, g: e.g, violation, emptied: false }
        })
        .collect()
}

/// Largest violation magnitude the regime's guarantee allows, as `(below, above)`.
pub fn allowed_violation(regime: Regime, delta: i64) -> (i64, i64) {
    match regime {
        Regime::Both => (2 * delta - 1, 2 * delta - 1),
        Regime::LowerOnly => (delta - 1, i64::MAX),
        Regime::UpperOnly => (i64::MAX, delta - 1),
    }
}

/// Whether every reported violation is inside the regime's bound.
pub fn within_guarantee(regime: Regime, delta: i64, report: &[HyperedgeReport]) -> bool {
    let (below, above) = allowed_violation(regime, delta);
    report.iter().all(|r| -r.violation <= below.max(0) && r.violation <= above.max(0))
}

/// Iterative relaxation; returns an element of the input polyhedron whose
/// cost is at most the LP optimum and whose hyperedge violations respect the
/// regime's bound.
pub fn solve_bdgpe(instance: &BdgpeInstance) -> Result<RoundingResult, RoundingError> {
    validate(instance)?;
    let size = instance.pair.len();
    let delta = delta(&instance.constraints, size);
    let bound = 2 * size + instance.constraints.hyperedges.len() + 1;

    let mut pair = instance.pair.clone();
    let mut alive: Vec<usize> = (0..size).collect();
    let mut z = IntVector::zeros(size);
    let mut edges = live_edges(instance);
    let mut emptied = Vec::new();
    let mut trace = Vec::new();
    let mut lp_optimum = None;
    let mut lp_solves = 0usize;

    while !alive.is_empty() {
        if lp_solves >= bound {
            return Err(RoundingError::NonTermination { lp_solves, bound });
        }
        let first = lp_solves == 0;
        let sol = solve_relaxation(&pair, &alive, &instance.costs, &edges, !first)?;
        let verified_basic = is_basic(&instance.costs, &alive, &sol);
        lp_solves += 1;
        if first {
            lp_optimum = Some(sol.objective_value.clone());
        }
        let z_cost_before = cost_of(&instance.costs, &z);
        let x = sol.values;

        // Step a: delete elements at zero.
        let mut del_mask: Subset = 0;
        let mut deleted = Vec::new();
        for (i, v) in x.iter().enumerate() {
            if v.is_zero() {
                del_mask |= 1 << i;
                deleted.push(alive[i]);
            }
        }
        let kept: Vec<(usize, Rational)> =
            alive.iter().copied().zip(x.iter().cloned()).filter(|(_, v)| !v.is_zero()).collect();
        pair = pair.delete_at_zero(del_mask)?;
        alive = kept.iter().map(|(s, _)| *s).collect();
        for e in &mut edges {
            e.members.retain(|(s, _)| !deleted.contains(s));
        }

        // Step b: move integer parts into z and contract.
        let floor: Vec<i64> = kept
            .iter()
            .map(|(_, v)| floor_i64(v).ok_or_else(|| RoundingError::InvalidInstance("coordinate out of range".into())))
            .collect::<Result<_, _>>()?;
        let mut contracted = Vec::new();
        for (&s, &fl) in alive.iter().zip(&floor) {
            if fl != 0 {
                z.0[s] += fl;
                contracted.push((s, fl));
            }
        }
        pair = pair.shift(&IntVector(floor.clone()));
        for e in &mut edges {
            let shift: i64 = e
                .members
                .iter()
                .map(|&(s, k)| k * alive.iter().position(|&a| a == s).map_or(0, |i| floor[i]))
                .sum();
            e.f = e.f.map(|v| v - shift);
            e.g = e.g.map(|v| v - shift);
        }

        // Step c: relax hyperedges; emptied ones are dropped as well.
        let mut removed = Vec::new();
        edges.retain(|e| {
            if e.members.is_empty() {
                emptied.push(e.index);
                removed.push(e.index);
                return false;
            }
            let total: i64 = e.members.iter().map(|&(_, k)| k).sum();
            let drop = match instance.regime {
                Regime::Both => total < 2 * delta,
                Regime::LowerOnly => e.f.is_none_or(|f| f < delta),
                Regime::UpperOnly => e.g.is_none_or(|g| g + delta > total),
            };
            if drop {
                removed.push(e.index);
            }
            !drop
        });

        // Step d: the residual problem lives in the unit cube from now on.
        if first && !alive.is_empty() {
            let n = alive.len();
            pair = pair.intersect_box(&vec![Ext::Fin(0); n], &vec![Ext::Fin(1); n])?;
        }

        let progressed = first || !deleted.is_empty() || !contracted.is_empty() || !removed.is_empty();
        trace.push(IterationRecord {
            alive: alive_before(&deleted, &kept),
            x,
            lp_value: sol.objective_value,
            z_cost_before,
            deleted,
            contracted,
            removed_hyperedges: removed,
            separation_rounds: sol.separation_rounds,
            verified_basic,
        });
        if !progressed {
            return Err(RoundingError::NonTermination { lp_solves, bound });
        }
    }

    let mut report = violation_report(instance, &z);
    for r in &mut report {
        r.emptied = emptied.contains(&r.index);
    }
    let lp_optimum = match lp_optimum {
        Some(v) => v,
        // Empty ground set: the only point is the empty vector.
        None => {
            initial_relaxation(instance)?;
            Rational::zero()
        }
    };
    Ok(RoundingResult {
        cost: cost_of(&instance.costs, &z),
        z,
        lp_optimum,
        delta,
        iterations: trace.len(),
        lp_solves,
        report,
        trace,
    })
}

fn alive_before(deleted: &[usize], kept: &[(usize, Rational)]) -> Vec<usize> {
    let mut all: Vec<usize> = deleted.iter().copied().chain(kept.iter().map(|(s, _)| *s)).collect();
    all.sort_unstable();
    all
}
