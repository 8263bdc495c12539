//! Exhaustive reference solvers for small instances.
//!
//! Every oracle runs under an [`OracleBudget`] and refuses cleanly when an
//! input is too large, rather than returning an unproven answer.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use crate::gpoly::{complete_edges, BorderPair, GpolyError, IntVector};
use crate::mvtsp::{EdgeMultiplicity, MvtspInstance};
use crate::rational::{Ext, Rational};
use crate::rounding::{self, cost_of, BdgpeInstance, RoundingError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_ground: usize,
    pub max_vertices: usize,
    pub max_total_visits: i64,
    pub max_nodes: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_ground: 16, max_vertices: 6, max_total_visits: 40, max_nodes: 200_000_000 }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("coordinate {0} is unbounded, enumeration impossible")]
    UnboundedCoordinate(usize),
    #[error(transparent)]
    Gpoly(#[from] GpolyError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
}

/// Costs multiplied by the lcm of their denominators.
fn integer_scale(costs: &[Rational]) -> Result<Vec<i128>, OracleError> {
    let l = costs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    costs
        .iter()
        .map(|c| {
            (c.numer() * (&l / c.denom()))
                .to_i128()
                .ok_or_else(|| OracleError::BudgetExceeded("scaled costs overflow".into()))
        })
        .collect()
}

struct MvtspSearch<'a> {
    n: usize,
    edges: Vec<(usize, usize)>,
    /// Twice the scaled edge cost.
    cost2: Vec<i128>,
    /// last[v]: index of the last edge touching v.
    last: Vec<usize>,
    rem: Vec<i64>,
    z: Vec<i64>,
    best: Option<(i128, Vec<i64>)>,
    nodes: u64,
    budget: &'a OracleBudget,
}

impl MvtspSearch<'_> {
    /// Lower bound on twice the cost still to pay from edge `from` on: each
    /// missing degree unit costs at least half its cheapest remaining edge.
    fn lower_bound(&self, from: usize) -> i128 {
        let mut unit = vec![i128::MAX; self.n];
        for i in from..self.edges.len() {
            let (u, v) = self.edges[i];
            // A loop buys two units at cost c, an edge one unit per end at c/2 each.
            let per = self.cost2[i] / 2;
            unit[u] = unit[u].min(per);
            unit[v] = unit[v].min(per);
        }
        (0..self.n)
            .map(|v| if self.rem[v] == 0 { 0 } else if unit[v] == i128::MAX { i128::MAX / 4 } else { self.rem[v] as i128 * unit[v] })
            .sum()
    }

    fn connected(&self) -> bool {
        let support: EdgeMultiplicity = EdgeMultiplicity::from_vector(self.n, &self.z);
        support.spans_connected(self.n)
    }

    fn go(&mut self, i: usize, acc2: i128) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes {
            return Err(OracleError::BudgetExceeded(format!("more than {} search nodes", self.budget.max_nodes)));
        }
        if let Some((b, _)) = &self.best {
            if acc2.saturating_add(self.lower_bound(i)) >= 2 * b {
                return Ok(());
            }
        }
        if i == self.edges.len() {
            if self.rem.iter().all(|&r| r == 0) && self.connected() {
                self.best = Some((acc2 / 2, self.z.clone()));
            }
            return Ok(());
        }
        let (u, v) = self.edges[i];
        let (lo, hi) = if u == v {
            let cap = self.rem[u] / 2;
            if self.last[u] == i {
                if self.rem[u] % 2 != 0 {
                    return Ok(());
                }
                (cap, cap)
            } else {
                (0, cap)
            }
        } else {
            let cap = self.rem[u].min(self.rem[v]);
            let forced = [u, v].iter().filter(|&&w| self.last[w] == i).map(|&w| self.rem[w]).max();
            match forced {
                Some(f) if f > cap => return Ok(()),
                Some(f) => {
                    if [u, v].iter().any(|&w| self.last[w] == i && self.rem[w] != f) {
                        return Ok(());
                    }
                    (f, f)
                }
                None => (0, cap),
            }
        };
        let units = if u == v { 2 } else { 1 };
        for k in lo..=hi {
            self.z[i] = k;
            self.rem[u] -= k * units;
            if u != v {
                self.rem[v] -= k;
            }
            let r = self.go(i + 1, acc2 + self.cost2[i] * k as i128);
            self.rem[u] += k * units;
            if u != v {
                self.rem[v] += k;
            }
            self.z[i] = 0;
            r?;
        }
        Ok(())
    }
}

/// Hamiltonian cycle through `0, 1, …, n−1` plus `r(v) − 1` loops at every vertex.
pub fn trivial_tour(inst: &MvtspInstance) -> EdgeMultiplicity {
    let n = inst.n();
    let mut z = EdgeMultiplicity::new();
    if n == 1 {
        z.add(0, 0, inst.requests()[0]);
        return z;
    }
    for v in 0..n {
        z.add(v, (v + 1) % n, 1);
        if inst.requests()[v] > 1 {
            z.add(v, v, inst.requests()[v] - 1);
        }
    }
    z
}

/// Minimum-cost tour by branch and bound over edge multiplicities in
/// lexicographic edge order, with degree bookkeeping and a connectivity test
/// at the leaves.
pub fn exact_mvtsp(inst: &MvtspInstance, budget: &OracleBudget) -> Result<EdgeMultiplicity, OracleError> {
    let n = inst.n();
    if n > budget.max_vertices {
        return Err(OracleError::BudgetExceeded(format!("{n} vertices, budget allows {}", budget.max_vertices)));
    }
    if inst.total_requests() > budget.max_total_visits {
        return Err(OracleError::BudgetExceeded(format!(
            "{} total visits, budget allows {}",
            inst.total_requests(),
            budget.max_total_visits
        )));
    }
    let edges = complete_edges(n);
    let costs: Vec<Rational> = edges.iter().map(|&(u, v)| inst.cost(u, v).clone()).collect();
    let scaled = integer_scale(&costs)?;
    let mut last = vec![0; n];
    for (i, &(u, v)) in edges.iter().enumerate() {
        last[u] = i;
        last[v] = i;
    }
    let start = trivial_tour(inst).to_vector(n);
    let start_cost: i128 = start.iter().zip(&scaled).map(|(&k, &c)| k as i128 * c).sum();
    let mut search = MvtspSearch {
        n,
        cost2: scaled.iter().map(|c| 2 * c).collect(),
        edges,
        last,
        rem: inst.requests().iter().map(|r| 2 * r).collect(),
        z: vec![0; start.len()],
        // Strictly better tours replace the starting one.
        best: Some((start_cost, start)),
        nodes: 0,
        budget,
    };
    search.go(0, 0)?;
    let (_, z) = search.best.expect("the starting tour is feasible");
    Ok(EdgeMultiplicity::from_vector(n, &z))
}

/// Finite per-coordinate ranges implied by the borders.
fn coordinate_box(pair: &BorderPair) -> Result<Vec<(i64, i64)>, OracleError> {
    (0..pair.len())
        .map(|s| match pair.coordinate_range(s) {
            (Ext::Fin(lo), Ext::Fin(hi)) => Ok((lo, hi)),
            _ => Err(OracleError::UnboundedCoordinate(s)),
        })
        .collect()
}

/// Visit every integer point of `Q(p, b)` in lexicographic order.
pub fn for_each_point(
    pair: &BorderPair,
    budget: &OracleBudget,
    mut visit: impl FnMut(&IntVector),
) -> Result<(), OracleError> {
    let m = pair.len();
    if m > budget.max_ground {
        return Err(OracleError::BudgetExceeded(format!("{m} elements, budget allows {}", budget.max_ground)));
    }
    let ranges = coordinate_box(pair)?;
    let (p, b) = pair.tables()?;
    let mut x = vec![0i64; m];
    // sums[y] = x(Y) for every Y inside the decided prefix.
    let mut sums = vec![0i64; 1 << m];
    let mut nodes = 0u64;

    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        m: usize,
        ranges: &[(i64, i64)],
        p: &[Ext],
        b: &[Ext],
        x: &mut Vec<i64>,
        sums: &mut Vec<i64>,
        nodes: &mut u64,
        max_nodes: u64,
        visit: &mut dyn FnMut(&IntVector),
    ) -> Result<(), OracleError> {
        if i == m {
            visit(&IntVector(x.clone()));
            return Ok(());
        }
        let bit = 1usize << i;
        'value: for v in ranges[i].0..=ranges[i].1 {
            *nodes += 1;
            if *nodes > max_nodes {
                return Err(OracleError::BudgetExceeded(format!("more than {max_nodes} enumeration nodes")));
            }
            x[i] = v;
            for low in 0..bit {
                let y = low | bit;
                let s = sums[low] + v;
                sums[y] = s;
                if p[y] > Ext::Fin(s) || Ext::Fin(s) > b[y] {
                    continue 'value;
                }
            }
            go(i + 1, m, ranges, p, b, x, sums, nodes, max_nodes, visit)?;
        }
        Ok(())
    }
    go(0, m, &ranges, &p, &b, &mut x, &mut sums, &mut nodes, budget.max_nodes, &mut visit)
}

/// All integer points, lexicographically sorted.
pub fn integer_points(pair: &BorderPair, budget: &OracleBudget) -> Result<Vec<IntVector>, OracleError> {
    let mut out = Vec::new();
    for_each_point(pair, budget, |x| out.push(x.clone()))?;
    Ok(out)
}

/// Minimum-cost integer point meeting every border and every hyperedge bound
/// exactly; `None` when there is none. Ties go to the lexicographically first point.
pub fn exact_bdgpe(instance: &BdgpeInstance, budget: &OracleBudget) -> Result<Option<(IntVector, Rational)>, OracleError> {
    rounding::validate(instance)?;
    let mut best: Option<(IntVector, Rational)> = None;
    for_each_point(&instance.pair, budget, |x| {
        let ok = instance.constraints.hyperedges.iter().all(|e| {
            let v = e.weighted_sum(x);
            e.f.is_none_or(|f| v >= f) && e.g.is_none_or(|g| v <= g)
        });
        if ok {
            let c = cost_of(&instance.costs, x);
            if best.as_ref().is_none_or(|(_, b)| c < *b) {
                best = Some((x.clone(), c));
            }
        }
    })?;
    Ok(best)
}

/// Optimum of the LP relaxation, computed exactly as the rounding loop's first solve.
pub fn lp_lower_bound(instance: &BdgpeInstance) -> Result<Rational, OracleError> {
    Ok(rounding::initial_relaxation(instance)?.objective_value)
}
