//! Approximation pipelines for the metric many-visits TSP.
//!
//! `apx25` adds a single-visit Christofides tour to an optimal transportation
//! plan for the remaining `r − 1` visits. `apx15` rounds the degree-bounded
//! base-polymatroid relaxation, repairs parities with a minimum-cost perfect
//! matching and shortcuts the surplus visits.

use num_traits::Zero;
use thiserror::Error;

use crate::gpoly::{complete_edges, graphic_mvtsp_border, ENUMERATION_CAP};
use crate::mvtsp::{
    cycle_decompose, implicit_order, shortcut, EdgeMultiplicity, MvtspInstance, TourError, UnionFind,
};
use crate::rational::{rat, Rational};
use crate::rounding::{
    self, BdgpeInstance, Hyperedge, HypergraphConstraints, Regime, RoundingError, RoundingResult,
};

/// Largest vertex set the exact matching accepts.
pub const MATCHING_CAP: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApproxError {
    #[error("matching needs an even number of vertices, got {0}")]
    OddCardinality(usize),
    #[error("matching on {size} vertices exceeds the cap of {cap}")]
    SubsetTooLarge { size: usize, cap: usize },
    #[error("supply total {supply} differs from demand total {demand}")]
    Unbalanced { supply: i64, demand: i64 },
    #[error("{n} vertices give {edges} edges, above the enumeration cap of {cap}")]
    TooManyEdges { n: usize, edges: usize, cap: usize },
    #[error(transparent)]
    Tour(#[from] TourError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
}

/// Minimum-cost perfect matching on `vertices` by dynamic programming over
/// subsets: the lowest unmatched vertex is paired first.
pub fn min_cost_perfect_matching(
    vertices: &[usize],
    cost: impl Fn(usize, usize) -> Rational,
) -> Result<Vec<(usize, usize)>, ApproxError> {
    let k = vertices.len();
    if !k.is_multiple_of(2) {
        return Err(ApproxError::OddCardinality(k));
    }
    if k > MATCHING_CAP {
        return Err(ApproxError::SubsetTooLarge { size: k, cap: MATCHING_CAP });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let w: Vec<Vec<Rational>> = vertices.iter().map(|&u| vertices.iter().map(|&v| cost(u, v)).collect()).collect();
    let full = (1usize << k) - 1;
    // best[mask]: cheapest matching of the vertices in mask; only masks whose
    // complement is a prefix-closed removal order are reachable, others stay None.
    let mut best: Vec<Option<(Rational, usize)>> = vec![None; full + 1];
    best[0] = Some((Rational::zero(), 0));
    for mask in 1..=full {
        if mask.count_ones() % 2 != 0 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut choice: Option<(Rational, usize)> = None;
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if let Some((sub, _)) = &best[rest & !(1 << j)] {
                let c = sub + &w[i][j];
                if choice.as_ref().is_none_or(|(b, _)| c < *b) {
                    choice = Some((c, j));
                }
            }
        }
        best[mask] = choice;
    }
    let mut out = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let (_, j) = best[mask].clone().expect("even subsets are matchable");
        out.push((vertices[i], vertices[j]));
        mask &= !(1 << i) & !(1 << j);
    }
    Ok(out)
}

/// Minimum spanning tree by Kruskal with edges ordered by (cost, u, v).
pub fn minimum_spanning_tree(inst: &MvtspInstance) -> Vec<(usize, usize)> {
    let n = inst.n();
    let mut edges: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    edges.sort_by(|a, b| inst.cost(a.0, a.1).cmp(inst.cost(b.0, b.1)).then(a.cmp(b)));
    let mut uf = UnionFind::new(n);
    edges.into_iter().filter(|&(u, v)| uf.union(u, v)).collect()
}

/// Close an even connected multigraph into a tour with the given requests.
fn shortcut_to(z: &EdgeMultiplicity, r: &[i64]) -> Result<EdgeMultiplicity, ApproxError> {
    let cover = cycle_decompose(z)?;
    let tour = implicit_order(&cover)?;
    Ok(shortcut(&tour, r)?)
}

/// Vertices of odd degree in `z`, ascending.
pub fn odd_vertices(z: &EdgeMultiplicity, n: usize) -> Vec<usize> {
    let d = z.degrees(n);
    (0..n).filter(|&v| d[v] % 2 != 0).collect()
}

/// Single-visit tour (every request treated as 1): spanning tree, matching
/// on its odd vertices, Euler circuit and shortcuts.
pub fn christofides(inst: &MvtspInstance) -> Result<EdgeMultiplicity, ApproxError> {
    let n = inst.n();
    let mut z = EdgeMultiplicity::new();
    if n == 1 {
        z.add(0, 0, 1);
        return Ok(z);
    }
    for (u, v) in minimum_spanning_tree(inst) {
        z.add(u, v, 1);
    }
    let odd = odd_vertices(&z, n);
    for (u, v) in min_cost_perfect_matching(&odd, |a, b| inst.cost(a, b).clone())? {
        z.add(u, v, 1);
    }
    shortcut_to(&z, &vec![1; n])
}

/// `y(u, v)` for ordered pairs, including `u = v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportationPlan {
    pub y: Vec<Vec<i64>>,
}

impl TransportationPlan {
    pub fn cost(&self, costs: &[Vec<Rational>]) -> Rational {
        let mut total = Rational::zero();
        for (u, row) in self.y.iter().enumerate() {
            for (v, &k) in row.iter().enumerate() {
                if k != 0 {
                    total += &costs[u][v] * rat(k);
                }
            }
        }
        total
    }

    /// `z(uv) = y(u,v) + y(v,u)` for `u ≠ v`, `z(vv) = y(v,v)`.
    pub fn fold(&self) -> EdgeMultiplicity {
        let mut z = EdgeMultiplicity::new();
        for (u, row) in self.y.iter().enumerate() {
            for (v, &k) in row.iter().enumerate() {
                if k != 0 {
                    z.add(u, v, k);
                }
            }
        }
        z
    }
}

struct Arc {
    to: usize,
    cap: i64,
    cost: Rational,
    rev: usize,
}

/// Exact min-cost transportation plan by successive shortest paths.
pub fn transportation(costs: &[Vec<Rational>], supply: &[i64], demand: &[i64]) -> Result<TransportationPlan, ApproxError> {
    let (su, de): (i64, i64) = (supply.iter().sum(), demand.iter().sum());
    if su != de {
        return Err(ApproxError::Unbalanced { supply: su, demand: de });
    }
    let (a, b) = (supply.len(), demand.len());
    let (source, sink) = (a + b, a + b + 1);
    let nodes = a + b + 2;
    let mut g: Vec<Vec<Arc>> = (0..nodes).map(|_| Vec::new()).collect();
    let add = |g: &mut Vec<Vec<Arc>>, from: usize, to: usize, cap: i64, cost: Rational| {
        let (rf, rt) = (g[to].len(), g[from].len());
        g[from].push(Arc { to, cap, cost: cost.clone(), rev: rf });
        g[to].push(Arc { to: from, cap: 0, cost: -cost, rev: rt });
    };
    for (u, &s) in supply.iter().enumerate() {
        add(&mut g, source, u, s, Rational::zero());
    }
    for (v, &d) in demand.iter().enumerate() {
        add(&mut g, a + v, sink, d, Rational::zero());
    }
    for u in 0..a {
        for v in 0..b {
            add(&mut g, u, a + v, su, costs[u][v].clone());
        }
    }
    let mut remaining = su;
    while remaining > 0 {
        // Bellman-Ford on the residual graph; it is tiny and may carry
        // negative reverse arcs.
        let mut dist: Vec<Option<Rational>> = vec![None; nodes];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; nodes];
        dist[source] = Some(Rational::zero());
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                let Some(du) = dist[u].clone() else { continue };
                for (i, e) in g[u].iter().enumerate() {
                    if e.cap <= 0 {
                        continue;
                    }
                    let nd = &du + &e.cost;
                    if dist[e.to].as_ref().is_none_or(|d| nd < *d) {
                        dist[e.to] = Some(nd);
                        prev[e.to] = Some((u, i));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        assert!(dist[sink].is_some(), "balanced transportation problem always has a path");
        let mut push = remaining;
        let mut v = sink;
        while let Some((u, i)) = prev[v] {
            push = push.min(g[u][i].cap);
            v = u;
        }
        let mut v = sink;
        while let Some((u, i)) = prev[v] {
            g[u][i].cap -= push;
            let (to, rev) = (g[u][i].to, g[u][i].rev);
            g[to][rev].cap += push;
            v = u;
        }
        remaining -= push;
    }
    let mut y = vec![vec![0i64; b]; a];
    for u in 0..a {
        for e in &g[u] {
            if e.to >= a && e.to < a + b {
                y[u][e.to - a] = su - e.cap;
            }
        }
    }
    Ok(TransportationPlan { y })
}

/// Christofides for one visit each plus the optimal plan for the rest.
pub fn apx25(inst: &MvtspInstance) -> Result<EdgeMultiplicity, ApproxError> {
    let mut z = christofides(inst)?;
    let rest: Vec<i64> = inst.requests().iter().map(|r| r - 1).collect();
    let plan = transportation(inst.costs(), &rest, &rest)?;
    z.add_all(&plan.fold());
    Ok(z)
}

/// Degree-bounded instance over the graphic border pair: one hyperedge
/// `δ(v)` per vertex with lower bound `2 r(v)`, loops counted twice.
pub fn mvtsp_bdgpe_instance(inst: &MvtspInstance) -> Result<BdgpeInstance, ApproxError> {
    let n = inst.n();
    let edges = complete_edges(n);
    if edges.len() > ENUMERATION_CAP {
        return Err(ApproxError::TooManyEdges { n, edges: edges.len(), cap: ENUMERATION_CAP });
    }
    let pair = graphic_mvtsp_border(n, inst.requests());
    let costs = edges.iter().map(|&(u, v)| inst.cost(u, v).clone()).collect();
    let hyperedges = (0..n)
        .map(|v| {
            let (members, m) = edges
                .iter()
                .enumerate()
                .filter(|(_, &(a, b))| a == v || b == v)
                .map(|(i, &(a, b))| (i, if a == b { 2 } else { 1 }))
                .unzip();
            Hyperedge::new(members, m, Some(2 * inst.requests()[v]), None)
        })
        .collect();
    Ok(BdgpeInstance { pair, costs, constraints: HypergraphConstraints { hyperedges }, regime: Regime::LowerOnly })
}

#[derive(Debug, Clone)]
pub struct Apx15Output {
    pub tour: EdgeMultiplicity,
    /// Rounded element of the graphic base polymatroid.
    pub intermediate: EdgeMultiplicity,
    pub rounding: RoundingResult,
    pub matching: Vec<(usize, usize)>,
}

/// Round, fix parities by matching, shortcut.
pub fn apx15_detailed(inst: &MvtspInstance) -> Result<Apx15Output, ApproxError> {
    let n = inst.n();
    let bdgpe = mvtsp_bdgpe_instance(inst)?;
    let rounding = rounding::solve_bdgpe(&bdgpe)?;
    let intermediate = EdgeMultiplicity::from_vector(n, &rounding.z.0);
    let odd = odd_vertices(&intermediate, n);
    let matching = min_cost_perfect_matching(&odd, |a, b| inst.cost(a, b).clone())?;
    let mut z = intermediate.clone();
    for &(u, v) in &matching {
        z.add(u, v, 1);
    }
    let tour = shortcut_to(&z, inst.requests())?;
    Ok(Apx15Output { tour, intermediate, rounding, matching })
}

pub fn apx15(inst: &MvtspInstance) -> Result<EdgeMultiplicity, ApproxError> {
    Ok(apx15_detailed(inst)?.tour)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mvtsp::{check_feasible, tour_cost};

    fn unit_triangle(r: Vec<i64>) -> MvtspInstance {
        let costs = (0..3).map(|u| (0..3).map(|v| if u == v { rat(2) } else { rat(1) }).collect()).collect();
        MvtspInstance::new(costs, r).unwrap()
    }

    #[test]
    fn matching_small_cases() {
        assert!(min_cost_perfect_matching(&[], |_, _| rat(0)).unwrap().is_empty());
        assert_eq!(min_cost_perfect_matching(&[3, 5], |_, _| rat(1)).unwrap(), vec![(3, 5)]);
        assert_eq!(min_cost_perfect_matching(&[1, 2, 3], |_, _| rat(1)), Err(ApproxError::OddCardinality(3)));
        let big: Vec<usize> = (0..22).collect();
        assert!(matches!(
            min_cost_perfect_matching(&big, |_, _| rat(1)),
            Err(ApproxError::SubsetTooLarge { .. })
        ));
    }

    #[test]
    fn matching_prefers_cheap_pairs() {
        let c = |a: usize, b: usize| rat((a as i64 - b as i64).abs());
        let m = min_cost_perfect_matching(&[0, 1, 2, 3], c).unwrap();
        assert_eq!(m, vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn christofides_triangle() {
        let inst = unit_triangle(vec![1, 1, 1]);
        let z = christofides(&inst).unwrap();
        assert!(check_feasible(&inst, &z));
        assert_eq!(tour_cost(&inst, &z), rat(3));
    }

    #[test]
    fn christofides_tiny() {
        let one = MvtspInstance::new(vec![vec![rat(4)]], vec![1]).unwrap();
        assert_eq!(christofides(&one).unwrap().get(0, 0), 1);
        let two = MvtspInstance::new(vec![vec![rat(2), rat(1)], vec![rat(1), rat(2)]], vec![1, 1]).unwrap();
        let z = christofides(&two).unwrap();
        assert_eq!(z.get(0, 1), 2);
    }

    #[test]
    fn transportation_examples() {
        let costs = vec![vec![rat(3), rat(1)], vec![rat(1), rat(3)]];
        let empty = transportation(&costs, &[0, 0], &[0, 0]).unwrap();
        assert_eq!(empty.cost(&costs), rat(0));
        let plan = transportation(&costs, &[1, 1], &[1, 1]).unwrap();
        assert_eq!(plan.cost(&costs), rat(2));
        assert_eq!(plan.y, vec![vec![0, 1], vec![1, 0]]);
        assert!(matches!(transportation(&costs, &[1, 0], &[0, 0]), Err(ApproxError::Unbalanced { .. })));
    }

    #[test]
    fn apx25_triangle() {
        let inst = unit_triangle(vec![2, 2, 2]);
        let z = apx25(&inst).unwrap();
        assert!(check_feasible(&inst, &z));
        assert!(tour_cost(&inst, &z) <= rat(15));
    }

    #[test]
    fn apx15_single_vertex() {
        let inst = MvtspInstance::new(vec![vec![rat(3)]], vec![5]).unwrap();
        let out = apx15_detailed(&inst).unwrap();
        assert_eq!(out.tour.get(0, 0), 5);
        assert!(out.matching.is_empty());
        assert_eq!(tour_cost(&inst, &out.tour), rat(15));
    }

    #[test]
    fn apx15_triangle() {
        let inst = unit_triangle(vec![2, 2, 2]);
        let out = apx15_detailed(&inst).unwrap();
        assert!(check_feasible(&inst, &out.tour));
        assert!(tour_cost(&inst, &out.tour) <= rat(9));
        let d = out.intermediate.degrees(3);
        assert!(d.iter().all(|&x| x >= 3));
    }
}
