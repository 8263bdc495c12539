//! Many-visits TSP instances and compact tour machinery: edge multiplicities,
//! cycle covers, Eulerian circuits, the implicit vertex order and metric
//! shortcutting on it.
//!
//! Tours are never expanded into explicit vertex sequences; the number of
//! visits is the request total and may be astronomically large.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;
use thiserror::Error;

use crate::rational::{rat, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TourError {
    #[error("vertex {0} has odd degree")]
    OddDegree(usize),
    #[error("support of the edge multiplicities is disconnected")]
    Disconnected,
    #[error("multigraph is not Eulerian")]
    NotEulerian,
    #[error("tour visits vertex {vertex} {visits} times but {required} visits are requested")]
    DeficitVisit { vertex: usize, visits: i64, required: i64 },
    #[error("edge {0}-{1} is outside the vertex range")]
    BadEdge(usize, usize),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MvtspInstance {
    costs: Vec<Vec<Rational>>,
    requests: Vec<i64>,
}

impl MvtspInstance {
    /// Checks shape, symmetry, nonnegativity and positive requests. Metricity
    /// is checked separately by `instances::validate_metric`.
    pub fn new(costs: Vec<Vec<Rational>>, requests: Vec<i64>) -> Result<Self, TourError> {
        let n = requests.len();
        if n == 0 {
            return Err(TourError::InvalidInstance("at least one vertex is required".into()));
        }
        if costs.len() != n || costs.iter().any(|row| row.len() != n) {
            return Err(TourError::InvalidInstance(format!("cost matrix must be {n}×{n}")));
        }
        for u in 0..n {
            for v in 0..n {
                if costs[u][v] != costs[v][u] {
                    return Err(TourError::InvalidInstance(format!("costs not symmetric at ({u}, {v})")));
                }
                if costs[u][v] < Rational::zero() {
                    return Err(TourError::InvalidInstance(format!("negative cost at ({u}, {v})")));
                }
            }
        }
        if let Some(v) = requests.iter().position(|&r| r < 1) {
            return Err(TourError::InvalidInstance(format!("request of vertex {v} must be positive")));
        }
        Ok(MvtspInstance { costs, requests })
    }

    pub fn n(&self) -> usize {
        self.requests.len()
    }

    pub fn cost(&self, u: usize, v: usize) -> &Rational {
        &self.costs[u][v]
    }

    pub fn costs(&self) -> &[Vec<Rational>] {
        &self.costs
    }

    pub fn requests(&self) -> &[i64] {
        &self.requests
    }

    pub fn total_requests(&self) -> i64 {
        self.requests.iter().sum()
    }

    /// Same costs, different requests.
    pub fn with_requests(&self, requests: Vec<i64>) -> Result<Self, TourError> {
        MvtspInstance::new(self.costs.clone(), requests)
    }
}

fn key(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

/// Nonnegative multiplicity per unordered edge, loops included; zero entries are not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct EdgeMultiplicity {
    edges: BTreeMap<(usize, usize), i64>,
}

impl EdgeMultiplicity {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, u: usize, v: usize) -> i64 {
        self.edges.get(&key(u, v)).copied().unwrap_or(0)
    }

    /// Adds `k` (possibly negative) copies; panics if the result is negative.
    pub fn add(&mut self, u: usize, v: usize, k: i64) {
        let e = self.edges.entry(key(u, v)).or_insert(0);
        *e += k;
        assert!(*e >= 0, "negative edge multiplicity");
        if *e == 0 {
            self.edges.remove(&key(u, v));
        }
    }

    pub fn add_all(&mut self, other: &EdgeMultiplicity) {
        for (&(u, v), &k) in &other.edges {
            self.add(u, v, k);
        }
    }

    /// Stored edges `(u, v, z)` with `u ≤ v`, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        self.edges.iter().map(|(&(u, v), &k)| (u, v, k))
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// `z(E)`.
    pub fn total(&self) -> i64 {
        self.edges.values().sum()
    }

    /// `d_z(v)`, a loop counting twice.
    pub fn degree(&self, v: usize) -> i64 {
        self.iter()
            .map(|(a, b, k)| if a == v && b == v { 2 * k } else if a == v || b == v { k } else { 0 })
            .sum()
    }

    pub fn degrees(&self, n: usize) -> Vec<i64> {
        let mut d = vec![0; n];
        for (u, v, k) in self.iter() {
            d[u] += k;
            d[v] += k;
        }
        d
    }

    pub fn max_vertex(&self) -> Option<usize> {
        self.edges.keys().map(|&(_, v)| v).max()
    }

    /// Vertices touched by the support.
    pub fn covered(&self) -> BTreeSet<usize> {
        self.iter().flat_map(|(u, v, _)| [u, v]).collect()
    }

    /// Whether the support forms one connected graph covering all of `0..n`.
    pub fn spans_connected(&self, n: usize) -> bool {
        if n == 0 {
            return self.is_empty();
        }
        let mut uf = UnionFind::new(n);
        for (u, v, _) in self.iter() {
            if u >= n || v >= n {
                return false;
            }
            uf.union(u, v);
        }
        let covered = self.covered();
        covered.len() == n && (0..n).all(|v| uf.find(v) == uf.find(0))
    }

    /// Values in the ground-set order of `gpoly::graphic_mvtsp_border`.
    pub fn to_vector(&self, n: usize) -> Vec<i64> {
        crate::gpoly::complete_edges(n).into_iter().map(|(u, v)| self.get(u, v)).collect()
    }

    pub fn from_vector(n: usize, z: &[i64]) -> Self {
        let mut out = EdgeMultiplicity::new();
        for ((u, v), &k) in crate::gpoly::complete_edges(n).into_iter().zip(z) {
            if k != 0 {
                out.add(u, v, k);
            }
        }
        out
    }

    /// Edges of a closed walk given by its vertex sequence (the last vertex
    /// connects back to the first).
    pub fn from_closed_walk(walk: &[usize]) -> Self {
        let mut out = EdgeMultiplicity::new();
        for (i, &u) in walk.iter().enumerate() {
            out.add(u, walk[(i + 1) % walk.len()], 1);
        }
        out
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// `d_z(v) = 2 r(v)` for every vertex and the support is connected.
pub fn check_feasible(inst: &MvtspInstance, z: &EdgeMultiplicity) -> bool {
    feasibility_problem(inst, z).is_none()
}

/// First reason `z` is not a tour of `inst`, in human-readable form.
pub fn feasibility_problem(inst: &MvtspInstance, z: &EdgeMultiplicity) -> Option<String> {
    let n = inst.n();
    if let Some(m) = z.max_vertex() {
        if m >= n {
            return Some(format!("edge touches vertex {m}, instance has {n} vertices"));
        }
    }
    let d = z.degrees(n);
    for v in 0..n {
        if d[v] != 2 * inst.requests()[v] {
            return Some(format!("vertex {v} has degree {} but needs {}", d[v], 2 * inst.requests()[v]));
        }
    }
    if !z.spans_connected(n) {
        return Some("support is disconnected".into());
    }
    None
}

pub fn tour_cost(inst: &MvtspInstance, z: &EdgeMultiplicity) -> Rational {
    z.iter().fold(Rational::zero(), |acc, (u, v, k)| acc + inst.cost(u, v) * rat(k))
}

/// Simple closed walks with repetition counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleCover {
    /// `(C, μ_C)`; `C` lists vertices of a closed walk without repeating the start.
    pub cycles: Vec<(Vec<usize>, i64)>,
}

impl CycleCover {
    pub fn recompose(&self) -> EdgeMultiplicity {
        let mut z = EdgeMultiplicity::new();
        for (c, mu) in &self.cycles {
            for (u, v, k) in EdgeMultiplicity::from_closed_walk(c).iter() {
                z.add(u, v, k * mu);
            }
        }
        z
    }

    /// The auxiliary multigraph using every cycle once.
    pub fn auxiliary_graph(&self) -> EdgeMultiplicity {
        let mut a = EdgeMultiplicity::new();
        for (c, _) in &self.cycles {
            a.add_all(&EdgeMultiplicity::from_closed_walk(c));
        }
        a
    }
}

fn check_even_connected(z: &EdgeMultiplicity) -> Result<(), TourError> {
    let covered = z.covered();
    let Some(&last) = covered.iter().next_back() else {
        return Ok(());
    };
    let d = z.degrees(last + 1);
    if let Some(v) = (0..=last).find(|&v| d[v] % 2 != 0) {
        return Err(TourError::OddDegree(v));
    }
    let mut uf = UnionFind::new(last + 1);
    for (u, v, _) in z.iter() {
        uf.union(u, v);
    }
    let root = uf.find(*covered.iter().next().unwrap());
    if covered.iter().any(|&v| uf.find(v) != root) {
        return Err(TourError::Disconnected);
    }
    Ok(())
}

/// Decompose an even, connected multigraph into cycles with multiplicities.
///
/// Loops become length-1 cycles. Otherwise a walk starts at the lowest vertex
/// with remaining degree and follows the lowest available neighbour (other
/// than the one it just came from, when possible) until a vertex repeats;
/// the closed part is subtracted as often as it fits.
pub fn cycle_decompose(z: &EdgeMultiplicity) -> Result<CycleCover, TourError> {
    check_even_connected(z)?;
    let mut cycles = Vec::new();
    let mut rem = EdgeMultiplicity::new();
    for (u, v, k) in z.iter() {
        if u == v {
            cycles.push((vec![u], k));
        } else {
            rem.add(u, v, k);
        }
    }
    // Neighbour lists for the lowest-neighbour rule.
    let mut adj: BTreeMap<usize, BTreeMap<usize, i64>> = BTreeMap::new();
    for (u, v, k) in rem.iter() {
        adj.entry(u).or_default().insert(v, k);
        adj.entry(v).or_default().insert(u, k);
    }
    while let Some((&start, _)) = adj.iter().find(|(_, nb)| !nb.is_empty()) {
        let mut path = vec![start];
        let mut used: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        let cycle = loop {
            let cur = *path.last().unwrap();
            let prev = path.len().checked_sub(2).map(|i| path[i]);
            let open: Vec<usize> = adj[&cur]
                .iter()
                .filter(|(&w, &k)| k > used.get(&key(cur, w)).copied().unwrap_or(0))
                .map(|(&w, _)| w)
                .collect();
            // Stepping straight back is a last resort; it yields a doubled edge.
            let next = open
                .iter()
                .copied()
                .find(|&w| Some(w) != prev)
                .or_else(|| open.first().copied())
                .expect("even degrees leave an exit");
            *used.entry(key(cur, next)).or_insert(0) += 1;
            if let Some(i) = path.iter().position(|&w| w == next) {
                break path[i..].to_vec();
            }
            path.push(next);
        };
        let walk = EdgeMultiplicity::from_closed_walk(&cycle);
        let mu = walk.iter().map(|(u, v, k)| adj[&u][&v] / k).min().unwrap();
        for (u, v, k) in walk.iter() {
            for (a, b) in [(u, v), (v, u)] {
                let nb = adj.get_mut(&a).unwrap();
                let left = nb[&b] - k * mu;
                if left == 0 {
                    nb.remove(&b);
                } else {
                    nb.insert(b, left);
                }
            }
        }
        cycles.push((cycle, mu));
    }
    Ok(CycleCover { cycles })
}

/// Hierholzer's algorithm from the lowest covered vertex, lowest neighbour first.
/// The returned closed walk repeats its start at the end.
pub fn eulerian_circuit(a: &EdgeMultiplicity) -> Result<Vec<usize>, TourError> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    check_even_connected(a).map_err(|_| TourError::NotEulerian)?;
    let mut adj: BTreeMap<usize, BTreeMap<usize, i64>> = BTreeMap::new();
    for (u, v, k) in a.iter() {
        adj.entry(u).or_default().insert(v, k);
        adj.entry(v).or_default().insert(u, k);
    }
    let start = *adj.keys().next().unwrap();
    let mut stack = vec![start];
    let mut circuit = Vec::new();
    while let Some(&v) = stack.last() {
        let next = adj[&v].iter().next().map(|(&w, _)| w);
        match next {
            Some(w) => {
                let pairs: &[(usize, usize)] = if v == w { &[(v, v)] } else { &[(v, w), (w, v)] };
                for &(x, y) in pairs {
                    let nb = adj.get_mut(&x).unwrap();
                    let left = nb[&y] - 1;
                    if left == 0 {
                        nb.remove(&y);
                    } else {
                        nb.insert(y, left);
                    }
                }
                stack.push(w);
            }
            None => {
                circuit.push(v);
                stack.pop();
            }
        }
    }
    circuit.reverse();
    Ok(circuit)
}

/// A block of the implicit closed walk: `pattern` repeated `count` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub pattern: Vec<usize>,
    pub count: i64,
}

/// Closed walk `η′`, stored as the Eulerian circuit `η` of the auxiliary
/// graph with each cycle's remaining `μ_C − 1` traversals spliced in after
/// the first visit to one of its vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImplicitTour {
    pub cover: CycleCover,
    /// Circuit of the auxiliary graph, start repeated at the end.
    pub eta: Vec<usize>,
    pub segments: Vec<Segment>,
}

impl ImplicitTour {
    /// Number of occurrences of each vertex in the walk.
    pub fn visits(&self, n: usize) -> Vec<i64> {
        let mut out = vec![0i64; n];
        for s in &self.segments {
            for &v in &s.pattern {
                out[v] += s.count;
            }
        }
        out
    }

    pub fn len(&self) -> i64 {
        self.segments.iter().map(|s| s.pattern.len() as i64 * s.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Explicit walk, or `None` if it is longer than `limit`.
    pub fn expand(&self, limit: usize) -> Option<Vec<usize>> {
        if self.len() > limit as i64 {
            return None;
        }
        let mut out = Vec::new();
        for s in &self.segments {
            for _ in 0..s.count {
                out.extend_from_slice(&s.pattern);
            }
        }
        Some(out)
    }

    pub fn edges(&self) -> EdgeMultiplicity {
        segments_edges(&self.segments)
    }
}

/// Edge multiplicities of the closed walk given by segments, computed per
/// block so that huge repetition counts cost nothing.
fn segments_edges(segments: &[Segment]) -> EdgeMultiplicity {
    let mut z = EdgeMultiplicity::new();
    let blocks: Vec<&Segment> = segments.iter().filter(|s| s.count > 0 && !s.pattern.is_empty()).collect();
    if blocks.is_empty() {
        return z;
    }
    for s in &blocks {
        let p = &s.pattern;
        for w in p.windows(2) {
            z.add(w[0], w[1], s.count);
        }
        if s.count > 1 {
            z.add(p[p.len() - 1], p[0], s.count - 1);
        }
    }
    for (i, s) in blocks.iter().enumerate() {
        let next = blocks[(i + 1) % blocks.len()];
        z.add(*s.pattern.last().unwrap(), next.pattern[0], 1);
    }
    z
}

/// Build `η′` from a cycle cover whose auxiliary graph is connected.
pub fn implicit_order(cover: &CycleCover) -> Result<ImplicitTour, TourError> {
    let a = cover.auxiliary_graph();
    let eta = eulerian_circuit(&a)?;
    let mut expanded = vec![false; cover.cycles.len()];
    let mut seen = BTreeSet::new();
    let mut segments = Vec::new();
    let body = if eta.is_empty() { &eta[..] } else { &eta[..eta.len() - 1] };
    for &u in body {
        segments.push(Segment { pattern: vec![u], count: 1 });
        if !seen.insert(u) {
            continue;
        }
        for (i, (c, mu)) in cover.cycles.iter().enumerate() {
            if expanded[i] || !c.contains(&u) {
                continue;
            }
            expanded[i] = true;
            if *mu > 1 {
                // Rotated to leave from u and come back to it.
                let at = c.iter().position(|&w| w == u).unwrap();
                let mut pattern: Vec<usize> = c[at + 1..].iter().chain(&c[..at]).copied().collect();
                pattern.push(u);
                segments.push(Segment { pattern, count: mu - 1 });
            }
        }
    }
    Ok(ImplicitTour { cover: cover.clone(), eta, segments })
}

/// Remove the last `visits(w) − r(w)` occurrences of every vertex, joining
/// each gap's neighbours by a direct edge (a loop when they coincide).
pub fn shortcut(tour: &ImplicitTour, r: &[i64]) -> Result<EdgeMultiplicity, TourError> {
    let n = r.len();
    let visits = tour.visits(n);
    let mut surplus = vec![0i64; n];
    for v in 0..n {
        if visits[v] < r[v] {
            return Err(TourError::DeficitVisit { vertex: v, visits: visits[v], required: r[v] });
        }
        surplus[v] = visits[v] - r[v];
    }
    // cut[i][w]: the last cut[i][w] copies of segment i lose their w.
    let mut cut: Vec<BTreeMap<usize, i64>> = vec![BTreeMap::new(); tour.segments.len()];
    for (i, s) in tour.segments.iter().enumerate().rev() {
        for &w in &s.pattern {
            let t = surplus[w].min(s.count);
            if t > 0 {
                cut[i].insert(w, t);
                surplus[w] -= t;
            }
        }
    }
    let mut out = Vec::new();
    for (s, cuts) in tour.segments.iter().zip(&cut) {
        if cuts.is_empty() {
            out.push(s.clone());
            continue;
        }
        // Copy j drops w iff j ≥ count − cut(w); split at the distinct thresholds.
        let mut marks: Vec<i64> = cuts.values().map(|t| s.count - t).collect();
        marks.push(0);
        marks.push(s.count);
        marks.sort_unstable();
        marks.dedup();
        for w in marks.windows(2) {
            let (from, to) = (w[0], w[1]);
            let pattern = s
                .pattern
                .iter()
                .copied()
                .filter(|v| cuts.get(v).is_none_or(|t| from < s.count - t))
                .collect();
            out.push(Segment { pattern, count: to - from });
        }
    }
    Ok(segments_edges(&out))
}
