//! The g-polymatroid of degree-feasible edge multisets of a many-visits instance.

use super::{BorderPair, GroundSet, Subset};
use crate::rational::Ext;

/// `b(F) = |V(F)| − comp(F) + r̂` for nonempty `F`, `b(∅) = 0`, and
/// `p(X) = b(S) − b(S − X)`, where `r̂ = r(V) − n + 1`.
#[derive(Debug, Clone)]
pub struct GraphicBorder {
    n: usize,
    edges: Vec<(usize, usize)>,
    r_hat: i64,
}

/// Edges of the complete graph with loops, ordered `(u, v)` for `u ≤ v`
/// lexicographically; this fixes the ground-set order of the border pair.
pub fn complete_edges(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for u in 0..n {
        for v in u..n {
            out.push((u, v));
        }
    }
    out
}

pub fn edge_name(u: usize, v: usize) -> String {
    format!("{u}-{v}")
}

/// Base-polymatroid border pair whose integral points are the edge
/// multisets `z ≥ 0` with `z(E) = r(V)` and connected support covering `V`.
pub fn graphic_mvtsp_border(n: usize, r: &[i64]) -> BorderPair {
    assert_eq!(r.len(), n, "one request per vertex");
    let total: i64 = r.iter().sum();
    let edges = complete_edges(n);
    let names = edges.iter().map(|&(u, v)| edge_name(u, v)).collect();
    let ground = GroundSet::new(names).expect("edge names are distinct");
    BorderPair::from_graphic(ground, GraphicBorder { n, edges, r_hat: total - n as i64 + 1 })
}

impl GraphicBorder {
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `|V(F)| − comp(F)`, the rank of `F` in the cycle matroid.
    fn forest_rank(&self, f: Subset) -> i64 {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut rank = 0;
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            if f >> i & 1 == 1 {
                let (a, b) = (find(&mut parent, u), find(&mut parent, v));
                if a != b {
                    parent[a] = b;
                    rank += 1;
                }
            }
        }
        rank
    }

    fn upper(&self, f: Subset) -> i64 {
        if f == 0 {
            0
        } else {
            self.forest_rank(f) + self.r_hat
        }
    }

    pub(super) fn borders(&self, y: Subset) -> (Ext, Ext) {
        let full = super::full_mask(self.edges.len());
        let p = if y == 0 { 0 } else { self.upper(full) - self.upper(full & !y) };
        (Ext::Fin(p), Ext::Fin(self.upper(y)))
    }
}
