//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the solver code paths it is used to check.
#![allow(dead_code)]

use std::collections::BTreeSet;

use mvtsp::gpoly::{complete_edges, IntVector};
use mvtsp::lp::LinearProgram;
use mvtsp::mvtsp::MvtspInstance;
use mvtsp::rational::{rat, Ext, Rational};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unique solution of a square system by Gauss–Jordan elimination.
pub fn solve_square(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n).find(|&i| !a[i][c].is_zero())?;
        a.swap(c, p);
        b.swap(c, p);
        let inv = a[c][c].recip();
        for v in a[c].iter_mut() {
            *v *= &inv;
        }
        b[c] *= &inv;
        for i in 0..n {
            if i != c && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..n {
                    let d = &f * &a[c][j];
                    a[i][j] -= d;
                }
                let d = &f * &b[c];
                b[i] -= d;
            }
        }
    }
    Some(b)
}

fn choose(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

pub fn lp_feasible(lp: &LinearProgram, x: &[Rational]) -> bool {
    lp.rows.iter().all(|r| {
        let act = r.coeffs.iter().zip(x).fold(Rational::zero(), |a, (c, v)| a + c * v);
        r.lower.as_ref().is_none_or(|l| &act >= l) && r.upper.as_ref().is_none_or(|u| &act <= u)
    })
}

/// Minimum objective over all vertices: every choice of `n` rows at one of
/// their bounds whose system has a unique feasible solution.
pub fn vertex_enumeration_optimum(lp: &LinearProgram) -> Option<Rational> {
    let n = lp.num_vars();
    let mut best: Option<Rational> = None;
    for rows in choose(lp.rows.len(), n) {
        let sides: Vec<Vec<Rational>> = rows
            .iter()
            .map(|&i| lp.rows[i].lower.iter().chain(lp.rows[i].upper.iter()).cloned().collect())
            .collect();
        let combos: usize = sides.iter().map(Vec::len).product();
        for mut k in 0..combos {
            let mut rhs = Vec::with_capacity(n);
            for s in &sides {
                rhs.push(s[k % s.len()].clone());
                k /= s.len();
            }
            let a = rows.iter().map(|&i| lp.rows[i].coeffs.clone()).collect();
            if let Some(x) = solve_square(a, rhs) {
                if lp_feasible(lp, &x) {
                    let v = lp.objective.iter().zip(&x).fold(Rational::zero(), |a, (c, v)| a + c * v);
                    if best.as_ref().is_none_or(|b| v < *b) {
                        best = Some(v);
                    }
                }
            }
        }
    }
    best
}

/// Small bounded LP: a box on every variable plus a few random rows.
pub fn random_bounded_lp(seed: u64) -> LinearProgram {
    let mut r = rng(seed);
    let n = r.gen_range(1..=3);
    let mut lp = LinearProgram::new((0..n).map(|_| rat(r.gen_range(-3..=3))).collect());
    for i in 0..n {
        let mut c = vec![rat(0); n];
        c[i] = rat(1);
        let lo = r.gen_range(-3..=0);
        lp.add_row(c, Some(rat(lo)), Some(rat(lo + r.gen_range(0..=5))));
    }
    for _ in 0..r.gen_range(0..=3) {
        let c: Vec<Rational> = (0..n).map(|_| rat(r.gen_range(-2..=2))).collect();
        let (lo, hi) = match r.gen_range(0..3) {
            0 => (Some(rat(r.gen_range(-4..=2))), None),
            1 => (None, Some(rat(r.gen_range(-2..=4)))),
            _ => {
                let lo = r.gen_range(-4..=2);
                (Some(rat(lo)), Some(rat(lo + r.gen_range(0..=3))))
            }
        };
        lp.add_row(c, lo, hi);
    }
    lp
}

/// Supermodular p, submodular b and the cross-inequality, checked over all pairs.
pub fn paramodular_by_definition(p: &[Ext], b: &[Ext]) -> bool {
    let n = p.len();
    for x in 0..n {
        for y in 0..n {
            let (u, i) = (x | y, x & y);
            if p[x] + p[y] > p[u] + p[i] && p[u].is_finite() && p[i].is_finite() {
                return false;
            }
            if (p[x] + p[y]).is_finite() && !(p[u] + p[i]).is_finite() {
                return false;
            }
            if b[x] + b[y] < b[u] + b[i] && b[u].is_finite() && b[i].is_finite() {
                return false;
            }
            if (b[x] + b[y]).is_finite() && !(b[u] + b[i]).is_finite() {
                return false;
            }
            let (xy, yx) = (x & !y, y & !x);
            let lhs = b[x] - p[y];
            let rhs = b[xy] - p[yx];
            if lhs.is_finite() && rhs.is_finite() && lhs < rhs {
                return false;
            }
            if lhs.is_finite() && !rhs.is_finite() {
                return false;
            }
        }
    }
    true
}

/// `p(Y) ≤ x(Y) ≤ b(Y)` for every subset, straight from the tables.
pub fn in_tables(p: &[Ext], b: &[Ext], x: &[Rational]) -> bool {
    (0..p.len()).all(|y| {
        let s = x.iter().enumerate().filter(|(i, _)| y >> i & 1 == 1).fold(Rational::zero(), |a, (_, v)| a + v);
        p[y].cmp_rational(&s).is_le() && b[y].cmp_rational(&s).is_ge()
    })
}

pub fn int_in_tables(p: &[Ext], b: &[Ext], x: &IntVector) -> bool {
    in_tables(p, b, &x.0.iter().map(|&v| rat(v)).collect::<Vec<_>>())
}

/// Every integer vector in the box `[lo, hi]`.
pub fn box_points(lo: &[i64], hi: &[i64]) -> Vec<IntVector> {
    let mut out = vec![IntVector(Vec::new())];
    for (l, h) in lo.iter().zip(hi) {
        out = out
            .into_iter()
            .flat_map(|v| {
                (*l..=*h).map(move |x| {
                    let mut w = v.0.clone();
                    w.push(x);
                    IntVector(w)
                })
            })
            .collect();
    }
    out
}

/// Whether the edges with positive multiplicity touch and connect all `n` vertices.
pub fn support_connects(n: usize, edges: &[(usize, usize)], z: &[i64]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut v: usize) -> usize {
        while p[v] != v {
            p[v] = p[p[v]];
            v = p[v];
        }
        v
    }
    let mut touched = vec![false; n];
    for (&(u, v), &k) in edges.iter().zip(z) {
        if k > 0 {
            touched[u] = true;
            touched[v] = true;
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            parent[a] = b;
        }
    }
    let root = find(&mut parent, 0);
    touched.iter().all(|&t| t) && (0..n).all(|v| find(&mut parent, v) == root)
}

/// `{z ≥ 0 : z(E) = r(V), supp(z) connected and spanning}` on the complete
/// graph with loops, in the edge order of `complete_edges`.
pub fn graphic_points_by_definition(n: usize, r: &[i64]) -> BTreeSet<Vec<i64>> {
    let edges = complete_edges(n);
    let total: i64 = r.iter().sum();
    let mut out = BTreeSet::new();
    let mut z = vec![0i64; edges.len()];
    fn go(i: usize, left: i64, z: &mut Vec<i64>, n: usize, edges: &[(usize, usize)], out: &mut BTreeSet<Vec<i64>>) {
        if i + 1 == z.len() {
            z[i] = left;
            if support_connects(n, edges, z) {
                out.insert(z.clone());
            }
            return;
        }
        for k in 0..=left {
            z[i] = k;
            go(i + 1, left - k, z, n, edges, out);
        }
        z[i] = 0;
    }
    go(0, total, &mut z, n, &edges, &mut out);
    out
}

/// Cheapest tour by plain enumeration of edge multiplicities with degree
/// bookkeeping: `d(v) = 2 r(v)` (loops count twice) and connected support.
pub fn brute_mvtsp_optimum(inst: &MvtspInstance) -> Rational {
    let n = inst.n();
    let edges = complete_edges(n);
    let mut need: Vec<i64> = inst.requests().iter().map(|r| 2 * r).collect();
    let mut z = vec![0i64; edges.len()];
    let mut best: Option<Rational> = None;
    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        edges: &[(usize, usize)],
        need: &mut Vec<i64>,
        z: &mut Vec<i64>,
        inst: &MvtspInstance,
        best: &mut Option<Rational>,
    ) {
        if i == edges.len() {
            if need.iter().all(|&d| d == 0) && support_connects(inst.n(), edges, z) {
                let c = edges.iter().zip(z.iter()).fold(Rational::zero(), |a, (&(u, v), &k)| a + inst.cost(u, v) * rat(k));
                if best.as_ref().is_none_or(|b| c < *b) {
                    *best = Some(c);
                }
            }
            return;
        }
        let (u, v) = edges[i];
        let max = if u == v { need[u] / 2 } else { need[u].min(need[v]) };
        for k in 0..=max {
            z[i] = k;
            if u == v {
                need[u] -= 2 * k;
            } else {
                need[u] -= k;
                need[v] -= k;
            }
            go(i + 1, edges, need, z, inst, best);
            if u == v {
                need[u] += 2 * k;
            } else {
                need[u] += k;
                need[v] += k;
            }
        }
        z[i] = 0;
    }
    go(0, &edges, &mut need, &mut z, inst, &mut best);
    best.expect("every instance with r ≥ 1 has a tour")
}
