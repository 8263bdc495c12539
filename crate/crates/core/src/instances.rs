//! Seeded instance generators and the metric validator.
//!
//! All randomness comes from ChaCha8 seeded with `seed_from_u64`, so the same
//! seed and configuration give the same instance on every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gpoly::{BorderPair, GroundSet, IntVector, Subset};
use crate::mvtsp::MvtspInstance;
use crate::rational::{rat, ratio, Ext, Rational};
use crate::rounding::{BdgpeInstance, Hyperedge, HypergraphConstraints, Regime};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopRule {
    /// `c(v, v) = 2 · min_{u ≠ v} c(u, v)`, the largest metric value.
    Max,
    /// Uniform over halves in `[0, 2 · min_{u ≠ v} c(u, v)]`.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n: usize,
    pub r_lo: i64,
    pub r_hi: i64,
    /// Off-diagonal weights before metric closure are drawn from `[1, w_max]`.
    pub w_max: i64,
    pub loop_rule: LoopRule,
}

impl GeneratorConfig {
    pub fn new(seed: u64, n: usize, r_hi: i64) -> Self {
        GeneratorConfig { seed, n, r_lo: 1, r_hi, w_max: 20, loop_rule: LoopRule::Max }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError("n must be at least 1".into()));
        }
        if self.r_lo < 1 || self.r_hi < self.r_lo {
            return Err(ConfigError("request range must satisfy 1 <= r_lo <= r_hi".into()));
        }
        if self.w_max < 1 {
            return Err(ConfigError("w_max must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid generator configuration: {0}")]
pub struct ConfigError(pub String);

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric weights (with denominators 1, 2 or 4), closed under
/// shortest paths, then loop costs by the configured rule.
pub fn gen_metric_mvtsp(cfg: &GeneratorConfig) -> Result<MvtspInstance, ConfigError> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed);
    let n = cfg.n;
    let mut c = vec![vec![rat(0); n]; n];
    for u in 0..n {
        for v in u + 1..n {
            let den = *[1i64, 2, 4].choose(&mut rng).unwrap();
            let w = ratio(rng.gen_range(den..=cfg.w_max * den), den);
            c[u][v] = w.clone();
            c[v][u] = w;
        }
    }
    for k in 0..n {
        for u in 0..n {
            for v in 0..n {
                if u != v && u != k && v != k {
                    let via = &c[u][k] + &c[k][v];
                    if via < c[u][v] {
                        c[u][v] = via;
                    }
                }
            }
        }
    }
    for v in 0..n {
        c[v][v] = if n == 1 {
            rat(rng.gen_range(1..=cfg.w_max))
        } else {
            let min = (0..n).filter(|&u| u != v).map(|u| c[u][v].clone()).min().unwrap();
            match cfg.loop_rule {
                LoopRule::Max => min * rat(2),
                LoopRule::Uniform => {
                    let halves = rng.gen_range(0..=4i64);
                    min * ratio(halves, 2)
                }
            }
        };
    }
    let requests = (0..n).map(|_| rng.gen_range(cfg.r_lo..=cfg.r_hi)).collect();
    Ok(MvtspInstance::new(c, requests).expect("generated costs are symmetric and nonnegative"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricViolation {
    /// `c(a, b) > c(a, via) + c(via, b)` with `a ≠ b`.
    Triangle { a: usize, b: usize, via: usize },
    /// `c(v, v) > 2 c(v, via)`.
    Loop { v: usize, via: usize },
}

/// First violated inequality `c(a, b) ≤ c(a, x) + c(x, b)` over all
/// triples, loops included; `None` for a metric instance.
pub fn validate_metric(inst: &MvtspInstance) -> Option<MetricViolation> {
    let n = inst.n();
    for a in 0..n {
        for b in a..n {
            for x in 0..n {
                if inst.cost(a, b) > &(inst.cost(a, x) + inst.cost(x, b)) {
                    return Some(if a == b {
                        MetricViolation::Loop { v: a, via: x }
                    } else {
                        MetricViolation::Triangle { a, b, via: x }
                    });
                }
            }
        }
    }
    None
}

/// `b(Y) = Σ_k w_k · min(|Y ∩ A_k|, t_k)`: monotone, submodular, `b(∅) = 0`.
fn random_polymatroid(rng: &mut ChaCha8Rng, size: usize) -> Vec<i64> {
    let full = (1usize << size) - 1;
    let terms = rng.gen_range(1..=3);
    let mut table = vec![0i64; full + 1];
    for _ in 0..terms {
        let a = rng.gen_range(1..=full);
        let t = rng.gen_range(1..=(a as u64).count_ones() as i64);
        let w = rng.gen_range(1..=3);
        for (y, v) in table.iter_mut().enumerate() {
            *v += w * ((y & a).count_ones() as i64).min(t);
        }
    }
    table
}

/// Greedy vertex of the polymatroid in element order: `x(s_i) = b(s_1..s_i) − b(s_1..s_{i−1})`.
fn greedy_point(b: &[i64], size: usize) -> Vec<i64> {
    (0..size).map(|i| b[(1 << (i + 1)) - 1] - b[(1 << i) - 1]).collect()
}

/// Random paramodular pair plus one of its integer points.
pub fn gen_paramodular_with_point(seed: u64, size: usize) -> (BorderPair, IntVector) {
    assert!((1..=6).contains(&size), "paramodular generator supports 1..=6 elements");
    let mut rng = rng_for(seed);
    let full = (1usize << size) - 1;
    let b0 = random_polymatroid(&mut rng, size);
    let point = greedy_point(&b0, size);
    let (p, b): (Vec<Ext>, Vec<Ext>) = if rng.gen_bool(0.5) {
        // base polymatroid: p(X) = b(S) − b(S − X)
        ((0..=full).map(|y| Ext::Fin(b0[full] - b0[full & !y])).collect(), b0.iter().map(|&v| Ext::Fin(v)).collect())
    } else {
        (vec![Ext::Fin(0); full + 1], b0.iter().map(|&v| Ext::Fin(v)).collect())
    };
    let ground = GroundSet::indexed(size);
    let base = BorderPair::explicit(ground, p, b).expect("polymatroid pairs are paramodular");
    // Shift by a nonpositive vector, so points stay nonnegative.
    let shift = IntVector((0..size).map(|_| -rng.gen_range(0..=2)).collect());
    let shifted = base.shift(&shift);
    let point = IntVector(point.iter().zip(&shift.0).map(|(x, z)| x - z).collect());
    let lower: Vec<Ext> = point
        .0
        .iter()
        .map(|&x| if rng.gen_bool(0.25) { Ext::NegInf } else { Ext::Fin(x - rng.gen_range(0..=2)) })
        .collect();
    let upper: Vec<Ext> = point
        .0
        .iter()
        .map(|&x| if rng.gen_bool(0.25) { Ext::PosInf } else { Ext::Fin(x + rng.gen_range(0..=2)) })
        .collect();
    let boxed = shifted.intersect_box(&lower, &upper).expect("the box contains a point of the polyhedron");
    let pair = boxed.materialize().expect("small ground set");
    (pair, point)
}

/// Random explicit paramodular pair on `size ≤ 6` elements.
pub fn gen_paramodular(seed: u64, size: usize) -> BorderPair {
    gen_paramodular_with_point(seed, size).0
}

/// Random degree-bounded instance whose bounds admit the generator's
/// reference point, so the relaxation is feasible.
pub fn gen_bdgpe(seed: u64, size: usize, regime: Regime) -> BdgpeInstance {
    let (pair, point) = gen_paramodular_with_point(seed, size);
    let mut rng = rng_for(seed ^ 0x9e37_79b9_7f4a_7c15);
    let costs: Vec<Rational> = (0..size).map(|_| ratio(rng.gen_range(-10..=20), 2)).collect();
    let count = rng.gen_range(1..=3);
    let hyperedges = (0..count)
        .map(|_| {
            let mask: Subset = rng.gen_range(1..(1u64 << size));
            let members: Vec<usize> = (0..size).filter(|i| mask >> i & 1 == 1).collect();
            let m: Vec<i64> = members.iter().map(|_| rng.gen_range(1..=2)).collect();
            let at: i64 = members.iter().zip(&m).map(|(&s, &k)| k * point.0[s]).sum();
            let f = (at - rng.gen_range(0..=2)).max(0);
            let g = at + rng.gen_range(0..=2);
            match regime {
                Regime::Both => Hyperedge::new(members, m, Some(f), Some(g)),
                Regime::LowerOnly => Hyperedge::new(members, m, Some(f), None),
                Regime::UpperOnly => Hyperedge::new(members, m, None, Some(g)),
            }
        })
        .collect();
    BdgpeInstance { pair, costs, constraints: HypergraphConstraints { hyperedges }, regime }
}
