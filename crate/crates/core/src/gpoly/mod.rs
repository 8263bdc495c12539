//! Border pairs of generalized polymatroids.
//!
//! A [`BorderPair`] is a base evaluator (an explicit table or the graphic
//! border of a many-visits instance) plus a stack of recorded modifications:
//! deletion, contraction by an integer vector and box intersection. Queries
//! walk the stack for one subset at a time; only box intersection
//! materialises a table, because its formula ranges over every subset.
//!
//! Subsets are `u64` bitmasks over the ground set's fixed element order.

mod graphic;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::rational::Ext;

pub use graphic::{complete_edges, edge_name, graphic_mvtsp_border, GraphicBorder};

/// Largest ground set on which exhaustive subset enumeration is attempted.
pub const ENUMERATION_CAP: usize = 16;

pub type Subset = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GpolyError {
    #[error("border pair is not paramodular: {family} fails for X={x:#b}, Y={y:#b}")]
    NotParamodular { family: ParamodularFamily, x: Subset, y: Subset },
    #[error("ground set has {size} elements, enumeration cap is {cap}")]
    GroundSetTooLarge { size: usize, cap: usize },
    #[error("vector is not in the polyhedron: subset {subset:#b} violates its border")]
    ElementNotInPolyhedron { subset: Subset },
    #[error("box intersection is empty: subset {subset:#b} separates the box from the polyhedron")]
    EmptyIntersection { subset: Subset },
    #[error("expected a vector of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid border table: {0}")]
    InvalidTable(String),
    #[error("duplicate ground-set element `{0}`")]
    DuplicateElement(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamodularFamily {
    EmptySet,
    Supermodularity,
    Submodularity,
    CrossInequality,
}

impl fmt::Display for ParamodularFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParamodularFamily::EmptySet => "p(∅) = b(∅) = 0",
            ParamodularFamily::Supermodularity => "supermodularity of p",
            ParamodularFamily::Submodularity => "submodularity of b",
            ParamodularFamily::CrossInequality => "the cross-inequality",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundSet {
    names: Vec<String>,
}

impl GroundSet {
    pub fn new(names: Vec<String>) -> Result<Self, GpolyError> {
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(GpolyError::DuplicateElement(n.clone()));
            }
        }
        Ok(GroundSet { names })
    }

    /// Ground set `s0, s1, …` of the given size.
    pub fn indexed(size: usize) -> Self {
        GroundSet { names: (0..size).map(|i| format!("s{i}")).collect() }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn full(&self) -> Subset {
        full_mask(self.len())
    }

    fn without(&self, z: Subset) -> (GroundSet, Vec<usize>) {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| z >> i & 1 == 0).collect();
        let names = keep.iter().map(|&i| self.names[i].clone()).collect();
        (GroundSet { names }, keep)
    }
}

pub fn full_mask(size: usize) -> Subset {
    if size >= 64 {
        u64::MAX
    } else {
        (1u64 << size) - 1
    }
}

/// Integral vector indexed by the ground set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntVector(pub Vec<i64>);

impl IntVector {
    pub fn zeros(len: usize) -> Self {
        IntVector(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `x(Y) = Σ_{s ∈ Y} x(s)`.
    pub fn sum_over(&self, y: Subset) -> i64 {
        self.0.iter().enumerate().filter(|(i, _)| y >> i & 1 == 1).map(|(_, v)| *v).sum()
    }

    pub fn add(&self, other: &IntVector) -> IntVector {
        IntVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

#[derive(Debug)]
enum Layer {
    Explicit { p: Vec<Ext>, b: Vec<Ext> },
    Graphic(GraphicBorder),
    /// Restriction to the parent positions listed in `keep`.
    Deleted { parent: Arc<Layer>, keep: Vec<usize> },
    /// Both borders reduced by the modular function of `z`.
    Contracted { parent: Arc<Layer>, z: Vec<i64> },
    /// Box intersection; the new borders are tabulated once when recorded.
    Boxed {
        #[allow(dead_code)]
        parent: Arc<Layer>,
        lower: Vec<Ext>,
        upper: Vec<Ext>,
        p: Vec<Ext>,
        b: Vec<Ext>,
    },
}

impl Layer {
    fn borders(&self, y: Subset) -> (Ext, Ext) {
        match self {
            Layer::Explicit { p, b } => (p[y as usize], b[y as usize]),
            Layer::Graphic(g) => g.borders(y),
            Layer::Deleted { parent, keep } => {
                let mut py = 0u64;
                for (i, &pos) in keep.iter().enumerate() {
                    if y >> i & 1 == 1 {
                        py |= 1 << pos;
                    }
                }
                parent.borders(py)
            }
            Layer::Contracted { parent, z } => {
                let (p, b) = parent.borders(y);
                let zy: i64 = z.iter().enumerate().filter(|(i, _)| y >> i & 1 == 1).map(|(_, v)| *v).sum();
                (p - zy, b - zy)
            }
            Layer::Boxed { p, b, .. } => (p[y as usize], b[y as usize]),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Layer::Explicit { .. } | Layer::Graphic(_) => 0,
            Layer::Deleted { parent, .. } | Layer::Contracted { parent, .. } | Layer::Boxed { parent, .. } => {
                1 + parent.depth()
            }
        }
    }
}

/// Lower border `p` and upper border `b` over a ground set.
#[derive(Debug, Clone)]
pub struct BorderPair {
    ground: GroundSet,
    layer: Arc<Layer>,
}

impl BorderPair {
    /// Pair given by explicit tables indexed by subset bitmask.
    pub fn explicit(ground: GroundSet, p: Vec<Ext>, b: Vec<Ext>) -> Result<Self, GpolyError> {
        let pair = Self::explicit_unchecked(ground, p, b)?;
        if let Some((family, x, y)) = pair.paramodularity_violation()? {
            return Err(GpolyError::NotParamodular { family, x, y });
        }
        Ok(pair)
    }

    /// Table-backed pair with shape checks only; paramodularity is not verified.
    pub fn explicit_unchecked(ground: GroundSet, p: Vec<Ext>, b: Vec<Ext>) -> Result<Self, GpolyError> {
        let m = ground.len();
        if m > ENUMERATION_CAP {
            return Err(GpolyError::GroundSetTooLarge { size: m, cap: ENUMERATION_CAP });
        }
        let want = 1usize << m;
        if p.len() != want || b.len() != want {
            return Err(GpolyError::InvalidTable(format!(
                "tables must have {want} entries, got p={} b={}",
                p.len(),
                b.len()
            )));
        }
        if p.contains(&Ext::PosInf) || b.contains(&Ext::NegInf) {
            return Err(GpolyError::InvalidTable(
                "p takes values in Z ∪ {-inf}, b in Z ∪ {+inf}".into(),
            ));
        }
        if p[0] != Ext::Fin(0) || b[0] != Ext::Fin(0) {
            return Err(GpolyError::NotParamodular { family: ParamodularFamily::EmptySet, x: 0, y: 0 });
        }
        Ok(BorderPair { ground, layer: Arc::new(Layer::Explicit { p, b }) })
    }

    pub(crate) fn from_graphic(ground: GroundSet, g: GraphicBorder) -> Self {
        BorderPair { ground, layer: Arc::new(Layer::Graphic(g)) }
    }

    /// The box `T(ℓ, u)` as a border pair: `p(Y) = ℓ(Y)`, `b(Y) = u(Y)`.
    pub fn unit_box(ground: GroundSet, lower: &[Ext], upper: &[Ext]) -> Result<Self, GpolyError> {
        let m = ground.len();
        if lower.len() != m || upper.len() != m {
            return Err(GpolyError::DimensionMismatch { expected: m, got: lower.len().min(upper.len()) });
        }
        if m > ENUMERATION_CAP {
            return Err(GpolyError::GroundSetTooLarge { size: m, cap: ENUMERATION_CAP });
        }
        let p = (0..1u64 << m).map(|y| sum_ext(lower, y)).collect();
        let b = (0..1u64 << m).map(|y| sum_ext(upper, y)).collect();
        Self::explicit(ground, p, b)
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn len(&self) -> usize {
        self.ground.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ground.is_empty()
    }

    /// Number of recorded modifications above the base evaluator.
    pub fn depth(&self) -> usize {
        self.layer.depth()
    }

    pub fn p(&self, y: Subset) -> Ext {
        self.layer.borders(y).0
    }

    pub fn b(&self, y: Subset) -> Ext {
        self.layer.borders(y).1
    }

    pub fn borders(&self, y: Subset) -> (Ext, Ext) {
        self.layer.borders(y)
    }

    fn check_cap(&self) -> Result<(), GpolyError> {
        if self.len() > ENUMERATION_CAP {
            Err(GpolyError::GroundSetTooLarge { size: self.len(), cap: ENUMERATION_CAP })
        } else {
            Ok(())
        }
    }

    /// Both borders tabulated over every subset.
    pub fn tables(&self) -> Result<(Vec<Ext>, Vec<Ext>), GpolyError> {
        self.check_cap()?;
        let size = 1usize << self.len();
        let mut p = Vec::with_capacity(size);
        let mut b = Vec::with_capacity(size);
        for y in 0..size as u64 {
            let (pv, bv) = self.borders(y);
            p.push(pv);
            b.push(bv);
        }
        Ok((p, b))
    }

    /// Same pair backed by an explicit table (drops the modification stack).
    pub fn materialize(&self) -> Result<BorderPair, GpolyError> {
        let (p, b) = self.tables()?;
        Ok(BorderPair { ground: self.ground.clone(), layer: Arc::new(Layer::Explicit { p, b }) })
    }

    pub fn is_paramodular(&self) -> Result<bool, GpolyError> {
        Ok(self.paramodularity_violation()?.is_none())
    }

    /// First violated paramodularity inequality, scanning `(X, Y)` in mask order.
    pub fn paramodularity_violation(&self) -> Result<Option<(ParamodularFamily, Subset, Subset)>, GpolyError> {
        let (p, b) = self.tables()?;
        if p[0] != Ext::Fin(0) || b[0] != Ext::Fin(0) {
            return Ok(Some((ParamodularFamily::EmptySet, 0, 0)));
        }
        let size = p.len() as u64;
        for x in 0..size {
            for y in 0..size {
                let (xi, yi) = (x as usize, y as usize);
                let (meet, join) = ((x & y) as usize, (x | y) as usize);
                // p(X) + p(Y) ≤ p(X∩Y) + p(X∪Y); sums of lower borders never meet +∞.
                if p[xi] + p[yi] > p[meet] + p[join] {
                    return Ok(Some((ParamodularFamily::Supermodularity, x, y)));
                }
                if b[xi] + b[yi] < b[meet] + b[join] {
                    return Ok(Some((ParamodularFamily::Submodularity, x, y)));
                }
                // b(X) − p(Y) ≥ b(X−Y) − p(Y−X)
                if b[xi] - p[yi] < b[(x & !y) as usize] - p[(y & !x) as usize] {
                    return Ok(Some((ParamodularFamily::CrossInequality, x, y)));
                }
            }
        }
        Ok(None)
    }

    fn check_dim(&self, len: usize) -> Result<(), GpolyError> {
        if len != self.len() {
            return Err(GpolyError::DimensionMismatch { expected: self.len(), got: len });
        }
        Ok(())
    }

    /// First subset `Y` with `x(Y)` outside `[p(Y), b(Y)]`.
    pub fn first_violated_subset(&self, x: &IntVector) -> Result<Option<Subset>, GpolyError> {
        self.check_cap()?;
        self.check_dim(x.len())?;
        let size = 1usize << self.len();
        let mut sums = vec![0i64; size];
        for y in 1..size {
            let low = y.trailing_zeros() as usize;
            sums[y] = sums[y & (y - 1)] + x.0[low];
            let (p, b) = self.borders(y as u64);
            let v = Ext::Fin(sums[y]);
            if p > v || v > b {
                return Ok(Some(y as u64));
            }
        }
        Ok(None)
    }

    /// `p(Y) ≤ x(Y) ≤ b(Y)` for every `Y ⊆ S`.
    pub fn contains(&self, x: &IntVector) -> Result<bool, GpolyError> {
        Ok(self.first_violated_subset(x)?.is_none())
    }

    /// Delete the elements of `z`: the restriction of both borders to `S − z`.
    pub fn delete(&self, z: Subset) -> BorderPair {
        let z = z & self.ground.full();
        if z == 0 {
            return self.clone();
        }
        let (ground, keep) = self.ground.without(z);
        BorderPair { ground, layer: Arc::new(Layer::Deleted { parent: self.layer.clone(), keep }) }
    }

    /// Pin every element of `z` to zero, then delete them: the projection of
    /// the face `{x ∈ Q : x(s) = 0 for s ∈ z}` to `S − z`.
    pub fn delete_at_zero(&self, z: Subset) -> Result<BorderPair, GpolyError> {
        let z = z & self.ground.full();
        if z == 0 {
            return Ok(self.clone());
        }
        let pin = |open: Ext| -> Vec<Ext> {
            (0..self.len()).map(|i| if z >> i & 1 == 1 { Ext::Fin(0) } else { open }).collect()
        };
        Ok(self.intersect_box(&pin(Ext::NegInf), &pin(Ext::PosInf))?.delete(z))
    }

    /// Contraction by an integral element `z` of the polyhedron.
    pub fn contract(&self, z: &IntVector) -> Result<BorderPair, GpolyError> {
        if let Some(subset) = self.first_violated_subset(z)? {
            return Err(GpolyError::ElementNotInPolyhedron { subset });
        }
        Ok(self.shift(z))
    }

    /// `p′ = p − z`, `b′ = b − z` without the membership precondition.
    ///
    /// Paramodularity is preserved for any integral `z` because the shift is
    /// modular; iterative rounding contracts by `⌊x⌋`, which need not itself
    /// lie in the polyhedron.
    pub fn shift(&self, z: &IntVector) -> BorderPair {
        assert_eq!(z.len(), self.len(), "shift vector dimension");
        if z.0.iter().all(|&v| v == 0) {
            return self.clone();
        }
        BorderPair {
            ground: self.ground.clone(),
            layer: Arc::new(Layer::Contracted { parent: self.layer.clone(), z: z.0.clone() }),
        }
    }

    /// Intersection with the box `T(ℓ, u)`; `Ext::NegInf` / `Ext::PosInf`
    /// entries leave a side open.
    pub fn intersect_box(&self, lower: &[Ext], upper: &[Ext]) -> Result<BorderPair, GpolyError> {
        self.check_cap()?;
        self.check_dim(lower.len())?;
        self.check_dim(upper.len())?;
        if lower.contains(&Ext::PosInf) || upper.contains(&Ext::NegInf) {
            return Err(GpolyError::InvalidTable("box bounds must satisfy ℓ < +inf and u > -inf".into()));
        }
        let (p, b) = self.tables()?;
        for y in 0..p.len() as u64 {
            if sum_ext(lower, y) > b[y as usize] || p[y as usize] > sum_ext(upper, y) {
                return Err(GpolyError::EmptyIntersection { subset: y });
            }
        }
        let (p2, b2) = box_borders(&p, &b, lower, upper);
        Ok(BorderPair {
            ground: self.ground.clone(),
            layer: Arc::new(Layer::Boxed {
                parent: self.layer.clone(),
                lower: lower.to_vec(),
                upper: upper.to_vec(),
                p: p2,
                b: b2,
            }),
        })
    }

    /// Box bounds recorded by the most recent box intersection, if it is the top layer.
    pub fn top_box(&self) -> Option<(&[Ext], &[Ext])> {
        match self.layer.as_ref() {
            Layer::Boxed { lower, upper, .. } => Some((lower, upper)),
            _ => None,
        }
    }

    /// Finite per-element range implied by the borders:
    /// `max(p(s), p(S) − b(S−s)) ≤ x(s) ≤ min(b(s), b(S) − p(S−s))`.
    pub fn coordinate_range(&self, s: usize) -> (Ext, Ext) {
        let full = self.ground.full();
        let bit = 1u64 << s;
        let (ps, bs) = self.borders(bit);
        let (pfull, bfull) = self.borders(full);
        let (prest, brest) = self.borders(full & !bit);
        (ps.max(pfull - brest), bs.min(bfull - prest))
    }
}

/// `ℓ(Y)` or `u(Y)` with infinities absorbing.
pub fn sum_ext(v: &[Ext], y: Subset) -> Ext {
    v.iter()
        .enumerate()
        .filter(|(i, _)| y >> i & 1 == 1)
        .fold(Ext::Fin(0), |acc, (_, e)| acc + *e)
}

/// Borders of `Q(p,b) ∩ T(ℓ,u)`:
///
/// ```text
/// p′(Z) = max_{Z′} p(Z′) − u(Z′−Z) + ℓ(Z−Z′)
/// b′(Z) = min_{Z′} b(Z′) − ℓ(Z′−Z) + u(Z−Z′)
/// ```
///
/// The penalty is separable over elements, so the optimisation over `Z′` is
/// done one coordinate at a time in `O(|S|·2^|S|)`.
fn box_borders(p: &[Ext], b: &[Ext], lower: &[Ext], upper: &[Ext]) -> (Vec<Ext>, Vec<Ext>) {
    let m = lower.len();
    let mut pp = p.to_vec();
    let mut bb = b.to_vec();
    for e in 0..m {
        let bit = 1usize << e;
        for y in 0..pp.len() {
            if y & bit != 0 {
                continue;
            }
            let (pw, pwo) = (pp[y | bit], pp[y]);
            pp[y] = pwo.max(pw - upper[e]);
            pp[y | bit] = pw.max(pwo + lower[e]);
            let (bw, bwo) = (bb[y | bit], bb[y]);
            bb[y] = bwo.min(bw - lower[e]);
            bb[y | bit] = bw.min(bwo + upper[e]);
        }
    }
    (pp, bb)
}

/// Direct evaluation of the box-intersection formula for one subset, by
/// enumerating every `Z′ ⊆ S`.
pub fn box_formula_by_enumeration(pair: &BorderPair, lower: &[Ext], upper: &[Ext], z: Subset) -> (Ext, Ext) {
    let full = pair.ground().full();
    let mut pv = Ext::NegInf;
    let mut bv = Ext::PosInf;
    let mut zp = 0u64;
    loop {
        let (p, b) = pair.borders(zp);
        pv = pv.max(p - sum_ext(upper, zp & !z) + sum_ext(lower, z & !zp));
        bv = bv.min(b - sum_ext(lower, zp & !z) + sum_ext(upper, z & !zp));
        if zp == full {
            break;
        }
        zp = (zp + 1) & full;
    }
    (pv, bv)
}
