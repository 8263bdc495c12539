//! JSON instance and solution files.
//!
//! Rationals travel as `"p/q"` strings and border values as decimal integers,
//! `"-inf"` or `"inf"`. Subset keys are decimal bitmasks under the declared
//! element order. The digest of an instance is the SHA-256 of its canonical
//! compact serialization, so whitespace and key order in a file on disk do
//! not change it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gpoly::{BorderPair, GpolyError, GroundSet, IntVector};
use crate::mvtsp::{EdgeMultiplicity, MvtspInstance, TourError};
use crate::rational::{format_rational, parse_rational, Ext};
use crate::rounding::{self, BdgpeInstance, Hyperedge, HypergraphConstraints, Regime, RoundingError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown kind `{0}`")]
    UnknownKind(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Gpoly(#[from] GpolyError),
    #[error(transparent)]
    Tour(#[from] TourError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError::Invalid(msg.into()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MvtspFile {
    kind: String,
    n: usize,
    costs: Vec<Vec<String>>,
    requests: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HyperedgeFile {
    members: Vec<String>,
    m: Vec<i64>,
    f: Option<i64>,
    g: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BdgpeFile {
    kind: String,
    ground: Vec<String>,
    p: BTreeMap<u64, String>,
    b: BTreeMap<u64, String>,
    costs: Vec<String>,
    hyperedges: Vec<HyperedgeFile>,
    regime: String,
}

#[derive(Deserialize)]
struct KindOnly {
    kind: String,
}

/// Either kind of instance file.
#[derive(Debug, Clone)]
pub enum Instance {
    Mvtsp(MvtspInstance),
    Bdgpe(BdgpeInstance),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Mvtsp(_) => "mvtsp",
            Instance::Bdgpe(_) => "bdgpe",
        }
    }

    /// Canonical compact JSON.
    pub fn to_canonical_json(&self) -> Result<String, FormatError> {
        Ok(match self {
            Instance::Mvtsp(i) => serde_json::to_string(&mvtsp_file(i))?,
            Instance::Bdgpe(i) => serde_json::to_string(&bdgpe_file(i)?)?,
        })
    }

    /// Pretty JSON with a trailing newline, as written to disk.
    pub fn to_pretty_json(&self) -> Result<String, FormatError> {
        let mut s = match self {
            Instance::Mvtsp(i) => serde_json::to_string_pretty(&mvtsp_file(i))?,
            Instance::Bdgpe(i) => serde_json::to_string_pretty(&bdgpe_file(i)?)?,
        };
        s.push('\n');
        Ok(s)
    }

    /// Lowercase hex SHA-256 of the canonical serialization.
    pub fn digest(&self) -> Result<String, FormatError> {
        Ok(hex::encode(Sha256::digest(self.to_canonical_json()?.as_bytes())))
    }

    pub fn from_json(text: &str) -> Result<Instance, FormatError> {
        let kind: KindOnly = serde_json::from_str(text)?;
        match kind.kind.as_str() {
            "mvtsp" => Ok(Instance::Mvtsp(parse_mvtsp(serde_json::from_str(text)?)?)),
            "bdgpe" => Ok(Instance::Bdgpe(parse_bdgpe(serde_json::from_str(text)?)?)),
            other => Err(FormatError::UnknownKind(other.to_string())),
        }
    }
}

fn mvtsp_file(inst: &MvtspInstance) -> MvtspFile {
    MvtspFile {
        kind: "mvtsp".into(),
        n: inst.n(),
        costs: inst.costs().iter().map(|row| row.iter().map(format_rational).collect()).collect(),
        requests: inst.requests().to_vec(),
    }
}

fn parse_mvtsp(f: MvtspFile) -> Result<MvtspInstance, FormatError> {
    if f.costs.len() != f.n || f.costs.iter().any(|row| row.len() != f.n) {
        return invalid(format!("costs must be a {0}x{0} matrix", f.n));
    }
    if f.requests.len() != f.n {
        return invalid(format!("expected {} requests, got {}", f.n, f.requests.len()));
    }
    let costs = f
        .costs
        .iter()
        .map(|row| row.iter().map(|s| parse_rational(s).or_else(|e| invalid(e.to_string()))).collect())
        .collect::<Result<Vec<Vec<_>>, _>>()?;
    Ok(MvtspInstance::new(costs, f.requests)?)
}

fn bdgpe_file(inst: &BdgpeInstance) -> Result<BdgpeFile, FormatError> {
    let (p, b) = inst.pair.tables()?;
    let table = |t: Vec<Ext>| t.into_iter().enumerate().map(|(y, v)| (y as u64, v.to_text())).collect();
    let names = inst.pair.ground().names();
    Ok(BdgpeFile {
        kind: "bdgpe".into(),
        ground: names.to_vec(),
        p: table(p),
        b: table(b),
        costs: inst.costs.iter().map(format_rational).collect(),
        hyperedges: inst
            .constraints
            .hyperedges
            .iter()
            .map(|e| HyperedgeFile {
                members: e.members.iter().map(|&s| names[s].clone()).collect(),
                m: e.m.clone(),
                f: e.f,
                g: e.g,
            })
            .collect(),
        regime: inst.regime.name().into(),
    })
}

fn parse_bdgpe(f: BdgpeFile) -> Result<BdgpeInstance, FormatError> {
    let ground = GroundSet::new(f.ground)?;
    let size = ground.len();
    if size > crate::gpoly::ENUMERATION_CAP {
        return Err(GpolyError::GroundSetTooLarge { size, cap: crate::gpoly::ENUMERATION_CAP }.into());
    }
    let table = |name: &str, map: &BTreeMap<u64, String>| -> Result<Vec<Ext>, FormatError> {
        if map.len() != 1 << size || map.keys().any(|&y| y >> size != 0) {
            return invalid(format!("table `{name}` must have exactly one entry per subset mask 0..{}", (1u64 << size) - 1));
        }
        map.values()
            .map(|s| Ext::parse_text(s).map_or_else(|| invalid(format!("bad border value `{s}` in `{name}`")), Ok))
            .collect()
    };
    let p = table("p", &f.p)?;
    let b = table("b", &f.b)?;
    let pair = BorderPair::explicit(ground, p, b)?;
    let costs = f
        .costs
        .iter()
        .map(|s| parse_rational(s).or_else(|e| invalid(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut hyperedges = Vec::with_capacity(f.hyperedges.len());
    for (i, e) in f.hyperedges.into_iter().enumerate() {
        if e.members.len() != e.m.len() {
            return invalid(format!("hyperedge {i}: members and m differ in length"));
        }
        let mut pairs = Vec::with_capacity(e.members.len());
        for (name, k) in e.members.iter().zip(e.m) {
            match pair.ground().position(name) {
                Some(s) => pairs.push((s, k)),
                None => return invalid(format!("hyperedge {i}: unknown element `{name}`")),
            }
        }
        pairs.sort_unstable();
        let (members, m) = pairs.into_iter().unzip();
        hyperedges.push(Hyperedge::new(members, m, e.f, e.g));
    }
    let Some(regime) = Regime::parse(&f.regime) else {
        return invalid(format!("unknown regime `{}`", f.regime));
    };
    let inst = BdgpeInstance { pair, costs, constraints: HypergraphConstraints { hyperedges }, regime };
    rounding::validate(&inst)?;
    Ok(inst)
}

/// A solution file: a tour for an MVTSP instance or an element for a BDGPE one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    Tour { instance_digest: String, edges: EdgeMultiplicity },
    Element { instance_digest: String, z: IntVector },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TourFile {
    kind: String,
    instance_digest: String,
    edges: BTreeMap<String, i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementFile {
    kind: String,
    instance_digest: String,
    z: BTreeMap<String, i64>,
}

impl Solution {
    pub fn instance_digest(&self) -> &str {
        match self {
            Solution::Tour { instance_digest, .. } | Solution::Element { instance_digest, .. } => instance_digest,
        }
    }

    pub fn to_value(&self, ground: Option<&GroundSet>) -> serde_json::Value {
        match self {
            Solution::Tour { instance_digest, edges } => serde_json::to_value(TourFile {
                kind: "tour".into(),
                instance_digest: instance_digest.clone(),
                edges: edges.iter().map(|(u, v, k)| (format!("{u}-{v}"), k)).collect(),
            }),
            Solution::Element { instance_digest, z } => serde_json::to_value(ElementFile {
                kind: "element".into(),
                instance_digest: instance_digest.clone(),
                z: z
                    .0
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (ground.map_or_else(|| format!("s{i}"), |g| g.names()[i].clone()), v))
                    .collect(),
            }),
        }
        .expect("solution maps serialize")
    }

    /// Parses a solution; element files need the instance's ground set to
    /// place names.
    pub fn from_json(text: &str, ground: Option<&GroundSet>) -> Result<Solution, FormatError> {
        let kind: KindOnly = serde_json::from_str(text)?;
        match kind.kind.as_str() {
            "tour" => {
                let f: TourFile = serde_json::from_str(text)?;
                let mut edges = EdgeMultiplicity::new();
                for (key, k) in f.edges {
                    let parsed = key.split_once('-').and_then(|(u, v)| Some((u.parse().ok()?, v.parse().ok()?)));
                    let Some((u, v)) = parsed else {
                        return invalid(format!("bad edge key `{key}`, expected `u-v`"));
                    };
                    if k < 0 {
                        return invalid(format!("edge {key} has negative multiplicity"));
                    }
                    edges.add(u, v, k);
                }
                Ok(Solution::Tour { instance_digest: f.instance_digest, edges })
            }
            "element" => {
                let f: ElementFile = serde_json::from_str(text)?;
                let Some(ground) = ground else {
                    return invalid("element solutions need a BDGPE instance");
                };
                let mut z = IntVector::zeros(ground.len());
                for (name, v) in f.z {
                    match ground.position(&name) {
                        Some(s) => z.0[s] = v,
                        None => return invalid(format!("unknown element `{name}`")),
                    }
                }
                Ok(Solution::Element { instance_digest: f.instance_digest, z })
            }
            other => Err(FormatError::UnknownKind(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{gen_bdgpe, gen_metric_mvtsp, GeneratorConfig};

    #[test]
    fn mvtsp_round_trip() {
        let inst = Instance::Mvtsp(gen_metric_mvtsp(&GeneratorConfig::new(7, 4, 3)).unwrap());
        let text = inst.to_pretty_json().unwrap();
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(back.to_pretty_json().unwrap(), text);
        assert_eq!(back.digest().unwrap(), inst.digest().unwrap());
        assert!(text.contains("\"kind\": \"mvtsp\""));
    }

    #[test]
    fn bdgpe_round_trip() {
        for regime in [Regime::Both, Regime::LowerOnly, Regime::UpperOnly] {
            let inst = Instance::Bdgpe(gen_bdgpe(3, 3, regime));
            let text = inst.to_canonical_json().unwrap();
            let back = Instance::from_json(&text).unwrap();
            assert_eq!(back.to_canonical_json().unwrap(), text);
        }
    }

    #[test]
    fn subset_keys_are_decimal_masks() {
        let inst = Instance::Bdgpe(gen_bdgpe(1, 2, Regime::Both));
        let v: serde_json::Value = serde_json::from_str(&inst.to_canonical_json().unwrap()).unwrap();
        let keys: Vec<&String> = v["p"].as_object().unwrap().keys().collect();
        assert_eq!(keys, ["0", "1", "2", "3"]);
    }

    #[test]
    fn tour_file_round_trip() {
        let mut edges = EdgeMultiplicity::new();
        edges.add(1, 0, 2);
        edges.add(2, 2, 1);
        let sol = Solution::Tour { instance_digest: "ab".into(), edges };
        let v = sol.to_value(None);
        assert_eq!(v["edges"]["0-1"], 2);
        assert_eq!(v["edges"]["2-2"], 1);
        assert_eq!(Solution::from_json(&v.to_string(), None).unwrap(), sol);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(Instance::from_json(r#"{"kind":"graph"}"#), Err(FormatError::UnknownKind(_))));
        let bad = r#"{"kind":"mvtsp","n":2,"costs":[["0/1","1/1"],["2/1","0/1"]],"requests":[1,1]}"#;
        assert!(Instance::from_json(bad).is_err());
        let bad = r#"{"kind":"mvtsp","n":1,"costs":[["x"]],"requests":[1]}"#;
        assert!(Instance::from_json(bad).is_err());
    }
}
