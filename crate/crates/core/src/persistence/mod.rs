//! Persistence diagrams and their computation over Z/2.
//!
//! [`reduce`] runs the standard column reduction on an explicit
//! [`FilteredComplex`](crate::filtration::FilteredComplex). For weighted Rips
//! filtrations on a few hundred points and more, [`weighted_rips_diagram`]
//! computes the same pairs without materializing triangles.

mod flag;
mod reduce;

pub use flag::{flag_diagram, weighted_rips_diagram, FlagOptions};
pub use reduce::{reduce, reduce_with, Pairing, ReduceOptions};

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A (birth, death) pair in homological dimension `dim`; `death` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: f64,
    pub death: f64,
}

impl PersistencePair {
    pub fn new(dim: usize, birth: f64, death: f64) -> Self {
        Self { dim, birth, death }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    fn sort_key(&self, other: &Self) -> std::cmp::Ordering {
        self.dim.cmp(&other.dim).then(self.birth.total_cmp(&other.birth)).then(self.death.total_cmp(&other.death))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DeathRepr {
    Finite(f64),
    Label(String),
}

#[derive(Serialize, Deserialize)]
struct PairRepr {
    dim: usize,
    birth: f64,
    death: DeathRepr,
}

impl Serialize for PersistencePair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let death =
            if self.death.is_infinite() { DeathRepr::Label("inf".into()) } else { DeathRepr::Finite(self.death) };
        PairRepr { dim: self.dim, birth: self.birth, death }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PersistencePair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PairRepr::deserialize(d)?;
        let death = match repr.death {
            DeathRepr::Finite(x) => x,
            DeathRepr::Label(s) if s == "inf" => f64::INFINITY,
            DeathRepr::Label(s) => return Err(de::Error::custom(format!("invalid death `{s}`"))),
        };
        Ok(Self { dim: repr.dim, birth: repr.birth, death })
    }
}

/// Multiset of persistence pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PersistenceDiagram {
    pub pairs: Vec<PersistencePair>,
    pub source: String,
}

impl PersistenceDiagram {
    pub fn new(pairs: Vec<PersistencePair>) -> Self {
        Self { pairs, source: String::new() }
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs of homological dimension `dim`.
    pub fn in_dim(&self, dim: usize) -> impl Iterator<Item = &PersistencePair> + '_ {
        self.pairs.iter().filter(move |p| p.dim == dim)
    }

    /// Sorts pairs by (dim, birth, death) for stable output.
    pub fn sort(&mut self) {
        self.pairs.sort_by(PersistencePair::sort_key);
    }

    pub fn sorted(mut self) -> Self {
        self.sort();
        self
    }

    /// Finite persistences of dimension `dim`, largest first.
    pub fn finite_persistences(&self, dim: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.in_dim(dim).filter(|p| !p.is_essential()).map(|p| p.persistence()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.pairs)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(Self::new(serde_json::from_str(s)?))
    }

    /// CSV rows `dim,birth,death`, with `inf` for essential classes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth,death\n");
        for p in &self.pairs {
            if p.is_essential() {
                out.push_str(&format!("{},{},inf\n", p.dim, p.birth));
            } else {
                out.push_str(&format!("{},{},{}\n", p.dim, p.birth, p.death));
            }
        }
        out
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("dim")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected dim,birth,death", lineno + 1)));
            }
            let bad = |what: &str| Error::Parse(format!("line {}: invalid {what}", lineno + 1));
            let dim = fields[0].parse().map_err(|_| bad("dim"))?;
            let birth = fields[1].parse().map_err(|_| bad("birth"))?;
            let death = if fields[2] == "inf" { f64::INFINITY } else { fields[2].parse().map_err(|_| bad("death"))? };
            pairs.push(PersistencePair { dim, birth, death });
        }
        Ok(Self::new(pairs))
    }
}

/// Largest finite persistence among pairs of dimension `dim`; 0 when there are none.
pub fn max_persistence(diagram: &PersistenceDiagram, dim: usize) -> f64 {
    diagram.in_dim(dim).filter(|p| !p.is_essential()).map(PersistencePair::persistence).fold(0.0, f64::max)
}
