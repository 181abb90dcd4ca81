//! The oriented acyclic graph families, exposed as leveled DAGs.
//!
//! Every edge goes from level `l` to level `l + 1`, where the level of a
//! vertex is its distance to the source. Finite families (hypercube, n-ary
//! tree) can be materialized; infinite ones (regular tree, `L2`, `L2alt`)
//! only answer per-level and per-vertex queries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::hashing::KeyHash;

pub const MAX_HYPERCUBE_DIM: u32 = 30;
pub const MAX_TREE_LEAVES: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Family {
    Hypercube { n: u32 },
    NaryTree { n: u32, h: u32 },
    RegularTree { d: u32 },
    L2,
    L2Alt,
}

/// Family-specific vertex coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexKey {
    /// Hypercube vertex as a bitmask; level is the popcount.
    Mask(u64),
    /// Tree vertex as child indices from the root.
    Path(Vec<u32>),
    /// Lattice site.
    Site { x: i64, y: i64 },
}

impl VertexKey {
    /// Folds the canonical key words into `base`.
    pub fn hash_into(&self, base: KeyHash) -> KeyHash {
        match self {
            VertexKey::Mask(m) => base.push(*m),
            VertexKey::Path(p) => p.iter().fold(base, |h, &c| h.push(c as u64)),
            VertexKey::Site { x, y } => base.push_i64(*x).push_i64(*y),
        }
    }
}

/// Where a vertex sits relative to the boundary of its graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Source,
    Interior,
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeveledDag {
    family: Family,
}

impl LeveledDag {
    pub fn hypercube(n: u32) -> Result<Self> {
        if !(1..=MAX_HYPERCUBE_DIM).contains(&n) {
            return param(format!("hypercube dimension must be in 1..={MAX_HYPERCUBE_DIM}, got {n}"));
        }
        Ok(Self { family: Family::Hypercube { n } })
    }

    pub fn nary_tree(n: u32, h: u32) -> Result<Self> {
        if n < 1 || h < 1 {
            return param(format!("n-ary tree needs n >= 1 and h >= 1, got n={n}, h={h}"));
        }
        let leaves = (n as u128).checked_pow(h);
        if leaves.is_none_or(|l| l > MAX_TREE_LEAVES) {
            return param(format!("n-ary tree with n={n}, h={h} exceeds {MAX_TREE_LEAVES} leaves"));
        }
        Ok(Self { family: Family::NaryTree { n, h } })
    }

    pub fn regular_tree(d: u32) -> Result<Self> {
        if d < 1 {
            return param("regular tree needs d >= 1");
        }
        Ok(Self { family: Family::RegularTree { d } })
    }

    pub fn l2() -> Self {
        Self { family: Family::L2 }
    }

    pub fn l2_alt() -> Self {
        Self { family: Family::L2Alt }
    }

    pub fn new(family: Family) -> Result<Self> {
        match family {
            Family::Hypercube { n } => Self::hypercube(n),
            Family::NaryTree { n, h } => Self::nary_tree(n, h),
            Family::RegularTree { d } => Self::regular_tree(d),
            Family::L2 => Ok(Self::l2()),
            Family::L2Alt => Ok(Self::l2_alt()),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.family, Family::Hypercube { .. } | Family::NaryTree { .. })
    }

    /// Index of the deepest level for finite families.
    pub fn depth(&self) -> Option<u32> {
        match self.family {
            Family::Hypercube { n } => Some(n),
            Family::NaryTree { h, .. } => Some(h),
            _ => None,
        }
    }

    pub fn source(&self) -> VertexKey {
        match self.family {
            Family::Hypercube { .. } => VertexKey::Mask(0),
            Family::NaryTree { .. } | Family::RegularTree { .. } => VertexKey::Path(Vec::new()),
            Family::L2 | Family::L2Alt => VertexKey::Site { x: 0, y: 0 },
        }
    }

    pub fn contains(&self, key: &VertexKey) -> bool {
        match (self.family, key) {
            (Family::Hypercube { n }, VertexKey::Mask(m)) => *m >> n == 0,
            (Family::NaryTree { n, h }, VertexKey::Path(p)) => p.len() <= h as usize && p.iter().all(|&c| c < n),
            (Family::RegularTree { d }, VertexKey::Path(p)) => p.iter().all(|&c| c < d),
            (Family::L2, VertexKey::Site { x, y }) => *x >= 0 && *y >= 0,
            (Family::L2Alt, VertexKey::Site { x, y }) => *y >= 0 && x.abs() <= *y,
            _ => false,
        }
    }

    /// Distance to the source.
    pub fn level_of(&self, key: &VertexKey) -> u32 {
        match key {
            VertexKey::Mask(m) => m.count_ones(),
            VertexKey::Path(p) => p.len() as u32,
            VertexKey::Site { x, y } => match self.family {
                Family::L2 => (x + y) as u32,
                _ => *y as u32,
            },
        }
    }

    pub fn role(&self, key: &VertexKey) -> Role {
        let level = self.level_of(key);
        if level == 0 {
            Role::Source
        } else if self.depth() == Some(level) {
            Role::Sink
        } else {
            Role::Interior
        }
    }

    pub fn is_sink(&self, key: &VertexKey) -> bool {
        self.role(key) == Role::Sink
    }

    /// Number of vertices on `level`; `None` past the last level of a finite
    /// family or when the count overflows.
    pub fn level_width(&self, level: u32) -> Option<u128> {
        if self.depth().is_some_and(|d| level > d) {
            return None;
        }
        match self.family {
            Family::Hypercube { n } => Some(binomial(n as u64, level as u64)),
            Family::NaryTree { n, .. } => (n as u128).checked_pow(level),
            Family::RegularTree { d } => (d as u128).checked_pow(level),
            Family::L2 => Some(level as u128 + 1),
            Family::L2Alt => Some(2 * level as u128 + 1),
        }
    }

    /// All vertices on `level`. Hypercube masks come in increasing numeric
    /// order, tree paths lexicographically, `L2` sites by increasing `x`,
    /// `L2alt` sites with `x` running from `-level` to `level`.
    pub fn level(&self, level: u32) -> Result<Vec<VertexKey>> {
        let width = self
            .level_width(level)
            .ok_or_else(|| Error::Parameter(format!("level {level} does not exist")))?;
        if width > MAX_TREE_LEAVES {
            return Err(Error::Guard(format!("level {level} has {width} vertices")));
        }
        Ok(match self.family {
            Family::Hypercube { n } => masks_with_popcount(n, level).into_iter().map(VertexKey::Mask).collect(),
            Family::NaryTree { n: arity, .. } | Family::RegularTree { d: arity } => {
                (0..width as u64).map(|j| VertexKey::Path(digits(j, arity, level))).collect()
            }
            Family::L2 => (0..=level as i64).map(|x| VertexKey::Site { x, y: level as i64 - x }).collect(),
            Family::L2Alt => {
                let y = level as i64;
                (-y..=y).map(|x| VertexKey::Site { x, y }).collect()
            }
        })
    }

    pub fn predecessors(&self, key: &VertexKey) -> Vec<VertexKey> {
        if !self.contains(key) {
            return Vec::new();
        }
        match key {
            VertexKey::Mask(m) => ones(*m).map(|bit| VertexKey::Mask(m & !bit)).collect(),
            VertexKey::Path(p) => match p.split_last() {
                Some((_, prefix)) => vec![VertexKey::Path(prefix.to_vec())],
                None => Vec::new(),
            },
            VertexKey::Site { x, y } => match self.family {
                Family::L2 => {
                    let mut out = Vec::with_capacity(2);
                    if *x > 0 {
                        out.push(VertexKey::Site { x: x - 1, y: *y });
                    }
                    if *y > 0 {
                        out.push(VertexKey::Site { x: *x, y: y - 1 });
                    }
                    out
                }
                _ => {
                    if *y == 0 {
                        return Vec::new();
                    }
                    (x - 1..=x + 1)
                        .filter(|px| px.abs() < *y)
                        .map(|px| VertexKey::Site { x: px, y: y - 1 })
                        .collect()
                }
            },
        }
    }

    pub fn successors(&self, key: &VertexKey) -> Vec<VertexKey> {
        if !self.contains(key) || self.is_sink(key) {
            return Vec::new();
        }
        match (self.family, key) {
            (Family::Hypercube { n }, VertexKey::Mask(m)) => {
                (0..n).map(|b| 1u64 << b).filter(|bit| m & bit == 0).map(|bit| VertexKey::Mask(m | bit)).collect()
            }
            (Family::NaryTree { n: arity, .. } | Family::RegularTree { d: arity }, VertexKey::Path(p)) => (0..arity)
                .map(|c| {
                    let mut child = p.clone();
                    child.push(c);
                    VertexKey::Path(child)
                })
                .collect(),
            (Family::L2, VertexKey::Site { x, y }) => {
                vec![VertexKey::Site { x: x + 1, y: *y }, VertexKey::Site { x: *x, y: y + 1 }]
            }
            (_, VertexKey::Site { x, y }) => (x - 1..=x + 1).map(|sx| VertexKey::Site { x: sx, y: y + 1 }).collect(),
            _ => Vec::new(),
        }
    }

    /// Number of source-to-sink paths of a finite family: `n!` or `n^h`.
    pub fn total_large_paths(&self) -> Option<u128> {
        match self.family {
            Family::Hypercube { n } => Some((1..=n as u128).product()),
            Family::NaryTree { n, h } => (n as u128).checked_pow(h),
            _ => None,
        }
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Single-bit masks of the set bits of `m`, lowest first.
pub(crate) fn ones(mut m: u64) -> impl Iterator<Item = u64> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let low = m & m.wrapping_neg();
            m ^= low;
            Some(low)
        }
    })
}

fn masks_with_popcount(n: u32, k: u32) -> Vec<u64> {
    if k == 0 {
        return vec![0];
    }
    let limit = 1u64 << n;
    let mut out = Vec::new();
    let mut v = (1u64 << k) - 1;
    while v < limit {
        out.push(v);
        // Gosper's hack: next mask with the same popcount
        let t = v | (v - 1);
        v = (t + 1) | (((!t & (t + 1)) - 1) >> (v.trailing_zeros() + 1));
    }
    out
}

fn digits(mut j: u64, base: u32, len: u32) -> Vec<u32> {
    let mut out = vec![0u32; len as usize];
    for slot in out.iter_mut().rev() {
        *slot = (j % base as u64) as u32;
        j /= base as u64;
    }
    out
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Hypercube { n } => write!(f, "hypercube:n={n}"),
            Family::NaryTree { n, h } => write!(f, "nary:n={n},h={h}"),
            Family::RegularTree { d } => write!(f, "rtree:d={d}"),
            Family::L2 => f.write_str("l2"),
            Family::L2Alt => f.write_str("l2alt"),
        }
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for Family {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Family {
    type Err = Error;

    /// `hypercube:n=10`, `nary:n=3,h=8`, `rtree:d=2`, `l2`, `l2alt`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        let mut params = std::collections::BTreeMap::new();
        for kv in body.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("family parameter '{kv}' must be key=value")))?;
            let v: u32 = v.trim().parse().map_err(|_| Error::Parse(format!("'{v}' is not an integer")))?;
            params.insert(k.trim().to_string(), v);
        }
        let mut take = |key: &str| {
            params.remove(key).ok_or_else(|| Error::Parse(format!("family '{name}' needs parameter {key}")))
        };
        let family = match name {
            "hypercube" => Family::Hypercube { n: take("n")? },
            "nary" => Family::NaryTree { n: take("n")?, h: take("h")? },
            "rtree" => Family::RegularTree { d: take("d")? },
            "l2" => Family::L2,
            "l2alt" => Family::L2Alt,
            other => return Err(Error::Parse(format!("unknown family '{other}'"))),
        };
        if let Some(extra) = params.keys().next() {
            return Err(Error::Parse(format!("unexpected parameter '{extra}' for {name}")));
        }
        Ok(family)
    }
}
