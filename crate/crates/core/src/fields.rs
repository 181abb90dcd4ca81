//! Fitness fields `omega = eta + c * level` and Bernoulli site fields.
//!
//! Both kinds are descriptors: labels are recomputed on demand from the
//! seed and the vertex key, so two evaluations of the same vertex always
//! agree bit for bit and no field is ever stored.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{param, Error, Result};
use crate::graphs::{Family, LeveledDag, Role, VertexKey};
use crate::hashing::{KeyHash, Stream};
use crate::paths::PathMode;

/// How a field decides which steps of a path are admissible.
///
/// `label` returns `None` for a vertex no admissible path may visit.
pub trait StepRule: Sync {
    type Label: Copy + Send + Sync;

    fn mode(&self) -> PathMode;

    /// Seeded hash state that vertex keys are folded into.
    fn base(&self) -> KeyHash;

    fn label(&self, key: KeyHash, level: u32, role: Role) -> Option<Self::Label>;

    fn admits(&self, from: Self::Label, to: Self::Label) -> bool;

    fn descriptor(&self) -> serde_json::Value;

    /// Convenience lookup by vertex key.
    fn label_of(&self, dag: &LeveledDag, key: &VertexKey) -> Option<Self::Label> {
        self.label(key.hash_into(self.base()), dag.level_of(key), dag.role(key))
    }
}

/// Infinite labels pinned on the boundary of a fitness field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    None,
    /// Source labeled `-inf`.
    SourceNegInf,
    /// Source labeled `-inf`, every sink `+inf` (finite families only).
    SourceNegInfAndSinkPosInf,
}

/// Vertices a site field keeps open regardless of their draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteBoundary {
    None,
    #[default]
    Source,
    /// Source and every sink (finite families only).
    SourceAndSinks,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitnessField {
    dag: LeveledDag,
    seed: u64,
    drift: f64,
    distribution: Distribution,
    boundary: Boundary,
}

impl FitnessField {
    pub fn new(dag: &LeveledDag, distribution: Distribution, drift: f64, seed: u64, boundary: Boundary) -> Result<Self> {
        if !(drift.is_finite() && drift >= 0.0) {
            return param(format!("drift must be finite and nonnegative, got {drift}"));
        }
        if boundary == Boundary::SourceNegInfAndSinkPosInf && !dag.is_finite() {
            return param(format!("{} has no sinks to label +inf", dag.family()));
        }
        Ok(Self { dag: *dag, seed, drift, distribution, boundary })
    }

    pub fn dag(&self) -> &LeveledDag {
        &self.dag
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn distribution(&self) -> &Distribution {
        &self.distribution
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// The same field at another drift; `eta` is unchanged.
    pub fn with_drift(&self, drift: f64) -> Result<Self> {
        Self::new(&self.dag, self.distribution.clone(), drift, self.seed, self.boundary)
    }

    #[inline]
    pub(crate) fn eta_hashed(&self, key: KeyHash) -> f64 {
        self.distribution.quantile(key.unit())
    }

    /// Raw label `eta(v)`, ignoring boundary overrides.
    pub fn eta(&self, key: &VertexKey) -> f64 {
        self.eta_hashed(key.hash_into(self.base()))
    }

    /// Fitness `omega(v) = eta(v) + c * level(v)`, or the boundary label.
    pub fn omega(&self, key: &VertexKey) -> f64 {
        self.label_of(&self.dag, key).expect("fitness labels are total")
    }
}

impl StepRule for FitnessField {
    type Label = f64;

    fn mode(&self) -> PathMode {
        PathMode::Accessible
    }

    #[inline]
    fn base(&self) -> KeyHash {
        KeyHash::new(self.seed, Stream::Label)
    }

    #[inline]
    fn label(&self, key: KeyHash, level: u32, role: Role) -> Option<f64> {
        Some(match (role, self.boundary) {
            (Role::Source, Boundary::SourceNegInf | Boundary::SourceNegInfAndSinkPosInf) => f64::NEG_INFINITY,
            (Role::Sink, Boundary::SourceNegInfAndSinkPosInf) => f64::INFINITY,
            _ => self.eta_hashed(key) + self.drift * level as f64,
        })
    }

    /// Strict increase; ties are not accessible.
    #[inline]
    fn admits(&self, from: f64, to: f64) -> bool {
        from < to
    }

    fn descriptor(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("field serializes")
    }
}

/// A merge of levels opened with the reduced probability `p_merge`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeSpec {
    pub levels: BTreeSet<u32>,
    pub p_merge: f64,
}

impl MergeSpec {
    pub fn new(levels: impl IntoIterator<Item = u32>, p_merge: f64) -> Self {
        Self { levels: levels.into_iter().collect(), p_merge }
    }

    pub fn size(&self) -> u32 {
        self.levels.len() as u32
    }

    /// Checks the merge against the family: never the root level, and on
    /// the hypercube never the first or last level.
    pub fn validate(&self, dag: &LeveledDag, p: f64) -> Result<()> {
        if self.levels.is_empty() {
            return param("merge needs at least one level");
        }
        if !(self.p_merge > 0.0 && self.p_merge <= p) {
            return param(format!("merge probability must satisfy 0 < p_merge <= p, got {} vs p={p}", self.p_merge));
        }
        for &l in &self.levels {
            let ok = match dag.family() {
                Family::Hypercube { n } => l >= 1 && l < n,
                Family::NaryTree { h, .. } => l >= 1 && l <= h,
                _ => l >= 1,
            };
            if !ok {
                return param(format!("level {l} cannot be merged on {}", dag.family()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for MergeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let levels: Vec<String> = self.levels.iter().map(|l| l.to_string()).collect();
        write!(f, "{}@{}", levels.join(","), self.p_merge)
    }
}

impl FromStr for MergeSpec {
    type Err = Error;

    /// `levels@p_merge`, e.g. `2,4@0.3`.
    fn from_str(s: &str) -> Result<Self> {
        let (levels, p) = s
            .split_once('@')
            .ok_or_else(|| Error::Parse(format!("merge spec '{s}' must look like 2,4@0.3")))?;
        let levels = levels
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|_| Error::Parse(format!("bad merge level '{t}'"))))
            .collect::<Result<BTreeSet<_>>>()?;
        let p_merge = p.trim().parse().map_err(|_| Error::Parse(format!("bad merge probability '{p}'")))?;
        Ok(Self { levels, p_merge })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SiteRule {
    /// Independent marks: open with probability `p`, or `merge.p_merge` on
    /// merged levels.
    Bernoulli { p: f64, merge: Option<MergeSpec> },
    /// Open iff `x_left < eta(v) <= x_left + length`, read from the same
    /// label stream as the fitness field it was coupled from.
    Coupled { distribution: Distribution, x_left: f64, length: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SiteField {
    dag: LeveledDag,
    seed: u64,
    rule: SiteRule,
    boundary: SiteBoundary,
}

impl SiteField {
    pub fn new(dag: &LeveledDag, p: f64, seed: u64, merge: Option<MergeSpec>, boundary: SiteBoundary) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return param(format!("site probability must lie in [0, 1], got {p}"));
        }
        if boundary == SiteBoundary::SourceAndSinks && !dag.is_finite() {
            return param(format!("{} has no sinks", dag.family()));
        }
        if let Some(m) = &merge {
            m.validate(dag, p)?;
        }
        Ok(Self { dag: *dag, seed, rule: SiteRule::Bernoulli { p, merge }, boundary })
    }

    /// Every vertex open.
    pub fn all_open(dag: &LeveledDag) -> Self {
        Self::new(dag, 1.0, 0, None, SiteBoundary::None).expect("p = 1 is valid")
    }

    pub fn dag(&self) -> &LeveledDag {
        &self.dag
    }

    pub fn rule(&self) -> &SiteRule {
        &self.rule
    }

    pub fn boundary(&self) -> SiteBoundary {
        self.boundary
    }

    /// Marginal open probability of a non-boundary vertex on `level`.
    pub fn open_probability(&self, level: u32) -> f64 {
        match &self.rule {
            SiteRule::Bernoulli { p, merge } => match merge {
                Some(m) if m.levels.contains(&level) => m.p_merge,
                _ => *p,
            },
            SiteRule::Coupled { distribution, x_left, length } => {
                distribution.cdf(x_left + length) - distribution.cdf(*x_left)
            }
        }
    }

    pub fn is_open(&self, key: &VertexKey) -> bool {
        self.label_of(&self.dag, key).is_some()
    }

    fn forced_open(&self, role: Role) -> bool {
        matches!(
            (role, self.boundary),
            (Role::Source, SiteBoundary::Source | SiteBoundary::SourceAndSinks) | (Role::Sink, SiteBoundary::SourceAndSinks)
        )
    }
}

impl StepRule for SiteField {
    type Label = ();

    fn mode(&self) -> PathMode {
        PathMode::Open
    }

    #[inline]
    fn base(&self) -> KeyHash {
        match self.rule {
            SiteRule::Bernoulli { .. } => KeyHash::new(self.seed, Stream::Site),
            SiteRule::Coupled { .. } => KeyHash::new(self.seed, Stream::Label),
        }
    }

    #[inline]
    fn label(&self, key: KeyHash, level: u32, role: Role) -> Option<()> {
        if self.forced_open(role) {
            return Some(());
        }
        let open = match &self.rule {
            SiteRule::Bernoulli { p, merge } => {
                let p = match merge {
                    Some(m) if m.levels.contains(&level) => m.p_merge,
                    _ => *p,
                };
                key.unit() < p
            }
            SiteRule::Coupled { distribution, x_left, length } => {
                let eta = distribution.quantile(key.unit());
                *x_left < eta && eta <= x_left + length
            }
        };
        open.then_some(())
    }

    #[inline]
    fn admits(&self, _: (), _: ()) -> bool {
        true
    }

    fn descriptor(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("field serializes")
    }
}

/// Site field read off the same `eta` realization: `v` is open iff
/// `x_c < eta(v) <= x_c + c`. Vertices carrying an infinite boundary label
/// stay open, since any step into or out of them is accessible.
pub fn couple(field: &FitnessField, x_c: f64) -> Result<SiteField> {
    if field.drift().is_nan() || field.drift() <= 0.0 {
        return param("coupling needs a positive drift");
    }
    if !x_c.is_finite() {
        return param(format!("coupling window must start at a finite point, got {x_c}"));
    }
    let boundary = match field.boundary() {
        Boundary::None => SiteBoundary::None,
        Boundary::SourceNegInf => SiteBoundary::Source,
        Boundary::SourceNegInfAndSinkPosInf => SiteBoundary::SourceAndSinks,
    };
    Ok(SiteField {
        dag: *field.dag(),
        seed: field.seed(),
        rule: SiteRule::Coupled { distribution: field.distribution().clone(), x_left: x_c, length: field.drift() },
        boundary,
    })
}

impl FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Boundary::None),
            "source_neg_inf" => Ok(Boundary::SourceNegInf),
            "source_neg_inf_and_sink_pos_inf" => Ok(Boundary::SourceNegInfAndSinkPosInf),
            other => Err(Error::Parse(format!("unknown boundary rule '{other}'"))),
        }
    }
}

impl FromStr for SiteBoundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SiteBoundary::None),
            "source" => Ok(SiteBoundary::Source),
            "source_and_sinks" => Ok(SiteBoundary::SourceAndSinks),
            other => Err(Error::Parse(format!("unknown site boundary '{other}'"))),
        }
    }
}
