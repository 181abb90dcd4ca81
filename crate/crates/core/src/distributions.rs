//! Label distributions and the interval-mass functionals used by the coupling.
//!
//! `max_mass(F, c)` is the supremum of `F(x + c) - F(x)`: the largest open
//! probability a length-`c` acceptance window can give a coupled site field.
//! `min_mass(F, c)` is the smallest density mass on a length-`c` interval
//! inside a bounded connected support.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{param, Error, Result};

const GRID_POINTS: usize = 10_000;
const REFINE_ITERS: usize = 60;
const TAIL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum DistKind {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
    Triangular { lo: f64, mode: f64, hi: f64 },
    /// Linear interpolation between `(xs[i], cdf[i])`.
    PiecewiseLinear { xs: Vec<f64>, cdf: Vec<f64> },
}

/// Closed real interval; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A label law `F` with its literal form kept for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Distribution {
    kind: DistKind,
    literal: String,
}

/// An interval `(x_left, x_left + length]` together with its `F`-mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalMass {
    pub x_left: f64,
    pub length: f64,
    pub mass: f64,
}

impl IntervalMass {
    pub fn x_right(&self) -> f64 {
        self.x_left + self.length
    }
}

impl Distribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return param(format!("uniform needs finite lo < hi, got ({lo}, {hi})"));
        }
        Ok(Self { kind: DistKind::Uniform { lo, hi }, literal: format!("uniform:{lo},{hi}") })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
            return param(format!("normal needs finite mean and sd > 0, got ({mean}, {sd})"));
        }
        Ok(Self { kind: DistKind::Normal { mean, sd }, literal: format!("normal:{mean},{sd}") })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return param(format!("exponential rate must be positive, got {rate}"));
        }
        Ok(Self { kind: DistKind::Exponential { rate }, literal: format!("exp:{rate}") })
    }

    pub fn triangular(lo: f64, mode: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= mode && mode <= hi && lo < hi) {
            return param(format!("triangular needs lo <= mode <= hi, lo < hi, got ({lo}, {mode}, {hi})"));
        }
        Ok(Self {
            kind: DistKind::Triangular { lo, mode, hi },
            literal: format!("tri:{lo},{mode},{hi}"),
        })
    }

    /// Piecewise-linear CDF through the given breakpoints.
    pub fn piecewise_linear(xs: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        let literal = format!(
            "pwl:{}",
            xs.iter().zip(&cdf).map(|(x, f)| format!("{x}:{f}")).collect::<Vec<_>>().join(";")
        );
        Self::pwl_with_literal(xs, cdf, literal)
    }

    /// Reads a two-column `x,F(x)` CSV file. A non-numeric first row is
    /// treated as a header.
    pub fn piecewise_linear_from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut xs = Vec::new();
        let mut cdf = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::Parse(format!("{}: row {} must have two columns", path.display(), i + 1)));
            }
            match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(x), Ok(f)) => {
                    xs.push(x);
                    cdf.push(f);
                }
                _ if i == 0 => continue,
                _ => {
                    return Err(Error::Parse(format!("{}: row {} is not numeric", path.display(), i + 1)))
                }
            }
        }
        Self::pwl_with_literal(xs, cdf, format!("pwl:@{}", path.display()))
    }

    fn pwl_with_literal(xs: Vec<f64>, cdf: Vec<f64>, literal: String) -> Result<Self> {
        if xs.len() < 2 || xs.len() != cdf.len() {
            return param("piecewise-linear CDF needs at least two (x, F) breakpoints");
        }
        if xs.iter().chain(&cdf).any(|v| !v.is_finite()) {
            return param("piecewise-linear breakpoints must be finite");
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return param("piecewise-linear x breakpoints must be strictly increasing");
        }
        if cdf.windows(2).any(|w| w[0] > w[1]) {
            return param("piecewise-linear CDF values must be nondecreasing");
        }
        if cdf[0] != 0.0 || *cdf.last().unwrap() != 1.0 {
            return param("piecewise-linear CDF must start at 0 and end at 1");
        }
        Ok(Self { kind: DistKind::PiecewiseLinear { xs, cdf }, literal })
    }

    pub fn kind(&self) -> &DistKind {
        &self.kind
    }

    pub fn literal(&self) -> &str {
        &self.literal
    }

    /// Smallest closed interval carrying all the mass.
    pub fn support(&self) -> Support {
        match &self.kind {
            DistKind::Uniform { lo, hi } | DistKind::Triangular { lo, hi, .. } => Support { lo: *lo, hi: *hi },
            DistKind::Normal { .. } => Support { lo: f64::NEG_INFINITY, hi: f64::INFINITY },
            DistKind::Exponential { .. } => Support { lo: 0.0, hi: f64::INFINITY },
            DistKind::PiecewiseLinear { xs, cdf } => {
                let first = cdf.iter().rposition(|&f| f == 0.0).unwrap_or(0);
                let last = cdf.iter().position(|&f| f == 1.0).unwrap_or(xs.len() - 1);
                Support { lo: xs[first], hi: xs[last] }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match &self.kind {
            DistKind::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            DistKind::Normal { mean, sd } => 0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2)),
            DistKind::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            DistKind::Triangular { lo, mode, hi } => {
                if x <= *lo {
                    0.0
                } else if x >= *hi {
                    1.0
                } else if x <= *mode {
                    (x - lo).powi(2) / ((hi - lo) * (mode - lo))
                } else {
                    1.0 - (hi - x).powi(2) / ((hi - lo) * (hi - mode))
                }
            }
            DistKind::PiecewiseLinear { xs, cdf } => {
                if x <= xs[0] {
                    return 0.0;
                }
                if x >= xs[xs.len() - 1] {
                    return 1.0;
                }
                let i = xs.partition_point(|&b| b <= x) - 1;
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                cdf[i] + t * (cdf[i + 1] - cdf[i])
            }
        }
    }

    /// Inverse CDF on (0, 1). Values outside are clamped to the support.
    pub fn quantile(&self, u: f64) -> f64 {
        let support = self.support();
        if u <= 0.0 {
            return support.lo;
        }
        if u >= 1.0 {
            return support.hi;
        }
        match &self.kind {
            DistKind::Uniform { lo, hi } => lo + (hi - lo) * u,
            DistKind::Normal { mean, sd } => {
                let z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u);
                // one Newton step against the accurate cdf
                let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
                let z = if phi > 0.0 { z - (0.5 * erfc(-z / std::f64::consts::SQRT_2) - u) / phi } else { z };
                mean + sd * z
            }
            DistKind::Exponential { rate } => -(-u).ln_1p() / rate,
            DistKind::Triangular { lo, mode, hi } => {
                let split = (mode - lo) / (hi - lo);
                if u <= split {
                    lo + (u * (hi - lo) * (mode - lo)).sqrt()
                } else {
                    hi - ((1.0 - u) * (hi - lo) * (hi - mode)).sqrt()
                }
            }
            DistKind::PiecewiseLinear { xs, cdf } => {
                // first segment whose upper CDF value reaches u
                let i = cdf.partition_point(|&f| f < u).clamp(1, cdf.len() - 1) - 1;
                let (f0, f1) = (cdf[i], cdf[i + 1]);
                if f1 == f0 {
                    xs[i]
                } else {
                    xs[i] + (u - f0) / (f1 - f0) * (xs[i + 1] - xs[i])
                }
            }
        }
    }

    /// Probability density; every supported kind has one.
    pub fn density(&self, x: f64) -> Option<f64> {
        let d = match &self.kind {
            DistKind::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            DistKind::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            DistKind::Exponential { rate } => {
                if x >= 0.0 {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
            DistKind::Triangular { lo, mode, hi } => {
                if x < *lo || x > *hi {
                    0.0
                } else if x < *mode {
                    2.0 * (x - lo) / ((hi - lo) * (mode - lo))
                } else if x > *mode {
                    2.0 * (hi - x) / ((hi - lo) * (hi - mode))
                } else {
                    2.0 / (hi - lo)
                }
            }
            DistKind::PiecewiseLinear { xs, cdf } => {
                if x < xs[0] || x > xs[xs.len() - 1] {
                    0.0
                } else {
                    let i = (xs.partition_point(|&b| b <= x).max(1) - 1).min(xs.len() - 2);
                    (cdf[i + 1] - cdf[i]) / (xs[i + 1] - xs[i])
                }
            }
        };
        Some(d)
    }

    /// `F(x + length) - F(x)` packaged as an [`IntervalMass`].
    pub fn interval(&self, x_left: f64, length: f64) -> IntervalMass {
        IntervalMass { x_left, length, mass: self.cdf(x_left + length) - self.cdf(x_left) }
    }

    /// Whether the density vanishes on some interior stretch of the support.
    fn has_interior_gap(&self) -> bool {
        match &self.kind {
            DistKind::PiecewiseLinear { xs, cdf } => {
                let s = self.support();
                xs.windows(2)
                    .zip(cdf.windows(2))
                    .any(|(x, f)| x[0] >= s.lo && x[1] <= s.hi && f[0] == f[1])
            }
            _ => false,
        }
    }
}

/// Supremum over `x` of `F(x + c) - F(x)`.
pub fn max_mass(dist: &Distribution, c: f64) -> Result<IntervalMass> {
    if !(c.is_finite() && c > 0.0) {
        return param(format!("interval length must be positive, got {c}"));
    }
    let found = match dist.kind() {
        DistKind::Uniform { lo, hi } => {
            IntervalMass { x_left: *lo, length: c, mass: (c / (hi - lo)).min(1.0) }
        }
        DistKind::Normal { mean, .. } => dist.interval(mean - c / 2.0, c),
        // decreasing density: the window hugs the origin
        DistKind::Exponential { .. } => dist.interval(0.0, c),
        DistKind::PiecewiseLinear { xs, .. } => {
            // F(x + c) - F(x) is piecewise linear in x with kinks where x or
            // x + c meets a breakpoint, so one of those is optimal.
            best_of(dist, c, xs.iter().flat_map(|&b| [b, b - c]), |a, b| a > b)
        }
        DistKind::Triangular { .. } => numeric_max_mass(dist, c),
    };
    Ok(found)
}

/// Grid search over the central quantile range followed by golden-section
/// refinement around the best grid cell.
pub fn numeric_max_mass(dist: &Distribution, c: f64) -> IntervalMass {
    let lo = dist.quantile(TAIL) - c;
    let hi = dist.quantile(1.0 - TAIL);
    refine(dist, c, lo, hi, true)
}

fn refine(dist: &Distribution, c: f64, lo: f64, hi: f64, maximize: bool) -> IntervalMass {
    let score = |x: f64| {
        let m = dist.cdf(x + c) - dist.cdf(x);
        if maximize {
            m
        } else {
            -m
        }
    };
    if hi <= lo {
        return dist.interval(lo, c);
    }
    let step = (hi - lo) / GRID_POINTS as f64;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=GRID_POINTS {
        let s = score(lo + step * i as f64);
        if s > best {
            best = s;
            best_i = i;
        }
    }
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut s1, mut s2) = (score(x1), score(x2));
    for _ in 0..REFINE_ITERS {
        if s1 < s2 {
            a = x1;
            x1 = x2;
            s1 = s2;
            x2 = a + inv_phi * (b - a);
            s2 = score(x2);
        } else {
            b = x2;
            x2 = x1;
            s2 = s1;
            x1 = b - inv_phi * (b - a);
            s1 = score(x1);
        }
    }
    let grid_x = lo + step * best_i as f64;
    let refined_x = if s1 >= s2 { x1 } else { x2 };
    let x = if score(refined_x) >= score(grid_x) { refined_x } else { grid_x };
    dist.interval(x, c)
}

fn best_of(
    dist: &Distribution,
    c: f64,
    candidates: impl Iterator<Item = f64>,
    better: impl Fn(f64, f64) -> bool,
) -> IntervalMass {
    let mut best: Option<IntervalMass> = None;
    for x in candidates {
        let m = dist.interval(x, c);
        if best.is_none_or(|b| better(m.mass, b.mass)) {
            best = Some(m);
        }
    }
    best.expect("at least one candidate")
}

/// Minimal mass over length-`c` intervals inside the (closed) support.
///
/// Requires a density with bounded connected support and `c` no longer than
/// the support. For open supports the reported value is the infimum over
/// closed intervals in the closure.
pub fn min_mass(dist: &Distribution, c: f64) -> Result<IntervalMass> {
    if !(c.is_finite() && c > 0.0) {
        return param(format!("interval length must be positive, got {c}"));
    }
    let support = dist.support();
    if !support.is_bounded() {
        return Err(Error::UnsupportedDistribution(format!(
            "{} has unbounded support",
            dist.literal()
        )));
    }
    if dist.has_interior_gap() {
        return Err(Error::UnsupportedDistribution(format!(
            "{} has disconnected support",
            dist.literal()
        )));
    }
    let span = support.len();
    if c > span * (1.0 + 1e-12) {
        return param(format!("interval length {c} exceeds support length {span}"));
    }
    let (lo, hi) = (support.lo, (support.hi - c).max(support.lo));
    let found = match dist.kind() {
        DistKind::Uniform { .. } => IntervalMass { x_left: lo, length: c, mass: (c / span).min(1.0) },
        DistKind::PiecewiseLinear { xs, .. } => best_of(
            dist,
            c,
            [lo, hi]
                .into_iter()
                .chain(xs.iter().flat_map(|&b| [b, b - c]))
                .filter(|x| *x >= lo && *x <= hi),
            |a, b| a < b,
        ),
        _ => {
            let interior = refine(dist, c, lo, hi, false);
            best_of(dist, c, [lo, hi, interior.x_left].into_iter(), |a, b| a < b)
        }
    };
    Ok(found)
}

const TIE_TOLERANCE: f64 = 4.0 * f64::EPSILON;

/// Repeated halving of `(x1, x1 + eps1]`, keeping the heavier half (the left
/// one on ties), until the length is `eps_target = eps1 / 2^k`.
///
/// The result carries mass at least `2^-k` times the starting mass.
pub fn locate_interval(dist: &Distribution, x1: f64, eps1: f64, eps_target: f64) -> Result<IntervalMass> {
    let halvings = dyadic_halvings(eps1, eps_target)?;
    let start = dist.interval(x1, eps1);
    if start.mass.is_nan() || start.mass <= 0.0 {
        return param(format!("starting interval ({x1}, {}] carries no mass", x1 + eps1));
    }
    let (mut a, mut b) = (x1, x1 + eps1);
    for _ in 0..halvings {
        let mid = 0.5 * (a + b);
        let (fa, fm, fb) = (dist.cdf(a), dist.cdf(mid), dist.cdf(b));
        // masses equal up to cdf rounding count as a tie
        if fm - fa >= fb - fm - TIE_TOLERANCE {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(IntervalMass { x_left: a, length: b - a, mass: dist.cdf(b) - dist.cdf(a) })
}

/// Number `k` with `eps_target = eps1 / 2^k`.
pub fn dyadic_halvings(eps1: f64, eps_target: f64) -> Result<u32> {
    if !(eps1 > 0.0 && eps_target > 0.0 && eps1.is_finite()) {
        return param("interval lengths must be positive");
    }
    let ratio = eps1 / eps_target;
    let k = ratio.log2().round();
    if !(0.0..=1000.0).contains(&k) || ((eps1 / k.exp2()) - eps_target).abs() > 1e-12 * eps1 {
        return param(format!(
            "target length {eps_target} is not a dyadic fraction of {eps1}; round down to eps1 / 2^k"
        ));
    }
    Ok(k as u32)
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.literal)
    }
}

impl From<Distribution> for String {
    fn from(d: Distribution) -> String {
        d.literal
    }
}

impl TryFrom<String> for Distribution {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

fn numbers(body: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> = body.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == expected => Ok(v),
        _ => Err(Error::Parse(format!("{what} expects {expected} comma-separated numbers, got '{body}'"))),
    }
}

impl FromStr for Distribution {
    type Err = Error;

    /// `uniform:a,b`, `normal:mu,sigma`, `exp:rate`, `tri:a,mode,b`,
    /// `pwl:@file.csv` or inline `pwl:x0:F0;x1:F1;...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("distribution literal '{s}' lacks ':'")))?;
        match name {
            "uniform" => {
                let v = numbers(body, 2, "uniform")?;
                Self::uniform(v[0], v[1])
            }
            "normal" => {
                let v = numbers(body, 2, "normal")?;
                Self::normal(v[0], v[1])
            }
            "exp" => {
                let v = numbers(body, 1, "exp")?;
                Self::exponential(v[0])
            }
            "tri" => {
                let v = numbers(body, 3, "tri")?;
                Self::triangular(v[0], v[1], v[2])
            }
            "pwl" => {
                if let Some(path) = body.strip_prefix('@') {
                    Self::piecewise_linear_from_csv(Path::new(path))
                } else {
                    let mut xs = Vec::new();
                    let mut cdf = Vec::new();
                    for pair in body.split(';') {
                        let (x, f) = pair
                            .split_once(':')
                            .ok_or_else(|| Error::Parse(format!("pwl breakpoint '{pair}' must be x:F")))?;
                        let parse = |t: &str| {
                            t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{t}'")))
                        };
                        xs.push(parse(x)?);
                        cdf.push(parse(f)?);
                    }
                    Self::pwl_with_literal(xs, cdf, s.to_string())
                }
            }
            other => Err(Error::Parse(format!("unknown distribution '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_normal() -> Distribution {
        Distribution::normal(0.0, 1.0).unwrap()
    }

    fn all_kinds() -> Vec<Distribution> {
        vec![
            Distribution::uniform(0.0, 1.0).unwrap(),
            Distribution::uniform(-2.0, 3.0).unwrap(),
            std_normal(),
            Distribution::normal(1.5, 0.3).unwrap(),
            Distribution::exponential(2.0).unwrap(),
            Distribution::triangular(0.0, 0.5, 1.0).unwrap(),
            Distribution::triangular(0.0, 0.0, 2.0).unwrap(),
            "pwl:0:0;0.2:0.5;0.7:0.6;1:1".parse().unwrap(),
        ]
    }

    #[test]
    fn quantile_inverts_cdf() {
        for d in all_kinds() {
            for i in 1..=1000 {
                let u = i as f64 / 1001.0;
                let x = d.quantile(u);
                assert!((d.cdf(x) - u).abs() < 1e-9, "{d} u={u} x={x} cdf={}", d.cdf(x));
            }
        }
    }

    #[test]
    fn cdf_is_monotone_and_pinned_at_support() {
        for d in all_kinds() {
            let s = d.support();
            let (lo, hi) = if s.is_bounded() { (s.lo - 1.0, s.hi + 1.0) } else { (-10.0, 10.0) };
            let mut prev = -1.0;
            for i in 0..=2000 {
                let x = lo + (hi - lo) * i as f64 / 2000.0;
                let f = d.cdf(x);
                assert!(f >= prev, "{d} not monotone at {x}");
                prev = f;
            }
            if s.lo.is_finite() {
                assert_eq!(d.cdf(s.lo), 0.0, "{d}");
                assert_eq!(d.cdf(s.lo - 0.5), 0.0, "{d}");
            }
            if s.hi.is_finite() {
                assert_eq!(d.cdf(s.hi), 1.0, "{d}");
                assert_eq!(d.cdf(s.hi + 0.5), 1.0, "{d}");
            }
        }
    }

    // composite Simpson over the support (tails cut at 1e-15 for unbounded kinds)
    fn integrate_density(d: &Distribution) -> f64 {
        let s = d.support();
        let lo = if s.lo.is_finite() { s.lo } else { d.quantile(1e-15) };
        let hi = if s.hi.is_finite() { s.hi } else { d.quantile(1.0 - 1e-15) };
        let mut breaks = vec![lo, hi];
        if let DistKind::PiecewiseLinear { xs, .. } = d.kind() {
            breaks.extend(xs.iter().copied().filter(|x| *x > lo && *x < hi));
        }
        if let DistKind::Triangular { mode, .. } = d.kind() {
            breaks.push(*mode);
        }
        breaks.sort_by(f64::total_cmp);
        let n = 20_000;
        breaks
            .windows(2)
            .map(|w| {
                let h = (w[1] - w[0]) / n as f64;
                let f = |i: usize| d.density(w[0] + h * i as f64).unwrap();
                // one-sided limits at the break points
                let inside = 1e-9 * (w[1] - w[0]);
                let mut acc = d.density(w[0] + inside).unwrap() + d.density(w[1] - inside).unwrap();
                for i in 1..n {
                    acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
                }
                acc * h / 3.0
            })
            .sum()
    }

    #[test]
    fn densities_integrate_to_one() {
        for d in all_kinds() {
            let total = integrate_density(&d);
            assert!((total - 1.0).abs() < 1e-6, "{d}: {total}");
        }
    }

    #[test]
    fn uniform_max_mass_is_length() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(max_mass(&u, 0.3).unwrap().mass, 0.3);
        assert_eq!(max_mass(&u, 2.0).unwrap().mass, 1.0);
    }

    #[test]
    fn normal_max_mass_matches_grid() {
        let d = std_normal();
        let m = max_mass(&d, 1.0).unwrap();
        assert!((m.mass - 0.382_924_922_548_026).abs() < 1e-9, "{}", m.mass);
        assert!((m.x_left + 0.5).abs() < 1e-12);
        // independent route: brute grid at 1e-4 resolution
        let grid_best = (0..=80_000)
            .map(|i| -4.0 + i as f64 * 1e-4)
            .map(|x| d.cdf(x + 1.0) - d.cdf(x))
            .fold(f64::MIN, f64::max);
        assert!((grid_best - m.mass).abs() < 1e-8);
        assert!(grid_best <= m.mass + 1e-15);
    }

    #[test]
    fn numeric_route_agrees_with_closed_forms() {
        for d in [std_normal(), Distribution::uniform(0.0, 1.0).unwrap(), Distribution::exponential(1.5).unwrap()] {
            for c in [0.05, 0.3, 0.9, 1.7] {
                let closed = max_mass(&d, c).unwrap().mass;
                let numeric = numeric_max_mass(&d, c).mass;
                assert!((closed - numeric).abs() < 1e-9, "{d} c={c}: {closed} vs {numeric}");
            }
        }
    }

    #[test]
    fn pwl_max_mass_beats_grid() {
        let d: Distribution = "pwl:0:0;0.2:0.5;0.7:0.6;1:1".parse().unwrap();
        for c in [0.1, 0.25, 0.5, 0.8] {
            let exact = max_mass(&d, c).unwrap().mass;
            let grid = (0..=100_000)
                .map(|i| -1.0 + i as f64 * 2e-5)
                .map(|x| d.cdf(x + c) - d.cdf(x))
                .fold(f64::MIN, f64::max);
            assert!(exact >= grid - 1e-12 && exact - grid < 1e-4, "c={c}: {exact} vs {grid}");
        }
    }

    #[test]
    fn max_mass_rejects_nonpositive_c() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(matches!(max_mass(&u, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(max_mass(&u, -1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn min_mass_uniform() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert_eq!(min_mass(&u, 0.5).unwrap().mass, 0.5);
        assert_eq!(min_mass(&u, 1.0).unwrap().mass, 1.0);
    }

    #[test]
    fn min_mass_triangular_sits_at_an_edge() {
        let d = Distribution::triangular(0.0, 0.5, 1.0).unwrap();
        let m = min_mass(&d, 0.25).unwrap();
        // grid oracle at 1e-5 over x_left in [0, 0.75]
        let (grid_x, grid_mass) = (0..=75_000)
            .map(|i| i as f64 * 1e-5)
            .map(|x| (x, d.cdf(x + 0.25) - d.cdf(x)))
            .fold((0.0, f64::MAX), |acc, v| if v.1 < acc.1 { v } else { acc });
        assert!((m.mass - grid_mass).abs() < 1e-12);
        assert!((m.mass - 0.125).abs() < 1e-12);
        assert!(m.x_left.abs() < 1e-9 || (m.x_left - 0.75).abs() < 1e-9, "{}", m.x_left);
        assert!(grid_x.abs() < 1e-9 || (grid_x - 0.75).abs() < 1e-9);
    }

    #[test]
    fn min_mass_error_paths() {
        assert!(matches!(min_mass(&std_normal(), 0.5), Err(Error::UnsupportedDistribution(_))));
        let gap: Distribution = "pwl:0:0;1:0.5;2:0.5;3:1".parse().unwrap();
        assert!(matches!(min_mass(&gap, 0.5), Err(Error::UnsupportedDistribution(_))));
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(matches!(min_mass(&u, 1.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn locate_interval_examples() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        let m = locate_interval(&u, 0.0, 1.0, 0.25).unwrap();
        assert_eq!(m.length, 0.25);
        assert!((m.mass - 0.25).abs() < 1e-15);
        // ties keep the left half every time
        assert_eq!(m.x_left, 0.0);

        // Hand recursion: (-2,2] -> halves tie -> (-2,0]; then (-1,0] is heavier.
        let n = std_normal();
        let m = locate_interval(&n, -2.0, 4.0, 1.0).unwrap();
        assert_eq!((m.x_left, m.length), (-1.0, 1.0));
        assert!((m.mass - 0.341_344_746_068_543).abs() < 1e-12, "{m:?}");
        assert!(m.mass >= (n.cdf(2.0) - n.cdf(-2.0)) / 4.0);

        let same = locate_interval(&n, 0.3, 0.7, 0.7).unwrap();
        assert_eq!((same.x_left, same.length), (0.3, 0.7));
    }

    #[test]
    fn locate_interval_rejects_non_dyadic() {
        let u = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(matches!(locate_interval(&u, 0.0, 1.0, 0.3), Err(Error::Parameter(_))));
        assert!(matches!(locate_interval(&u, 0.0, 1.0, 2.0), Err(Error::Parameter(_))));
        assert!(matches!(locate_interval(&u, 5.0, 1.0, 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn literals_round_trip() {
        for lit in ["uniform:0,1", "normal:0,1", "exp:1", "tri:0,0.5,1", "pwl:0:0;0.5:0.2;1:1"] {
            let d: Distribution = lit.parse().unwrap();
            assert_eq!(d.to_string(), lit);
            let json = serde_json::to_string(&d).unwrap();
            let back: Distribution = serde_json::from_str(&json).unwrap();
            assert_eq!(back, d);
        }
        assert!("cauchy:0,1".parse::<Distribution>().is_err());
        assert!("uniform:1,0".parse::<Distribution>().is_err());
        assert!("uniform:0".parse::<Distribution>().is_err());
        assert!("pwl:0:0.1;1:1".parse::<Distribution>().is_err());
    }

    #[test]
    fn pwl_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, "x,F\n0,0\n0.5,0.25\n1,1\n").unwrap();
        let d = Distribution::piecewise_linear_from_csv(&path).unwrap();
        assert_eq!(d.cdf(0.5), 0.25);
        assert!((d.cdf(0.75) - 0.625).abs() < 1e-15);
        assert!(d.literal().starts_with("pwl:@"));
    }
}
