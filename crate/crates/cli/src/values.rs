use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Largest number of drift values a range may expand to.
pub const MAX_DRIFTS: usize = 100_000;

/// Drift values: one number, a comma list, or `range:start,stop,step`
/// (inclusive, rounded to 1e-9 so grid points print as typed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DriftRepr", into = "Vec<f64>")]
pub struct DriftSpec(pub Vec<f64>);

#[derive(Deserialize)]
#[serde(untagged)]
enum DriftRepr {
    One(f64),
    List(Vec<f64>),
    Text(String),
}

impl TryFrom<DriftRepr> for DriftSpec {
    type Error = String;
    fn try_from(r: DriftRepr) -> Result<Self, String> {
        match r {
            DriftRepr::One(c) => Ok(DriftSpec(vec![c])),
            DriftRepr::List(v) if !v.is_empty() => Ok(DriftSpec(v)),
            DriftRepr::List(_) => Err("empty drift list".into()),
            DriftRepr::Text(s) => s.parse(),
        }
    }
}

impl From<DriftSpec> for Vec<f64> {
    fn from(d: DriftSpec) -> Self {
        d.0
    }
}

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn number(t: &str) -> Result<f64, String> {
    t.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| format!("bad drift value '{t}'"))
}

impl FromStr for DriftSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("range:") {
            let parts: Vec<f64> = rest.split(',').map(number).collect::<Result<_, _>>()?;
            let [start, stop, step] = parts[..] else {
                return Err(format!("range needs start,stop,step: '{s}'"));
            };
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(format!("range needs step > 0 and stop >= start: '{s}'"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > MAX_DRIFTS {
                return Err(format!("range expands to {count} values, more than {MAX_DRIFTS}"));
            }
            return Ok(DriftSpec((0..count).map(|i| round9(start + i as f64 * step)).collect()));
        }
        let values: Vec<f64> = s.split(',').map(number).collect::<Result<_, _>>()?;
        Ok(DriftSpec(values))
    }
}

/// A seed written in decimal or as `0x`-prefixed hex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SeedRepr", into = "u64")]
pub struct Seed(pub u64);

#[derive(Deserialize)]
#[serde(untagged)]
enum SeedRepr {
    Number(u64),
    Text(String),
}

impl TryFrom<SeedRepr> for Seed {
    type Error = String;
    fn try_from(r: SeedRepr) -> Result<Self, String> {
        match r {
            SeedRepr::Number(n) => Ok(Seed(n)),
            SeedRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Seed> for u64 {
    fn from(s: Seed) -> Self {
        s.0
    }
}

impl FromStr for Seed {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            Some(hex) => u64::from_str_radix(hex, 16),
            None => s.parse(),
        };
        parsed.map(Seed).map_err(|_| format!("seed '{s}' is not a decimal or 0x-hex u64"))
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
