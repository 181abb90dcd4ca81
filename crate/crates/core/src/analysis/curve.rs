use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub c: f64,
    pub height: u32,
    pub runs: u64,
    /// Includes censored runs.
    pub survivals: u64,
    pub censored: u64,
}

impl CurvePoint {
    pub fn p_hat(&self) -> f64 {
        self.survivals as f64 / self.runs as f64
    }

    /// Binomial standard error of [`p_hat`](Self::p_hat).
    pub fn stderr(&self) -> f64 {
        let p = self.p_hat();
        (p * (1.0 - p) / self.runs as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub family: String,
    pub distribution: String,
    pub seed_base: u64,
    /// Ordered by drift, then height.
    pub points: Vec<CurvePoint>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    family: String,
    distribution: String,
    c: f64,
    #[serde(rename = "H")]
    height: u32,
    runs: u64,
    survivals: u64,
    censored: u64,
    p_hat: f64,
    stderr: f64,
    seed_base: u64,
}

impl SurvivalCurve {
    /// True when any run hit the frontier cap.
    pub fn truncated(&self) -> bool {
        self.points.iter().any(|p| p.censored > 0)
    }

    pub fn heights(&self) -> Vec<u32> {
        let mut h: Vec<u32> = self.points.iter().map(|p| p.height).collect();
        h.sort_unstable();
        h.dedup();
        h
    }

    /// Points at one height, in drift order.
    pub fn at_height(&self, height: u32) -> Vec<CurvePoint> {
        let mut pts: Vec<CurvePoint> = self.points.iter().filter(|p| p.height == height).copied().collect();
        pts.sort_by(|a, b| a.c.total_cmp(&b.c));
        pts
    }

    /// Largest distance between `p_hat` and its nondecreasing isotonic fit
    /// in `c`, in units of the pooled standard error. Zero for a monotone
    /// curve.
    pub fn isotonic_residual(&self, height: u32) -> f64 {
        let pts = self.at_height(height);
        if pts.is_empty() {
            return 0.0;
        }
        let fit = isotonic_fit(&pts.iter().map(|p| (p.p_hat(), p.runs as f64)).collect::<Vec<_>>());
        let worst = pts.iter().zip(&fit).map(|(p, f)| (p.p_hat() - f).abs()).fold(0.0, f64::max);
        if worst == 0.0 {
            return 0.0;
        }
        let pooled = (pts.iter().map(|p| p.stderr().powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
        worst / pooled
    }

    /// Writes the CSV with each `comments` entry as a leading `# ` line.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for line in comments {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(Row {
                family: self.family.clone(),
                distribution: self.distribution.clone(),
                c: p.c,
                height: p.height,
                runs: p.runs,
                survivals: p.survivals,
                censored: p.censored,
                p_hat: p.p_hat(),
                stderr: p.stderr(),
                seed_base: self.seed_base,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let mut curve: Option<SurvivalCurve> = None;
        for row in r.deserialize::<Row>() {
            let row = row?;
            let c = curve.get_or_insert_with(|| SurvivalCurve {
                family: row.family.clone(),
                distribution: row.distribution.clone(),
                seed_base: row.seed_base,
                points: Vec::new(),
            });
            if c.family != row.family || c.distribution != row.distribution || c.seed_base != row.seed_base {
                return Err(Error::Parse("curve CSV mixes families, distributions or seeds".into()));
            }
            if row.runs == 0 || row.survivals > row.runs || row.censored > row.survivals {
                return Err(Error::Parse(format!("inconsistent counts at c = {}", row.c)));
            }
            c.points.push(CurvePoint {
                c: row.c,
                height: row.height,
                runs: row.runs,
                survivals: row.survivals,
                censored: row.censored,
            });
        }
        curve.ok_or_else(|| Error::Parse("curve CSV has no rows".into()))
    }
}

/// Weighted pool-adjacent-violators, nondecreasing.
fn isotonic_fit(values: &[(f64, f64)]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for &(v, w) in values {
        blocks.push((v, w, 1));
        while blocks.len() > 1 && blocks[blocks.len() - 2].0 > blocks[blocks.len() - 1].0 {
            let (v2, w2, n2) = blocks.pop().unwrap();
            let (v1, w1, n1) = blocks.pop().unwrap();
            blocks.push(((v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2, n1 + n2));
        }
    }
    blocks.into_iter().flat_map(|(v, _, n)| std::iter::repeat_n(v, n)).collect()
}
