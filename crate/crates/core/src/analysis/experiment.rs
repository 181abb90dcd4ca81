use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curve::{CurvePoint, SurvivalCurve};
use crate::distributions::{max_mass, Distribution};
use crate::error::{param, Error, Result};
use crate::fields::{couple, Boundary, FitnessField};
use crate::graphs::{Family, LeveledDag};
use crate::hashing::derive_seed;
use crate::paths::{survival_depth, SurvivalOptions, SurvivalOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Process {
    /// Accessible paths of the fitness field.
    #[default]
    Rmf,
    /// Open paths of the site field coupled to the same fitness draws at the
    /// heaviest window of length `c`.
    Coupled,
}

impl std::str::FromStr for Process {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmf" => Ok(Process::Rmf),
            "coupled" => Ok(Process::Coupled),
            other => Err(Error::Parse(format!("unknown process '{other}' (rmf or coupled)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub family: Family,
    pub distribution: Distribution,
    pub drifts: Vec<f64>,
    pub heights: Vec<u32>,
    pub runs: u64,
    pub seed: u64,
    /// Seed-stream id. Deliberately independent of the drift so that every
    /// drift reuses the same realizations.
    #[serde(default)]
    pub experiment: u64,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    #[serde(default)]
    pub process: Process,
    #[serde(default)]
    pub survival: SurvivalOptions,
    /// Worker threads; the rayon default when absent.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_boundary() -> Boundary {
    Boundary::SourceNegInf
}

impl ExperimentSpec {
    pub fn new(family: Family, distribution: Distribution, drifts: Vec<f64>, heights: Vec<u32>, runs: u64, seed: u64) -> Self {
        Self {
            family,
            distribution,
            drifts,
            heights,
            runs,
            seed,
            experiment: 0,
            boundary: default_boundary(),
            process: Process::Rmf,
            survival: SurvivalOptions::default(),
            workers: None,
        }
    }

    fn validate(&self) -> Result<LeveledDag> {
        let dag = LeveledDag::new(self.family)?;
        if dag.is_finite() {
            return param(format!("survival experiments need an infinite family, got {}", self.family));
        }
        if self.runs == 0 {
            return param("runs must be at least 1");
        }
        if self.drifts.is_empty() || self.heights.is_empty() {
            return param("need at least one drift and one height");
        }
        for &c in &self.drifts {
            let ok = c.is_finite() && if self.process == Process::Coupled { c > 0.0 } else { c >= 0.0 };
            if !ok {
                return param(format!("invalid drift {c}"));
            }
        }
        if self.heights.contains(&0) {
            return param("heights must be at least 1");
        }
        if self.workers == Some(0) {
            return param("workers must be at least 1");
        }
        Ok(dag)
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    survivals: Vec<u64>,
    censored: Vec<u64>,
}

impl Tally {
    fn zero(n: usize) -> Self {
        Self { survivals: vec![0; n], censored: vec![0; n] }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.survivals.iter_mut().zip(other.survivals) {
            *a += b;
        }
        for (a, b) in self.censored.iter_mut().zip(other.censored) {
            *a += b;
        }
        self
    }
}

/// Survival probability estimates on a drift x height grid.
///
/// Run `i` uses seed `derive_seed(seed, experiment, i)` at every drift and
/// is simulated once to the largest height. A censored run counts as a
/// survival at every height it did not reach and is reported separately.
pub fn run_survival_experiment(spec: &ExperimentSpec) -> Result<SurvivalCurve> {
    let dag = spec.validate()?;
    let mut heights = spec.heights.clone();
    heights.sort_unstable();
    heights.dedup();
    let target = *heights.last().unwrap();
    let windows: Vec<f64> = match spec.process {
        Process::Rmf => vec![f64::NAN; spec.drifts.len()],
        Process::Coupled => spec
            .drifts
            .iter()
            .map(|&c| max_mass(&spec.distribution, c).map(|m| m.x_left))
            .collect::<Result<_>>()?,
    };

    let one_run = |c: f64, x_c: f64, run: u64| -> Result<Tally> {
        let seed = derive_seed(spec.seed, spec.experiment, run);
        let field = FitnessField::new(&dag, spec.distribution.clone(), c, seed, spec.boundary)?;
        let result = match spec.process {
            Process::Rmf => survival_depth(&dag, &field, target, &spec.survival)?,
            Process::Coupled => survival_depth(&dag, &couple(&field, x_c)?, target, &spec.survival)?,
        };
        let mut t = Tally::zero(heights.len());
        for (j, &h) in heights.iter().enumerate() {
            if result.reached >= h {
                t.survivals[j] = 1;
            } else if result.outcome == SurvivalOutcome::Censored {
                t.survivals[j] = 1;
                t.censored[j] = 1;
            }
        }
        Ok(t)
    };

    let sweep = || -> Result<Vec<Tally>> {
        spec.drifts
            .iter()
            .zip(&windows)
            .map(|(&c, &x_c)| {
                (0..spec.runs)
                    .into_par_iter()
                    .map(|run| one_run(c, x_c, run))
                    .try_reduce(|| Tally::zero(heights.len()), |a, b| Ok(a.merge(b)))
            })
            .collect()
    };
    let tallies = match spec.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?
            .install(sweep)?,
        None => sweep()?,
    };

    let mut points = Vec::with_capacity(spec.drifts.len() * heights.len());
    for (&c, tally) in spec.drifts.iter().zip(tallies) {
        for (j, &height) in heights.iter().enumerate() {
            points.push(CurvePoint {
                c,
                height,
                runs: spec.runs,
                survivals: tally.survivals[j],
                censored: tally.censored[j],
            });
        }
    }
    Ok(SurvivalCurve {
        family: spec.family.to_string(),
        distribution: spec.distribution.to_string(),
        seed_base: spec.seed,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: Family, drifts: Vec<f64>) -> ExperimentSpec {
        ExperimentSpec::new(family, "uniform:0,1".parse().unwrap(), drifts, vec![5, 20, 40], 200, 11)
    }

    #[test]
    fn deterministic_across_worker_counts() {
        let mut a = spec(Family::L2, vec![0.2, 0.4]);
        a.workers = Some(1);
        let mut b = a.clone();
        b.workers = Some(3);
        assert_eq!(run_survival_experiment(&a).unwrap(), run_survival_experiment(&b).unwrap());
    }

    #[test]
    fn survival_is_monotone_in_drift_and_height() {
        let s = spec(Family::RegularTree { d: 2 }, vec![0.0, 0.1, 0.2, 0.3, 0.5]);
        let curve = run_survival_experiment(&s).unwrap();
        for h in [5, 20, 40] {
            let col: Vec<u64> = curve.points.iter().filter(|p| p.height == h).map(|p| p.survivals).collect();
            assert!(col.windows(2).all(|w| w[0] <= w[1]), "{col:?}");
        }
        for c in &s.drifts {
            let row: Vec<u64> = curve.points.iter().filter(|p| p.c == *c).map(|p| p.survivals).collect();
            assert!(row.windows(2).all(|w| w[0] >= w[1]));
        }
        // c >= 1 on a uniform law: every step is accessible
        let all = run_survival_experiment(&spec(Family::RegularTree { d: 2 }, vec![1.0])).unwrap();
        assert!(all.points.iter().all(|p| p.survivals == p.runs));
    }

    #[test]
    fn coupled_process_is_dominated() {
        let mut rmf = spec(Family::L2Alt, vec![0.3, 0.6]);
        let mut coupled = rmf.clone();
        coupled.process = Process::Coupled;
        rmf.workers = Some(2);
        let (a, b) = (run_survival_experiment(&rmf).unwrap(), run_survival_experiment(&coupled).unwrap());
        for (x, y) in a.points.iter().zip(&b.points) {
            assert!(y.survivals <= x.survivals);
        }
    }

    #[test]
    fn censoring_counts_as_survival() {
        let mut s = spec(Family::RegularTree { d: 2 }, vec![1.0]);
        s.survival = SurvivalOptions { frontier_cap: 10, trace: true, ..Default::default() };
        let curve = run_survival_experiment(&s).unwrap();
        let deep = curve.points.iter().find(|p| p.height == 40).unwrap();
        assert_eq!(deep.survivals, deep.runs);
        assert_eq!(deep.censored, deep.runs);
        assert!(curve.truncated());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(run_survival_experiment(&spec(Family::Hypercube { n: 4 }, vec![0.1])).is_err());
        assert!(run_survival_experiment(&spec(Family::L2, vec![-0.1])).is_err());
        let mut s = spec(Family::L2, vec![0.0]);
        s.process = Process::Coupled;
        assert!(run_survival_experiment(&s).is_err());
        s.process = Process::Rmf;
        s.runs = 0;
        assert!(run_survival_experiment(&s).is_err());
    }
}
