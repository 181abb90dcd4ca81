//! Moment formulas, the T(n,k) table, and the Monte Carlo survival harness.

mod curve;
mod experiment;
mod moments;
mod threshold;
mod tnk;

pub use curve::{CurvePoint, SurvivalCurve};
pub use experiment::{run_survival_experiment, ExperimentSpec, Process};
pub use moments::{
    expected_open_paths, moment_site_field, moment_study, variance_scaling_study, MomentReport,
};
pub use threshold::{estimate_threshold, ThresholdBracket};
pub use tnk::path_intersection_table;

use crate::graphs::Family;
use crate::hashing::{KeyHash, Stream};

/// Stable 64-bit tag of a family, used to separate seed streams.
pub fn family_tag(family: Family) -> u64 {
    family
        .to_string()
        .bytes()
        .fold(KeyHash::new(0, Stream::Label), |h, b| h.push(b as u64))
        .finish()
}
