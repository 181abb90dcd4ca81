use serde::{Deserialize, Serialize};

use super::curve::SurvivalCurve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdBracket {
    /// Largest grid drift below `c_high` with no surviving run.
    pub c_low: f64,
    /// Smallest grid drift with at least one surviving run.
    pub c_high: f64,
    pub height: u32,
    pub runs: u64,
}

/// Brackets the drift at which survival to `height` first becomes
/// observable (empirical survival above zero, i.e. at least `1 / runs`).
pub fn estimate_threshold(curve: &SurvivalCurve, height: u32) -> Result<ThresholdBracket> {
    let pts = curve.at_height(height);
    let first = pts
        .iter()
        .position(|p| p.survivals > 0)
        .ok_or_else(|| Error::NoBracket(format!("no drift on the grid survives to height {height}")))?;
    let low = pts[..first]
        .last()
        .ok_or_else(|| Error::NoBracket(format!("the smallest drift already survives to height {height}")))?;
    Ok(ThresholdBracket { c_low: low.c, c_high: pts[first].c, height, runs: pts[first].runs })
}
