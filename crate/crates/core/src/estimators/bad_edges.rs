//! Ergodic density of bad edges, i.e. edges with conductance at most `M`.

use serde::{Deserialize, Serialize};

use super::decay::ConductanceLaw;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BadEdgeParams {
    pub threshold: f64,
    /// `P(C <= threshold)`, the limit of the running fraction.
    pub target: f64,
}

impl BadEdgeParams {
    pub fn new(threshold: f64, target: f64) -> Result<Self> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(Error::domain(format!("threshold must be finite and positive, got {threshold}")));
        }
        if !(target > 0.0 && target <= 1.0) {
            return Err(Error::domain(format!("target fraction must lie in (0, 1], got {target}")));
        }
        Ok(BadEdgeParams { threshold, target })
    }

    /// Target taken from the law's distribution function at `threshold`.
    pub fn for_law(law: &ConductanceLaw, threshold: f64) -> Result<Self> {
        law.validate()?;
        Self::new(threshold, law.cdf(threshold))
    }
}

/// Fraction of entries `<= threshold` among the first `n` entries, for every
/// `n` from 1 to the sample length.
pub fn bad_edge_fraction(sample: &[f64], params: &BadEdgeParams) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::domain("empty conductance sample"));
    }
    let mut bad = 0u64;
    Ok(sample
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if c <= params.threshold {
                bad += 1;
            }
            bad as f64 / (i + 1) as f64
        })
        .collect())
}
