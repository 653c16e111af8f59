//! Aggregate report combining the three numerical diagnostics.
//!
//! The report only states which sufficient conditions look numerically
//! satisfied. It is never a proof of recurrence.

use serde::{Deserialize, Serialize};

use super::decay::{conductance_decay_experiment, DecayFit, DecaySource};
use super::delta_eff::{delta_eff_estimate, DeltaEffEstimate, DEFAULT_RESOLUTION, DEFAULT_SCALES};
use super::edges::{long_edge_ladder, LongEdgeLadder};
use crate::mc::{derive_seed, Exec};
use crate::model::ModelConfig;
use crate::Result;

/// Decay slopes at or below this value count as `O(1/m)` at desk scale.
pub const DECAY_SLOPE_THRESHOLD: f64 = -0.85;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictBudget {
    pub scales: Vec<f64>,
    pub quadrature_resolution: usize,
    pub long_edge_scales: Vec<u32>,
    pub long_edge_replicas: u64,
    pub radii: Vec<i64>,
    pub decay_replicas: u64,
}

impl Default for VerdictBudget {
    fn default() -> Self {
        VerdictBudget {
            scales: DEFAULT_SCALES.to_vec(),
            quadrature_resolution: DEFAULT_RESOLUTION,
            long_edge_scales: (1..=6).collect(),
            long_edge_replicas: 2000,
            radii: vec![4, 8, 16, 32, 64],
            decay_replicas: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    ConsistentWithRecurrence,
    NotConsistent,
    /// The exponent interval contains 2, or a diagnostic could not be formed.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub delta_eff: DeltaEffEstimate,
    pub long_edges: LongEdgeLadder,
    pub decay: DecayFit,
    /// `δ_eff > 2` with its interval clear of 2; `None` when the interval
    /// contains 2.
    pub strong_decay: Option<bool>,
    pub long_edges_summable: bool,
    /// Decay slope at or below [`DECAY_SLOPE_THRESHOLD`]; `None` when the
    /// slope is undefined.
    pub decay_consistent: Option<bool>,
    pub verdict: Verdict,
    /// Numerical flags raised by the sub-estimators.
    pub flags: Vec<String>,
    pub notes: Vec<String>,
}

/// Runs the three diagnostics. The long-edge ladder and the decay experiment
/// each run on a copy of `config` whose window is just large enough for
/// their scales.
pub fn recurrence_verdict(
    config: &ModelConfig,
    budget: &VerdictBudget,
    seed: u64,
    exec: Exec,
) -> Result<RecurrenceReport> {
    config.validate()?;
    let delta_eff = delta_eff_estimate(&config.kernel, &config.connection, &budget.scales, budget.quadrature_resolution)?;

    let k_max = budget.long_edge_scales.iter().copied().max().unwrap_or(0);
    let ladder_config = config.with_window(1i64 << (k_max + 1));
    let long_edges = long_edge_ladder(
        &ladder_config,
        &budget.long_edge_scales,
        budget.long_edge_replicas,
        derive_seed(seed, 1),
        exec,
    )?;

    let r_max = budget.radii.iter().copied().max().unwrap_or(1);
    let decay_config = config.with_window(r_max);
    let decay = conductance_decay_experiment(
        &DecaySource::Model(decay_config),
        &budget.radii,
        budget.decay_replicas,
        derive_seed(seed, 2),
        exec,
    )?;

    let mut flags = Vec::new();
    let mut notes = Vec::new();
    if !delta_eff.converged {
        flags.push("delta_eff quadrature did not converge".to_string());
    }
    flags.extend(decay.flags.iter().map(|f| format!("decay: {f}")));

    let strong_decay = if delta_eff.divergent {
        notes.push("connection integral vanishes at large scales; delta_eff is infinite".into());
        Some(true)
    } else if delta_eff.interval_contains(2.0) {
        flags.push(format!(
            "delta_eff interval [{:.3}, {:.3}] contains 2; the criteria do not apply there",
            delta_eff.interval().0,
            delta_eff.interval().1
        ));
        None
    } else {
        Some(delta_eff.estimate > 2.0)
    };
    let long_edges_summable = long_edges.summable;
    if !long_edges_summable {
        notes.push("long-edge scale probabilities are not summable at 95% confidence".into());
    }
    let decay_consistent = decay.fitted_slope.map(|s| s <= DECAY_SLOPE_THRESHOLD);
    if decay_consistent == Some(false) {
        notes.push(format!("decay slope above {DECAY_SLOPE_THRESHOLD}"));
    }
    if strong_decay == Some(false) {
        notes.push("weak decay regime: delta_eff < 2".into());
    }

    let verdict = match (strong_decay, decay_consistent) {
        (None, _) | (_, None) => Verdict::Inconclusive,
        (Some(true), Some(true)) if long_edges_summable => Verdict::ConsistentWithRecurrence,
        _ => Verdict::NotConsistent,
    };
    Ok(RecurrenceReport {
        delta_eff,
        long_edges,
        decay,
        strong_decay,
        long_edges_summable,
        decay_consistent,
        verdict,
        flags,
        notes,
    })
}
