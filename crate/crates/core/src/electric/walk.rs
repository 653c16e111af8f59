//! The conductance-biased random walk and Monte Carlo escape probabilities.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::electric::{Network, TerminalPair};
use crate::mc::{replicate, seeded_rng, Estimate, Exec};
use crate::{Error, Result};

/// The walk is undefined at a vertex with no incident conductance, or with
/// infinite total conductance. In the latter case the cluster is declared
/// transient by convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("walk undefined: node {node} has no incident edges")]
    Isolated { node: usize },
    #[error("walk undefined: node {node} has infinite total conductance (declared transient)")]
    InfiniteDegree { node: usize },
}

impl WalkError {
    pub fn declared_transient(&self) -> bool {
        matches!(self, WalkError::InfiniteDegree { .. })
    }
}

/// One step from `node`: moves to neighbour `y` with probability
/// `C_xy / Σ_z C_xz`.
pub fn walk_step<R: Rng + ?Sized>(net: &Network, node: usize, rng: &mut R) -> Result<usize, WalkError> {
    let total = net.total_conductance(node);
    if total == 0.0 {
        return Err(WalkError::Isolated { node });
    }
    if !total.is_finite() {
        return Err(WalkError::InfiniteDegree { node });
    }
    let (targets, cumulative) = net.row_cumulative(node);
    let u = rng.random::<f64>() * total;
    let k = cumulative.partition_point(|&c| c <= u).min(targets.len() - 1);
    Ok(targets[k])
}

/// Outcome counts of [`escape_probability_mc`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeEstimate {
    /// Probability of reaching the sink before returning to the source,
    /// estimated over the walks that decided within `max_steps`.
    pub probability: Estimate,
    pub escaped: u64,
    pub returned: u64,
    pub censored: u64,
    /// Fraction of walks stopped at `max_steps`.
    pub censored_rate: f64,
    /// Total conductance incident to the contracted source.
    pub source_conductance: f64,
    /// `source_conductance` times the escape probability, with its stderr.
    pub conductance: Estimate,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Escaped,
    Returned,
    Censored,
}

/// Monte Carlo estimate of the probability that the walk started at the
/// contracted source hits the contracted sink before returning.
pub fn escape_probability_mc(
    net: &Network,
    terminals: &TerminalPair,
    replicas: u64,
    max_steps: u64,
    seed: u64,
    exec: Exec,
) -> Result<EscapeEstimate> {
    if replicas == 0 || max_steps == 0 {
        return Err(Error::domain("replicas and max_steps must be positive"));
    }
    let net = net.contract(terminals.source())?.contract(terminals.sink())?;
    let a = net.node_of(terminals.source()[0]).expect("source label present");
    let b = net.node_of(terminals.sink()[0]).expect("sink label present");
    if a == b {
        return Err(Error::domain("source and sink are merged by infinite conductances"));
    }
    // Surface walk errors at the source before spawning replicas.
    walk_step(&net, a, &mut seeded_rng(seed))?;

    let outcomes = replicate(replicas, seed, exec, |_, s| -> Result<Outcome, WalkError> {
        let mut rng = seeded_rng(s);
        let mut x = walk_step(&net, a, &mut rng)?;
        let mut steps = 1;
        loop {
            if x == b {
                return Ok(Outcome::Escaped);
            }
            if x == a {
                return Ok(Outcome::Returned);
            }
            if steps >= max_steps {
                return Ok(Outcome::Censored);
            }
            x = walk_step(&net, x, &mut rng)?;
            steps += 1;
        }
    });
    let (mut escaped, mut returned, mut censored) = (0, 0, 0);
    for o in outcomes {
        match o? {
            Outcome::Escaped => escaped += 1,
            Outcome::Returned => returned += 1,
            Outcome::Censored => censored += 1,
        }
    }
    let probability = Estimate::from_proportion(escaped, escaped + returned);
    let source_conductance = net.total_conductance(a);
    let conductance = Estimate {
        mean: source_conductance * probability.mean,
        stderr: source_conductance * probability.stderr,
        count: probability.count,
    };
    Ok(EscapeEstimate {
        probability,
        escaped,
        returned,
        censored,
        censored_rate: censored as f64 / replicas as f64,
        source_conductance,
        conductance,
    })
}
