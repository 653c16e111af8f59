//! Edges above `0+` and long edges at dyadic scales.

use serde::{Deserialize, Serialize};

use crate::mc::{power_law_fit, replicate, Estimate, Exec};
use crate::model::{sample_graph, ConnectionFunction, GraphSample, KernelSpec, ModelConfig};
use crate::{Error, Result};

/// Number of edges `xy` with `x <= 0 < y`.
pub fn count_edges_above_zero(sample: &GraphSample) -> u64 {
    sample.edges().iter().filter(|e| e.a <= 0 && 0 < e.b).count() as u64
}

/// Exact mean of [`count_edges_above_zero`] for a constant kernel: the window
/// holds `min(m, 2n + 1 - m)` straddling pairs at distance `m`.
pub fn expected_edges_above_zero(config: &ModelConfig) -> Option<f64> {
    config.homogeneous_probability(1)?;
    let n = config.window_radius;
    Some(
        (1..=2 * n)
            .map(|m| m.min(2 * n + 1 - m) as f64 * config.homogeneous_probability(m).expect("constant kernel"))
            .sum(),
    )
}

/// Upper bound on the full-line mean minus the window mean for a constant
/// kernel `g`. The window loses part of every distance `m > n`, so the bound
/// is `Σ_{m > n} m φ(g m)`; infinite when the series diverges.
pub fn edges_above_zero_tail_bound(config: &ModelConfig) -> Option<f64> {
    let g = match config.kernel {
        KernelSpec::Constant { value } => value,
        _ => return None,
    };
    let big_n = config.window_radius as f64;
    Some(match config.connection {
        ConnectionFunction::Polynomial { p, delta } | ConnectionFunction::Truncated { p, delta } => {
            if g == f64::INFINITY {
                0.0
            } else if g == 0.0 || delta <= 2.0 {
                f64::INFINITY
            } else {
                // m^{1-δ} is decreasing, so the sum is below the integral from N.
                p * g.powf(-delta) * big_n.powf(2.0 - delta) / (delta - 2.0)
            }
        }
        ConnectionFunction::Indicator { radius } => {
            let reach = if g == 0.0 { f64::INFINITY } else { (radius / g).floor() };
            if reach.is_infinite() {
                f64::INFINITY
            } else if reach <= big_n {
                0.0
            } else {
                (reach * (reach + 1.0) - big_n * (big_n + 1.0)) / 2.0
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgesAboveZero {
    pub count: Estimate,
    /// Exact window mean for homogeneous models.
    pub expected: Option<f64>,
    pub tail_bound: Option<f64>,
}

pub fn edges_above_zero_experiment(
    config: &ModelConfig,
    replicas: u64,
    seed: u64,
    exec: Exec,
) -> Result<EdgesAboveZero> {
    config.validate()?;
    if replicas == 0 {
        return Err(Error::domain("replicas must be positive"));
    }
    let counts = replicate(replicas, seed, exec, |_, s| {
        sample_graph(&config.with_seed(s)).map(|g| count_edges_above_zero(&g) as f64)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(EdgesAboveZero {
        count: Estimate::from_samples(&counts),
        expected: expected_edges_above_zero(config),
        tail_bound: edges_above_zero_tail_bound(config),
    })
}

fn check_scale(config: &ModelConfig, k: u32) -> Result<i64> {
    if k > 60 {
        return Err(Error::domain(format!("scale index {k} too large")));
    }
    let reach = 1i64 << (k + 1);
    if reach > config.window_radius {
        return Err(Error::domain(format!(
            "scale {k} needs window radius >= {reach}, got {}",
            config.window_radius
        )));
    }
    Ok(1i64 << k)
}

/// Whether the sample has an edge of length `>= 2^k` with an endpoint in
/// `[-2^k, 2^k]`.
pub fn has_long_edge(sample: &GraphSample, k: u32) -> bool {
    let scale = 1i64 << k;
    sample
        .edges()
        .iter()
        .any(|e| e.length() >= scale && (e.a.abs() <= scale || e.b.abs() <= scale))
}

fn interval_len(lo: i64, hi: i64) -> i64 {
    (hi - lo + 1).max(0)
}

/// Exact long-edge probability for a constant kernel,
/// `1 - Π (1 - φ(|x - y|))` over the qualifying window pairs.
pub fn long_edge_exact(config: &ModelConfig, k: u32) -> Result<Option<f64>> {
    config.validate()?;
    let scale = check_scale(config, k)?;
    if config.homogeneous_probability(1).is_none() {
        return Ok(None);
    }
    let n = config.window_radius;
    let mut log_none = 0.0;
    for d in scale..=2 * n {
        // Left endpoints x in [-n, n - d] with x or x + d in [-scale, scale].
        let (lo, hi) = (-n, n - d);
        let a = interval_len(lo.max(-scale), hi.min(scale));
        let b = interval_len(lo.max(-scale - d), hi.min(scale - d));
        let both = interval_len(lo.max(-scale).max(-scale - d), hi.min(scale).min(scale - d));
        let pairs = a + b - both;
        if pairs == 0 {
            continue;
        }
        let q = config.homogeneous_probability(d).expect("constant kernel");
        if q >= 1.0 {
            return Ok(Some(1.0));
        }
        log_none += pairs as f64 * (-q).ln_1p();
    }
    Ok(Some(-log_none.exp_m1()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongEdgeEstimate {
    pub k: u32,
    pub probability: Estimate,
    pub exact: Option<f64>,
}

fn long_edge_hits(config: &ModelConfig, ks: &[u32], replicas: u64, seed: u64, exec: Exec) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    if replicas == 0 {
        return Err(Error::domain("replicas must be positive"));
    }
    for &k in ks {
        check_scale(config, k)?;
    }
    replicate(replicas, seed, exec, |_, s| {
        let g = sample_graph(&config.with_seed(s))?;
        Ok(ks.iter().map(|&k| if has_long_edge(&g, k) { 1.0 } else { 0.0 }).collect())
    })
    .into_iter()
    .collect()
}

fn proportion(rows: &[Vec<f64>], i: usize) -> Estimate {
    let hits = rows.iter().filter(|r| r[i] > 0.0).count() as u64;
    Estimate::from_proportion(hits, rows.len() as u64)
}

pub fn long_edge_probability(
    config: &ModelConfig,
    k: u32,
    replicas: u64,
    seed: u64,
    exec: Exec,
) -> Result<LongEdgeEstimate> {
    let rows = long_edge_hits(config, &[k], replicas, seed, exec)?;
    Ok(LongEdgeEstimate { k, probability: proportion(&rows, 0), exact: long_edge_exact(config, k)? })
}

/// Long-edge probabilities over a ladder of scales, estimated from shared
/// samples, with a fit of `P_k ~ 2^{-ϑ k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongEdgeLadder {
    pub scales: Vec<LongEdgeEstimate>,
    pub theta: Option<f64>,
    pub theta_stderr: Option<f64>,
    pub partial_sums: Vec<f64>,
    /// Geometric extrapolation of `Σ_{j > k_max} P_j` from the fit.
    pub tail_estimate: Option<f64>,
    /// `ϑ` is positive at 95% confidence, or every `P_k` vanished.
    pub summable: bool,
}

pub fn long_edge_ladder(
    config: &ModelConfig,
    ks: &[u32],
    replicas: u64,
    seed: u64,
    exec: Exec,
) -> Result<LongEdgeLadder> {
    if ks.len() < 2 || ks.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("need at least two strictly increasing scale indices"));
    }
    let rows = long_edge_hits(config, ks, replicas, seed, exec)?;
    let scales = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| Ok(LongEdgeEstimate { k, probability: proportion(&rows, i), exact: long_edge_exact(config, k)? }))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = 0.0;
    let partial_sums = scales
        .iter()
        .map(|s| {
            acc += s.probability.mean;
            acc
        })
        .collect();

    let all_zero = scales.iter().all(|s| s.probability.mean == 0.0);
    let xs: Vec<f64> = ks.iter().map(|&k| (k as f64).exp2()).collect();
    let fit = power_law_fit(&xs, &rows);
    let theta = fit.as_ref().map(|f| -f.slope);
    let theta_stderr = fit.as_ref().map(|f| f.slope_stderr);
    let summable = all_zero || matches!((theta, theta_stderr), (Some(t), Some(se)) if t - 1.96 * se > 0.0);
    let tail_estimate = if all_zero {
        Some(0.0)
    } else {
        theta.filter(|&t| t > 0.0).map(|t| {
            let last = scales.last().expect("nonempty").probability.mean;
            let r = (-t).exp2();
            last * r / (1.0 - r)
        })
    };
    Ok(LongEdgeLadder { scales, theta, theta_stderr, partial_sums, tail_estimate, summable })
}
