//! Decay of the boundary conductance `E[C(0 ↔ {|z| >= m})]` with the radius.

use rand::distr::Distribution;
use rand_distr::{Exp, Pareto};
use serde::{Deserialize, Serialize};

use crate::electric::conductance_to_boundary;
use crate::mc::{power_law_fit, replicate, seeded_rng, Estimate, Exec, SimRng};
use crate::model::{sample_graph, ModelConfig};
use crate::{Error, Result};

/// Distribution of i.i.d. nearest-neighbour conductances on `Z_nn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConductanceLaw {
    Unit,
    Exponential { rate: f64 },
    /// `P(C > x) = (scale / x)^tail_index` for `x >= scale`; the mean is
    /// infinite for `tail_index <= 1`.
    Pareto { tail_index: f64, scale: f64 },
}

impl ConductanceLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ConductanceLaw::Unit => true,
            ConductanceLaw::Exponential { rate } => rate.is_finite() && *rate > 0.0,
            ConductanceLaw::Pareto { tail_index, scale } => {
                tail_index.is_finite() && *tail_index > 0.0 && scale.is_finite() && *scale > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid conductance law {self:?}")))
        }
    }

    /// `P(C <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ConductanceLaw::Unit => {
                if x >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ConductanceLaw::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            ConductanceLaw::Pareto { tail_index, scale } => {
                if x < scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(tail_index)
                }
            }
        }
    }

    pub fn sampler(&self) -> Result<LawSampler> {
        self.validate()?;
        Ok(match *self {
            ConductanceLaw::Unit => LawSampler::Unit,
            ConductanceLaw::Exponential { rate } => LawSampler::Exp(Exp::new(rate).expect("validated")),
            ConductanceLaw::Pareto { tail_index, scale } => {
                LawSampler::Pareto(Pareto::new(scale, tail_index).expect("validated"))
            }
        })
    }
}

pub enum LawSampler {
    Unit,
    Exp(Exp<f64>),
    Pareto(Pareto<f64>),
}

impl LawSampler {
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        match self {
            LawSampler::Unit => 1.0,
            LawSampler::Exp(d) => d.sample(rng),
            LawSampler::Pareto(d) => d.sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecaySource {
    /// I.i.d. conductances on `Z_nn`.
    Law(ConductanceLaw),
    /// Conductances of a sampled percolation graph.
    Model(ModelConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub radii: Vec<i64>,
    pub estimates: Vec<Estimate>,
    /// Log-log slope of the mean conductance against the radius; `None` when
    /// some radius has zero mean.
    pub fitted_slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub flags: Vec<String>,
}

/// Boundary conductances of one line realization at each radius, from the
/// series law on both half-lines.
fn line_conductances(sampler: &LawSampler, radii: &[i64], rng: &mut SimRng) -> Vec<f64> {
    let max = *radii.last().expect("nonempty radii") as usize;
    let mut right = Vec::with_capacity(max);
    let mut left = Vec::with_capacity(max);
    for _ in 0..max {
        right.push(sampler.sample(rng));
        left.push(sampler.sample(rng));
    }
    let half = |cs: &[f64]| -> Vec<f64> {
        // Prefix resistances; a zero conductance breaks the chain for good.
        let mut acc = 0.0;
        cs.iter()
            .map(|&c| {
                acc += 1.0 / c;
                acc
            })
            .collect()
    };
    let (r_right, r_left) = (half(&right), half(&left));
    let inv = |r: f64| if r == 0.0 { f64::INFINITY } else { 1.0 / r };
    radii
        .iter()
        .map(|&m| inv(r_right[m as usize - 1]) + inv(r_left[m as usize - 1]))
        .collect()
}

pub fn conductance_decay_experiment(
    source: &DecaySource,
    radii: &[i64],
    replicas: u64,
    seed: u64,
    exec: Exec,
) -> Result<DecayFit> {
    if radii.is_empty() || radii[0] < 1 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("radii must be positive and strictly increasing"));
    }
    if replicas == 0 {
        return Err(Error::domain("replicas must be positive"));
    }

    let rows: Vec<Vec<f64>> = match source {
        DecaySource::Law(law) => {
            let sampler = law.sampler()?;
            replicate(replicas, seed, exec, |_, s| line_conductances(&sampler, radii, &mut seeded_rng(s)))
        }
        DecaySource::Model(config) => {
            config.validate()?;
            let max = *radii.last().expect("nonempty");
            if max > config.window_radius {
                return Err(Error::domain(format!(
                    "radius {max} exceeds window radius {}",
                    config.window_radius
                )));
            }
            let rows = replicate(replicas, seed, exec, |_, s| -> Result<Vec<f64>> {
                let net = sample_graph(&config.with_seed(s))?.to_network();
                radii.iter().map(|&m| conductance_to_boundary(&net, 0, m)).collect()
            });
            rows.into_iter().collect::<Result<_>>()?
        }
    };

    let estimates: Vec<Estimate> = (0..radii.len())
        .map(|i| Estimate::from_samples(&rows.iter().map(|r| r[i]).collect::<Vec<_>>()))
        .collect();
    let mut flags = Vec::new();
    for (m, e) in radii.iter().zip(&estimates) {
        if e.mean == 0.0 {
            flags.push(format!("zero mean conductance at radius {m}; slope undefined"));
        } else if !e.mean.is_finite() {
            flags.push(format!("non-finite mean conductance at radius {m}"));
        }
    }
    let (fitted_slope, slope_stderr) = if flags.is_empty() {
        let scales: Vec<f64> = radii.iter().map(|&m| m as f64).collect();
        match power_law_fit(&scales, &rows) {
            Some(fit) => (Some(fit.slope), Some(fit.slope_stderr)),
            None => {
                flags.push("fewer than two usable radii".into());
                (None, None)
            }
        }
    } else {
        (None, None)
    };
    Ok(DecayFit { radii: radii.to_vec(), estimates, fitted_slope, slope_stderr, flags })
}
