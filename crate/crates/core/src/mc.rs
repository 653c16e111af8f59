//! Seed derivation and replica execution.
//!
//! Replica `r` of an experiment with master seed `s` always draws from the
//! generator seeded with [`derive_seed`]`(s, r)`, whatever the worker count.
//! Results are collected in replica order so that any subsequent reduction is
//! bit-for-bit reproducible.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The generator used everywhere in the crate.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable mixing of `(master, index)` into a replica seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub fn seeded_rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Worker configuration for replica loops. `workers: None` uses the global
/// rayon pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Exec {
    pub workers: Option<usize>,
}

impl Exec {
    pub fn with_workers(workers: usize) -> Self {
        Exec { workers: Some(workers.max(1)) }
    }
}

/// Runs `f(r, seed_r)` for `r in 0..replicas` and returns the results in
/// replica order.
pub fn replicate<T, F>(replicas: u64, master_seed: u64, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    let run = || {
        (0..replicas)
            .into_par_iter()
            .map(|r| f(r, derive_seed(master_seed, r)))
            .collect::<Vec<T>>()
    };
    match exec.workers {
        Some(1) => (0..replicas).map(|r| f(r, derive_seed(master_seed, r))).collect(),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        None => run(),
    }
}

/// Sample mean with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Estimate {
        let count = samples.len() as u64;
        if count == 0 {
            return Estimate { mean: f64::NAN, stderr: f64::NAN, count };
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let stderr = if count > 1 {
            let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr, count }
    }

    /// Estimate of a Bernoulli probability from `hits` successes in `count`
    /// trials, with the binomial standard error.
    pub fn from_proportion(hits: u64, count: u64) -> Estimate {
        if count == 0 {
            return Estimate { mean: f64::NAN, stderr: f64::NAN, count };
        }
        let p = hits as f64 / count as f64;
        Estimate { mean: p, stderr: (p * (1.0 - p) / count as f64).sqrt(), count }
    }
}

/// Log-log least-squares fit of `mean(values[.., i])` against `scales[i]`.
///
/// The slope stderr comes from the delta method applied to the replica
/// matrix, so correlations between scales sharing a replica are accounted
/// for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
}

/// `per_replica[r][i]` is the observation of replica `r` at `scales[i]`.
/// Returns `None` when fewer than two scales have a positive mean.
pub fn power_law_fit(scales: &[f64], per_replica: &[Vec<f64>]) -> Option<PowerLawFit> {
    let k = scales.len();
    let replicas = per_replica.len();
    if replicas == 0 {
        return None;
    }
    let means: Vec<f64> = (0..k)
        .map(|i| per_replica.iter().map(|row| row[i]).sum::<f64>() / replicas as f64)
        .collect();
    let used: Vec<usize> = (0..k).filter(|&i| means[i] > 0.0 && means[i].is_finite()).collect();
    if used.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = used.iter().map(|&i| scales[i].ln()).collect();
    let ys: Vec<f64> = used.iter().map(|&i| means[i].ln()).collect();
    let xbar = xs.iter().sum::<f64>() / xs.len() as f64;
    let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let weights: Vec<f64> = xs.iter().map(|x| (x - xbar) / sxx).collect();
    let slope: f64 = weights.iter().zip(&ys).map(|(w, y)| w * y).sum();
    let intercept = ybar - slope * xbar;

    // slope = sum_j w_j ln(mean_j); linearize around the sample means.
    let lin: Vec<f64> = per_replica
        .iter()
        .map(|row| {
            used.iter()
                .zip(&weights)
                .map(|(&i, w)| w * row[i] / means[i])
                .sum::<f64>()
        })
        .collect();
    let slope_stderr = Estimate::from_samples(&lin).stderr;
    Some(PowerLawFit { slope, slope_stderr, intercept })
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_ne!(derive_seed(7, 3), derive_seed(7, 4));
        assert_ne!(derive_seed(7, 3), derive_seed(8, 3));
    }

    #[test]
    fn replicate_is_independent_of_workers() {
        let f = |r: u64, s: u64| (r, s);
        let a = replicate(100, 11, Exec::with_workers(1), f);
        let b = replicate(100, 11, Exec::with_workers(4), f);
        let c = replicate(100, 11, Exec::default(), f);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn exact_power_law_has_zero_stderr() {
        let scales = [4.0, 8.0, 16.0];
        let rows = vec![scales.iter().map(|m| 2.0 / m).collect::<Vec<_>>(); 5];
        let fit = power_law_fit(&scales, &rows).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!(fit.slope_stderr.abs() < 1e-12);
    }

    #[test]
    fn proportion_stderr() {
        let e = Estimate::from_proportion(25, 100);
        assert_eq!(e.mean, 0.25);
        assert!((e.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }
}
