//! Bias-corrected and accelerated (BCa) bootstrap intervals for a mean.
//!
//! Resampling draws `n` indices per replicate from
//! `ChaCha8Rng::seed_from_u64(seed)` via `random_range(0..n as u32)`, so
//! intervals are reproducible for a fixed seed. Percentiles of the
//! bootstrap distribution use the nearest-rank rule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 2000;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Means of `resamples` bootstrap replicates of `samples`.
pub fn bootstrap_means(samples: &[f64], resamples: usize, seed: u64) -> Vec<f64> {
    let n = samples.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..resamples)
        .map(|_| {
            let total: f64 = (0..n).map(|_| samples[rng.random_range(0..n as u32) as usize]).sum();
            total / n as f64
        })
        .collect()
}

/// Leave-one-out means.
pub fn jackknife_means(samples: &[f64]) -> Vec<f64> {
    let n = samples.len() as f64;
    let total: f64 = samples.iter().sum();
    samples.iter().map(|x| (total - x) / (n - 1.0)).collect()
}

/// Acceleration from the jackknife skewness.
pub fn acceleration(samples: &[f64]) -> f64 {
    let jack = jackknife_means(samples);
    let center = mean(&jack);
    let (num, den) = jack.iter().fold((0.0, 0.0), |(n3, d2), &t| {
        let d = center - t;
        (n3 + d * d * d, d2 + d * d)
    });
    if den == 0.0 {
        0.0
    } else {
        num / (6.0 * den.powf(1.5))
    }
}

/// Nearest-rank percentile of sorted data.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let b = sorted.len();
    let rank = ((q * b as f64).ceil() as usize).clamp(1, b);
    sorted[rank - 1]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcaInterval {
    pub low: f64,
    pub high: f64,
    pub bias_correction: f64,
    pub acceleration: f64,
}

/// BCa interval for the mean of `samples` at `confidence`.
///
/// The bias correction uses the fraction of bootstrap means below the
/// sample mean, counting ties as half. Identical samples give the
/// degenerate interval `(v, v)`.
pub fn bca(samples: &[f64], confidence: f64, resamples: usize, seed: u64) -> Result<BcaInterval> {
    if samples.len() < 2 {
        return Err(Error::config("BCa needs at least two samples"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::config("confidence must lie strictly between 0 and 1"));
    }
    if resamples == 0 {
        return Err(Error::config("BCa needs at least one resample"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::config("BCa samples must be finite"));
    }
    let center = mean(samples);
    if samples.iter().all(|&x| x == samples[0]) {
        return Ok(BcaInterval {
            low: samples[0],
            high: samples[0],
            bias_correction: 0.0,
            acceleration: 0.0,
        });
    }

    let mut boot = bootstrap_means(samples, resamples, seed);
    boot.sort_by(f64::total_cmp);
    let below = boot.iter().filter(|&&m| m < center).count() as f64;
    let ties = boot.iter().filter(|&&m| m == center).count() as f64;
    let b = resamples as f64;
    let frac = ((below + 0.5 * ties) / b).clamp(0.5 / b, 1.0 - 0.5 / b);

    let normal = std_normal();
    let z0 = normal.inverse_cdf(frac);
    let a = acceleration(samples);
    let alpha = (1.0 - confidence) / 2.0;
    let adjusted = |q: f64| {
        let zq = normal.inverse_cdf(q);
        normal.cdf(z0 + (z0 + zq) / (1.0 - a * (z0 + zq)))
    };
    Ok(BcaInterval {
        low: nearest_rank(&boot, adjusted(alpha)),
        high: nearest_rank(&boot, adjusted(1.0 - alpha)),
        bias_correction: z0,
        acceleration: a,
    })
}

/// `(low, high)` of [`bca`].
pub fn bca_interval(samples: &[f64], confidence: f64, resamples: usize, seed: u64) -> Result<(f64, f64)> {
    bca(samples, confidence, resamples, seed).map(|i| (i.low, i.high))
}

/// Aggregate of one generation across trials.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub generation: u64,
    pub trial_scores: Vec<f64>,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl CurvePoint {
    /// Mean and 95% BCa band of `trial_scores`. A single trial gives a
    /// zero-width band. The band is widened to contain the mean if the
    /// bootstrap endpoints fall on one side of it.
    pub fn from_trials(generation: u64, trial_scores: Vec<f64>, seed: u64) -> Result<Self> {
        if trial_scores.is_empty() {
            return Err(Error::config("curve point needs at least one trial"));
        }
        let m = mean(&trial_scores);
        let (low, high) = if trial_scores.len() == 1 {
            (m, m)
        } else {
            bca_interval(&trial_scores, DEFAULT_CONFIDENCE, DEFAULT_RESAMPLES, seed)?
        };
        Ok(CurvePoint {
            generation,
            trial_scores,
            mean: m,
            ci_low: low.min(m),
            ci_high: high.max(m),
        })
    }
}
