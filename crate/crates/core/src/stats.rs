//! Trial-level statistics: standard errors, bootstrap bands, consistency,
//! moment-based Gaussianity, paired gaps and plateau checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::model::stream_rng;
use rand::Rng;

/// Channel reserved for bootstrap resampling so it never shares a stream with noise.
const BOOTSTRAP_CHANNEL: u64 = u64::MAX - 1;

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Sample mean and the standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let t = xs.len();
    if t == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / t as f64;
    if t == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1) as f64;
    (mean, (var / t as f64).sqrt())
}

/// Resampled trial indices, one row per resample, seeded deterministically.
pub fn bootstrap_indices(trials: usize, resamples: usize, seed: u64) -> Vec<Vec<usize>> {
    (0..resamples)
        .map(|r| {
            let mut rng = stream_rng(seed, BOOTSTRAP_CHANNEL, r as u64);
            (0..trials).map(|_| rng.random_range(0..trials)).collect()
        })
        .collect()
}

fn std_dev(xs: &[f64]) -> f64 {
    mean_se(xs).1 * (xs.len() as f64).sqrt()
}

/// `(1/T) Σ e eᵀ` using the known zero mean.
pub fn second_moment(errors: &[&[f64]]) -> Mat {
    let n = errors.first().map_or(0, |e| e.len());
    let mut s = Mat::zeros(n, n);
    for e in errors {
        for r in 0..n {
            for c in 0..n {
                s[(r, c)] += e[r] * e[c];
            }
        }
    }
    s / errors.len().max(1) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsistencyCell {
    pub k: usize,
    /// Zero-based node index.
    pub sensor: usize,
    /// `λ_min(P − Ê[e eᵀ])`.
    pub min_eig: f64,
    /// Allowed shortfall below zero: `sigmas` bootstrap standard errors.
    pub band: f64,
    pub passed: bool,
}

/// Consistency of one `(k, i)` cell from the per-trial errors.
pub fn consistency_cell(k: usize, sensor: usize, p: &Mat, errors: &[&[f64]], resamples: &[Vec<usize>], sigmas: f64) -> ConsistencyCell {
    let n = p.nrows();
    let min_eig = linalg::min_eigenvalue(&(p - second_moment(errors)));
    // Outer products once, then resample by index.
    let outer: Vec<f64> = errors.iter().flat_map(|e| (0..n * n).map(move |ix| e[ix / n] * e[ix % n])).collect();
    let t = errors.len() as f64;
    let boot: Vec<f64> = resamples
        .iter()
        .map(|idx| {
            let mut s = Mat::zeros(n, n);
            for &j in idx {
                for (ix, v) in outer[j * n * n..(j + 1) * n * n].iter().enumerate() {
                    s[(ix / n, ix % n)] += v;
                }
            }
            linalg::min_eigenvalue(&(p - s / t))
        })
        .collect();
    let band = sigmas * std_dev(&boot);
    ConsistencyCell {
        k,
        sensor,
        min_eig,
        band,
        passed: min_eig >= -band,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianityReport {
    pub samples: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub skewness: f64,
    pub skewness_se: f64,
    pub excess_kurtosis: f64,
    pub kurtosis_se: f64,
    pub mean_ok: bool,
    pub skewness_ok: bool,
    pub kurtosis_ok: bool,
}

impl GaussianityReport {
    pub fn passed(&self) -> bool {
        self.mean_ok && self.skewness_ok && self.kurtosis_ok
    }
}

/// Moment checks on scalar samples at `sigmas` standard errors: mean zero,
/// skewness zero (SE `√(6/T)`), excess kurtosis zero (SE `√(24/T)`). Needs `T ≥ 200`.
pub fn gaussianity_check(samples: &[f64], sigmas: f64) -> Result<GaussianityReport> {
    let t = samples.len();
    if t < 200 {
        return Err(Error::InvalidArgument(format!("moment checks need at least 200 samples, got {t}")));
    }
    let (mean, mean_se) = mean_se(samples);
    let tf = t as f64;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / tf;
    let m3 = samples.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / tf;
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / tf;
    let skewness = m3 / m2.powf(1.5);
    let excess_kurtosis = m4 / (m2 * m2) - 3.0;
    let skewness_se = (6.0 / tf).sqrt();
    let kurtosis_se = (24.0 / tf).sqrt();
    Ok(GaussianityReport {
        samples: t,
        mean,
        mean_se,
        skewness,
        skewness_se,
        excess_kurtosis,
        kurtosis_se,
        mean_ok: mean.abs() <= sigmas * mean_se,
        skewness_ok: skewness.abs() <= sigmas * skewness_se,
        kurtosis_ok: excess_kurtosis.abs() <= sigmas * kurtosis_se,
    })
}

/// Paired comparison of per-trial values: `worse − better` should not be
/// significantly negative.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairedGap {
    pub mean: f64,
    pub se: f64,
    pub sigmas: f64,
    pub passed: bool,
}

pub fn paired_gap(worse: &[f64], better: &[f64], sigmas: f64) -> Result<PairedGap> {
    if worse.len() != better.len() || worse.is_empty() {
        return Err(Error::dims("paired gap", worse.len(), better.len()));
    }
    let diff: Vec<f64> = worse.iter().zip(better).map(|(w, b)| w - b).collect();
    let (mean, se) = mean_se(&diff);
    Ok(PairedGap {
        mean,
        se,
        sigmas,
        passed: mean >= -sigmas * se,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub finite: bool,
    /// Max over `[K/2, 3K/4)`.
    pub mid_max: f64,
    /// Max over `[3K/4, K]`.
    pub last_max: f64,
    pub ratio: f64,
    pub passed: bool,
}

/// Plateau check on a per-step series `v_0 ..= v_K`: everything finite and
/// `last_max ≤ tolerance · mid_max`.
pub fn boundedness(series: &[f64], tolerance: f64) -> BoundednessReport {
    let horizon = series.len().saturating_sub(1);
    let finite = series.iter().all(|v| v.is_finite());
    let (half, three_q) = (horizon / 2, 3 * horizon / 4);
    let max_of = |s: &[f64]| s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mid_max = max_of(&series[half..three_q.max(half)]);
    let last_max = max_of(&series[three_q.min(series.len())..]);
    let ratio = last_max / mid_max;
    BoundednessReport {
        finite,
        mid_max,
        last_max,
        ratio,
        passed: finite && mid_max.is_finite() && last_max <= tolerance * mid_max,
    }
}
