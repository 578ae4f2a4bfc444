//! Popularity-profile estimators: target-only relative frequencies, the
//! pooled and convex-combination transfer-learning variants, and the
//! parametric estimator with source/target fusion.

use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::model::{ModelError, ParametricFamily, PopularityProfile};
use crate::spatial::{sample_files, RequestLog, SpatialError};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("weight {name} = {value} outside [0, 1]")]
    InvalidWeight { name: &'static str, value: f64 },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("file index {index} outside catalog of {n}")]
    FileOutOfRange { index: usize, n: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
}

/// Per-file request counts from the source domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSamples {
    counts: Vec<u64>,
    total: u64,
}

impl SourceSamples {
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    /// Tallies 0-based file indices over a catalog of `n` files.
    pub fn from_files(files: &[usize], n: usize) -> Result<Self, EstimationError> {
        let mut counts = vec![0u64; n];
        for &f in files {
            *counts
                .get_mut(f)
                .ok_or(EstimationError::FileOutOfRange { index: f + 1, n })? += 1;
        }
        Ok(Self::from_counts(counts))
    }

    /// Draws `m` i.i.d. samples from `source`.
    pub fn draw<R: Rng + ?Sized>(source: &PopularityProfile, m: usize, rng: &mut R) -> Self {
        let files = sample_files(source, m, rng);
        Self::from_files(&files, source.len()).expect("sampled indices are in range")
    }

    /// Uses every request of a log as a source sample; user ids are ignored.
    pub fn from_log(log: &RequestLog, n: usize) -> Result<Self, EstimationError> {
        Ok(Self::from_counts(log.counts(n)?))
    }

    /// Reads the request-log line format.
    pub fn load(path: &Path, n: usize) -> Result<Self, EstimationError> {
        Self::from_log(&RequestLog::load(path)?, n)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Number of source samples `m`.
    pub fn m(&self) -> u64 {
        self.total
    }

    fn check_len(&self, n: usize) -> Result<(), EstimationError> {
        if self.counts.len() != n {
            return Err(EstimationError::DimensionMismatch(self.counts.len(), n));
        }
        Ok(())
    }
}

/// Relative request frequencies observed by the BS.
pub fn empirical_profile(log: &RequestLog, n: usize) -> Result<PopularityProfile, EstimationError> {
    let counts = log.counts(n)?;
    if counts.iter().all(|&c| c == 0) {
        return Err(EstimationError::InsufficientData(format!(
            "no requests from {} users over {} s",
            log.n_users(),
            log.tau
        )));
    }
    Ok(PopularityProfile::from_counts(&counts)?)
}

/// Target and source counts pooled into one relative frequency,
/// `(S_i^tar + S_i^s) / (Σ k_x + m)`.
pub fn tl_pooled_profile(
    log: &RequestLog,
    source: &SourceSamples,
    n: usize,
) -> Result<PopularityProfile, EstimationError> {
    source.check_len(n)?;
    let target = log.counts(n)?;
    let pooled: Vec<u64> = target.iter().zip(source.counts()).map(|(a, b)| a + b).collect();
    if pooled.iter().all(|&c| c == 0) {
        return Err(EstimationError::InsufficientData(
            "no target requests and no source samples".into(),
        ));
    }
    Ok(PopularityProfile::from_counts(&pooled)?)
}

/// `α p̂^(s) + (1 − α) p̂^(t)`. A side with zero weight may be empty.
pub fn tl_convex_profile(
    log: &RequestLog,
    source: &SourceSamples,
    alpha: f64,
    n: usize,
) -> Result<PopularityProfile, EstimationError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(EstimationError::InvalidWeight {
            name: "alpha",
            value: alpha,
        });
    }
    source.check_len(n)?;
    if alpha == 0.0 {
        return empirical_profile(log, n);
    }
    if source.m() == 0 {
        return Err(EstimationError::InsufficientData(
            "alpha > 0 needs at least one source sample".into(),
        ));
    }
    let source_profile = PopularityProfile::from_counts(source.counts())?;
    if alpha == 1.0 {
        return Ok(source_profile);
    }
    let target_profile = empirical_profile(log, n)?;
    let mixed: Vec<f64> = source_profile
        .as_slice()
        .iter()
        .zip(target_profile.as_slice())
        .map(|(s, t)| alpha * s + (1.0 - alpha) * t)
        .collect();
    Ok(PopularityProfile::from_weights(&mixed)?)
}

/// Mean of single-sample estimates `f(X_j)`, clamped to the parameter box.
pub fn parametric_estimate<F: ParametricFamily + ?Sized>(
    files: &[usize],
    family: &F,
) -> Result<Vec<f64>, EstimationError> {
    if files.is_empty() {
        return Err(EstimationError::InsufficientData(
            "parametric estimate needs at least one sample".into(),
        ));
    }
    let geometry = family.geometry();
    let n = family.catalog_size();
    let mut sum = vec![0.0; geometry.dim];
    for &f in files {
        if f >= n {
            return Err(EstimationError::FileOutOfRange { index: f + 1, n });
        }
        for (acc, v) in sum.iter_mut().zip(family.per_sample_estimate(f)) {
            *acc += v;
        }
    }
    let count = files.len() as f64;
    let mut mean: Vec<f64> = sum.into_iter().map(|s| s / count).collect();
    geometry.clamp(&mut mean);
    Ok(mean)
}

/// `λ Θ̂_t + (1 − λ) Θ̂_s`, componentwise.
pub fn parametric_tl_fuse(
    theta_t: &[f64],
    theta_s: &[f64],
    lambda: f64,
) -> Result<Vec<f64>, EstimationError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(EstimationError::InvalidWeight {
            name: "lambda",
            value: lambda,
        });
    }
    if theta_t.len() != theta_s.len() {
        return Err(EstimationError::DimensionMismatch(theta_t.len(), theta_s.len()));
    }
    Ok(theta_t
        .iter()
        .zip(theta_s)
        .map(|(t, s)| lambda * t + (1.0 - lambda) * s)
        .collect())
}
