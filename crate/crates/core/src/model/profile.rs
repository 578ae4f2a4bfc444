use std::ops::Index;

use super::{compensated_sum, ModelError};

/// Allowed deviation of a probability vector's sum from one.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

fn check_simplex(values: &[f64]) -> Result<(), ModelError> {
    if values.is_empty() {
        return Err(ModelError::EmptyCatalog);
    }
    if let Some((i, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(ModelError::NotOnSimplex(format!(
            "entry {i} = {v} outside [0, 1]"
        )));
    }
    let sum = compensated_sum(values.iter().copied());
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(ModelError::NotOnSimplex(format!(
            "entries sum to {sum:.17}"
        )));
    }
    Ok(())
}

macro_rules! simplex_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Vec<f64>);

        impl $name {
            /// Wraps `values` after checking they lie on the probability simplex.
            pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
                check_simplex(&values)?;
                Ok(Self(values))
            }

            /// Normalizes non-negative weights. Fails if all weights are zero.
            pub fn from_weights(weights: &[f64]) -> Result<Self, ModelError> {
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(ModelError::NotOnSimplex(
                        "weights must be finite and non-negative".into(),
                    ));
                }
                let total = compensated_sum(weights.iter().copied());
                if total <= 0.0 {
                    return Err(ModelError::NotOnSimplex("weights sum to zero".into()));
                }
                Self::new(weights.iter().map(|w| w / total).collect())
            }

            pub fn uniform(n: usize) -> Result<Self, ModelError> {
                if n == 0 {
                    return Err(ModelError::EmptyCatalog);
                }
                Ok(Self(vec![1.0 / n as f64; n]))
            }

            /// All mass on file `index` (0-based).
            pub fn point_mass(n: usize, index: usize) -> Result<Self, ModelError> {
                if index >= n {
                    return Err(ModelError::FileOutOfRange { index, n });
                }
                let mut v = vec![0.0; n];
                v[index] = 1.0;
                Ok(Self(v))
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            /// Sup-norm distance to another vector of the same length.
            pub fn sup_distance(&self, other: &[f64]) -> f64 {
                self.0
                    .iter()
                    .zip(other)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            }
        }

        impl Index<usize> for $name {
            type Output = f64;
            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl AsRef<[f64]> for $name {
            fn as_ref(&self) -> &[f64] {
                &self.0
            }
        }
    };
}

simplex_vector! {
    /// Request probabilities over the file catalog (true, source or estimated).
    /// Index `i` is file `i + 1`.
    PopularityProfile
}

simplex_vector! {
    /// Random caching distribution: every SBS fills each of its `M` slots
    /// independently from this vector.
    CachingStrategy
}

impl PopularityProfile {
    /// Relative frequencies of per-file counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self, ModelError> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(ModelError::NotOnSimplex("all counts are zero".into()));
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }
}

/// Zipf popularity law: entry `i` (1-based) proportional to `i^(-theta)`.
pub fn zipf_profile(n: usize, theta: f64) -> Result<PopularityProfile, ModelError> {
    if n == 0 {
        return Err(ModelError::EmptyCatalog);
    }
    if !theta.is_finite() {
        return Err(ModelError::InvalidFamily(format!(
            "Zipf exponent must be finite (got {theta})"
        )));
    }
    let weights: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-theta)).collect();
    PopularityProfile::from_weights(&weights)
}
