//! Domain types shared by every other module: the network configuration,
//! probability vectors over the file catalog, and parametric popularity
//! families.

mod config;
mod family;
mod profile;

pub use config::NetworkConfig;
pub use family::{AffineFamily, FamilyGeometry, ParametricFamily, ZipfFamily};
pub use profile::{zipf_profile, CachingStrategy, PopularityProfile, SIMPLEX_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid configuration: {field} {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("invalid probability vector: {0}")]
    NotOnSimplex(String),
    #[error("catalog size must be at least 1")]
    EmptyCatalog,
    #[error("invalid parametric family: {0}")]
    InvalidFamily(String),
    #[error("file index {index} outside catalog of {n} files")]
    FileOutOfRange { index: usize, n: usize },
}

/// Neumaier-compensated sum; probability vectors can be long enough for
/// naive summation error to approach the simplex tolerance.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
