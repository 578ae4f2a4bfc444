//! Learning-based random caching for heterogeneous small-cell networks.
//!
//! - [`model`]: configuration, probability vectors, parametric families.
//! - [`analytic`]: closed-form offloading loss and its minimization.
//! - [`spatial`]: Poisson layouts, cache placement, request logs, Monte Carlo.
//! - [`estimation`]: popularity estimators, including transfer-learning ones.
//! - [`bounds`]: training-time bounds and their thresholds.
//! - [`experiment`]: figure sweeps, validation and the end-to-end pipeline.

pub mod analytic;
pub mod bounds;
pub mod estimation;
pub mod experiment;
pub mod model;
pub mod spatial;

pub use model::{CachingStrategy, NetworkConfig, PopularityProfile};
