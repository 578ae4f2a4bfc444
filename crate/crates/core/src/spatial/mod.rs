//! Monte Carlo ground truth: Poisson point processes on discs, the protocol
//! model neighbour rule, i.i.d. cache placement, simulated offloading loss
//! and Poisson request streams.

mod requests;
mod scene;

pub use requests::{generate_requests, sample_files, Request, RequestLog, LOG_HEADER};
pub use scene::{
    monte_carlo_loss, neighbors, place_caches, sample_ppp_disc, CachePlacement, LossEstimate,
    Point, SpatialScene, TRIAL_BATCH,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpatialError {
    #[error("request log line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("request log I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
