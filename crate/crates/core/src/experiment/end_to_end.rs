use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EstimatorKind, ExperimentError, ExperimentSpec, Table};
use crate::analytic::{offloading_loss, optimize_caching, OptimizerOptions};
use crate::bounds::{tau_empirical, BoundQuery};
use crate::estimation::{empirical_profile, tl_convex_profile, tl_pooled_profile, SourceSamples};
use crate::model::{zipf_profile, CachingStrategy, PopularityProfile};
use crate::spatial::generate_requests;

/// Gaps below this are optimizer noise, not a better-than-optimal strategy.
pub const GAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndRun {
    pub run: u64,
    pub users: usize,
    pub target_requests: u64,
    pub source_samples: u64,
    pub estimate: PopularityProfile,
    pub strategy: CachingStrategy,
    /// True loss of the learned strategy, in seconds.
    pub loss: f64,
    /// `loss − optimal_loss`.
    pub gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndReport {
    pub tau: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub profile: PopularityProfile,
    pub optimal_strategy: CachingStrategy,
    pub optimal_loss: f64,
    pub runs: Vec<EndToEndRun>,
}

impl EndToEndReport {
    /// Fraction of runs whose gap exceeds `ε`.
    pub fn violation_rate(&self) -> f64 {
        let bad = self.runs.iter().filter(|r| r.gap > self.epsilon).count();
        bad as f64 / self.runs.len() as f64
    }

    pub fn min_gap(&self) -> f64 {
        self.runs.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min)
    }

    pub fn table(&self) -> Table {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        let mut t = Table::new(vec![
            "run",
            "users",
            "target_requests",
            "source_samples",
            "tau_s",
            "epsilon_s",
            "loss_s",
            "optimal_loss_s",
            "gap_s",
            "exceeds_epsilon",
            "converged",
            "estimate",
            "strategy",
        ]);
        for r in &self.runs {
            t.rows.push(vec![
                r.run.into(),
                r.users.into(),
                r.target_requests.into(),
                r.source_samples.into(),
                self.tau.into(),
                self.epsilon.into(),
                r.loss.into(),
                self.optimal_loss.into(),
                r.gap.into(),
                (r.gap > self.epsilon).into(),
                r.converged.into(),
                join(r.estimate.as_slice()).as_str().into(),
                join(r.strategy.as_slice()).as_str().into(),
            ]);
        }
        t
    }
}

/// Simulates `spec.runs` independent collection windows of length `tau`,
/// estimates the popularity profile, optimizes the caching strategy on the
/// estimate and measures its true loss against the optimum. Run `r` uses
/// ChaCha8 stream `r` of `spec.seed`.
pub fn run_end_to_end(spec: &ExperimentSpec) -> Result<EndToEndReport, ExperimentError> {
    let spec = spec.clone().validate()?;
    let config = spec.config;
    let n = config.n();
    let profile = match &spec.target_profile {
        Some(w) => PopularityProfile::from_weights(w)?,
        None => zipf_profile(n, spec.zipf_theta)?,
    };
    if profile.len() != n {
        return Err(ExperimentError::InvalidSpec(format!(
            "target_profile has {} entries but catalog_size is {n}",
            profile.len()
        )));
    }
    let source = match spec.source_theta {
        Some(theta) => zipf_profile(n, theta)?,
        None => profile.clone(),
    };
    let epsilon = spec.epsilon(&config)?;
    let tau = match spec.tau {
        Some(t) => t,
        None => {
            let b = tau_empirical(&BoundQuery::new(config, epsilon, spec.delta).with_sup_mode(spec.sup_mode))?;
            if !b.feasible {
                return Err(ExperimentError::InvalidSpec(format!(
                    "training-time bound is infinite (lambda_u must exceed {} per m²); set tau explicitly",
                    b.density_threshold
                )));
            }
            b.tau
        }
    };
    let opts = OptimizerOptions {
        restarts: 16,
        seed: spec.seed,
        ..OptimizerOptions::default()
    };
    let optimum = optimize_caching(&config, &profile, &opts)?;

    let runs = (0..spec.runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(r);
            let log = generate_requests(&config, &profile, tau, &mut rng)?;
            let samples = SourceSamples::draw(&source, spec.m as usize, &mut rng);
            let estimate = match spec.estimator {
                EstimatorKind::Empirical => empirical_profile(&log, n)?,
                EstimatorKind::TlPooled => tl_pooled_profile(&log, &samples, n)?,
                EstimatorKind::TlConvex => tl_convex_profile(&log, &samples, spec.alpha, n)?,
            };
            let learned = optimize_caching(
                &config,
                &estimate,
                &OptimizerOptions {
                    seed: spec.seed ^ r,
                    ..OptimizerOptions::default()
                },
            )?;
            let loss = offloading_loss(&config, &learned.strategy, &profile)?;
            Ok(EndToEndRun {
                run: r,
                users: log.n_users(),
                target_requests: log.total_requests(),
                source_samples: samples.m(),
                estimate,
                strategy: learned.strategy,
                loss,
                gap: loss - optimum.loss,
                converged: learned.converged,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    Ok(EndToEndReport {
        tau,
        epsilon,
        delta: spec.delta,
        profile,
        optimal_strategy: optimum.strategy,
        optimal_loss: optimum.loss,
        runs,
    })
}
