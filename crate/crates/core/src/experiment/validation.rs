use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::{ExperimentError, ExperimentSpec, Table};
use crate::analytic::offloading_loss;
use crate::model::{zipf_profile, CachingStrategy, NetworkConfig, PopularityProfile};
use crate::spatial::monte_carlo_loss;

/// Tolerance in standard errors.
pub const VALIDATION_Z: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationCase {
    pub label: String,
    pub config: NetworkConfig,
    pub strategy: CachingStrategy,
    pub profile: PopularityProfile,
    /// Seed of the Monte Carlo run for this case.
    pub seed: u64,
    pub closed_form: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
    /// Standard error implied by the closed-form miss probability.
    pub model_stderr: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub trials: u64,
    pub cases: Vec<ValidationCase>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.passed)
    }

    /// First failing case as an error naming its config and seed.
    pub fn check(&self) -> Result<(), ExperimentError> {
        match self.cases.iter().enumerate().find(|(_, c)| !c.passed) {
            None => Ok(()),
            Some((i, c)) => Err(ExperimentError::ValidationFailed {
                case: i,
                seed: c.seed,
                detail: format!(
                    "{}: closed form {} s vs Monte Carlo {} ± {} s ({:?})",
                    c.label, c.closed_form, c.mc_mean, c.mc_stderr, c.config
                ),
            }),
        }
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(vec![
            "case",
            "label",
            "seed",
            "n",
            "cache_slots",
            "lambda_s_per_m2",
            "gamma_m",
            "trials",
            "closed_form_s",
            "mc_mean_s",
            "mc_stderr_s",
            "model_stderr_s",
            "z",
            "pass",
        ]);
        for (i, c) in self.cases.iter().enumerate() {
            let se = c.mc_stderr.max(c.model_stderr);
            let z = if se > 0.0 {
                (c.mc_mean - c.closed_form) / se
            } else {
                0.0
            };
            t.rows.push(vec![
                i.into(),
                c.label.as_str().into(),
                c.seed.into(),
                c.config.n().into(),
                u64::from(c.config.cache_slots).into(),
                c.config.lambda_s.into(),
                c.config.gamma.into(),
                self.trials.into(),
                c.closed_form.into(),
                c.mc_mean.into(),
                c.mc_stderr.into(),
                c.model_stderr.into(),
                z.into(),
                c.passed.into(),
            ]);
        }
        t
    }
}

fn dirichlet<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(1.0, 1.0).expect("valid shape");
    let w: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Random instances: `N ≤ 20`, `M ≤ 5`, `λ_s` log-uniform on `[1e-6, 1e-4]`,
/// `γ ∈ [50, 300]`, a Dirichlet(1) strategy and a Zipf profile.
fn random_instance<R: Rng>(
    base: &NetworkConfig,
    rng: &mut R,
) -> Result<(NetworkConfig, CachingStrategy, PopularityProfile), ExperimentError> {
    let n = rng.random_range(1..=20u32);
    let config = NetworkConfig {
        catalog_size: n,
        cache_slots: rng.random_range(1..=5u32),
        lambda_s: 10f64.powf(rng.random_range(-6.0..=-4.0)),
        gamma: rng.random_range(50.0..=300.0),
        ..*base
    }
    .validate()?;
    let strategy = CachingStrategy::from_weights(&dirichlet(n as usize, rng))?;
    let profile = zipf_profile(n as usize, rng.random_range(0.0..1.5))?;
    Ok((config, strategy, profile))
}

/// Closed-form offloading loss against the simulated loss on
/// `spec.validation_configs` random instances plus two degenerate ones
/// (no SBSs; a single file cached everywhere).
pub fn run_validation(spec: &ExperimentSpec) -> Result<ValidationReport, ExperimentError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut instances = Vec::new();
    for k in 0..spec.validation_configs {
        let (c, s, p) = random_instance(&spec.config, &mut rng)?;
        instances.push((format!("random-{k}"), c, s, p));
    }
    let empty = NetworkConfig {
        lambda_s: 0.0,
        catalog_size: 4,
        ..spec.config
    };
    instances.push((
        "no-sbs".into(),
        empty,
        CachingStrategy::from_weights(&dirichlet(4, &mut rng))?,
        PopularityProfile::uniform(4)?,
    ));
    let single = NetworkConfig {
        catalog_size: 1,
        ..spec.config
    };
    instances.push((
        "single-file".into(),
        single,
        CachingStrategy::uniform(1)?,
        PopularityProfile::uniform(1)?,
    ));

    let mut cases = Vec::with_capacity(instances.len());
    for (label, config, strategy, profile) in instances {
        let seed: u64 = rng.random();
        let closed_form = offloading_loss(&config, &strategy, &profile)?;
        let mc = monte_carlo_loss(&config, &strategy, &profile, spec.trials, seed)?;
        let scale = config.backhaul_time();
        let q = (closed_form / scale).clamp(0.0, 1.0);
        let model_stderr = scale * (q * (1.0 - q) / spec.trials as f64).sqrt();
        let se = mc.stderr.max(model_stderr);
        let passed = (closed_form - mc.mean).abs() <= VALIDATION_Z * se;
        cases.push(ValidationCase {
            label,
            config,
            strategy,
            profile,
            seed,
            closed_form,
            mc_mean: mc.mean,
            mc_stderr: mc.stderr,
            model_stderr,
            passed,
        });
    }
    Ok(ValidationReport {
        trials: spec.trials,
        cases,
    })
}
