//! Closed-form average offloading loss of random caching, its minimizer
//! over the simplex, and an exhaustive grid search used as an oracle.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{compensated_sum, CachingStrategy, ModelError, NetworkConfig, PopularityProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("dimension mismatch: config N = {expected}, strategy has {strategy}, profile has {profile}")]
    DimensionMismatch {
        expected: usize,
        strategy: usize,
        profile: usize,
    },
    #[error("invalid optimizer options: {0}")]
    InvalidOptions(String),
    #[error("exhaustive search supports N <= {max}, got N = {n}")]
    TooLarge { n: usize, max: usize },
    #[error("grid step {0} does not divide 1")]
    InvalidGrid(f64),
    #[error("epsilon fraction must be finite and > 0 (got {0})")]
    InvalidFraction(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Largest catalog `brute_force_caching` accepts.
pub const BRUTE_FORCE_MAX_N: usize = 4;

/// Probability that a file cached with probability `pi` is missing from every
/// SBS within range: `g(π) = exp{−λ_s π γ² [1 − (1 − π)^M]}`.
pub fn miss_probability(config: &NetworkConfig, pi: f64) -> f64 {
    let covered = -(f64::from(config.cache_slots) * (-pi).ln_1p()).exp_m1();
    (-config.mean_neighbors() * covered).exp()
}

/// `dg/dπ`.
fn miss_probability_slope(config: &NetworkConfig, pi: f64) -> f64 {
    let m = f64::from(config.cache_slots);
    let c = config.mean_neighbors();
    -miss_probability(config, pi) * c * m * (1.0 - pi).powf(m - 1.0)
}

fn check_dims(
    config: &NetworkConfig,
    strategy: usize,
    profile: usize,
) -> Result<(), AnalyticError> {
    let expected = config.n();
    if strategy != expected || profile != expected {
        return Err(AnalyticError::DimensionMismatch {
            expected,
            strategy,
            profile,
        });
    }
    Ok(())
}

/// Average offloading loss in seconds,
/// `(B/R0) Σ_i exp{−λ_s π γ² [1 − (1 − π_i)^M]} p_i`.
pub fn offloading_loss(
    config: &NetworkConfig,
    strategy: &CachingStrategy,
    profile: &PopularityProfile,
) -> Result<f64, AnalyticError> {
    check_dims(config, strategy.len(), profile.len())?;
    Ok(config.backhaul_time() * normalized_loss(config, strategy.as_slice(), profile.as_slice()))
}

/// Gradient of [`offloading_loss`] with respect to the caching probabilities.
pub fn offloading_loss_gradient(
    config: &NetworkConfig,
    strategy: &CachingStrategy,
    profile: &PopularityProfile,
) -> Result<Vec<f64>, AnalyticError> {
    check_dims(config, strategy.len(), profile.len())?;
    let scale = config.backhaul_time();
    Ok(strategy
        .as_slice()
        .iter()
        .zip(profile.as_slice())
        .map(|(&pi, &p)| scale * p * miss_probability_slope(config, pi))
        .collect())
}

fn normalized_loss(config: &NetworkConfig, pi: &[f64], p: &[f64]) -> f64 {
    compensated_sum(pi.iter().zip(p).map(|(&x, &w)| w * miss_probability(config, x)))
}

/// `(B/R0) exp{−λ_s π γ²}`: no strategy can do better than caching the
/// requested file with certainty.
pub fn loss_floor(config: &NetworkConfig) -> f64 {
    config.backhaul_time() * (-config.mean_neighbors()).exp()
}

/// Accuracy target `ε` expressed as a fraction of [`loss_floor`].
pub fn epsilon_from_fraction(config: &NetworkConfig, fraction: f64) -> Result<f64, AnalyticError> {
    if !(fraction.is_finite() && fraction > 0.0) {
        return Err(AnalyticError::InvalidFraction(fraction));
    }
    Ok(fraction * loss_floor(config))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerOptions {
    /// Total number of starting points (uniform first, then point masses on
    /// the most popular files, then Dirichlet draws).
    pub restarts: usize,
    pub max_iters: usize,
    pub step_init: f64,
    /// Stop once a projected step moves no coordinate by more than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iters: 20_000,
            step_init: 1.0,
            tol: 1e-13,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    fn check(&self) -> Result<(), AnalyticError> {
        if self.restarts == 0 {
            return Err(AnalyticError::InvalidOptions("restarts must be >= 1".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(AnalyticError::InvalidOptions("tol must be > 0".into()));
        }
        if !(self.step_init.is_finite() && self.step_init > 0.0) {
            return Err(AnalyticError::InvalidOptions("step_init must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachingSolution {
    pub strategy: CachingStrategy,
    /// Offloading loss at `strategy`, in seconds.
    pub loss: f64,
    /// False if the winning restart hit `max_iters` before meeting `tol`.
    pub converged: bool,
    pub iterations: usize,
}

/// Euclidean projection onto `{x ≥ 0, Σx = 1}` (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

struct Run {
    x: Vec<f64>,
    value: f64,
    converged: bool,
    iterations: usize,
}

fn descend(config: &NetworkConfig, p: &[f64], start: Vec<f64>, opts: &OptimizerOptions) -> Run {
    let f = |x: &[f64]| normalized_loss(config, x, p);
    let grad = |x: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(p)
            .map(|(&xi, &pi)| pi * miss_probability_slope(config, xi))
            .collect()
    };
    let mut x = start;
    let mut fx = f(&x);
    let mut step = opts.step_init;
    for iter in 0..opts.max_iters {
        let g = grad(&x);
        let mut t = step;
        let (next, f_next) = loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - t * gi).collect();
            let cand = project_simplex(&trial);
            let f_cand = f(&cand);
            let mut lin = 0.0;
            let mut quad = 0.0;
            for ((ci, xi), gi) in cand.iter().zip(&x).zip(&g) {
                let d = ci - xi;
                lin += gi * d;
                quad += d * d;
            }
            if f_cand <= fx + lin + quad / (2.0 * t) || t < 1e-20 {
                break (cand, f_cand);
            }
            t *= 0.5;
        };
        let moved = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let improved = f_next <= fx;
        if improved {
            x = next;
            fx = f_next;
        }
        if moved <= opts.tol || !improved {
            return Run {
                x,
                value: fx,
                converged: true,
                iterations: iter + 1,
            };
        }
        step = (t * 2.0).min(1e6);
    }
    Run {
        x,
        value: fx,
        converged: false,
        iterations: opts.max_iters,
    }
}

fn lexicographic_lt(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Minimizes the offloading loss over the simplex for the given (true or
/// estimated) popularity profile.
///
/// Projected gradient descent with backtracking from several starting points.
/// Files with zero popularity get zero caching probability.
pub fn optimize_caching(
    config: &NetworkConfig,
    profile: &PopularityProfile,
    opts: &OptimizerOptions,
) -> Result<CachingSolution, AnalyticError> {
    opts.check()?;
    check_dims(config, profile.len(), profile.len())?;
    let n = profile.len();
    let mut active: Vec<usize> = (0..n).filter(|&i| profile[i] > 0.0).collect();
    // Most popular first so that point-mass starts are spent where they matter.
    active.sort_by(|&a, &b| profile[b].total_cmp(&profile[a]).then(a.cmp(&b)));
    let p: Vec<f64> = active.iter().map(|&i| profile[i]).collect();
    let k = active.len();

    let mut starts: Vec<Vec<f64>> = vec![vec![1.0 / k as f64; k]];
    for j in 0..k {
        if starts.len() >= opts.restarts {
            break;
        }
        let mut e = vec![0.0; k];
        e[j] = 1.0;
        starts.push(e);
    }
    let mut stream = 0u64;
    let unit = Gamma::new(1.0, 1.0).expect("valid gamma");
    while starts.len() < opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(stream);
        stream += 1;
        let draw: Vec<f64> = (0..k).map(|_| unit.sample(&mut rng)).collect();
        let total: f64 = draw.iter().sum();
        starts.push(draw.iter().map(|d| d / total).collect());
    }

    let runs: Vec<Run> = starts
        .into_par_iter()
        .map(|s| descend(config, &p, s, opts))
        .collect();

    let scatter = |x: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; n];
        for (&i, &xi) in active.iter().zip(x) {
            full[i] = xi;
        }
        full
    };
    let best = runs
        .into_iter()
        .map(|r| (scatter(&r.x), r))
        .reduce(|a, b| {
            if b.1.value < a.1.value || (b.1.value == a.1.value && lexicographic_lt(&b.0, &a.0)) {
                b
            } else {
                a
            }
        })
        .expect("at least one start");

    let strategy = CachingStrategy::from_weights(&best.0)?;
    let loss = offloading_loss(config, &strategy, profile)?;
    Ok(CachingSolution {
        strategy,
        loss,
        converged: best.1.converged,
        iterations: best.1.iterations,
    })
}

/// Exhaustive minimum of the offloading loss over the simplex grid with
/// spacing `grid_step`. Ties go to the lexicographically smallest vector.
pub fn brute_force_caching(
    config: &NetworkConfig,
    profile: &PopularityProfile,
    grid_step: f64,
) -> Result<(CachingStrategy, f64), AnalyticError> {
    let n = profile.len();
    check_dims(config, n, n)?;
    if n > BRUTE_FORCE_MAX_N {
        return Err(AnalyticError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    if !(grid_step.is_finite() && grid_step > 0.0 && grid_step <= 1.0) {
        return Err(AnalyticError::InvalidGrid(grid_step));
    }
    let steps = (1.0 / grid_step).round();
    if (steps * grid_step - 1.0).abs() > 1e-9 {
        return Err(AnalyticError::InvalidGrid(grid_step));
    }
    let steps = steps as usize;

    let p = profile.as_slice();
    let mut counts = vec![0usize; n];
    let mut best: Option<(Vec<f64>, f64)> = None;
    enumerate_compositions(&mut counts, 0, steps, &mut |c| {
        let pi: Vec<f64> = c.iter().map(|&k| k as f64 / steps as f64).collect();
        let value = normalized_loss(config, &pi, p);
        if best.as_ref().is_none_or(|(_, v)| value < *v) {
            best = Some((pi, value));
        }
    });
    let (pi, _) = best.expect("grid is non-empty");
    let strategy = CachingStrategy::new(pi)?;
    let loss = offloading_loss(config, &strategy, profile)?;
    Ok((strategy, loss))
}

/// Visits every `counts` with `Σ counts = remaining + Σ counts[..pos]`, in
/// ascending lexicographic order.
fn enumerate_compositions<F: FnMut(&[usize])>(
    counts: &mut [usize],
    pos: usize,
    remaining: usize,
    visit: &mut F,
) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        visit(counts);
        return;
    }
    for k in 0..=remaining {
        counts[pos] = k;
        enumerate_compositions(counts, pos + 1, remaining - k, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(n: u32, m: u32) -> NetworkConfig {
        NetworkConfig {
            catalog_size: n,
            cache_slots: m,
            ..Default::default()
        }
    }

    #[test]
    fn no_sbs_means_every_request_goes_to_backhaul() {
        let c = NetworkConfig {
            lambda_s: 0.0,
            ..cfg(3, 2)
        };
        let s = CachingStrategy::new(vec![0.2, 0.5, 0.3]).unwrap();
        let p = PopularityProfile::new(vec![0.6, 0.3, 0.1]).unwrap();
        assert_eq!(offloading_loss(&c, &s, &p).unwrap(), c.backhaul_time());
    }

    #[test]
    fn single_fully_cached_file_hits_floor() {
        for m in [1, 3, 7] {
            let c = cfg(1, m);
            let s = CachingStrategy::uniform(1).unwrap();
            let p = PopularityProfile::uniform(1).unwrap();
            assert_relative_eq!(
                offloading_loss(&c, &s, &p).unwrap(),
                loss_floor(&c),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn floor_at_default_parameters() {
        // 10 · exp(−1e-5 · π · 1e4)
        let expected = 10.0 * (-0.1 * std::f64::consts::PI).exp();
        assert_relative_eq!(loss_floor(&cfg(10, 2)), expected, max_relative = 1e-15);
        assert!((expected - 7.30403).abs() < 1e-5);
    }

    #[test]
    fn floor_degenerates_to_backhaul_time() {
        let c = NetworkConfig {
            lambda_s: 0.0,
            ..cfg(1, 1)
        };
        assert_eq!(loss_floor(&c), 10.0);
        let c = NetworkConfig {
            gamma: 0.0,
            ..cfg(1, 1)
        };
        assert_eq!(loss_floor(&c), 10.0);
    }

    #[test]
    fn epsilon_is_fraction_of_floor() {
        let c = cfg(10, 2);
        assert_eq!(epsilon_from_fraction(&c, 1.0).unwrap(), loss_floor(&c));
        assert_relative_eq!(
            epsilon_from_fraction(&c, 0.6).unwrap(),
            0.6 * 10.0 * (-0.1 * std::f64::consts::PI).exp(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            epsilon_from_fraction(&c, 0.2).unwrap(),
            0.2 * 10.0 * (-0.1 * std::f64::consts::PI).exp(),
            max_relative = 1e-15
        );
        assert!(epsilon_from_fraction(&c, 0.0).is_err());
    }

    #[test]
    fn miss_probability_endpoints_are_exact() {
        let c = cfg(3, 4);
        assert_eq!(miss_probability(&c, 0.0), 1.0);
        assert_eq!(miss_probability(&c, 1.0), (-c.mean_neighbors()).exp());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let c = cfg(3, 1);
        let s = CachingStrategy::uniform(2).unwrap();
        let p = PopularityProfile::uniform(3).unwrap();
        assert!(matches!(
            offloading_loss(&c, &s, &p),
            Err(AnalyticError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let c = NetworkConfig {
            lambda_s: 4e-5,
            ..cfg(4, 3)
        };
        let s = CachingStrategy::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let p = PopularityProfile::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let grad = offloading_loss_gradient(&c, &s, &p).unwrap();
        let h = 1e-6;
        for i in 0..4 {
            let mut up = s.as_slice().to_vec();
            let mut dn = s.as_slice().to_vec();
            up[i] += h;
            dn[i] -= h;
            let fd = c.backhaul_time()
                * (normalized_loss(&c, &up, p.as_slice()) - normalized_loss(&c, &dn, p.as_slice()))
                / (2.0 * h);
            assert_relative_eq!(grad[i], fd, max_relative = 1e-7);
        }
    }

    #[test]
    fn projection_lands_on_simplex() {
        let x = project_simplex(&[0.9, 0.8, -3.0, 0.1]);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(x.iter().all(|v| *v >= 0.0));
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
    }

    #[test]
    fn single_file_optimum_is_the_only_point() {
        let c = cfg(1, 2);
        let p = PopularityProfile::uniform(1).unwrap();
        let sol = optimize_caching(&c, &p, &OptimizerOptions::default()).unwrap();
        assert_eq!(sol.strategy.as_slice(), &[1.0]);
        assert_relative_eq!(sol.loss, loss_floor(&c), max_relative = 1e-15);
        let (s, l) = brute_force_caching(&c, &p, 0.1).unwrap();
        assert_eq!(s.as_slice(), &[1.0]);
        assert_relative_eq!(l, loss_floor(&c), max_relative = 1e-15);
    }

    #[test]
    fn zero_popularity_files_are_never_cached() {
        let c = cfg(3, 1);
        let p = PopularityProfile::new(vec![0.0, 0.7, 0.3]).unwrap();
        let sol = optimize_caching(&c, &p, &OptimizerOptions::default()).unwrap();
        assert_eq!(sol.strategy[0], 0.0);
    }

    #[test]
    fn brute_force_half_grid_picks_best_of_three() {
        let c = NetworkConfig {
            lambda_s: 1e-4,
            ..cfg(2, 1)
        };
        let p = PopularityProfile::new(vec![0.7, 0.3]).unwrap();
        let (s, l) = brute_force_caching(&c, &p, 0.5).unwrap();
        let candidates = [[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]];
        let losses: Vec<f64> = candidates
            .iter()
            .map(|pi| offloading_loss(&c, &CachingStrategy::new(pi.to_vec()).unwrap(), &p).unwrap())
            .collect();
        let min = losses.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(l, min);
        let winner = losses.iter().position(|v| *v == min).unwrap();
        assert_eq!(s.as_slice(), &candidates[winner]);
    }

    #[test]
    fn brute_force_ties_go_to_lexicographically_smallest() {
        let c = NetworkConfig {
            lambda_s: 0.0,
            ..cfg(3, 1)
        };
        let p = PopularityProfile::uniform(3).unwrap();
        let (s, _) = brute_force_caching(&c, &p, 0.25).unwrap();
        assert_eq!(s.as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn brute_force_guards() {
        let p = PopularityProfile::uniform(5).unwrap();
        assert!(matches!(
            brute_force_caching(&cfg(5, 1), &p, 0.1),
            Err(AnalyticError::TooLarge { .. })
        ));
        let p = PopularityProfile::uniform(2).unwrap();
        assert!(matches!(
            brute_force_caching(&cfg(2, 1), &p, 0.3),
            Err(AnalyticError::InvalidGrid(_))
        ));
    }

    #[test]
    fn invalid_options_are_rejected() {
        let p = PopularityProfile::uniform(2).unwrap();
        let bad = OptimizerOptions {
            restarts: 0,
            ..Default::default()
        };
        assert!(optimize_caching(&cfg(2, 1), &p, &bad).is_err());
        let bad = OptimizerOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(optimize_caching(&cfg(2, 1), &p, &bad).is_err());
    }
}
