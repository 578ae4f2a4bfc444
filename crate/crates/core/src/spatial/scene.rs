use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::model::{CachingStrategy, NetworkConfig, PopularityProfile};

use super::SpatialError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Poisson sample with mean `mean`; zero mean gives zero.
pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Homogeneous PPP of intensity `density` restricted to the disc of radius
/// `radius` about the origin: a Poisson(`density·π·radius²`) count of i.i.d.
/// uniform points.
pub fn sample_ppp_disc<R: Rng + ?Sized>(density: f64, radius: f64, rng: &mut R) -> Vec<Point> {
    let mean = density * std::f64::consts::PI * radius * radius;
    let count = poisson(mean, rng);
    (0..count)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            Point::new(r * phi.cos(), r * phi.sin())
        })
        .collect()
}

/// One realization of the SBS and user processes in a disc.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialScene {
    pub sbs_points: Vec<Point>,
    pub user_points: Vec<Point>,
    pub region_radius: f64,
}

impl SpatialScene {
    pub fn sample<R: Rng + ?Sized>(config: &NetworkConfig, region_radius: f64, rng: &mut R) -> Self {
        let sbs_points = sample_ppp_disc(config.lambda_s, region_radius, rng);
        let user_points = sample_ppp_disc(config.lambda_u, region_radius, rng);
        Self {
            sbs_points,
            user_points,
            region_radius,
        }
    }
}

/// Indices of SBSs strictly closer than `gamma` to `x`.
pub fn neighbors(scene: &SpatialScene, x: Point, gamma: f64) -> Vec<usize> {
    let limit = gamma * gamma;
    scene
        .sbs_points
        .iter()
        .enumerate()
        .filter(|(_, y)| y.distance_sq(&x) < limit)
        .map(|(i, _)| i)
        .collect()
}

/// Cache contents per SBS: `M` file indices (0-based) drawn with replacement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CachePlacement {
    pub slots: Vec<Vec<usize>>,
}

impl CachePlacement {
    pub fn holds(&self, sbs: usize, file: usize) -> bool {
        self.slots[sbs].contains(&file)
    }
}

/// Each SBS rolls an `N`-sided die weighted by `strategy`, `m` times.
pub fn place_caches<R: Rng + ?Sized>(
    n_sbs: usize,
    strategy: &CachingStrategy,
    m: u32,
    rng: &mut R,
) -> CachePlacement {
    let die = WeightedIndex::new(strategy.as_slice()).expect("strategy is on the simplex");
    let slots = (0..n_sbs)
        .map(|_| (0..m).map(|_| die.sample(rng)).collect())
        .collect();
    CachePlacement { slots }
}

/// Number of Monte Carlo trials sharing one RNG stream.
pub const TRIAL_BATCH: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossEstimate {
    /// Sample mean of the per-trial loss, in seconds.
    pub mean: f64,
    /// Sample standard deviation divided by √trials.
    pub stderr: f64,
    pub trials: u64,
}

/// Simulated average offloading loss for the typical user at the origin.
///
/// Each trial draws the SBS process inside the γ-disc, fills caches from
/// `strategy`, draws one requested file from `profile` and charges `B/R0`
/// if no neighbour holds it. Batch `b` of [`TRIAL_BATCH`] trials uses
/// ChaCha8 stream `b` of `seed`, so results do not depend on thread count.
pub fn monte_carlo_loss(
    config: &NetworkConfig,
    strategy: &CachingStrategy,
    profile: &PopularityProfile,
    trials: u64,
    seed: u64,
) -> Result<LossEstimate, SpatialError> {
    if trials == 0 {
        return Err(SpatialError::InvalidArgument("trials must be >= 1".into()));
    }
    if strategy.len() != config.n() || profile.len() != config.n() {
        return Err(SpatialError::InvalidArgument(format!(
            "strategy/profile length must equal N = {}",
            config.n()
        )));
    }
    let request_die = WeightedIndex::new(profile.as_slice()).expect("profile is on the simplex");
    let batches = trials.div_ceil(TRIAL_BATCH);
    let scale = config.backhaul_time();
    let misses: Vec<u64> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let len = TRIAL_BATCH.min(trials - b * TRIAL_BATCH);
            let mut missed = 0u64;
            for _ in 0..len {
                let scene = SpatialScene {
                    sbs_points: sample_ppp_disc(config.lambda_s, config.gamma, &mut rng),
                    user_points: Vec::new(),
                    region_radius: config.gamma,
                };
                let near = neighbors(&scene, Point::ORIGIN, config.gamma);
                let caches = place_caches(near.len(), strategy, config.cache_slots, &mut rng);
                let file = request_die.sample(&mut rng);
                if !(0..near.len()).any(|s| caches.holds(s, file)) {
                    missed += 1;
                }
            }
            missed
        })
        .collect();
    // Per-trial loss is 0 or B/R0, so the sample moments follow from the count.
    let missed: u64 = misses.iter().sum();
    let n = trials as f64;
    let frac = missed as f64 / n;
    let mean = scale * frac;
    let stderr = if trials > 1 {
        let var = scale * scale * frac * (1.0 - frac) * n / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(LossEstimate {
        mean,
        stderr,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_gives_no_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_ppp_disc(0.0, 1000.0, &mut rng).is_empty());
    }

    #[test]
    fn points_stay_inside_disc() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = sample_ppp_disc(1e-3, 150.0, &mut rng);
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| p.distance_sq(&Point::ORIGIN) <= 150.0 * 150.0));
    }

    #[test]
    fn neighbor_rule_is_strict() {
        let scene = SpatialScene {
            sbs_points: vec![Point::new(100.0, 0.0), Point::new(0.0, 99.9), Point::new(300.0, 0.0)],
            user_points: vec![],
            region_radius: 500.0,
        };
        assert_eq!(neighbors(&scene, Point::ORIGIN, 100.0), vec![1]);
        assert!(neighbors(&scene, Point::ORIGIN, 50.0).is_empty());
    }

    #[test]
    fn point_mass_strategy_fills_every_slot() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = CachingStrategy::point_mass(4, 0).unwrap();
        let placement = place_caches(50, &s, 3, &mut rng);
        assert!(placement.slots.iter().all(|c| c == &vec![0, 0, 0]));
    }

    #[test]
    fn every_sbs_gets_exactly_m_slots() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = CachingStrategy::uniform(3).unwrap();
        let placement = place_caches(200, &s, 3, &mut rng);
        assert_eq!(placement.slots.len(), 200);
        assert!(placement.slots.iter().all(|c| c.len() == 3 && c.iter().all(|f| *f < 3)));
    }

    #[test]
    fn no_sbs_monte_carlo_is_exact() {
        let cfg = NetworkConfig {
            lambda_s: 0.0,
            catalog_size: 3,
            ..Default::default()
        };
        let s = CachingStrategy::uniform(3).unwrap();
        let p = PopularityProfile::uniform(3).unwrap();
        let est = monte_carlo_loss(&cfg, &s, &p, 10_000, 9).unwrap();
        assert_eq!(est.mean, cfg.backhaul_time());
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let cfg = NetworkConfig {
            catalog_size: 4,
            ..Default::default()
        };
        let s = CachingStrategy::uniform(4).unwrap();
        let p = PopularityProfile::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let a = monte_carlo_loss(&cfg, &s, &p, 20_000, 77).unwrap();
        let b = monte_carlo_loss(&cfg, &s, &p, 20_000, 77).unwrap();
        assert_eq!(a, b);
        assert!(monte_carlo_loss(&cfg, &s, &p, 0, 77).is_err());
    }
}
