//! Training-time bounds: how long the BS must collect requests so that the
//! caching strategy learned from its estimate is within `ε` of optimal with
//! probability at least `1 − δ`.
//!
//! Every bound has the same shape. The number of requests seen by the BS is
//! Poisson conditioned on a Poisson user count, so the failure probability
//! takes the form `K·exp{−λ_u π R² (1 − e^{−λ_r τ g})}` and solving for `τ`
//! gives `τ = (1/(λ_r g)) log 1/(1 − Th/λ_u)`, finite only when the user
//! density exceeds the threshold `Th`.

mod search;

pub use search::{
    best_parametric_tl, best_tl_convex, best_tl_convex_at_alpha, BestConvex, BestParametricTl,
    ParamSearch,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FamilyGeometry, ModelError, NetworkConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("accuracy {epsilon} s is not above the transfer-learning floor {floor} s")]
    AccuracyBelowTlFloor { epsilon: f64, floor: f64 },
    #[error("parameter outside its domain: {0}")]
    ParameterDomain(String),
    #[error("agnostic bound is already infinite (log(2N/δ)/(λ_u π R²) = {0} >= 1)")]
    AgnosticInfinite(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which value to use for `sup_Π Σ_i g(π_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupMode {
    /// The simple upper bound `N`.
    #[default]
    NUpper,
    /// The exact supremum `(N − 1) + exp{−λ_s π γ²}`.
    ExactSup,
}

/// Inputs shared by the bound calculators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery {
    pub config: NetworkConfig,
    /// Target gap `ε` between learned and optimal offloading loss, in seconds.
    pub epsilon: f64,
    pub delta: f64,
    /// Number of source-domain samples.
    pub m: u64,
    /// `‖P − Q‖_∞` between target and source popularity.
    pub dist_inf: f64,
    pub sup_mode: SupMode,
}

impl BoundQuery {
    pub fn new(config: NetworkConfig, epsilon: f64, delta: f64) -> Self {
        Self {
            config,
            epsilon,
            delta,
            m: 0,
            dist_inf: 0.0,
            sup_mode: SupMode::NUpper,
        }
    }

    pub fn with_source(mut self, m: u64, dist_inf: f64) -> Self {
        self.m = m;
        self.dist_inf = dist_inf;
        self
    }

    pub fn with_sup_mode(mut self, mode: SupMode) -> Self {
        self.sup_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), BoundError> {
        self.config.validate()?;
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(BoundError::InvalidQuery(format!(
                "epsilon must be > 0 (got {})",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(BoundError::InvalidQuery(format!(
                "delta must be in (0, 1) (got {})",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.dist_inf) {
            return Err(BoundError::InvalidQuery(format!(
                "dist_inf must be in [0, 1] (got {})",
                self.dist_inf
            )));
        }
        Ok(())
    }

    /// `log(2N/δ)`.
    pub fn log_union(&self) -> f64 {
        (2.0 * self.config.n() as f64 / self.delta).ln()
    }

    /// `R0 ε / (2B)`.
    pub fn scaled_epsilon(&self) -> f64 {
        self.config.bs_rate * self.epsilon / (2.0 * self.config.file_bits)
    }

    /// Per-file accuracy `ε̄ = R0 ε / (2B sup_Π Σ g(π_i))`.
    pub fn eps_bar(&self) -> f64 {
        self.scaled_epsilon() / sup_sum_g(&self.config, self.sup_mode)
    }
}

/// Outcome of a bound calculator.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTimeBound {
    /// Seconds; `f64::INFINITY` when no finite training time suffices.
    pub tau: f64,
    /// User density (nodes/m²) that `λ_u` must exceed for a finite `tau`.
    pub density_threshold: f64,
    pub feasible: bool,
    pub intermediates: BTreeMap<&'static str, f64>,
}

impl TrainingTimeBound {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.intermediates.get(name).copied()
    }
}

/// Values of `1 − Th/λ_u` at or below this are treated as infeasible.
pub const INFEASIBILITY_GUARD: f64 = 1e-15;

/// `τ = {(1/(λ_r g)) log 1/(1 − log_term/(λ_u π R²))}⁺` if `λ_u > log_term/(π R²)`.
fn poisson_window(
    config: &NetworkConfig,
    rate_gain: f64,
    log_term: f64,
    mut intermediates: BTreeMap<&'static str, f64>,
) -> TrainingTimeBound {
    let area = config.coverage_area();
    let threshold = log_term / area;
    intermediates.insert("rate_gain", rate_gain);
    intermediates.insert("log_term", log_term);
    let x = log_term / (config.lambda_u * area);
    let margin = 1.0 - x;
    let feasible = config.lambda_u > threshold && margin > INFEASIBILITY_GUARD && rate_gain > 0.0;
    if !feasible {
        let density_threshold = if rate_gain > 0.0 { threshold } else { f64::INFINITY };
        return TrainingTimeBound {
            tau: f64::INFINITY,
            density_threshold,
            feasible: false,
            intermediates,
        };
    }
    let raw = -(-x).ln_1p() / (config.lambda_r * rate_gain);
    intermediates.insert("tau_unclamped", raw);
    TrainingTimeBound {
        tau: raw.max(0.0),
        density_threshold: threshold,
        feasible: true,
        intermediates,
    }
}

/// `1 − e^{−2x²}`.
fn hoeffding_gain(x: f64) -> f64 {
    -(-2.0 * x * x).exp_m1()
}

/// `log 1/(1 − y)` for `y < 1`, `None` otherwise.
fn log_inverse_complement(y: f64) -> Option<f64> {
    (y < 1.0).then(|| -(-y).ln_1p())
}

/// `sup_Π Σ_i g(π_i)` under `mode`. `g` is convex and decreasing with
/// `g(0) = 1`, so the exact supremum puts all mass on a single file.
pub fn sup_sum_g(config: &NetworkConfig, mode: SupMode) -> f64 {
    let n = config.n() as f64;
    match mode {
        SupMode::NUpper => n,
        SupMode::ExactSup => (n - 1.0) + (-config.mean_neighbors()).exp(),
    }
}

/// Training time for the target-only estimator.
///
/// `τ ≥ {(1/(λ_r g*)) log 1/(1 − log(2N/δ)/(λ_u π R²))}⁺` when
/// `λ_u > log(2N/δ)/(π R²)`, with `g* = 1 − exp{−2 ε̄²}`.
pub fn tau_empirical(q: &BoundQuery) -> Result<TrainingTimeBound, BoundError> {
    q.validate()?;
    let eps_bar = q.eps_bar();
    let g_star = hoeffding_gain(eps_bar);
    let mut inter = BTreeMap::new();
    inter.insert("eps_bar", eps_bar);
    inter.insert("g_star", g_star);
    inter.insert("sup_sum_g", sup_sum_g(&q.config, q.sup_mode));
    Ok(poisson_window(&q.config, g_star, q.log_union(), inter))
}

/// Closed-form relaxation of [`tau_empirical`] (using `1 − x ≤ e^{−x}` and
/// `sup Σ g ≤ N`): `2B²N² log(2N/δ) / (π R² λ_u λ_r R0² ε²)`.
pub fn tau_empirical_simplified(q: &BoundQuery) -> Result<f64, BoundError> {
    q.validate()?;
    let c = &q.config;
    let n = c.n() as f64;
    Ok(2.0 * c.file_bits.powi(2) * n * n * q.log_union()
        / (c.coverage_area() * c.lambda_u * c.lambda_r * c.bs_rate.powi(2) * q.epsilon.powi(2)))
}

/// Per-user training time: [`tau_empirical_simplified`] with `ε` replaced by
/// `ε/λ_r`, i.e. `2B²λ_r N² log(2N/δ) / (π R² λ_u R0² ε²)`.
pub fn tau_per_user(q: &BoundQuery) -> Result<f64, BoundError> {
    q.validate()?;
    let c = &q.config;
    let n = c.n() as f64;
    Ok(2.0 * c.file_bits.powi(2) * c.lambda_r * n * n * q.log_union()
        / (c.coverage_area() * c.lambda_u * c.bs_rate.powi(2) * q.epsilon.powi(2)))
}

/// Smallest `ε` the pooled and convex transfer-learning bounds accept:
/// `(2B sup Σ g / R0) ‖P − Q‖_∞`.
pub fn tl_accuracy_floor(q: &BoundQuery) -> f64 {
    2.0 * q.config.file_bits * sup_sum_g(&q.config, q.sup_mode) / q.config.bs_rate * q.dist_inf
}

fn check_tl_floor(q: &BoundQuery) -> Result<(), BoundError> {
    let floor = tl_accuracy_floor(q);
    if q.epsilon <= floor {
        return Err(BoundError::AccuracyBelowTlFloor {
            epsilon: q.epsilon,
            floor,
        });
    }
    Ok(())
}

/// Training time for the pooled transfer-learning estimator.
///
/// With `ε_pq = ε̄ − ‖P − Q‖_∞`, the threshold drops to
/// `ρ = (log(2N/δ) − 2ε_pq² m)/(π R²)`, which is negative (every density
/// works) once `m > log(2N/δ)/(2ε_pq²)`.
pub fn tau_tl_pooled(q: &BoundQuery) -> Result<TrainingTimeBound, BoundError> {
    q.validate()?;
    check_tl_floor(q)?;
    let eps_bar = q.eps_bar();
    let eps_pq = eps_bar - q.dist_inf;
    let log_term = q.log_union() - 2.0 * eps_pq * eps_pq * q.m as f64;
    let gain = hoeffding_gain(eps_pq);
    let mut inter = BTreeMap::new();
    inter.insert("eps_bar", eps_bar);
    inter.insert("eps_pq", eps_pq);
    inter.insert("rho", log_term / q.config.coverage_area());
    inter.insert("Lambda", log_term / (q.config.lambda_u * q.config.coverage_area()));
    Ok(poisson_window(&q.config, gain, log_term, inter))
}

/// Source-sample requirement under which pooled transfer learning beats the
/// target-only estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceRequirement {
    /// `⌈[log(2N/δ) − F]⁺ / (2ε_pq²)⌉`.
    pub m_min: u64,
    /// The same quantity before rounding up.
    pub m_min_real: f64,
    /// Right-hand side of the distance condition, `ε R0 / (2B λ_u π γ² N)`.
    pub dist_condition_rhs: f64,
    pub f: f64,
    /// `m ≥ m_min` and `‖P − Q‖_∞ < rhs` for the query.
    pub satisfied: bool,
}

/// Relative slack under which `log(2N/δ) − F` counts as zero.
const PROP1_SNAP: f64 = 1e-12;

/// Threshold on `m` (and on `‖P − Q‖_∞`) for the pooled estimator to need
/// less training time than the target-only one.
///
/// `F = λ_u π R² (1 − exp{(1 − e^{−2ε_pq²})/(1 − e^{−2ε̄²}) · log(1 − 𝓛)})`
/// with `𝓛 = log(2N/δ)/(λ_u π R²)`, which must be below one.
pub fn prop1_check(q: &BoundQuery) -> Result<SourceRequirement, BoundError> {
    q.validate()?;
    check_tl_floor(q)?;
    let c = &q.config;
    let users = c.mean_users();
    let log_union = q.log_union();
    let l = log_union / users;
    if l >= 1.0 {
        return Err(BoundError::AgnosticInfinite(l));
    }
    let eps_bar = q.eps_bar();
    let eps_pq = eps_bar - q.dist_inf;
    let ratio = hoeffding_gain(eps_pq) / hoeffding_gain(eps_bar);
    let f = -users * (ratio * (-l).ln_1p()).exp_m1();
    let mut deficit = log_union - f;
    if deficit <= PROP1_SNAP * log_union {
        deficit = 0.0;
    }
    let m_min_real = deficit / (2.0 * eps_pq * eps_pq);
    let m_min = m_min_real.ceil() as u64;
    let rhs = q.epsilon * c.bs_rate
        / (2.0 * c.file_bits * c.lambda_u * std::f64::consts::PI * c.gamma * c.gamma * c.n() as f64);
    Ok(SourceRequirement {
        m_min,
        m_min_real,
        dist_condition_rhs: rhs,
        f,
        satisfied: q.m >= m_min && q.dist_inf < rhs,
    })
}

/// Training time for the convex-combination estimator `α p̂^(s) + (1−α) p̂^(t)`.
///
/// Valid for `0 < α < min{ε̄/G, 1}` and `0 ≤ η < (ε̄ − αG)/(1 − α)` with
/// `G = ‖P − Q‖_∞ + √(log(2N/δ)/(2m))`. The target side needs accuracy `η`,
/// the source side `ω = (ε̄ − (1−α)η)/α`.
pub fn tau_tl_convex(q: &BoundQuery, alpha: f64, eta: f64) -> Result<TrainingTimeBound, BoundError> {
    q.validate()?;
    check_tl_floor(q)?;
    let eps_bar = q.eps_bar();
    let log_union = q.log_union();
    let m = q.m as f64;
    let g = q.dist_inf + (log_union / (2.0 * m)).sqrt();
    let alpha_max = (eps_bar / g).min(1.0);
    if !(alpha > 0.0 && alpha < alpha_max) {
        return Err(BoundError::ParameterDomain(format!(
            "need 0 < alpha < min(eps_bar/G, 1) = {alpha_max} (alpha = {alpha}, G = {g})"
        )));
    }
    let eta_max = (eps_bar - alpha * g) / (1.0 - alpha);
    if !(eta >= 0.0 && eta < eta_max) {
        return Err(BoundError::ParameterDomain(format!(
            "need 0 <= eta < (eps_bar - alpha*G)/(1 - alpha) = {eta_max} (eta = {eta})"
        )));
    }
    let omega = (eps_bar - (1.0 - alpha) * eta) / alpha;
    let omega_bar = omega - q.dist_inf;
    let g_t = hoeffding_gain(eta);
    let mut inter = BTreeMap::new();
    inter.insert("eps_bar", eps_bar);
    inter.insert("G", g);
    inter.insert("omega", omega);
    inter.insert("omega_bar", omega_bar);
    inter.insert("g_t_star", g_t);
    match convex_source_log_term(q.config.n(), q.delta, omega_bar, m) {
        Some(source_term) => {
            inter.insert("source_log_term", source_term);
            Ok(poisson_window(&q.config, g_t, log_union + source_term, inter))
        }
        None => Ok(TrainingTimeBound {
            tau: f64::INFINITY,
            density_threshold: f64::INFINITY,
            feasible: false,
            intermediates: inter,
        }),
    }
}

/// `log 1/(1 − (2N/δ) exp{−2ω̄² m})`, or `None` when the argument of the
/// outer log is not positive.
pub fn convex_source_log_term(n: usize, delta: f64, omega_bar: f64, m: f64) -> Option<f64> {
    if omega_bar <= 0.0 {
        return None;
    }
    let y = (2.0 * n as f64 / delta) * (-2.0 * omega_bar * omega_bar * m).exp();
    log_inverse_complement(y)
}

fn check_geometry(geom: &FamilyGeometry) -> Result<(), BoundError> {
    FamilyGeometry::new(geom.dim, geom.lower, geom.upper, geom.c)?;
    Ok(())
}

/// Training time for a `d`-parameter family: independent of `N`.
///
/// `σ² = 2Ω²/(d C² (b−a)²)` with `Ω = R0 ε/(2B)`, threshold
/// `log(2d/δ)/(π R²)`.
pub fn tau_parametric(q: &BoundQuery, geom: &FamilyGeometry) -> Result<TrainingTimeBound, BoundError> {
    q.validate()?;
    check_geometry(geom)?;
    let omega = q.scaled_epsilon();
    let d = geom.dim as f64;
    let sigma2 = 2.0 * omega * omega / (d * geom.c * geom.c * geom.width().powi(2));
    let gain = -(-sigma2).exp_m1();
    let mut inter = BTreeMap::new();
    inter.insert("Omega", omega);
    inter.insert("sigma2", sigma2);
    Ok(poisson_window(&q.config, gain, (2.0 * d / q.delta).ln(), inter))
}

/// Training time for the fused parametric estimator with `q.m` source
/// samples whose parameter lies `theta_dist` (Euclidean) from the target's.
///
/// Valid for `0 < λ < min{Ω/(C Ḡ), 1}` and `0 ≤ D_t < Ω/C − λḠ` with
/// `Ḡ = theta_dist + (b−a)√(log(2d/δ)/(2m))`.
pub fn tau_parametric_tl(
    q: &BoundQuery,
    geom: &FamilyGeometry,
    theta_dist: f64,
    d_t: f64,
    lambda: f64,
) -> Result<TrainingTimeBound, BoundError> {
    q.validate()?;
    check_geometry(geom)?;
    if !(theta_dist.is_finite() && theta_dist >= 0.0) {
        return Err(BoundError::InvalidQuery(format!(
            "theta_dist must be >= 0 (got {theta_dist})"
        )));
    }
    let omega = q.scaled_epsilon();
    let d = geom.dim as f64;
    let width = geom.width();
    let log_union = (2.0 * d / q.delta).ln();
    let m = q.m as f64;
    let g_bar = theta_dist + width * (log_union / (2.0 * m)).sqrt();
    let lambda_max = (omega / (geom.c * g_bar)).min(1.0);
    if !(lambda > 0.0 && lambda < lambda_max) {
        return Err(BoundError::ParameterDomain(format!(
            "need 0 < lambda < min(Omega/(C*G_bar), 1) = {lambda_max} (lambda = {lambda}, G_bar = {g_bar})"
        )));
    }
    let d_t_max = omega / geom.c - lambda * g_bar;
    if !(d_t >= 0.0 && d_t < d_t_max) {
        return Err(BoundError::ParameterDomain(format!(
            "need 0 <= D_t < Omega/C - lambda*G_bar = {d_t_max} (D_t = {d_t})"
        )));
    }
    let omega_bar = (omega / geom.c - d_t) / lambda;
    let sigma_t2 = 2.0 * d_t * d_t / (d * (1.0 - lambda).powi(2) * width * width);
    let gain = -(-sigma_t2).exp_m1();
    let mut inter = BTreeMap::new();
    inter.insert("Omega", omega);
    inter.insert("Omega_bar", omega_bar);
    inter.insert("sigma_t2", sigma_t2);
    inter.insert("G_bar", g_bar);
    let gap = omega_bar - theta_dist;
    let source_y = (2.0 * d / q.delta) * (-2.0 * m * gap * gap / (width * width)).exp();
    match (gap > 0.0).then(|| log_inverse_complement(source_y)).flatten() {
        Some(source_term) => {
            inter.insert("source_log_term", source_term);
            Ok(poisson_window(&q.config, gain, log_union + source_term, inter))
        }
        None => Ok(TrainingTimeBound {
            tau: f64::INFINITY,
            density_threshold: f64::INFINITY,
            feasible: false,
            intermediates: inter,
        }),
    }
}

#[cfg(test)]
mod tests;
