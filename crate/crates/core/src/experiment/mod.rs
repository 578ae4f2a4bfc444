//! Batch experiments behind the command-line tool: bound sweeps for the
//! numerical-results figures, the closed-form versus Monte Carlo check, and
//! the simulate-estimate-optimize pipeline.
//!
//! An [`ExperimentSpec`] starts from per-kind defaults; a TOML document and
//! then individual overrides are layered on top (see [`ExperimentSpec::build`]).

mod end_to_end;
mod figures;
mod table;
mod validation;

pub use end_to_end::{run_end_to_end, EndToEndReport, EndToEndRun, GAP_TOLERANCE};
pub use figures::run_figure;
pub use table::{Cell, Table};
pub use validation::{run_validation, ValidationCase, ValidationReport};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{epsilon_from_fraction, AnalyticError};
use crate::bounds::{BoundError, SupMode};
use crate::estimation::EstimationError;
use crate::model::{ModelError, NetworkConfig};
use crate::spatial::SpatialError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse experiment spec: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("validation failed for config {case} (seed {seed}): {detail}")]
    ValidationFailed { case: usize, seed: u64, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Target-only versus pooled transfer-learning bound, sweeping `N`.
    Fig1,
    /// Convex-combination bound (optimized and fixed `α`), sweeping `N`.
    Fig2,
    /// Target-only versus pooled transfer-learning bound, sweeping `m`.
    Fig3,
    /// Target-only versus convex-combination bound, sweeping `m`.
    Fig4,
    /// Parametric bounds, sweeping the parameter dimension.
    Fig5,
    /// Closed-form loss against Monte Carlo.
    #[serde(alias = "validate_thm1")]
    Validate,
    /// Simulate requests, estimate, optimize, measure the loss gap.
    EndToEnd,
}

impl ExperimentKind {
    pub fn parse_figure(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "fig1" => Some(Self::Fig1),
            "fig2" => Some(Self::Fig2),
            "fig3" => Some(Self::Fig3),
            "fig4" => Some(Self::Fig4),
            "fig5" => Some(Self::Fig5),
            _ => None,
        }
    }

    /// Sweep parameters accepted by this kind.
    pub fn sweep_names(self) -> &'static [&'static str] {
        match self {
            Self::Fig1 | Self::Fig2 => &["n", "lambda_u", "fraction"],
            Self::Fig3 | Self::Fig4 => &["m", "lambda_u", "fraction"],
            Self::Fig5 => &["dim", "m", "theta_dist"],
            Self::Validate | Self::EndToEnd => &[],
        }
    }
}

/// An inclusive arithmetic range `start, start + step, …, ≤ stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn new(name: &str, start: f64, stop: f64, step: f64) -> Self {
        Self {
            name: name.to_string(),
            start,
            stop,
            step,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.start + k as f64 * self.step).collect()
    }

    fn check(&self, kind: ExperimentKind) -> Result<(), ExperimentError> {
        if !kind.sweep_names().contains(&self.name.as_str()) {
            return Err(ExperimentError::InvalidSpec(format!(
                "sweep parameter `{}` is not recognized for {kind:?} (expected one of {:?})",
                self.name,
                kind.sweep_names()
            )));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(ExperimentError::InvalidSpec("sweep bounds must be finite".into()));
        }
        if self.step <= 0.0 || self.stop < self.start {
            return Err(ExperimentError::InvalidSpec(format!(
                "sweep needs step > 0 and stop >= start (got {}..{} by {})",
                self.start, self.stop, self.step
            )));
        }
        if (self.stop - self.start) / self.step > 1e6 {
            return Err(ExperimentError::InvalidSpec("sweep has more than 10^6 points".into()));
        }
        if matches!(self.name.as_str(), "n" | "m" | "dim") {
            let integral = |x: f64| x.fract() == 0.0 && x >= 0.0;
            if !(integral(self.start) && integral(self.step)) {
                return Err(ExperimentError::InvalidSpec(format!(
                    "sweep over `{}` needs non-negative integer start and step",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Empirical,
    TlPooled,
    TlConvex,
}

/// Everything an experiment needs. Field names double as TOML keys and,
/// in kebab case, as command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub config: NetworkConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    pub delta: f64,
    /// `ε` as a fraction of the loss floor `(B/R0) exp{−λ_s π γ²}`.
    pub fraction: f64,
    /// Overrides `fraction` with an absolute `ε` in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_seconds: Option<f64>,
    /// Source-domain sample count.
    pub m: u64,
    pub seed: u64,
    /// Monte Carlo trials per configuration.
    pub trials: u64,
    pub sup_mode: SupMode,
    /// `‖P − Q‖_∞` as a multiple of `ε R0/(2BN)`.
    pub dist_scale: f64,
    /// Convex-combination weight on the source estimate.
    pub alpha: f64,
    /// Parametric families: dimension `d`, bound `C`, box width `b − a`.
    pub dim: u32,
    pub family_c: f64,
    pub family_width: f64,
    /// `‖Θ − Θ_s‖₂` for the fused parametric bound.
    pub theta_dist: f64,
    pub estimator: EstimatorKind,
    /// Training window in seconds; the target-only bound for `ε` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub runs: u64,
    /// Zipf exponent of the target popularity profile.
    pub zipf_theta: f64,
    /// Zipf exponent of the source profile; equal to the target's if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_theta: Option<f64>,
    /// Explicit target popularity weights (normalized), replacing Zipf.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_profile: Option<Vec<f64>>,
    /// Number of random configurations in the validation run.
    pub validation_configs: u32,
}

impl ExperimentSpec {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut spec = Self {
            kind,
            config: NetworkConfig::default(),
            sweep: None,
            delta: 0.02,
            fraction: 0.6,
            epsilon_seconds: None,
            m: 100_000,
            seed: 0,
            trials: 100_000,
            sup_mode: SupMode::NUpper,
            dist_scale: 0.1,
            alpha: 0.5,
            dim: 1,
            family_c: 2.0,
            family_width: 0.5,
            theta_dist: 0.1,
            estimator: EstimatorKind::Empirical,
            tau: None,
            runs: 200,
            zipf_theta: 0.8,
            source_theta: None,
            target_profile: None,
            validation_configs: 20,
        };
        match kind {
            ExperimentKind::Fig1 => spec.sweep = Some(Sweep::new("n", 2.0, 200.0, 1.0)),
            ExperimentKind::Fig2 => spec.sweep = Some(Sweep::new("n", 2.0, 200.0, 2.0)),
            ExperimentKind::Fig3 => spec.sweep = Some(Sweep::new("m", 0.0, 20_000.0, 250.0)),
            ExperimentKind::Fig4 => {
                spec.sweep = Some(Sweep::new("m", 1_000.0, 30_000.0, 250.0));
                spec.fraction = 0.5;
                spec.dist_scale = 0.0;
            }
            ExperimentKind::Fig5 => {
                spec.sweep = Some(Sweep::new("dim", 1.0, 10.0, 1.0));
                spec.m = 10;
            }
            ExperimentKind::Validate => {}
            ExperimentKind::EndToEnd => {
                spec.delta = 0.1;
                spec.config.catalog_size = 5;
                spec.m = 0;
            }
        }
        spec
    }

    /// Defaults for `kind`, overlaid with `document` (TOML) and then with
    /// `overrides`. Tables merge key by key; `kind` always wins.
    pub fn build(
        kind: ExperimentKind,
        document: Option<&str>,
        overrides: toml::Table,
    ) -> Result<Self, ExperimentError> {
        let mut table = toml::Table::try_from(Self::defaults(kind))
            .map_err(|e| ExperimentError::InvalidSpec(e.to_string()))?;
        if let Some(text) = document {
            merge(&mut table, text.parse::<toml::Table>()?);
        }
        merge(&mut table, overrides);
        let kind_value = toml::Value::try_from(kind)
            .map_err(|e| ExperimentError::InvalidSpec(e.to_string()))?;
        table.insert("kind".into(), kind_value);
        let spec: Self = toml::Value::Table(table).try_into()?;
        spec.validate()
    }

    pub fn load(kind: ExperimentKind, path: &Path, overrides: toml::Table) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::build(kind, Some(&text), overrides)
    }

    pub fn validate(self) -> Result<Self, ExperimentError> {
        self.config.validate()?;
        let bad = |msg: String| Err(ExperimentError::InvalidSpec(msg));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must be in (0, 1) (got {})", self.delta));
        }
        if !(self.fraction.is_finite() && self.fraction > 0.0) {
            return bad(format!("fraction must be > 0 (got {})", self.fraction));
        }
        if let Some(e) = self.epsilon_seconds {
            if !(e.is_finite() && e > 0.0) {
                return bad(format!("epsilon_seconds must be > 0 (got {e})"));
            }
        }
        if !(self.dist_scale.is_finite() && self.dist_scale >= 0.0) {
            return bad(format!("dist_scale must be >= 0 (got {})", self.dist_scale));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must be in [0, 1] (got {})", self.alpha));
        }
        if self.dim == 0 {
            return bad("dim must be >= 1".into());
        }
        if let Some(t) = self.tau {
            if !(t.is_finite() && t >= 0.0) {
                return bad(format!("tau must be finite and >= 0 (got {t})"));
            }
        }
        match (self.kind.sweep_names().is_empty(), &self.sweep) {
            (false, None) => return bad(format!("{:?} needs a sweep", self.kind)),
            (false, Some(s)) => s.check(self.kind)?,
            (true, _) => {}
        }
        if self.kind == ExperimentKind::Validate && self.trials < 2 {
            return bad("validation needs trials >= 2".into());
        }
        if self.kind == ExperimentKind::EndToEnd && self.runs == 0 {
            return bad("runs must be >= 1".into());
        }
        Ok(self)
    }

    /// `ε` in seconds for `config`.
    pub fn epsilon(&self, config: &NetworkConfig) -> Result<f64, ExperimentError> {
        match self.epsilon_seconds {
            Some(e) => Ok(e),
            None => Ok(epsilon_from_fraction(config, self.fraction)?),
        }
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(inner)), toml::Value::Table(sub)) => merge(inner, sub),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}
