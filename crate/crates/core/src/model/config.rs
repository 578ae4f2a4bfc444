use serde::{Deserialize, Serialize};

use super::ModelError;

/// Scalar system parameters of the heterogeneous network.
///
/// Densities are in nodes/m², radii in metres, the file size in bits and the
/// BS-to-user rate in bits/s. `lambda_b` is carried for completeness; none
/// of the formulas in this crate read it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub lambda_b: f64,
    /// Requests per second per user.
    pub lambda_r: f64,
    /// File size `B` in bits.
    pub file_bits: f64,
    /// BS-to-user rate `R0` in bits/s.
    pub bs_rate: f64,
    /// SBS communication radius.
    pub gamma: f64,
    /// BS coverage radius `R`.
    pub coverage_radius: f64,
    /// Cache slots per SBS (`M`).
    pub cache_slots: u32,
    /// Catalog size (`N`).
    pub catalog_size: u32,
}

impl Default for NetworkConfig {
    /// The numerical-results parameter set: B = 10⁷ bits, R0 = 10⁶ bits/s,
    /// γ = 100 m, λ_u = 10⁻³, λ_r = 1/360, λ_s = 10⁻⁵, R = 2 km.
    /// The cache size is not part of that set; `M = 2` is used.
    fn default() -> Self {
        Self {
            lambda_u: 1e-3,
            lambda_s: 1e-5,
            lambda_b: 1e-6,
            lambda_r: 1.0 / 360.0,
            file_bits: 1e7,
            bs_rate: 1e6,
            gamma: 100.0,
            coverage_radius: 2000.0,
            cache_slots: 2,
            catalog_size: 10,
        }
    }
}

impl NetworkConfig {
    /// Checks every field and returns the config unchanged if it is valid.
    ///
    /// λ_u, λ_r, B, R0 and R must be strictly positive. λ_s, λ_b and γ may be
    /// zero (a network without reachable SBSs is a legal degenerate case).
    pub fn validate(self) -> Result<Self, ModelError> {
        positive("lambda_u", self.lambda_u)?;
        non_negative("lambda_s", self.lambda_s)?;
        non_negative("lambda_b", self.lambda_b)?;
        positive("lambda_r", self.lambda_r)?;
        positive("file_bits", self.file_bits)?;
        positive("bs_rate", self.bs_rate)?;
        non_negative("gamma", self.gamma)?;
        positive("coverage_radius", self.coverage_radius)?;
        if self.cache_slots == 0 {
            return Err(invalid("cache_slots", "must be at least 1"));
        }
        if self.catalog_size == 0 {
            return Err(invalid("catalog_size", "must be at least 1"));
        }
        Ok(self)
    }

    /// Transmission overhead `B / R0` of one backhaul download, in seconds.
    pub fn backhaul_time(&self) -> f64 {
        self.file_bits / self.bs_rate
    }

    /// Mean number of SBSs inside the communication disc, `λ_s π γ²`.
    pub fn mean_neighbors(&self) -> f64 {
        self.lambda_s * std::f64::consts::PI * self.gamma * self.gamma
    }

    /// Mean number of users inside the BS coverage disc, `λ_u π R²`.
    pub fn mean_users(&self) -> f64 {
        self.lambda_u * self.coverage_area()
    }

    pub fn coverage_area(&self) -> f64 {
        std::f64::consts::PI * self.coverage_radius * self.coverage_radius
    }

    pub fn n(&self) -> usize {
        self.catalog_size as usize
    }

    pub fn m(&self) -> u32 {
        self.cache_slots
    }
}

fn invalid(field: &'static str, reason: &str) -> ModelError {
    ModelError::InvalidConfig {
        field,
        reason: reason.to_string(),
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, &format!("must be finite and > 0 (got {v})")))
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, &format!("must be finite and >= 0 (got {v})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_parameter_set_is_valid() {
        let cfg = NetworkConfig::default();
        assert_eq!(cfg.validate(), Ok(cfg));
    }

    #[test]
    fn zero_user_density_is_rejected() {
        let cfg = NetworkConfig {
            lambda_u: 0.0,
            ..Default::default()
        };
        match cfg.validate() {
            Err(ModelError::InvalidConfig { field, .. }) => assert_eq!(field, "lambda_u"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_cache_is_rejected() {
        let cfg = NetworkConfig {
            cache_slots: 0,
            ..Default::default()
        };
        match cfg.validate() {
            Err(ModelError::InvalidConfig { field, .. }) => assert_eq!(field, "cache_slots"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn first_violation_is_reported() {
        let cfg = NetworkConfig {
            lambda_r: -1.0,
            coverage_radius: f64::NAN,
            ..Default::default()
        };
        match cfg.validate() {
            Err(ModelError::InvalidConfig { field, .. }) => assert_eq!(field, "lambda_r"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_sbs_layer_is_allowed() {
        let cfg = NetworkConfig {
            lambda_s: 0.0,
            gamma: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn validate_is_idempotent() {
        let cfg = NetworkConfig::default();
        assert_eq!(cfg.validate().and_then(NetworkConfig::validate), Ok(cfg));
    }
}
