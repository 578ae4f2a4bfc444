//! Parametric popularity families `p_Θ` with `Θ ∈ [a, b]^d`.
//!
//! A family bundles a per-sample estimator `f(X) ∈ [a, b]^d` of `Θ`. The
//! parametric training-time bounds only need the box, the dimension and the
//! sub-gradient bound `C` ([`FamilyGeometry`]).

use nalgebra::{DMatrix, DVector};

use super::{zipf_profile, ModelError, PopularityProfile};

/// Multiplier applied to the numerically estimated gradient-norm maximum.
pub const C_SAFETY_FACTOR: f64 = 1.1;

/// The quantities of a family that the training-time bounds consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyGeometry {
    /// Parameter dimension `d`.
    pub dim: usize,
    /// Lower box bound `a`.
    pub lower: f64,
    /// Upper box bound `b`.
    pub upper: f64,
    /// Bound `C` on `Σ_i ‖∂_Θ p_{Θ,i}‖₂` over the box.
    pub c: f64,
}

impl FamilyGeometry {
    pub fn new(dim: usize, lower: f64, upper: f64, c: f64) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::InvalidFamily("dimension must be >= 1".into()));
        }
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(ModelError::InvalidFamily(format!(
                "parameter box [{lower}, {upper}] is empty"
            )));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(ModelError::InvalidFamily(format!("C must be > 0 (got {c})")));
        }
        Ok(Self {
            dim,
            lower,
            upper,
            c,
        })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim && theta.iter().all(|t| (self.lower..=self.upper).contains(t))
    }

    pub fn clamp(&self, theta: &mut [f64]) {
        for t in theta {
            *t = t.clamp(self.lower, self.upper);
        }
    }
}

pub trait ParametricFamily: Send + Sync {
    fn geometry(&self) -> FamilyGeometry;

    fn catalog_size(&self) -> usize;

    /// Popularity profile at `theta`. `theta` must lie in the box.
    fn profile_of(&self, theta: &[f64]) -> Result<PopularityProfile, ModelError>;

    /// Single-observation estimate of `Θ` from a request for `file` (0-based),
    /// before clamping.
    fn raw_estimate(&self, file: usize) -> Vec<f64>;

    /// Single-observation estimate clamped to the parameter box.
    fn per_sample_estimate(&self, file: usize) -> Vec<f64> {
        let mut est = self.raw_estimate(file);
        self.geometry().clamp(&mut est);
        est
    }
}

/// Numerical `C`: the largest `Σ_i ‖∂_Θ p_{Θ,i}‖₂` over a product grid of
/// `points_per_axis^d` parameters, by central differences (one-sided at
/// the box faces), times [`C_SAFETY_FACTOR`].
pub fn numerical_c_bound<F>(
    dim: usize,
    lower: f64,
    upper: f64,
    points_per_axis: usize,
    profile_of: F,
) -> Result<f64, ModelError>
where
    F: Fn(&[f64]) -> Result<PopularityProfile, ModelError>,
{
    let k = points_per_axis.max(2);
    let total = k
        .checked_pow(dim as u32)
        .filter(|t| *t <= 1_000_000)
        .ok_or_else(|| ModelError::InvalidFamily("gradient grid too large".into()))?;
    let h = (upper - lower) * 1e-5;
    let axis = |j: usize| lower + (upper - lower) * j as f64 / (k - 1) as f64;
    let mut best = 0.0_f64;
    for flat in 0..total {
        let mut theta = Vec::with_capacity(dim);
        let mut rest = flat;
        for _ in 0..dim {
            theta.push(axis(rest % k));
            rest /= k;
        }
        let mut grads: Vec<Vec<f64>> = Vec::with_capacity(dim);
        for axis_idx in 0..dim {
            let mut lo = theta.clone();
            let mut hi = theta.clone();
            lo[axis_idx] = (theta[axis_idx] - h).max(lower);
            hi[axis_idx] = (theta[axis_idx] + h).min(upper);
            let span = hi[axis_idx] - lo[axis_idx];
            let p_lo = profile_of(&lo)?;
            let p_hi = profile_of(&hi)?;
            grads.push(
                p_hi.as_slice()
                    .iter()
                    .zip(p_lo.as_slice())
                    .map(|(a, b)| (a - b) / span)
                    .collect(),
            );
        }
        let n = grads[0].len();
        let norm_sum: f64 = (0..n)
            .map(|i| grads.iter().map(|g| g[i] * g[i]).sum::<f64>().sqrt())
            .sum();
        best = best.max(norm_sum);
    }
    Ok(best * C_SAFETY_FACTOR)
}

/// Affine family `p_Θ = u + Σ_k Θ_k v_k`.
///
/// The per-sample estimator is the minimum-norm linear map `f(i) = w_i`
/// satisfying `Σ_i p_{Θ,i} w_i = Θ` for every `Θ`, i.e. `u·w = 0` and
/// `v_k·w = e_k`. It is exactly unbiased. Construction fails unless every
/// `w_i` already lies in the box, so no clamping ever occurs.
#[derive(Debug, Clone)]
pub struct AffineFamily {
    base: Vec<f64>,
    directions: Vec<Vec<f64>>,
    geometry: FamilyGeometry,
    weights: Vec<Vec<f64>>,
}

impl AffineFamily {
    pub fn new(
        base: Vec<f64>,
        directions: Vec<Vec<f64>>,
        lower: f64,
        upper: f64,
    ) -> Result<Self, ModelError> {
        let n = base.len();
        let d = directions.len();
        if n == 0 {
            return Err(ModelError::EmptyCatalog);
        }
        if d == 0 || directions.iter().any(|v| v.len() != n) {
            return Err(ModelError::InvalidFamily(
                "need at least one direction of catalog length".into(),
            ));
        }
        if (base.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(ModelError::InvalidFamily("base must sum to 1".into()));
        }
        if directions
            .iter()
            .any(|v| v.iter().sum::<f64>().abs() > 1e-12)
        {
            return Err(ModelError::InvalidFamily("directions must sum to 0".into()));
        }
        // Affine in Θ, so the minimum over the box sits at a corner.
        for i in 0..n {
            let low: f64 = base[i]
                + directions
                    .iter()
                    .map(|v| (lower * v[i]).min(upper * v[i]))
                    .sum::<f64>();
            if low < -1e-12 {
                return Err(ModelError::InvalidFamily(format!(
                    "p_i for file {} goes negative inside the box",
                    i + 1
                )));
            }
        }

        // Constraint matrix rows: u, v_1..v_d. Min-norm W = Aᵀ (A Aᵀ)⁻¹ [0; I].
        let a = DMatrix::from_fn(d + 1, n, |r, c| {
            if r == 0 {
                base[c]
            } else {
                directions[r - 1][c]
            }
        });
        let gram = &a * a.transpose();
        let lu = gram.lu();
        let mut weights = vec![vec![0.0; d]; n];
        for k in 0..d {
            let mut rhs = DVector::zeros(d + 1);
            rhs[k + 1] = 1.0;
            let y = lu.solve(&rhs).ok_or_else(|| {
                ModelError::InvalidFamily("base and directions are linearly dependent".into())
            })?;
            let w = a.transpose() * y;
            for i in 0..n {
                weights[i][k] = w[i];
            }
        }
        let tol = 1e-9 * (upper - lower);
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| w.iter().any(|x| *x < lower - tol || *x > upper + tol))
        {
            return Err(ModelError::InvalidFamily(format!(
                "unbiased estimator value {w:?} for file {} leaves [{lower}, {upper}]",
                i + 1
            )));
        }

        let c = C_SAFETY_FACTOR
            * (0..n)
                .map(|i| directions.iter().map(|v| v[i] * v[i]).sum::<f64>().sqrt())
                .sum::<f64>();
        let geometry = FamilyGeometry::new(d, lower, upper, c)?;
        Ok(Self {
            base,
            directions,
            geometry,
            weights,
        })
    }

    /// `p_Θ = (1 − ΣΘ_k) P_0 + Σ Θ_k P_k` for `Θ ∈ [lower, upper]^d`.
    pub fn mixture(
        base: &PopularityProfile,
        alternates: &[PopularityProfile],
        lower: f64,
        upper: f64,
    ) -> Result<Self, ModelError> {
        let dirs = alternates
            .iter()
            .map(|alt| {
                alt.as_slice()
                    .iter()
                    .zip(base.as_slice())
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        Self::new(base.as_slice().to_vec(), dirs, lower, upper)
    }

    /// Estimator values `f(i)` for every file.
    pub fn estimator_table(&self) -> &[Vec<f64>] {
        &self.weights
    }
}

impl ParametricFamily for AffineFamily {
    fn geometry(&self) -> FamilyGeometry {
        self.geometry
    }

    fn catalog_size(&self) -> usize {
        self.base.len()
    }

    fn profile_of(&self, theta: &[f64]) -> Result<PopularityProfile, ModelError> {
        if !self.geometry.contains(theta) {
            return Err(ModelError::InvalidFamily(format!(
                "theta {theta:?} outside the parameter box"
            )));
        }
        let p: Vec<f64> = (0..self.base.len())
            .map(|i| {
                let v = self.base[i]
                    + self
                        .directions
                        .iter()
                        .zip(theta)
                        .map(|(dir, t)| t * dir[i])
                        .sum::<f64>();
                v.clamp(0.0, 1.0)
            })
            .collect();
        PopularityProfile::from_weights(&p)
    }

    fn raw_estimate(&self, file: usize) -> Vec<f64> {
        self.weights[file].clone()
    }
}

/// One-parameter Zipf family on `[lower, upper]`.
///
/// There is no exactly unbiased single-sample estimator of the Zipf
/// exponent. This one matches the first log-moment: `f(i)` is the exponent
/// whose `E[ln I]` equals `ln i`, clamped to the box. It is only
/// approximately unbiased and meant for demonstrations.
#[derive(Debug, Clone)]
pub struct ZipfFamily {
    n: usize,
    geometry: FamilyGeometry,
    estimates: Vec<f64>,
}

impl ZipfFamily {
    pub fn new(n: usize, lower: f64, upper: f64) -> Result<Self, ModelError> {
        if n == 0 {
            return Err(ModelError::EmptyCatalog);
        }
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(ModelError::InvalidFamily(format!(
                "parameter box [{lower}, {upper}] is empty"
            )));
        }
        let c = numerical_c_bound(1, lower, upper, 201, |t| zipf_profile(n, t[0]))?;
        let geometry = FamilyGeometry::new(1, lower, upper, c)?;
        let mean_log = |theta: f64| -> f64 {
            let p = zipf_profile(n, theta).expect("finite exponent");
            p.as_slice()
                .iter()
                .enumerate()
                .map(|(i, pi)| pi * ((i + 1) as f64).ln())
                .sum()
        };
        let at_lower = mean_log(lower);
        let at_upper = mean_log(upper);
        let estimates = (1..=n)
            .map(|i| {
                let target = (i as f64).ln();
                if target >= at_lower {
                    return lower;
                }
                if target <= at_upper {
                    return upper;
                }
                // E[ln I] is decreasing in the exponent.
                let (mut lo, mut hi) = (lower, upper);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if mean_log(mid) > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        Ok(Self {
            n,
            geometry,
            estimates,
        })
    }
}

impl ParametricFamily for ZipfFamily {
    fn geometry(&self) -> FamilyGeometry {
        self.geometry
    }

    fn catalog_size(&self) -> usize {
        self.n
    }

    fn profile_of(&self, theta: &[f64]) -> Result<PopularityProfile, ModelError> {
        if !self.geometry.contains(theta) {
            return Err(ModelError::InvalidFamily(format!(
                "theta {theta:?} outside the parameter box"
            )));
        }
        zipf_profile(self.n, theta[0])
    }

    fn raw_estimate(&self, file: usize) -> Vec<f64> {
        vec![self.estimates[file]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halves() -> AffineFamily {
        let base = PopularityProfile::new(
            (0..10).map(|i| if i < 5 { 0.2 } else { 0.0 }).collect(),
        )
        .unwrap();
        let alt = PopularityProfile::new(
            (0..10).map(|i| if i < 5 { 0.0 } else { 0.2 }).collect(),
        )
        .unwrap();
        AffineFamily::mixture(&base, &[alt], 0.0, 1.0).unwrap()
    }

    #[test]
    fn bernoulli_family_estimator_is_indicator() {
        let fam = AffineFamily::new(vec![1.0, 0.0], vec![vec![-1.0, 1.0]], 0.0, 1.0).unwrap();
        assert!(fam.per_sample_estimate(0)[0].abs() < 1e-12);
        assert!((fam.per_sample_estimate(1)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn affine_estimator_is_unbiased_everywhere_in_box() {
        let fam = halves();
        for theta in [0.0, 0.1, 0.3, 0.77, 1.0] {
            let p = fam.profile_of(&[theta]).unwrap();
            let mean: f64 = (0..10)
                .map(|i| p[i] * fam.per_sample_estimate(i)[0])
                .sum();
            assert!((mean - theta).abs() < 1e-12, "theta={theta} mean={mean}");
        }
    }

    #[test]
    fn affine_c_matches_numerical_gradient() {
        let fam = halves();
        let numeric =
            numerical_c_bound(1, 0.0, 1.0, 11, |t| fam.profile_of(t)).unwrap();
        assert!((fam.geometry().c - numeric).abs() < 1e-6);
        assert!((fam.geometry().c - 2.2).abs() < 1e-12);
    }

    #[test]
    fn affine_rejects_negative_probabilities() {
        let err = AffineFamily::new(vec![0.5, 0.5], vec![vec![-1.0, 1.0]], 0.0, 1.0);
        assert!(err.is_err());
    }

    #[test]
    fn zipf_family_profiles_are_valid_and_estimates_clamped() {
        let fam = ZipfFamily::new(20, 0.5, 1.0).unwrap();
        let g = fam.geometry();
        assert_eq!(g.dim, 1);
        assert!(g.c > 0.0);
        for t in [0.5, 0.75, 1.0] {
            assert!(fam.profile_of(&[t]).is_ok());
        }
        for i in 0..20 {
            let e = fam.per_sample_estimate(i)[0];
            assert!((0.5..=1.0).contains(&e));
        }
        // Popular files point at steeper exponents.
        assert!(fam.per_sample_estimate(0)[0] >= fam.per_sample_estimate(19)[0]);
    }

    #[test]
    fn profile_outside_box_is_rejected() {
        assert!(halves().profile_of(&[1.5]).is_err());
        assert!(halves().profile_of(&[0.5, 0.5]).is_err());
    }
}
