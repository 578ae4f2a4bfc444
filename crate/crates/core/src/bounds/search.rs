//! Grid search over the free parameters of the convex-combination and
//! parametric transfer-learning bounds.
//!
//! Both regions have the form `0 < u < u_max`, `0 ≤ v < v_max(u)`, so the
//! search runs on the unit square `(s, t) ↦ (s·u_max, t·v_max(s·u_max))`:
//! a coarse grid followed by repeated zooms around the incumbent.

use super::{tau_parametric_tl, tau_tl_convex, BoundError, BoundQuery, TrainingTimeBound};
use crate::model::FamilyGeometry;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSearch {
    /// Points per axis on the coarse grid.
    pub coarse: usize,
    /// Points per axis on each zoomed grid.
    pub fine: usize,
    pub refinements: usize,
}

impl Default for ParamSearch {
    fn default() -> Self {
        Self {
            coarse: 64,
            fine: 16,
            refinements: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestConvex {
    pub bound: TrainingTimeBound,
    pub alpha: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestParametricTl {
    pub bound: TrainingTimeBound,
    pub lambda: f64,
    pub d_t: f64,
}

/// Ordering key: smaller `tau`, then smaller density threshold.
fn better(a: &TrainingTimeBound, b: &TrainingTimeBound) -> bool {
    (a.tau, a.density_threshold) < (b.tau, b.density_threshold)
}

fn interior(lo: f64, hi: f64, k: usize) -> impl Iterator<Item = f64> {
    let lo = lo.max(0.0);
    let hi = hi.min(1.0);
    (1..=k).map(move |j| lo + (hi - lo) * j as f64 / (k + 1) as f64)
}

/// Minimizes `eval(s, t)` over the open unit square. `eval` returns `None`
/// for points that fall outside the region after rounding.
fn unit_square_search<F>(search: &ParamSearch, eval: F) -> Option<(TrainingTimeBound, f64, f64)>
where
    F: Fn(f64, f64) -> Option<TrainingTimeBound>,
{
    let mut best: Option<(TrainingTimeBound, f64, f64)> = None;
    let consider = |s: f64, t: f64, best: &mut Option<(TrainingTimeBound, f64, f64)>| {
        if let Some(b) = eval(s, t) {
            if best.as_ref().is_none_or(|(cur, _, _)| better(&b, cur)) {
                *best = Some((b, s, t));
            }
        }
    };
    for s in interior(0.0, 1.0, search.coarse) {
        for t in interior(0.0, 1.0, search.coarse) {
            consider(s, t, &mut best);
        }
    }
    let mut half = 1.0 / (search.coarse + 1) as f64;
    for _ in 0..search.refinements {
        let Some((_, s0, t0)) = best.as_ref().map(|(b, s, t)| (b.tau, *s, *t)) else {
            break;
        };
        for s in interior(s0 - half, s0 + half, search.fine) {
            for t in interior(t0 - half, t0 + half, search.fine) {
                consider(s, t, &mut best);
            }
        }
        half *= 4.0 / (search.fine + 1) as f64;
    }
    best
}

/// Best convex-combination bound over `(α, η)` in the feasibility region.
/// Returns `Ok(None)` when the region is empty.
pub fn best_tl_convex(q: &BoundQuery, search: &ParamSearch) -> Result<Option<BestConvex>, BoundError> {
    q.validate()?;
    super::check_tl_floor(q)?;
    if q.m == 0 {
        return Ok(None);
    }
    let eps_bar = q.eps_bar();
    let g = q.dist_inf + (q.log_union() / (2.0 * q.m as f64)).sqrt();
    let alpha_max = (eps_bar / g).min(1.0);
    let found = unit_square_search(search, |s, t| {
        let alpha = s * alpha_max;
        let eta = t * (eps_bar - alpha * g) / (1.0 - alpha);
        tau_tl_convex(q, alpha, eta).ok()
    });
    Ok(found.map(|(bound, s, t)| {
        let alpha = s * alpha_max;
        BestConvex {
            bound,
            alpha,
            eta: t * (eps_bar - alpha * g) / (1.0 - alpha),
        }
    }))
}

/// Best convex-combination bound for a fixed `α`, searching `η` only.
/// Returns `Ok(None)` when `α` is outside its range or no `η` is feasible.
pub fn best_tl_convex_at_alpha(
    q: &BoundQuery,
    alpha: f64,
    search: &ParamSearch,
) -> Result<Option<BestConvex>, BoundError> {
    q.validate()?;
    super::check_tl_floor(q)?;
    if q.m == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Ok(None);
    }
    let eps_bar = q.eps_bar();
    let g = q.dist_inf + (q.log_union() / (2.0 * q.m as f64)).sqrt();
    if alpha >= eps_bar / g {
        return Ok(None);
    }
    let eta_max = (eps_bar - alpha * g) / (1.0 - alpha);
    let eval = |t: f64| tau_tl_convex(q, alpha, t * eta_max).ok();
    let mut best: Option<(TrainingTimeBound, f64)> = None;
    let consider = |t: f64, best: &mut Option<(TrainingTimeBound, f64)>| {
        if let Some(b) = eval(t) {
            if best.as_ref().is_none_or(|(cur, _)| better(&b, cur)) {
                *best = Some((b, t));
            }
        }
    };
    let coarse = search.coarse * search.coarse;
    for t in interior(0.0, 1.0, coarse) {
        consider(t, &mut best);
    }
    let mut half = 1.0 / (coarse + 1) as f64;
    for _ in 0..search.refinements {
        let Some(t0) = best.as_ref().map(|(_, t)| *t) else {
            break;
        };
        for t in interior(t0 - half, t0 + half, search.fine) {
            consider(t, &mut best);
        }
        half *= 4.0 / (search.fine + 1) as f64;
    }
    Ok(best.map(|(bound, t)| BestConvex {
        bound,
        alpha,
        eta: t * eta_max,
    }))
}

/// Best fused parametric bound over `(λ, D_t)` in the feasibility region.
/// Returns `Ok(None)` when the region is empty.
pub fn best_parametric_tl(
    q: &BoundQuery,
    geom: &FamilyGeometry,
    theta_dist: f64,
    search: &ParamSearch,
) -> Result<Option<BestParametricTl>, BoundError> {
    q.validate()?;
    if q.m == 0 {
        return Ok(None);
    }
    let omega_c = q.scaled_epsilon() / geom.c;
    let log_union = (2.0 * geom.dim as f64 / q.delta).ln();
    let g_bar = theta_dist + geom.width() * (log_union / (2.0 * q.m as f64)).sqrt();
    let lambda_max = (omega_c / g_bar).min(1.0);
    // Surface argument errors (bad geometry, negative distance) once.
    if let Err(e) = tau_parametric_tl(q, geom, theta_dist, 0.0, 0.5 * lambda_max) {
        if !matches!(e, BoundError::ParameterDomain(_)) {
            return Err(e);
        }
    }
    let found = unit_square_search(search, |s, t| {
        let lambda = s * lambda_max;
        let d_t = t * (omega_c - lambda * g_bar);
        tau_parametric_tl(q, geom, theta_dist, d_t, lambda).ok()
    });
    Ok(found.map(|(bound, s, t)| {
        let lambda = s * lambda_max;
        BestParametricTl {
            bound,
            lambda,
            d_t: t * (omega_c - lambda * g_bar),
        }
    }))
}
