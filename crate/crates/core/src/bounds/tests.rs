use super::*;
use crate::analytic::epsilon_from_fraction;

fn reference_query(n: u32, fraction: f64) -> BoundQuery {
    let config = NetworkConfig {
        catalog_size: n,
        ..NetworkConfig::default()
    };
    let eps = epsilon_from_fraction(&config, fraction).unwrap();
    BoundQuery::new(config, eps, 0.02)
}

#[test]
fn sup_modes() {
    let q = reference_query(1, 0.6);
    assert_eq!(sup_sum_g(&q.config, SupMode::NUpper), 1.0);
    let exact = sup_sum_g(&q.config, SupMode::ExactSup);
    assert!((exact - (-0.1 * std::f64::consts::PI).exp()).abs() < 1e-15);
}

#[test]
fn eps_bar_reference() {
    let q = reference_query(10, 0.6);
    assert!((q.eps_bar() - 0.021_92).abs() < 1e-4);
}

#[test]
fn empirical_infeasible_below_threshold() {
    let mut q = reference_query(10, 0.6);
    let threshold = q.log_union() / q.config.coverage_area();
    q.config.lambda_u = 0.5 * threshold;
    let b = tau_empirical(&q).unwrap();
    assert!(!b.feasible);
    assert!(b.tau.is_infinite());
    assert!((b.density_threshold - threshold).abs() <= 1e-15 * threshold);
}

#[test]
fn empirical_vanishes_with_density() {
    let mut q = reference_query(10, 0.6);
    q.config.lambda_u = 1e6;
    let b = tau_empirical(&q).unwrap();
    assert!(b.feasible && b.tau >= 0.0 && b.tau < 1e-3);
}

#[test]
fn pooled_degenerates_to_empirical() {
    let q = reference_query(10, 0.6);
    let a = tau_empirical(&q).unwrap();
    let t = tau_tl_pooled(&q).unwrap();
    assert!((a.tau - t.tau).abs() <= 1e-12 * a.tau);
}

#[test]
fn pooled_large_m_feasible_everywhere() {
    let mut q = reference_query(10, 0.6).with_source(100_000, 0.0);
    q.config.lambda_u = 1e-9;
    let b = tau_tl_pooled(&q).unwrap();
    assert!(b.feasible);
    assert!(b.density_threshold < 0.0);
    assert_eq!(b.tau, 0.0);
}

#[test]
fn pooled_rejects_accuracy_below_floor() {
    let q = reference_query(10, 0.6).with_source(10, 0.5);
    assert!(matches!(
        tau_tl_pooled(&q),
        Err(BoundError::AccuracyBelowTlFloor { .. })
    ));
}

#[test]
fn prop1_zero_distance_needs_no_source() {
    let q = reference_query(10, 0.6);
    let r = prop1_check(&q).unwrap();
    assert_eq!(r.m_min, 0);
    assert!((r.f - q.log_union()).abs() < 1e-9 * q.log_union());
}

#[test]
fn prop1_reports_infinite_agnostic() {
    let mut q = reference_query(10, 0.6);
    q.config.lambda_u = 1e-9;
    assert!(matches!(prop1_check(&q), Err(BoundError::AgnosticInfinite(_))));
}

#[test]
fn convex_domain_errors_name_inequality() {
    let q = reference_query(10, 0.6).with_source(100_000, 0.0);
    let err = tau_tl_convex(&q, 1.5, 0.0).unwrap_err();
    assert!(err.to_string().contains("alpha"));
    let err = tau_tl_convex(&q, 0.5, 1.0).unwrap_err();
    assert!(err.to_string().contains("eta"));
}

#[test]
fn convex_source_term_log_domain() {
    assert!(convex_source_log_term(10, 0.02, 1e-6, 1.0).is_none());
    assert!(convex_source_log_term(10, 0.02, -1.0, 1e9).is_none());
    let v = convex_source_log_term(10, 0.02, 0.1, 1e5).unwrap();
    assert!((0.0..1e-100).contains(&v));
}

#[test]
fn parametric_ignores_catalog_size() {
    let geom = FamilyGeometry::new(2, 0.0, 0.5, 2.0).unwrap();
    let a = tau_parametric(&reference_query(10, 0.6), &geom).unwrap();
    let b = tau_parametric(&reference_query(1000, 0.6), &geom).unwrap();
    assert_eq!(a.tau.to_bits(), b.tau.to_bits());
}

#[test]
fn parametric_tl_domain_errors() {
    let geom = FamilyGeometry::new(1, 0.0, 0.5, 2.0).unwrap();
    let q = reference_query(10, 0.6).with_source(10, 0.0);
    let err = tau_parametric_tl(&q, &geom, 0.1, 0.0, 2.0).unwrap_err();
    assert!(err.to_string().contains("lambda"));
}

#[test]
fn search_finds_feasible_convex_point() {
    let q = reference_query(10, 0.5).with_source(20_000, 0.0);
    let best = best_tl_convex(&q, &ParamSearch::default()).unwrap().unwrap();
    assert!(best.bound.feasible);
    let direct = tau_tl_convex(&q, best.alpha, best.eta).unwrap();
    assert_eq!(direct.tau, best.bound.tau);
}
