use rayon::prelude::*;

use super::{Cell, ExperimentError, ExperimentKind, ExperimentSpec, Table};
use crate::bounds::{
    best_parametric_tl, best_tl_convex, best_tl_convex_at_alpha, prop1_check, tau_empirical,
    tau_parametric, tau_tl_pooled, BoundQuery, ParamSearch, TrainingTimeBound,
};
use crate::model::FamilyGeometry;

fn sweep_label(name: &str) -> &'static str {
    match name {
        "n" => "n",
        "m" => "m",
        "dim" => "dim",
        "lambda_u" => "lambda_u_per_m2",
        "fraction" => "fraction",
        "theta_dist" => "theta_dist",
        _ => "value",
    }
}

const POOLED_COLUMNS: &[&str] = &[
    "epsilon_s",
    "dist_inf",
    "tau_agnostic_s",
    "feasible_agnostic",
    "threshold_agnostic_per_m2",
    "tau_tl_pooled_s",
    "feasible_tl_pooled",
    "threshold_tl_pooled_per_m2",
    "eps_bar",
    "eps_pq",
    "m_min",
];

const CONVEX_COLUMNS: &[&str] = &[
    "epsilon_s",
    "dist_inf",
    "tau_agnostic_s",
    "feasible_agnostic",
    "threshold_agnostic_per_m2",
    "tau_tl_convex_s",
    "feasible_tl_convex",
    "threshold_tl_convex_per_m2",
    "alpha_opt",
    "eta_opt",
];

const FIXED_ALPHA_COLUMNS: &[&str] = &[
    "tau_tl_convex_fixed_alpha_s",
    "feasible_tl_convex_fixed_alpha",
    "eta_fixed_alpha",
];

const PARAMETRIC_COLUMNS: &[&str] = &[
    "m",
    "theta_dist",
    "tau_parametric_s",
    "feasible_parametric",
    "threshold_parametric_per_m2",
    "sigma2",
    "tau_parametric_tl_s",
    "feasible_parametric_tl",
    "threshold_parametric_tl_per_m2",
    "lambda_opt",
    "d_t_opt",
    "sigma_t2",
];

/// Applies one sweep value to a copy of `spec`.
fn at_point(spec: &ExperimentSpec, value: f64) -> ExperimentSpec {
    let mut s = spec.clone();
    let name = spec.sweep.as_ref().map(|w| w.name.as_str()).unwrap_or("");
    match name {
        "n" => s.config.catalog_size = value as u32,
        "m" => s.m = value as u64,
        "dim" => s.dim = value as u32,
        "lambda_u" => s.config.lambda_u = value,
        "fraction" => {
            s.fraction = value;
            s.epsilon_seconds = None;
        }
        "theta_dist" => s.theta_dist = value,
        _ => {}
    }
    s
}

fn query(s: &ExperimentSpec) -> Result<BoundQuery, ExperimentError> {
    let eps = s.epsilon(&s.config)?;
    let c = &s.config;
    let dist_inf = (s.dist_scale * eps * c.bs_rate / (2.0 * c.file_bits * c.n() as f64)).min(1.0);
    Ok(BoundQuery::new(s.config, eps, s.delta)
        .with_source(s.m, dist_inf)
        .with_sup_mode(s.sup_mode))
}

fn infeasible() -> TrainingTimeBound {
    TrainingTimeBound {
        tau: f64::INFINITY,
        density_threshold: f64::INFINITY,
        feasible: false,
        intermediates: Default::default(),
    }
}

fn bound_cells(b: &TrainingTimeBound) -> [Cell; 3] {
    [b.tau.into(), b.feasible.into(), b.density_threshold.into()]
}

fn pooled_row(s: &ExperimentSpec) -> Result<Vec<Cell>, ExperimentError> {
    let q = query(s)?;
    let agnostic = tau_empirical(&q)?;
    let pooled = tau_tl_pooled(&q).unwrap_or_else(|_| infeasible());
    let m_min = prop1_check(&q).map(|r| r.m_min as f64).unwrap_or(f64::NAN);
    let mut row: Vec<Cell> = vec![q.epsilon.into(), q.dist_inf.into()];
    row.extend(bound_cells(&agnostic));
    row.extend(bound_cells(&pooled));
    row.push(q.eps_bar().into());
    row.push((q.eps_bar() - q.dist_inf).into());
    row.push(m_min.into());
    Ok(row)
}

fn convex_row(s: &ExperimentSpec, fixed_alpha: bool) -> Result<Vec<Cell>, ExperimentError> {
    let q = query(s)?;
    let search = ParamSearch::default();
    let agnostic = tau_empirical(&q)?;
    let best = best_tl_convex(&q, &search).ok().flatten();
    let mut row: Vec<Cell> = vec![q.epsilon.into(), q.dist_inf.into()];
    row.extend(bound_cells(&agnostic));
    match &best {
        Some(b) => {
            row.extend(bound_cells(&b.bound));
            row.push(b.alpha.into());
            row.push(b.eta.into());
        }
        None => {
            row.extend(bound_cells(&infeasible()));
            row.push(f64::NAN.into());
            row.push(f64::NAN.into());
        }
    }
    if fixed_alpha {
        match best_tl_convex_at_alpha(&q, s.alpha, &search).ok().flatten() {
            Some(b) => {
                row.push(b.bound.tau.into());
                row.push(b.bound.feasible.into());
                row.push(b.eta.into());
            }
            None => {
                row.push(f64::INFINITY.into());
                row.push(false.into());
                row.push(f64::NAN.into());
            }
        }
    }
    Ok(row)
}

fn parametric_row(s: &ExperimentSpec) -> Result<Vec<Cell>, ExperimentError> {
    let q = query(s)?;
    let geom = FamilyGeometry::new(s.dim as usize, 0.0, s.family_width, s.family_c)?;
    let agnostic = tau_parametric(&q, &geom)?;
    let best = best_parametric_tl(&q, &geom, s.theta_dist, &ParamSearch::default())?;
    let mut row: Vec<Cell> = vec![s.m.into(), s.theta_dist.into()];
    row.extend(bound_cells(&agnostic));
    row.push(agnostic.get("sigma2").unwrap_or(f64::NAN).into());
    match &best {
        Some(b) => {
            row.extend(bound_cells(&b.bound));
            row.push(b.lambda.into());
            row.push(b.d_t.into());
            row.push(b.bound.get("sigma_t2").unwrap_or(f64::NAN).into());
        }
        None => {
            row.extend(bound_cells(&infeasible()));
            row.extend([f64::NAN.into(), f64::NAN.into(), f64::NAN.into()]);
        }
    }
    Ok(row)
}

/// Evaluates the bounds of a figure at every sweep point, in parallel; rows
/// come back in sweep order. Infeasible points are kept with `tau = inf`.
pub fn run_figure(spec: &ExperimentSpec) -> Result<Table, ExperimentError> {
    let spec = spec.clone().validate()?;
    let sweep = spec
        .sweep
        .as_ref()
        .ok_or_else(|| ExperimentError::InvalidSpec(format!("{:?} needs a sweep", spec.kind)))?;
    let swept = sweep_label(&sweep.name);
    let mut header = vec![swept];
    let columns: Vec<&'static str> = match spec.kind {
        ExperimentKind::Fig1 | ExperimentKind::Fig3 => POOLED_COLUMNS.to_vec(),
        ExperimentKind::Fig2 => [CONVEX_COLUMNS, FIXED_ALPHA_COLUMNS].concat(),
        ExperimentKind::Fig4 => CONVEX_COLUMNS.to_vec(),
        ExperimentKind::Fig5 => PARAMETRIC_COLUMNS.to_vec(),
        other => {
            return Err(ExperimentError::InvalidSpec(format!("{other:?} is not a figure")));
        }
    };
    header.extend(columns.iter().filter(|c| **c != swept));
    let values = sweep.values();
    let rows: Vec<Vec<Cell>> = values
        .par_iter()
        .map(|&v| {
            let point = at_point(&spec, v);
            point.config.validate()?;
            let mut row = match spec.kind {
                ExperimentKind::Fig1 | ExperimentKind::Fig3 => pooled_row(&point)?,
                ExperimentKind::Fig2 => convex_row(&point, true)?,
                ExperimentKind::Fig4 => convex_row(&point, false)?,
                _ => parametric_row(&point)?,
            };
            // Parametric rows carry `m` and `theta_dist`; drop the one that is swept.
            if let Some(j) = columns.iter().position(|c| *c == swept) {
                row.remove(j);
            }
            row.insert(0, v.into());
            Ok(row)
        })
        .collect::<Result<_, ExperimentError>>()?;
    Ok(Table { header, rows })
}
