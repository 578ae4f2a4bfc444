//! Command-line front end: figure sweeps, Monte Carlo validation and the
//! end-to-end learning pipeline, all writing CSV.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cachelearn::bounds::SupMode;
use cachelearn::experiment::{
    run_end_to_end, run_figure, run_validation, EstimatorKind, ExperimentKind, ExperimentSpec, Table,
};

#[derive(Parser)]
#[command(name = "cachelearn", version, about = "Learning-based caching in small-cell networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Training-time bound sweep for one of fig1..fig5.
    Figure {
        /// fig1, fig2, fig3, fig4 or fig5.
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form offloading loss against Monte Carlo on random configurations.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate requests, estimate popularity, optimize caching, report the loss gap.
    EndToEnd {
        #[command(flatten)]
        common: Common,
    },
}

/// Flags mirror the spec keys; they override values read from `--config`.
#[derive(Args, Debug, Default)]
struct Common {
    /// TOML experiment spec.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV output path (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    fraction: Option<f64>,
    /// Absolute accuracy target in seconds, bypassing `fraction`.
    #[arg(long)]
    epsilon_seconds: Option<f64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_parser = parse_sup_mode)]
    sup_mode: Option<SupMode>,
    #[arg(long)]
    dist_scale: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long)]
    family_c: Option<f64>,
    #[arg(long)]
    family_width: Option<f64>,
    #[arg(long)]
    theta_dist: Option<f64>,
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<EstimatorKind>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    runs: Option<u64>,
    #[arg(long)]
    zipf_theta: Option<f64>,
    #[arg(long)]
    source_theta: Option<f64>,
    #[arg(long)]
    validation_configs: Option<u32>,
    #[arg(long)]
    lambda_u: Option<f64>,
    #[arg(long)]
    lambda_s: Option<f64>,
    #[arg(long)]
    lambda_b: Option<f64>,
    #[arg(long)]
    lambda_r: Option<f64>,
    #[arg(long)]
    file_bits: Option<f64>,
    #[arg(long)]
    bs_rate: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    coverage_radius: Option<f64>,
    #[arg(long)]
    cache_slots: Option<u32>,
    #[arg(long)]
    catalog_size: Option<u32>,
    /// Sweep parameter name (e.g. n, m, dim).
    #[arg(long)]
    sweep_name: Option<String>,
    #[arg(long)]
    sweep_start: Option<f64>,
    #[arg(long)]
    sweep_stop: Option<f64>,
    #[arg(long)]
    sweep_step: Option<f64>,
}

fn parse_sup_mode(s: &str) -> Result<SupMode, String> {
    match s {
        "n_upper" | "n-upper" => Ok(SupMode::NUpper),
        "exact_sup" | "exact-sup" => Ok(SupMode::ExactSup),
        _ => Err(format!("unknown sup mode `{s}` (n_upper or exact_sup)")),
    }
}

fn parse_estimator(s: &str) -> Result<EstimatorKind, String> {
    match s {
        "empirical" => Ok(EstimatorKind::Empirical),
        "tl_pooled" | "tl-pooled" => Ok(EstimatorKind::TlPooled),
        "tl_convex" | "tl-convex" => Ok(EstimatorKind::TlConvex),
        _ => Err(format!("unknown estimator `{s}` (empirical, tl_pooled or tl_convex)")),
    }
}

impl Common {
    fn overrides(&self) -> Result<toml::Table> {
        let mut top = toml::Table::new();
        let mut config = toml::Table::new();
        let mut sweep = toml::Table::new();
        let put = |t: &mut toml::Table, k: &str, v: Option<toml::Value>| {
            if let Some(v) = v {
                t.insert(k.to_string(), v);
            }
        };
        let f = |x: Option<f64>| x.map(toml::Value::Float);
        let i = |x: Option<u64>| -> Result<Option<toml::Value>> {
            x.map(|v| i64::try_from(v).map(toml::Value::Integer))
                .transpose()
                .context("integer flag exceeds i64")
        };
        let u = |x: Option<u32>| x.map(|v| toml::Value::Integer(v.into()));
        put(&mut top, "seed", i(self.seed)?);
        put(&mut top, "delta", f(self.delta));
        put(&mut top, "fraction", f(self.fraction));
        put(&mut top, "epsilon_seconds", f(self.epsilon_seconds));
        put(&mut top, "m", i(self.m)?);
        put(&mut top, "trials", i(self.trials)?);
        put(&mut top, "sup_mode", self.sup_mode.map(|s| toml::Value::try_from(s).expect("enum")));
        put(&mut top, "dist_scale", f(self.dist_scale));
        put(&mut top, "alpha", f(self.alpha));
        put(&mut top, "dim", u(self.dim));
        put(&mut top, "family_c", f(self.family_c));
        put(&mut top, "family_width", f(self.family_width));
        put(&mut top, "theta_dist", f(self.theta_dist));
        put(&mut top, "estimator", self.estimator.map(|e| toml::Value::try_from(e).expect("enum")));
        put(&mut top, "tau", f(self.tau));
        put(&mut top, "runs", i(self.runs)?);
        put(&mut top, "zipf_theta", f(self.zipf_theta));
        put(&mut top, "source_theta", f(self.source_theta));
        put(&mut top, "validation_configs", u(self.validation_configs));
        put(&mut config, "lambda_u", f(self.lambda_u));
        put(&mut config, "lambda_s", f(self.lambda_s));
        put(&mut config, "lambda_b", f(self.lambda_b));
        put(&mut config, "lambda_r", f(self.lambda_r));
        put(&mut config, "file_bits", f(self.file_bits));
        put(&mut config, "bs_rate", f(self.bs_rate));
        put(&mut config, "gamma", f(self.gamma));
        put(&mut config, "coverage_radius", f(self.coverage_radius));
        put(&mut config, "cache_slots", u(self.cache_slots));
        put(&mut config, "catalog_size", u(self.catalog_size));
        put(&mut sweep, "name", self.sweep_name.clone().map(toml::Value::String));
        put(&mut sweep, "start", f(self.sweep_start));
        put(&mut sweep, "stop", f(self.sweep_stop));
        put(&mut sweep, "step", f(self.sweep_step));
        if !config.is_empty() {
            top.insert("config".into(), toml::Value::Table(config));
        }
        if !sweep.is_empty() {
            top.insert("sweep".into(), toml::Value::Table(sweep));
        }
        Ok(top)
    }

    fn spec(&self, kind: ExperimentKind) -> Result<ExperimentSpec> {
        let overrides = self.overrides()?;
        let spec = match &self.config {
            Some(path) => ExperimentSpec::load(kind, path, overrides)?,
            None => ExperimentSpec::build(kind, None, overrides)?,
        };
        Ok(spec)
    }

    fn write(&self, table: &Table) -> Result<()> {
        match &self.out {
            Some(path) => {
                let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
                let mut w = BufWriter::new(file);
                table.write_csv(&mut w)?;
                w.flush()?;
            }
            None => table.write_csv(io::stdout().lock())?,
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Figure { name, common } => {
            let Some(kind) = ExperimentKind::parse_figure(&name) else {
                bail!("unknown figure `{name}` (expected fig1..fig5)");
            };
            let table = run_figure(&common.spec(kind)?)?;
            common.write(&table)
        }
        Command::Validate { common } => {
            let report = run_validation(&common.spec(ExperimentKind::Validate)?)?;
            common.write(&report.table())?;
            let passed = report.cases.iter().filter(|c| c.passed).count();
            eprintln!("validation: {passed}/{} configurations within 4 standard errors", report.cases.len());
            report.check()?;
            Ok(())
        }
        Command::EndToEnd { common } => {
            let report = run_end_to_end(&common.spec(ExperimentKind::EndToEnd)?)?;
            common.write(&report.table())?;
            eprintln!(
                "end-to-end: tau = {} s, optimal loss = {} s, P(gap > {} s) = {} over {} runs (delta = {})",
                report.tau,
                report.optimal_loss,
                report.epsilon,
                report.violation_rate(),
                report.runs.len(),
                report.delta
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
