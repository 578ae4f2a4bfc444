use std::path::Path;
use std::process::{Command, Output};

fn cachelearn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cachelearn"))
        .args(args)
        .output()
        .expect("spawn cachelearn")
}

fn stdout_of(args: &[&str]) -> String {
    let out = cachelearn(args);
    assert!(
        out.status.success(),
        "cachelearn {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

const SMALL_FIG1: &[&str] = &["figure", "fig1", "--sweep-start", "2", "--sweep-stop", "12", "--sweep-step", "5"];

#[test]
fn figure_sweep_has_header_with_units_and_ordered_rows() {
    let csv = stdout_of(SMALL_FIG1);
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("n,epsilon_s,"));
    assert!(header.contains("tau_agnostic_s") && header.contains("tau_tl_pooled_s"));
    assert!(header.contains("threshold_agnostic_per_m2"));
    assert_eq!(column(&csv, "n"), ["2", "7", "12"]);
}

#[test]
fn output_is_deterministic_and_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig1.csv");
    let mut args = SMALL_FIG1.to_vec();
    let stdout = stdout_of(&args);
    let p = path.to_str().unwrap();
    args.extend(["--out", p]);
    let out = cachelearn(&args);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout);
    assert_eq!(stdout_of(SMALL_FIG1), stdout);
}

#[test]
fn infeasible_points_use_inf_sentinel() {
    let mut args = SMALL_FIG1.to_vec();
    args.extend(["--lambda-u", "1e-9"]);
    let csv = stdout_of(&args);
    assert!(column(&csv, "tau_agnostic_s").iter().all(|v| v == "inf"));
    assert!(column(&csv, "feasible_agnostic").iter().all(|v| v == "false"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.toml");
    std::fs::write(
        &cfg,
        "fraction = 0.3\n\n[config]\ncatalog_size = 10\n\n[sweep]\nname = \"n\"\nstart = 4\nstop = 6\nstep = 1\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = stdout_of(&["figure", "fig1", "--config", c]);
    assert_eq!(column(&from_file, "n"), ["4", "5", "6"]);
    let overridden = stdout_of(&["figure", "fig1", "--config", c, "--fraction", "0.6"]);
    let eps_file: f64 = column(&from_file, "epsilon_s")[0].parse().unwrap();
    let eps_flag: f64 = column(&overridden, "epsilon_s")[0].parse().unwrap();
    assert!((eps_flag / eps_file - 2.0).abs() < 1e-12);

    let raw = stdout_of(&["figure", "fig1", "--config", c, "--epsilon-seconds", "1.5"]);
    assert!(column(&raw, "epsilon_s").iter().all(|v| v == "1.5"));
}

#[test]
fn rejects_unknown_figure_and_bad_config() {
    let out = cachelearn(&["figure", "fig9"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig9"));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "no_such_field = 1\n").unwrap();
    let out = cachelearn(&["figure", "fig1", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());

    let out = cachelearn(&["figure", "fig1", "--delta", "1.5"]);
    assert!(!out.status.success());

    let missing = Path::new("/nonexistent/spec.toml");
    let out = cachelearn(&["validate", "--config", missing.to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn every_figure_runs_on_a_short_sweep() {
    for (fig, name, start, stop, step) in [
        ("fig2", "n", "2", "6", "2"),
        ("fig3", "m", "0", "2000", "1000"),
        ("fig4", "m", "1000", "3000", "1000"),
        ("fig5", "dim", "1", "3", "1"),
    ] {
        let csv = stdout_of(&[
            "figure", fig, "--sweep-start", start, "--sweep-stop", stop, "--sweep-step", step,
        ]);
        let header = csv.lines().next().unwrap();
        assert!(header.starts_with(name), "{fig}: {header}");
        assert!(header.contains("_s,"), "{fig}: {header}");
        assert_eq!(csv.lines().count(), 4, "{fig}");
    }
}

#[test]
fn validate_and_end_to_end_are_seeded() {
    let v = ["validate", "--validation-configs", "2", "--trials", "2000", "--seed", "11"];
    let a = stdout_of(&v);
    assert_eq!(a, stdout_of(&v));
    assert_eq!(column(&a, "pass").len(), 4);
    let other = stdout_of(&["validate", "--validation-configs", "2", "--trials", "2000", "--seed", "12"]);
    assert_ne!(a, other);

    let e = ["end-to-end", "--runs", "3", "--seed", "5"];
    let first = stdout_of(&e);
    assert_eq!(first, stdout_of(&e));
    assert_eq!(column(&first, "run"), ["0", "1", "2"]);
    assert!(first.lines().next().unwrap().contains("gap_s"));
}
