use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modereg::links::LinkKind;
use modereg::numerics::RngStream;
use modereg::regression::{fit, Family, FitOptions, ModelSpec};
use modereg::simharness::{generate, ScenarioId};
use serde_json::Value;
use tempfile::TempDir;

fn modereg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modereg"))
        .args(args)
        .env_remove("MODEREG_SEED")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = modereg(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &TempDir, name: &str, scenario: &str, n: usize, seed: u64) -> PathBuf {
    let path = dir.path().join(name);
    ok(&[
        "simulate",
        "--scenario",
        scenario,
        "--n",
        &n.to_string(),
        "--seed",
        &seed.to_string(),
        "-o",
        path_str(&path),
    ]);
    path
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn simulate_then_fit_matches_in_process_pipeline() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "b1.csv", "B1", 120, 42);
    let out = json(&ok(&["fit", "-i", path_str(&data), "--family", "beta_mode", "--link", "logit"]));
    assert_eq!(out["schema_version"], 1);
    assert_eq!(out["converged"], true);

    let sim = generate(ScenarioId::B1, 120, 80.0, RngStream::new(42, 0)).unwrap();
    let f = fit(&ModelSpec::new(Family::BetaMode, LinkKind::Logit), &sim.data, &FitOptions::default()).unwrap();
    let cli: Vec<f64> = out["parameters"].as_array().unwrap().iter().map(|p| p["estimate"].as_f64().unwrap()).collect();
    assert_eq!(cli, f.params.to_vec(), "estimates must be bit-identical");
    assert_eq!(out["loglik"].as_f64().unwrap(), f.loglik);
    let se: Vec<f64> = out["parameters"].as_array().unwrap().iter().map(|p| p["std_error"].as_f64().unwrap()).collect();
    assert_eq!(se, f.std_errors.unwrap());
    for b in &cli[..3] {
        assert!((b - 1.0).abs() < 0.3, "{cli:?}");
    }
    let names: Vec<&str> = out["parameters"].as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["(intercept)", "x1", "x2", "log_m"]);
}

#[test]
fn compare_links_reports_all_four() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "g1.csv", "G1", 150, 3);
    let out = json(&ok(&["fit", "-i", path_str(&data), "--family", "gbp_mode", "--compare-links"]));
    let rows = out["link_comparison"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let links: Vec<&str> = rows.iter().map(|r| r["link"].as_str().unwrap()).collect();
    assert_eq!(links, ["logit", "probit", "loglog", "cloglog"]);
    assert!(rows.iter().all(|r| r["loglik"].as_f64().unwrap().is_finite()));
}

#[test]
fn boundary_response_needs_squeeze() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("edge.csv");
    fs::write(&path, "y,x\n0.2,0.1\n0.5,0.4\n1.0,0.9\n0.3,0.2\n0.6,0.5\n0.45,0.3\n").unwrap();
    let out = modereg(&["fit", "-i", path_str(&path)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3") && err.contains("--squeeze"), "{err}");

    let out = json(&ok(&["fit", "-i", path_str(&path), "--squeeze"]));
    assert_eq!(out["squeezed"], true);
}

#[test]
fn unknown_names_list_valid_values() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "d.csv", "B1", 30, 1);
    let out = modereg(&["fit", "-i", path_str(&data), "--family", "gamma"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("beta_mode") && err.contains("gbp_mode") && err.contains("beta_mean"), "{err}");

    let out = modereg(&["simulate", "--scenario", "B9"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("G1..G4"));

    let out = modereg(&["fit", "-i", path_str(&data), "--link", "cauchit"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cloglog"));
}

#[test]
fn missing_column_and_bad_values_are_reported() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "y,x\n0.2,0.1\n0.5,abc\n0.4,0.3\n0.6,0.2\n").unwrap();
    let err = String::from_utf8_lossy(&modereg(&["fit", "-i", path_str(&path)]).stderr).to_string();
    assert!(err.contains("row 2") && err.contains("abc"), "{err}");
    let err = String::from_utf8_lossy(&modereg(&["fit", "-i", path_str(&path), "--response", "z"]).stderr).to_string();
    assert!(err.contains("'z'"), "{err}");
}

#[test]
fn scoretest_reports_p_value() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "g1.csv", "G1", 60, 5);
    let args = ["scoretest", "-i", path_str(&data), "--family", "gbp_mode", "-b", "20", "--seed", "9"];
    let out = json(&ok(&args));
    let p = out["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(out["B"], 20);
    assert!(out["Q_obs"].as_f64().unwrap() >= 0.0);
    assert_eq!(json(&ok(&args)), out);

    let out = modereg(&["scoretest", "-i", path_str(&data), "--family", "beta_mean", "-b", "5"]);
    assert!(!out.status.success());
}

#[test]
fn predict_gives_nested_intervals() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "b1.csv", "B1", 50, 6);
    let out = ok(&["predict", "-i", path_str(&data), "-q", "0.1,0.2,0.5", "-k", "0.5"]);
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0], ["row", "kind", "q_or_k", "lower", "upper", "truncated", "theta", "mu"]);
    assert_eq!(rows.len(), 1 + 50 * 8);
    for unit in rows[1..].chunks(8) {
        let mode: Vec<(f64, f64)> = unit
            .iter()
            .filter(|r| r[1] == "mode")
            .map(|r| (r[3].parse().unwrap(), r[4].parse().unwrap()))
            .collect();
        assert_eq!(mode.len(), 3);
        assert!(mode.windows(2).all(|w| w[1].0 <= w[0].0 && w[0].1 <= w[1].1), "{unit:?}");
        assert!(unit.iter().any(|r| r[1] == "fixed_mode"));
    }

    let new = dir.path().join("new.csv");
    fs::write(&new, "x1,x2\n0.0,1\n-1.0,0\n").unwrap();
    let out = ok(&["predict", "-i", path_str(&data), "-q", "0.3", "--new", path_str(&new)]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1 + 2 * 2);
}

#[test]
fn envelope_is_deterministic_given_seed() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "g1.csv", "G1", 40, 7);
    let summary = dir.path().join("summary.json");
    let args = [
        "envelope",
        "-i",
        path_str(&data),
        "--family",
        "gbp_mode",
        "--seed",
        "11",
        "--summary",
        path_str(&summary),
    ];
    let a = ok(&args);
    let b = ok(&args);
    assert_eq!(a.stdout, b.stdout);
    let rows = csv_rows(&String::from_utf8(a.stdout).unwrap());
    assert_eq!(rows[0], ["rank", "quantile", "residual", "lower", "upper"]);
    assert_eq!(rows.len(), 41);
    let s: Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(s["k_simulations"], 19);
    assert!(String::from_utf8_lossy(&a.stderr).contains("proportion_outside"));
}

#[test]
fn seed_environment_variable_sets_default() {
    let dir = TempDir::new().unwrap();
    let run = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_modereg"))
            .args(["simulate", "--scenario", "G2", "--n", "20"])
            .env("MODEREG_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
    let flag = ok(&["simulate", "--scenario", "G2", "--n", "20", "--seed", "5"]).stdout;
    assert_eq!(flag, run("5"));
    drop(dir);
}

#[test]
fn coverage_curve_csv() {
    let dir = TempDir::new().unwrap();
    let data = simulate(&dir, "g1.csv", "G1", 40, 8);
    let out = ok(&["coverage", "-i", path_str(&data), "--family", "gbp_mode", "-q", "0.2,0.9"]);
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows[0], ["q_or_k", "coverage_mode", "coverage_mean", "width_mode", "width_mean"]);
    assert_eq!(rows.len(), 3);
    let five = ok(&["coverage", "-i", path_str(&data), "--family", "gbp_mode", "-q", "0.5", "--folds", "5"]);
    assert_eq!(String::from_utf8(five.stdout).unwrap().lines().count(), 2);
    let fixed = ok(&["coverage", "-i", path_str(&data), "--family", "gbp_mode", "-k", "0.1,1"]);
    assert_eq!(String::from_utf8(fixed.stdout).unwrap().lines().count(), 3);
}

#[test]
fn dummy_and_rescale_options() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("scores.csv");
    let mut text = String::from("score,age,grain\n");
    for i in 0..30 {
        let grain = ["c", "f", "m"][i % 3];
        text.push_str(&format!("{},{},{grain}\n", 10 + (i * 7) % 50, 60 + i));
    }
    fs::write(&path, text).unwrap();
    let base = ["fit", "-i", path_str(&path), "--response", "score", "--dummy", "grain"];
    let out = json(&ok(&[&base[..], &["--rescale-divisor", "70"]].concat()));
    let names: Vec<&str> = out["parameters"].as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["(intercept)", "age", "grain-f", "grain-m", "log_m"]);

    let out = modereg(&[&base[..], &["--rescale-divisor", "50"]].concat());
    assert!(String::from_utf8_lossy(&out.stderr).contains("must exceed"));
}

#[test]
fn study_from_config_file() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("study.toml");
    fs::write(&config, "study = \"mle\"\nscenario = \"G1\"\nn = 40\nreplicates = 3\nseed = 4\n").unwrap();
    let csv = dir.path().join("mle.csv");
    let out = json(&ok(&["simulate", "--config", path_str(&config), "--csv", path_str(&csv)]));
    assert_eq!(out["schema_version"], 1);
    assert_eq!(out["summary"]["study"], "mle");
    assert_eq!(out["summary"]["config"]["replicates"], 3);
    assert_eq!(out["summary"]["config"]["m"], 10.0);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 5);

    // flags take precedence over the file
    let out = json(&ok(&["simulate", "--config", path_str(&config), "--replicates", "2"]));
    assert_eq!(out["summary"]["config"]["replicates"], 2);

    fs::write(&config, "study = \"mle\"\nsamples = 3\n").unwrap();
    assert!(!modereg(&["simulate", "--config", path_str(&config)]).status.success());
}

#[test]
fn power_and_envelope_studies() {
    let out = json(&ok(&[
        "simulate", "--study", "power", "--scenario", "B1,B3", "--n", "30", "--replicates", "2", "-b", "5",
    ]));
    let cells = out["summary"]["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 2);
    assert_eq!(out["summary"]["family"], "beta_mode");

    let out = json(&ok(&["simulate", "--study", "envelope", "--scenario", "G3", "--n", "40"]));
    let p = out["summary"]["proportion_outside"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
}
