use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

use squeezed_arrays_cli::config::{parse_config, Unit};
use squeezed_arrays_cli::error::{CliError, EXIT_CONFIG};
use squeezed_arrays_cli::run::{run, Summary};

const BROADBAND_CHAIN: &str = r#""system": {"n_cavities": 10, "eta": 1, "kappa": 0, "zeta_a": 1, "alpha": 6.48, "zeta_b": 10}"#;
const LAB_CHAIN: &str = r#""unit": "GHz", "system": {"n_cavities": 5, "eta": 1, "kappa": 0.1, "zeta_a": 0.1, "alpha": 0.8, "zeta_b": 1.1, "kappa_0": 0.05}"#;

fn config(system: &str, task: &str) -> String {
    format!("{{{system}, \"task\": {task}}}")
}

fn run_text(text: &str, dir: &Path) -> Summary {
    let parsed = parse_config(text, true).unwrap();
    run(&parsed.config, dir, Some(2)).unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(str::to_string).collect()
}

fn simulate(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn broadband_check_reports_margin_and_pair_en() {
    let dir = TempDir::new().unwrap();
    let s = run_text(
        &config(BROADBAND_CHAIN, r#"{"type": "broadband-check"}"#),
        dir.path(),
    );
    assert!((s.broadband_margin.unwrap() - 3.52).abs() < 5e-3);
    let bb = s.broadband.unwrap();
    assert!((bb.pair_en - 3.088).abs() < 1e-3, "{}", bb.pair_en);
    let json: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(json["task"], "broadband-check");
    assert_eq!(json["unit"], "zeta_a");
    assert!(json["alpha_bar_minus"].as_f64().unwrap() > 0.0);
}

#[test]
fn spectrum_zero_frequency_row() {
    let dir = TempDir::new().unwrap();
    let task = r#"{"type": "spectrum", "omega": {"from": 0, "to": 2, "points": 21}}"#;
    run_text(&config(LAB_CHAIN, task), dir.path());
    let path = dir.path().join("spectrum.csv");
    assert_eq!(header(&path), ["omega", "S", "T", "E_N", "unit"]);
    let data = rows(&path);
    assert_eq!(data.len(), 21);
    let first = &data[0];
    assert_eq!(first[0].parse::<f64>().unwrap(), 0.0);
    let s: f64 = first[1].parse().unwrap();
    let t: f64 = first[2].parse().unwrap();
    assert!((s - 0.0743).abs() < 5e-5, "S(0) = {s}");
    assert!((t - 29.7).abs() < 0.05, "T(0) = {t}");
    assert_eq!(first[4], "GHz");
}

#[test]
fn spectrum_default_grid() {
    let dir = TempDir::new().unwrap();
    run_text(&config(LAB_CHAIN, r#"{"type": "spectrum"}"#), dir.path());
    assert!(rows(&dir.path().join("spectrum.csv")).len() > 2);
}

#[test]
fn vacuum_forcing_pair_map_is_zero() {
    let dir = TempDir::new().unwrap();
    let sys = r#""system": {"n_cavities": 3, "eta": 1, "kappa": 0.2, "zeta_a": 1, "alpha": 0, "zeta_b": 10}"#;
    run_text(&config(sys, r#"{"type": "pair-map"}"#), dir.path());
    let path = dir.path().join("pair_map.csv");
    assert_eq!(header(&path), ["j_I", "j_II", "value"]);
    let data = rows(&path);
    assert_eq!(data.len(), 9);
    assert_eq!(data[0][..2], ["1", "1"]);
    assert_eq!(data[8][..2], ["3", "3"]);
    for r in &data {
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0, "{r:?}");
    }
}

#[test]
fn identical_configs_give_identical_files() {
    let task = r#"{"type": "sweep", "axis": "zeta_b", "values": [1, 3, 10], "ties": [{"param": "alpha", "ratio": 0.648, "of": "zeta_b"}]}"#;
    let text = config(BROADBAND_CHAIN, task);
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let parsed = parse_config(&text, true).unwrap();
    run(&parsed.config, a.path(), Some(1)).unwrap();
    run(&parsed.config, b.path(), Some(3)).unwrap();
    for name in ["sweep.csv", "sweep_reference.csv", "summary.json"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    let path = a.path().join("sweep.csv");
    assert_eq!(header(&path), ["axis_value", "pair_index", "value", "unit"]);
    assert_eq!(rows(&path).len(), 30);
    assert_eq!(rows(&a.path().join("sweep_reference.csv")).len(), 3);
}

#[test]
fn summary_round_trips_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let s = run_text(
        &config(BROADBAND_CHAIN, r#"{"type": "steady"}"#),
        dir.path(),
    );
    let text = fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let back: Summary = serde_json::from_str(&text).unwrap();
    assert_eq!(back, s);
    assert_eq!(back.alpha_bar_minus.to_bits(), s.alpha_bar_minus.to_bits());
    assert_eq!(back.reservoir_en_0.to_bits(), s.reservoir_en_0.to_bits());
    for key in ["reduced", "cascade", "dual_route_difference"] {
        assert!(s.residuals[key] < 1e-8, "{key}: {}", s.residuals[key]);
    }
    let phys = s.physicality.unwrap();
    assert!(phys.min_uncertainty_eigenvalue > -1e-8);
    assert_eq!(rows(&dir.path().join("steady_corr.csv")).len(), 40 * 40);
}

#[test]
fn lab_config_is_accepted_in_ghz() {
    let parsed = parse_config(&config(LAB_CHAIN, r#"{"type": "normal-map"}"#), true).unwrap();
    assert_eq!(parsed.config.unit, Unit::Ghz);
    assert_eq!(parsed.config.system.n_cavities, 5);
    let dir = TempDir::new().unwrap();
    run(&parsed.config, dir.path(), None).unwrap();
    let modes = dir.path().join("normal_modes.csv");
    assert_eq!(
        header(&modes),
        ["k", "frequency", "drift_frequency", "unit"]
    );
    let data = rows(&modes);
    assert_eq!(data.len(), 5);
    assert!(data.iter().all(|r| r[3] == "GHz"));
    assert_eq!(rows(&dir.path().join("normal_map.csv")).len(), 25);
}

#[test]
fn minimal_config_broadcasts() {
    let parsed = parse_config(r#"{"task": {"type": "steady"}}"#, true).unwrap();
    let p = &parsed.config.system;
    assert_eq!(p.n_cavities, 1);
    assert_eq!(p.eta.len(), 0);
    assert_eq!(p.kappa.len(), 1);
    let parsed = parse_config(
        r#"{"system": {"n_cavities": 4, "kappa": 0.3}, "task": {"type": "steady"}}"#,
        true,
    )
    .unwrap();
    assert_eq!(parsed.config.system.eta, vec![1.0; 3]);
    assert_eq!(parsed.config.system.kappa, vec![0.3; 4]);
}

#[test]
fn per_site_length_mismatch_names_key() {
    let err = parse_config(
        r#"{"system": {"n_cavities": 3, "eta": [1, 1, 1]}, "task": {"type": "steady"}}"#,
        false,
    )
    .unwrap_err();
    assert!(
        matches!(&err, CliError::Invalid { key, .. } if key == "system.eta"),
        "{err}"
    );
    assert_eq!(err.exit_code(), EXIT_CONFIG);
}

#[test]
fn threshold_rejection_reports_rate() {
    let err = parse_config(
        r#"{"system": {"alpha": 10.5, "zeta_b": 10, "kappa_0": 0.5}, "task": {"type": "steady"}}"#,
        false,
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
    let report = err.report();
    assert_eq!(report.alpha_bar_minus, Some(0.0));
}

#[test]
fn strict_mode_rejects_unknown_and_unused_keys() {
    let text = r#"{"system": {"n_cavities": 2, "colour": 3}, "task": {"type": "steady"}}"#;
    let err = parse_config(text, true).unwrap_err();
    assert!(
        matches!(&err, CliError::UnknownKey { key, .. } if key == "system.colour"),
        "{err}"
    );
    let lenient = parse_config(text, false).unwrap();
    assert_eq!(lenient.ignored, ["system.colour"]);

    let unused = r#"{"task": {"type": "steady", "omega": {"from": 0, "to": 1, "points": 3}}}"#;
    let err = parse_config(unused, true).unwrap_err();
    assert!(
        matches!(&err, CliError::UnknownKey { key, .. } if key == "task.omega"),
        "{err}"
    );
}

#[test]
fn parse_errors_carry_position() {
    let err = parse_config("{\n  \"task\": {\"type\": \"steady\"},\n  oops\n}", false).unwrap_err();
    match err {
        CliError::Parse { line, column, .. } => {
            assert_eq!(line, 3);
            assert!(column > 0);
        }
        other => panic!("expected parse error, got {other}"),
    }
    assert!(matches!(
        parse_config(r#"{"task": {"type": "warp"}}"#, false),
        Err(CliError::Parse { .. })
    ));
}

#[test]
fn sweep_requires_axis_and_values() {
    let err = parse_config(r#"{"task": {"type": "sweep", "values": [1]}}"#, true).unwrap_err();
    assert!(matches!(&err, CliError::Invalid { key, .. } if key == "task.axis"));
    let err = parse_config(
        r#"{"task": {"type": "sweep", "axis": "eta", "values": []}}"#,
        true,
    )
    .unwrap_err();
    assert!(matches!(&err, CliError::Invalid { key, .. } if key == "task.values"));
}

#[test]
fn sweep_failures_are_recorded_not_fatal() {
    let dir = TempDir::new().unwrap();
    let task = r#"{"type": "sweep", "axis": "alpha", "values": [1, 20, 3]}"#;
    let s = run_text(&config(BROADBAND_CHAIN, task), dir.path());
    assert_eq!(s.sweep_failures.len(), 1);
    assert_eq!(s.sweep_failures[0].index, 1);
    let data = rows(&dir.path().join("sweep.csv"));
    assert_eq!(data.len(), 20);
    assert!(data.iter().all(|r| r[0] != "20"));
}

#[test]
fn transient_relaxes_towards_steady_state() {
    let dir = TempDir::new().unwrap();
    let sys = r#""system": {"n_cavities": 2, "eta": 1, "kappa": 0.5, "zeta_a": 1, "alpha": 0.6, "zeta_b": 1}"#;
    let task = r#"{"type": "transient", "t_end": 40, "samples": 4}"#;
    run_text(&config(sys, task), dir.path());
    let data = rows(&dir.path().join("transient.csv"));
    assert_eq!(data.len(), 5);
    let dev: Vec<f64> = data.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(dev[0] > 0.1);
    assert!(dev[4] < 1e-2 * dev[0], "{dev:?}");
    assert_eq!(rows(&dir.path().join("transient_pairs.csv")).len(), 10);
}

#[test]
fn transient_rejects_conflicting_grids() {
    let err = parse_config(
        r#"{"task": {"type": "transient", "times": [0, 1], "t_end": 3}}"#,
        false,
    )
    .unwrap_err();
    assert!(matches!(&err, CliError::Invalid { key, .. } if key == "task.times"));
    let err =
        parse_config(r#"{"task": {"type": "transient", "times": [1, 2]}}"#, false).unwrap_err();
    assert!(matches!(&err, CliError::Invalid { key, .. } if key == "task.times"));
}

#[test]
fn binary_exit_codes_and_error_json() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{"system": {"alpha": 11, "zeta_b": 10}, "task": {"type": "steady"}}"#,
    )
    .unwrap();
    let out = simulate(&[cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["kind"], "configuration");
    assert!(
        report["message"]
            .as_str()
            .unwrap()
            .contains("alpha_bar_minus"),
        "{report}"
    );
    assert!(report["alpha_bar_minus"].is_number());

    let unknown = dir.path().join("unknown.json");
    fs::write(&unknown, r#"{"task": {"type": "steady", "bogus": 1}}"#).unwrap();
    let out = simulate(&[unknown.to_str().unwrap(), "--strict"]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(report["key"], "task.bogus");

    let out = simulate(&["--workers", "0", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(simulate(&["--help"]).status.code(), Some(0));
}

#[test]
fn binary_writes_to_out_dir() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, config(BROADBAND_CHAIN, r#"{"type": "pair-map"}"#)).unwrap();
    let out_dir = dir.path().join("results");
    let out = simulate(&[
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: Summary =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.files, ["pair_map.csv"]);
    assert_eq!(rows(&out_dir.join("pair_map.csv")).len(), 100);
}
