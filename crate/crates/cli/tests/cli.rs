use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn pseudomode(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pseudomode"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("PSEUDOMODE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) {
    let o = pseudomode(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<f64>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k]).collect()
}

#[test]
fn decompose_defaults_match_the_quadratic_roots() {
    let dir = TempDir::new().unwrap();
    ok(&["decompose"], dir.path());
    let (header, rows) = read_csv(&dir.path().join("peaks.csv"));
    assert_eq!(rows.len(), 1);
    let get = |name: &str| column(&header, &rows, name)[0];

    let (w0, big, i, gamma) = (1.0f64, 0.8f64, 1.5f64, 0.1f64);
    let b = w0 * w0 + big * big + 4.0 * i * w0;
    let root = (b * b - 4.0 * w0 * w0 * big * big).sqrt();
    let plus = (0.5 * (b + root)).sqrt();
    let minus = (0.5 * (b - root)).sqrt();
    assert!((get("omega_plus") - plus).abs() < 1e-10);
    assert!((get("omega_minus") - minus).abs() < 1e-10);
    assert!((get("gamma_plus") + get("gamma_minus") - gamma).abs() < 1e-10);
    for (g, e, w) in [("gamma_plus", "eta2_plus", plus), ("gamma_minus", "eta2_minus", minus)] {
        assert!((get(e) - get(g) * w0 / (gamma * w)).abs() < 1e-10);
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("peaks.json")).unwrap()).unwrap();
    assert_eq!(meta["scenario"], "decompose");
    assert_eq!(meta["config"]["physics"]["intensity"], 1.5);
}

#[test]
fn dark_state_concurrence_stays_one() {
    let dir = TempDir::new().unwrap();
    let theta = (1.5 * std::f64::consts::PI).to_string();
    ok(&["evolve", "--theta", &theta, "--t-max", "5", "--disturbance", "off"], dir.path());
    let (header, rows) = read_csv(&dir.path().join("evolution.csv"));
    assert_eq!(header[0], "time");
    for c in column(&header, &rows, "concurrence") {
        assert!((c - 1.0).abs() < 1e-6, "{c}");
    }
}

#[test]
fn output_is_deterministic_and_metadata_reruns() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["sweep", "--disturbance", "off", "--t-max", "3", "--values", "0.75,1.25,1.5"];
    ok(&args, a.path());
    let o = Command::new(env!("CARGO_BIN_EXE_pseudomode"))
        .args(args)
        .arg("--out")
        .arg(b.path())
        .env("PSEUDOMODE_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let first = std::fs::read(a.path().join("sweep.csv")).unwrap();
    assert_eq!(first, std::fs::read(b.path().join("sweep.csv")).unwrap());

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("sweep.json")).unwrap()).unwrap();
    let config = a.path().join("config.json");
    std::fs::write(&config, meta["config"].to_string()).unwrap();
    let c = TempDir::new().unwrap();
    ok(&["sweep", "--config", config.to_str().unwrap()], c.path());
    assert_eq!(first, std::fs::read(c.path().join("sweep.csv")).unwrap());
}

#[test]
fn exit_codes_follow_the_failure_category() {
    let dir = TempDir::new().unwrap();
    let code = |args: &[&str]| pseudomode(args, dir.path()).status.code().unwrap();
    assert_eq!(code(&["evolve", "--alpha1", "1", "--alpha2", "1"]), 2);
    assert_eq!(code(&["evolve", "--dt", "-1"]), 2);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"numerics": {"n_max": "eight"}}"#).unwrap();
    let o = pseudomode(&["evolve", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerics.n_max"));
    // Peaks merge at weak disturbance.
    assert_eq!(code(&["decompose", "--intensity", "0.01"]), 3);
    assert_eq!(
        code(&["evolve", "--disturbance", "off", "--n-max", "1", "--t-max", "3", "--convergence-check"]),
        4
    );
    let o = Command::new(env!("CARGO_BIN_EXE_pseudomode"))
        .args(["sweep", "--out"])
        .arg(dir.path())
        .env("PSEUDOMODE_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectrum_csv_layout() {
    let dir = TempDir::new().unwrap();
    ok(&["spectrum", "--points", "11"], dir.path());
    let text = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "omega,j_b_standard,j_b_simplified,j_r_standard,j_r_simplified");
    assert_eq!(lines.count(), 11);
    for field in text.lines().skip(1).flat_map(|l| l.split(',')) {
        let digits = field.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
        assert!(digits.trim_start_matches('0').len() <= 12, "{field}");
    }
}

#[test]
fn figure_bundles_have_expected_panels() {
    let dir = TempDir::new().unwrap();
    for (figure, panels) in [("spectrum-fig", 1), ("peakparams-fig", 1), ("probability-fig", 4), ("prob-offres-fig", 4)] {
        ok(&["reproduce", figure], dir.path());
        let bundle = dir.path().join(figure);
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(bundle.join("metadata.json")).unwrap()).unwrap();
        assert_eq!(meta["figure"], figure);
        assert_eq!(meta["files"].as_array().unwrap().len(), panels);
    }

    let (header, rows) = read_csv(&dir.path().join("spectrum-fig/panel_a.csv"));
    assert_eq!(header[0], "omega");
    assert_eq!(header.len(), 7);
    assert_eq!((rows[0][0], rows.last().unwrap()[0]), (0.0, 4.0));

    let (header, rows) = read_csv(&dir.path().join("peakparams-fig/panel_a.csv"));
    assert_eq!(header[0], "intensity");
    assert_eq!((rows[0][0], rows.last().unwrap()[0]), (0.3, 3.0));

    let (header, rows) = read_csv(&dir.path().join("probability-fig/panel_a.csv"));
    assert_eq!(header, ["time", "off", "on", "rwa"]);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 30.0);
    assert!((last[2] - 0.5).abs() < 0.1 && last[1] < 0.05 && last[3] < 0.05, "{last:?}");

    // Subradiant state with equal couplings is dark in every case.
    let (_, rows) = read_csv(&dir.path().join("probability-fig/panel_b.csv"));
    assert!(rows.iter().all(|r| r[1..].iter().all(|p| (p - 1.0).abs() < 1e-9)));
}

#[test]
fn oracle_check_passes() {
    let dir = TempDir::new().unwrap();
    ok(&["oracle-check"], dir.path());
    let text = std::fs::read_to_string(dir.path().join("oracle_check.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.ends_with(",1")), "{text}");
}
