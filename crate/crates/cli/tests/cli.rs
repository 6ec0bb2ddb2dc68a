use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn qsdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsdlab")).args(args).output().expect("binary runs")
}

fn run(model: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["--model", model.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    qsdlab(&args)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn empty_model_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("empty.toml");
    fs::write(&model, "").unwrap();
    let o = run(&model, &dir.path().join("out"), &["--cmd", "check"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_kind_and_missing_file_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("bad.toml");
    fs::write(&model, "kind = \"tree\"\n").unwrap();
    assert_eq!(run(&model, &dir.path().join("o"), &["--cmd", "qsd"]).status.code(), Some(2));
    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&missing, &dir.path().join("o"), &["--cmd", "qsd"]).status.code(), Some(2));
    assert_eq!(qsdlab(&["--cmd", "qsd"]).status.code(), Some(2));
}

#[test]
fn bad_tolerance_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&models().join("two_state.toml"), dir.path(), &["--cmd", "qsd", "--N", "2", "--tol-qsd", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn qsd_on_two_state_model_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&models().join("two_state.toml"), dir.path(), &["--cmd", "qsd", "--N", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lambda0 = (3.0 - 5f64.sqrt()) / 2.0;
    let summary = json(&dir.path().join("qsd.json"));
    assert!((summary["lambda0"].as_f64().unwrap() - lambda0).abs() < 1e-10);

    let mut rdr = csv::Reader::from_path(dir.path().join("qsd.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["state", "qsd", "eta_fn"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    let q: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((q[0] - lambda0).abs() < 1e-10);
    assert!((q[1] - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-10);

    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("N,states,lambda0,lambda0_step,tv_step"));
}

#[test]
fn converge_at_time_zero_is_the_initial_distance() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&models().join("two_state.toml"), dir.path(), &["--cmd", "converge", "--N", "2", "--times", "0", "--initials", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("curves.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    // From state 1 the distance is |1 - q_1| + q_2 = 2 q_2 = √5 - 1.
    let tv: f64 = rows[0][2].parse().unwrap();
    assert!((tv - (5f64.sqrt() - 1.0)).abs() < 1e-10);
    for name in ["fits.csv", "uniformity.json", "plateau.json", "curve_1.svg", "manifest.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn converge_fits_logistic_rates() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&models().join("logistic.toml"), dir.path(), &["--cmd", "converge", "--N", "60", "--times", "0:12:0.25", "--initials", "1,10,60"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let u = json(&dir.path().join("uniformity.json"));
    for f in u["fits"].as_array().unwrap() {
        assert!(f["fit"]["gamma"].as_f64().unwrap() > 0.0);
        assert!(f["fit"]["r_squared"].as_f64().unwrap() > 0.99, "{f}");
    }
    assert!(u["gamma_spread"].as_f64().unwrap() < 0.1);
    let p = json(&dir.path().join("plateau.json"));
    assert_eq!(p["report"]["flat"], serde_json::Value::Bool(true));
}

#[test]
fn simulate_is_deterministic_given_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--cmd", "simulate", "--N", "2", "--seed", "11", "--times", "0.5,2", "--trajectories", "2000", "--particles", "200"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&models().join("two_state.toml"), out, &args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ma, mb) = (json(&a.join("manifest.json")), json(&b.join("manifest.json")));
    assert_eq!(ma["outputs"], mb["outputs"]);
    for name in ["trajectory.csv", "ensemble.csv", "comparison.csv", "qprocess_trajectory.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let other = dir.path().join("c");
    let mut changed = args.to_vec();
    changed[5] = "12";
    run(&models().join("two_state.toml"), &other, &changed);
    assert_ne!(fs::read(a.join("trajectory.csv")).unwrap(), fs::read(other.join("trajectory.csv")).unwrap());
}

#[test]
fn simulate_requires_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&models().join("two_state.toml"), dir.path(), &["--cmd", "simulate", "--N", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn manifest_hashes_match_outputs() {
    let dir = tempfile::tempdir().unwrap();
    run(&models().join("two_state.toml"), dir.path(), &["--cmd", "qsd", "--N", "2"]);
    let m = json(&dir.path().join("manifest.json"));
    let outputs = m["outputs"].as_object().unwrap();
    assert_eq!(outputs.len(), 3);
    for (name, hash) in outputs {
        assert_eq!(hex(&fs::read(dir.path().join(name)).unwrap()), hash.as_str().unwrap());
    }
    assert_eq!(m["config"]["command"], "qsd");
    assert!(m["versions"]["qsdlab"].is_string());
    let model_bytes = fs::read(models().join("two_state.toml")).unwrap();
    assert_eq!(m["model_sha256"].as_str().unwrap(), hex(&model_bytes));
}

#[test]
fn check_logistic_holds() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&models().join("logistic.toml"), dir.path(), &["--cmd", "check", "--range", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    for name in ["series-s", "w-condition", "oscillation-1d", "drift-pointwise-envelope", "drift-measure"] {
        let r = json(&dir.path().join(format!("reports/{name}.json")));
        assert_eq!(r["verdict"], "holds-on-range", "{name}");
    }
}

#[test]
fn check_density_dependent_competition_fails_h1() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&models().join("density_dependent.toml"), dir.path(), &["--cmd", "check", "--range", "60"]);
    assert_eq!(o.status.code(), Some(1));
    let r = json(&dir.path().join("reports/h1.json"));
    assert_eq!(r["verdict"], "fails");
}

#[test]
fn check_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run(&models().join("lotka_volterra.toml"), out, &["--cmd", "check", "--range", "40"]);
    }
    assert_eq!(json(&a.join("manifest.json"))["outputs"], json(&b.join("manifest.json"))["outputs"]);
}
