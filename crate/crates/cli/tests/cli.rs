use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zsint"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).arg("--out").arg(dir).output().unwrap()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    p
}

fn report(dir: &Path, stem: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join(format!("{stem}.json"))).unwrap()).unwrap()
}

fn summary(r: &Value, key: &str) -> f64 {
    r["summary"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p[0] == key)
        .and_then(|p| p[1].as_f64())
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn integrate_line_against_line() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(
        d.path(),
        &["integrate", "--f", "identity", "--X", "line", "--Y", "line", "--theta", "0.5", "--n", "2048"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("value") && stdout.contains("PASS"));
    let v = summary(&report(d.path(), "integrate_seed0"), "value");
    assert!((v - 0.5).abs() < 1e-3, "{v}");
}

#[test]
fn generate_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let args = ["generate", "--kind", "fbm", "--H", "0.75", "--n", "4096", "--seed", "7"];
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert_eq!(run_in(&a, &args).status.code(), Some(0));
    assert_eq!(run_in(&b, &args).status.code(), Some(0));
    let read = |p: &Path| std::fs::read(p.join("generate_seed7.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    let csv = String::from_utf8(read(&a)).unwrap();
    assert!(csv.starts_with("t,value\n"));
    assert_eq!(csv.lines().count(), 4098);

    let c = d.path().join("c");
    run_in(&c, &["generate", "--kind", "fbm", "--n", "4096", "--seed", "8"]);
    assert_ne!(read(&a), std::fs::read(c.join("generate_seed8.csv")).unwrap());
}

#[test]
fn generated_csv_feeds_seminorm() {
    let d = tempfile::tempdir().unwrap();
    run_in(d.path(), &["generate", "--kind", "square", "--n", "256"]);
    let input = d.path().join("generate_seed0.csv");
    let o = run_in(d.path(), &["seminorm", "--input", input.to_str().unwrap(), "--alpha", "0.5", "--theta", "0.3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(d.path(), "seminorm_seed0");
    // t^2 on [0, 1]: (t + s)|t - s|^{1/2} peaks at t = 1, s = 1/3
    let peak = 4.0 / 3.0 * (2.0f64 / 3.0).sqrt();
    assert!((summary(&r, "holder") - peak).abs() < 1e-4);
    assert!((summary(&r, "sup_norm") - 1.0).abs() < 1e-15);
}

#[test]
fn stochastic_commands_need_a_seed() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(d.path(), &["generate", "--kind", "fbm"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--seed"));
    let cfg = write_config(
        d.path(),
        "m.json",
        &json!({"f": {"jumps": [{"loc": 0.0, "size": 1.0}]}, "x": {"type": "fbm", "hurst": 0.75},
                "theta": 0.3, "n_list": [4], "replicates": 1, "level": 6}),
    );
    let o = run_in(d.path(), &["mollify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    // deterministic paths need none
    assert_eq!(run_in(d.path(), &["generate", "--kind", "sine"]).status.code(), Some(0));
}

#[test]
fn config_errors_name_the_key() {
    let d = tempfile::tempdir().unwrap();
    let fbm = json!({"type": "fbm", "hurst": 0.75});
    let missing = write_config(
        d.path(),
        "missing.json",
        &json!({"x": fbm, "y": fbm, "f": {"jumps": [{"loc": 0.5, "size": 1.0}]}, "levels": [3, 6]}),
    );
    let o = run_in(d.path(), &["rate", "--config", missing.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`replicates`"), "{}", stderr(&o));

    let unknown = write_config(
        d.path(),
        "unknown.json",
        &json!({"check": "weak_continuity", "f": {"jumps": []}, "p": 2.0, "q": 2.0, "sigmas": [0.1], "sigma": 1}),
    );
    let o = run_in(d.path(), &["bounds", "--config", unknown.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`sigma`"), "{}", stderr(&o));

    let bad_tag = write_config(d.path(), "tag.json", &json!({"check": "nonsense"}));
    let o = run_in(d.path(), &["bounds", "--config", bad_tag.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nonsense"));

    let o = run_in(d.path(), &["rate", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn out_of_range_parameters_are_config_errors() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "ito.json",
        &json!({"f": {"ac": "square"}, "x": {"type": "fbm", "hurst": 0.4}, "levels": [6], "replicates": 1}),
    );
    let o = run_in(d.path(), &["ito", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("1/2"), "{}", stderr(&o));
}

#[test]
fn failed_check_exits_two() {
    let d = tempfile::tempdir().unwrap();
    // a residual tolerance no discretization can meet
    let cfg = write_config(
        d.path(),
        "ito.json",
        &json!({"f": {"ac": "square"}, "x": {"type": "fbm", "hurst": 0.75}, "levels": [6, 7],
                "replicates": 3, "tol": 1e-14, "min_fraction": 1.0}),
    );
    let o = run_in(d.path(), &["ito", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL residual"));
    let r = report(d.path(), "ito_seed1");
    assert_eq!(r["checks"][0]["passed"], false);
}

#[test]
fn help_and_usage() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().arg("--version").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().output().unwrap().status.code(), Some(1));
    assert_eq!(zsint_cli::run(["zsint", "integrate", "--n", "zero"]), 1);
}

#[test]
fn artifacts_and_sidecar() {
    let d = tempfile::tempdir().unwrap();
    let fbm = json!({"type": "fbm", "hurst": 0.75});
    let cfg = write_config(
        d.path(),
        "rate.json",
        &json!({"x": fbm, "y": fbm, "f": {"ac": "sine"}, "levels": [3, 7], "replicates": 4}),
    );
    let o = run_in(d.path(), &["rate", "--config", cfg.to_str().unwrap(), "--seed", "42", "--plot"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("fitted_rate"));
    for ext in ["json", "csv", "meta.json", "plot.py"] {
        assert!(d.path().join(format!("rate_seed42.{ext}")).exists(), "{ext}");
    }
    let r = report(d.path(), "rate_seed42");
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["seed"], 42);
    assert_eq!(r["config"]["replicates"], 4);
    let meta: Value = serde_json::from_slice(&std::fs::read(d.path().join("rate_seed42.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["input_sha256"].as_str().unwrap().len(), 64);
    assert!(meta["unix_time"].as_f64().unwrap() > 0.0);
    assert!(meta["argv"].as_array().unwrap().iter().any(|a| a == "rate"));
    // the timestamp lives only in the sidecar
    assert!(!std::fs::read_to_string(d.path().join("rate_seed42.json")).unwrap().contains("unix_time"));

    let csv = std::fs::read_to_string(d.path().join("rate_seed42.csv")).unwrap();
    assert!(csv.starts_with("label,replicate,level,param,mesh,value,lhs,rhs,holds\n"));
}

#[test]
fn report_floats_round_trip() {
    let d = tempfile::tempdir().unwrap();
    run_in(d.path(), &["integrate", "--f", "square", "--X", "sine", "--n", "64"]);
    let text = std::fs::read_to_string(d.path().join("integrate_seed0.json")).unwrap();
    let r: Value = serde_json::from_str(&text).unwrap();
    let v = summary(&r, "value");
    assert!(text.contains(&format!("{v:.16e}")));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for e in std::fs::read_dir(&dir).unwrap() {
        let p = e.unwrap().path();
        let name = p.file_name().unwrap().to_string_lossy().into_owned();
        let bytes = std::fs::read(&p).unwrap();
        let ok = if name.starts_with("bounds_") {
            serde_json::from_slice::<zsint_cli::BoundsConfig>(&bytes).map(drop)
        } else if name.starts_with("rate_") {
            serde_json::from_slice::<zsint::experiments::RateConfig>(&bytes).map(drop)
        } else if name.starts_with("ito_") {
            serde_json::from_slice::<zsint::experiments::ItoConfig>(&bytes).map(drop)
        } else if name.starts_with("mollify_") {
            serde_json::from_slice::<zsint::experiments::MollifyConfig>(&bytes).map(drop)
        } else if name.starts_with("invariance_") {
            serde_json::from_slice::<zsint::experiments::InvarianceConfig>(&bytes).map(drop)
        } else if name.starts_with("rs_sweep_") {
            serde_json::from_slice::<zsint_cli::RsSweepConfig>(&bytes).map(drop)
        } else {
            panic!("unclassified config {name}");
        };
        ok.unwrap_or_else(|e| panic!("{name}: {e}"));
        seen += 1;
    }
    assert!(seen >= 10);
}

#[test]
fn rs_sweep_on_a_deterministic_path() {
    let d = tempfile::tempdir().unwrap();
    // X = Y = t with f = identity: left sums of t dt miss 1/2 by mesh/2
    let cfg = write_config(
        d.path(),
        "rs.json",
        &json!({"f": {"ac": "identity"}, "x": {"type": "deterministic", "formula": "line"}, "levels": [2, 6]}),
    );
    let o = run_in(d.path(), &["rs-sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(d.path(), "rs_sweep_seed0");
    let rate = r["fitted_rate"].as_f64().unwrap();
    assert!((rate - 1.0).abs() < 0.05, "{rate}");
    let rec = &r["records"][0];
    assert_eq!(rec["label"], "rs_error");
    assert!((rec["value"].as_f64().unwrap() - 0.125).abs() < 1e-3);
}

#[test]
fn bounds_sufficient_from_csv() {
    let d = tempfile::tempdir().unwrap();
    run_in(d.path(), &["generate", "--kind", "line", "--n", "512"]);
    let input = d.path().join("generate_seed0.csv");
    let cfg = write_config(
        d.path(),
        "s.json",
        &json!({"check": "sufficient", "theta": 0.3, "alpha": 0.6, "y_probes": [0.5], "input": input}),
    );
    let o = run_in(d.path(), &["bounds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(d.path(), "sufficient_variability_seed0");
    // ∫_0^1 |t - 1/2|^{-1/2} dt = 2√2
    assert!((summary(&r, "sup") - 2.0 * 2f64.sqrt()).abs() < 1e-9);
}
