mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_stmtmv");

fn stmtmv(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = stmtmv(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn describe_lists_both_views() {
    let text = ok(&["features", "--describe"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "view,index,name");
    assert_eq!(lines.iter().filter(|l| l.starts_with("spatial,")).count(), 24);
    assert_eq!(lines.iter().filter(|l| l.starts_with("temporal,")).count(), 146);
}

#[test]
fn synth_then_scan_recovers_generating_triplet() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("synth");
    ok(&["synth", "--seed", "4", "--out-dir", path(&out)]);
    for f in ["pipes.csv", "stations.csv", "coupling.csv", "planted_w.csv", "features_S01.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let body = fs::read_to_string(out.join("features_S01.csv")).unwrap();
    assert_eq!(body.lines().count(), 101);
    assert!(body.starts_with("xs_00,"));

    let scan = ok(&[
        "scan-powers",
        "--pipes",
        path(&out.join("pipes.csv")),
        "--stations",
        path(&out.join("stations.csv")),
        "--corr",
        path(&out.join("coupling.csv")),
        "--top",
        "1",
        "--out-dir",
        path(&dir.path().join("scan")),
    ]);
    assert_eq!(scan.lines().nth(1), Some("1,2,-1,-1,1.000000"));
}

#[test]
fn correlate_accepts_explicit_triplet() {
    let fx = common::write_fixture("");
    let out = fx.path().join("corr");
    let text = ok(&[
        "correlate",
        "--config",
        path(&fx.config()),
        "--triplet",
        "0", "1", "0",
        "--k",
        "1",
        "--raw",
        "--out-dir",
        path(&out),
    ]);
    assert!(text.contains("A1"));
    let csv = fs::read_to_string(out.join("coupling.csv")).unwrap();
    // Shortest A1-B2 route by length: n1-n4-n3 = 2.0 km.
    assert_eq!(csv.lines().nth(1).unwrap().split(',').nth(2), Some("2"));
}

#[test]
fn fit_predict_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = path(dir.path());
    let fitted = ok(&["fit", "--seed", "9", "--model", "lasso", "--horizon", "2", "--out-dir", d]);
    assert!(fitted.contains("LASSO 2h"));
    let model = dir.path().join("lasso_2h.json");
    let eval = ok(&["eval", "--seed", "9", "--model-file", path(&model)]);
    assert!(eval.starts_with("LASSO 2h rmse="), "{eval}");
    ok(&["predict", "--seed", "9", "--model-file", path(&model), "--out-dir", d]);
    let preds = fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().next(), Some("station,index,prediction,target"));
    assert_eq!(preds.lines().count(), 1 + 6 * 30);
}

#[test]
fn decay_model_on_series_data() {
    let fx = common::write_fixture("");
    let d = path(fx.path());
    let cfg_path = fx.config();
    let cfg = path(&cfg_path);
    ok(&["fit", "--config", cfg, "--model", "decay", "--out-dir", d]);
    let eval = ok(&["eval", "--config", cfg, "--model-file", path(&fx.path().join("decay_1h.json"))]);
    assert!(eval.starts_with("RC-decay 1h"), "{eval}");
    ok(&["features", "--config", cfg, "--out-dir", path(&fx.path().join("feat"))]);
    let body = fs::read_to_string(fx.path().join("feat").join("features_A1.csv")).unwrap();
    assert!(body.starts_with("timestamp,road.length_km"));
    assert_eq!(body.lines().count(), 1 + 36);
}

#[test]
fn exit_codes() {
    assert_eq!(stmtmv(&["run"]).status.code(), Some(2));
    assert_eq!(stmtmv(&["fit", "--seed", "1", "--model", "arma"]).status.code(), Some(2));

    let fx = common::write_fixture("");
    fs::remove_file(fx.path().join("geo.csv")).unwrap();
    let out = stmtmv(&["run", "--config", path(&fx.config()), "--out-dir", path(&fx.path().join("r"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("geo.csv"));

    let bad = fx.path().join("bad.toml");
    fs::write(&bad, "seed = 1\nhorizons = [5]\n[synthetic]\n").unwrap();
    assert_eq!(stmtmv(&["run", "--config", path(&bad)]).status.code(), Some(2));
}

#[test]
fn run_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["run", "--seed", "3", "--out-dir", path(dir.path())]);
    assert!(text.starts_with("model"));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.starts_with("model,rmse_1h,rmse_2h,rmse_3h,rmse_4h,acc_1h"));
    let long = fs::read_to_string(dir.path().join("results_long.csv")).unwrap();
    assert_eq!(long.lines().next(), Some("model,horizon,metric,value"));
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 3);
}
