use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn lab() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lab"));
    cmd.env_remove("LAB_THREADS");
    cmd
}

fn run(cmd: &mut Command) -> (i32, Value, String) {
    let Output { status, stdout, stderr } = cmd.output().expect("lab runs");
    let json = serde_json::from_slice(&stdout).unwrap_or(Value::Null);
    (status.code().expect("exit code"), json, String::from_utf8_lossy(&stderr).into_owned())
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/configs")
}

const SMALL_RUN: &str = r#"{
    "name": "small",
    "grid": {"dim": 2, "n": 16},
    "mu": 0.1, "lambda": 0.05,
    "pressure": {"kind": "power", "A": 1.0, "gamma": 1.4, "rho_bar": 1.0, "c0": 0.5},
    "initial": {
        "velocity": {"recipe": "modes", "modes": [{"component": 1, "k": [1, 1, 0], "amplitude": 0.01}]},
        "density": {"recipe": "modes", "modes": [{"k": [1, 0, 0], "amplitude": 0.01}]}
    },
    "t_end": 0.2,
    "cadence": 0.05
}"#;

#[test]
fn decompose_random_field_reconstructs() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = run(lab().args(["decompose", "--random", "5", "--dim", "2", "--n", "32", "--p", "inf", "--out"]).arg(dir.path()));
    assert_eq!(code, 0, "{err}");
    assert!(out["reconstruction_error"].as_f64().unwrap() < 1e-12);
    assert_eq!(out["p"], "inf");
    let blocks = out["blocks"].as_array().unwrap();
    let (lo, hi) = (out["partition_range"][0].as_i64().unwrap(), out["partition_range"][1].as_i64().unwrap());
    assert_eq!(blocks.len() as i64, hi - lo + 1);
    assert!(dir.path().join(format!("block_{lo}.bin")).exists());

    let stem = dir.path().join(format!("block_{hi}.json"));
    let (code, norm, _) = run(lab().args(["norm", "--s", "0", "--p", "inf", "--r", "inf"]).arg(&stem));
    assert_eq!(code, 0);
    let top = blocks.last().unwrap()["norm"].as_f64().unwrap();
    // re-splitting one block only touches its neighbours
    let v = norm["value"].as_f64().unwrap();
    assert!(v > 0.0 && v <= 2.0 * top, "{v} vs {top}");
}

#[test]
fn norm_reports_index_and_weights() {
    let (code, plain, _) = run(lab().args(["norm", "--random", "2", "--n", "16", "--s", "-0.5", "--p", "4"]));
    assert_eq!(code, 0);
    assert_eq!(plain["norm_kind"], "besov");
    assert!(plain["q"].is_null());
    let (_, weighted, _) = run(lab().args(["norm", "--random", "2", "--n", "16", "--s", "-0.5", "--p", "4", "--weighted", "--horizon", "1e9"]));
    assert_eq!(weighted["norm_kind"], "weighted_besov");
    let ratio = weighted["value"].as_f64().unwrap() / plain["value"].as_f64().unwrap();
    assert!((ratio - 2.0).abs() < 1e-9, "{ratio}");
    let (code, _, err) = run(lab().args(["norm", "--random", "2", "--s", "0", "--q", "2"]));
    assert_eq!(code, 4, "{err}");
}

#[test]
fn verify_runs_and_appends_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let ledger = dir.path().join("ledger.csv");
    for seed in ["1", "2"] {
        let (code, out, err) = run(lab()
            .args(["verify", "Lemma2.2a", "--trials", "4", "--seed", seed, "--params", r#"{"n": 16, "dim": 2}"#, "--ledger"])
            .arg(&ledger));
        assert_eq!(code, 0, "{err}");
        assert!(out["max_ratio"].as_f64().unwrap().is_finite());
        assert_eq!(out["params"]["n"], 16);
    }
    let text = std::fs::read_to_string(&ledger).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("id,"));
}

#[test]
fn verify_bernstein_and_registry() {
    let (code, out, _) = run(lab().args(["verify", "bernstein", "--n", "32", "--j", "1", "--trials", "3", "--sample", "localized"]));
    assert_eq!(code, 0);
    assert_eq!(out["q"], "inf");
    assert!(out["max_forward"].as_f64().unwrap() > 0.0);
    let (code, list, _) = run(lab().args(["verify", "list"]));
    assert_eq!(code, 0);
    assert!(list.as_array().unwrap().iter().any(|e| e["id"] == "Lemma5.3"));
}

#[test]
fn config_errors_exit_4() {
    let (code, _, err) = run(lab().args(["verify", "Lemma9.9"]));
    assert_eq!(code, 4, "{err}");
    let (code, _, _) = run(lab().args(["verify", "Lemma2.3", "--params", r#"{"nope": 1}"#]));
    assert_eq!(code, 4);
    let (code, _, _) = run(lab().args(["frobnicate"]));
    assert_eq!(code, 4);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, SMALL_RUN.replace("\"t_end\": 0.2", "\"t_end\": -1")).unwrap();
    let (code, _, err) = run(lab().arg("simulate").arg(&bad));
    assert_eq!(code, 4, "{err}");
    let (code, _, _) = run(lab().env("LAB_THREADS", "zero").args(["verify", "list"]));
    assert_eq!(code, 4);
}

#[test]
fn simulate_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    std::fs::write(&cfg, SMALL_RUN).unwrap();
    let out_dir = dir.path().join("run");
    let (code, summary, err) = run(lab().env("LAB_THREADS", "2").arg("simulate").arg(&cfg).arg("--out").arg(&out_dir));
    assert_eq!(code, 0, "{err}");
    assert_eq!(summary["class"], "completed");
    for f in ["config.json", "diagnostics.csv", "summary.json", "snapshots/0000.bin"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let header = std::fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    assert!(header.starts_with("t,E,G_int,grad_u_sq,rho_udot_sq,grad_udot_sq,A1,A2,rho_min,rho_max,F_L2,F_L4,F_L6,omega_L2,cont_q,sigma"));

    let (code, report, err) = run(lab().arg("report").arg(&out_dir));
    assert_eq!(code, 0, "{err}");
    assert_eq!(report["snapshots"], 5);
    assert_eq!(report["analysis"]["conservation"], summary["conservation"]);

    let (code, cl, err) = run(lab().arg("norm").arg(&out_dir).args(["--s", "0.5", "--p", "2", "--q", "inf", "--component", "1"]));
    assert_eq!(code, 0, "{err}");
    assert_eq!(cl["norm_kind"], "chemin_lerner");
    assert!((cl["cadence"].as_f64().unwrap() - 0.05).abs() < 1e-12);
}

#[test]
fn huge_amplitude_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let (code, summary, err) = run(lab().arg("simulate").arg(configs().join("huge_amplitude_2d.json")).arg("--out").arg(dir.path()));
    assert!(code == 2 || code == 3, "{code}: {err}");
    assert_eq!(summary["exit_code"], code);
    let (again, _, _) = run(lab().arg("report").arg(dir.path()));
    assert_eq!(again, code);
}

#[test]
fn scan_eps_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let json = dir.path().join("scan.json");
    let (code, _, err) = run(lab()
        .arg("scan-eps")
        .arg(configs().join("eps_scan_1d.json"))
        .args(["--eps", "0.25,0.125,0.0625,0.03125", "--csv"])
        .arg(&csv)
        .arg("--json")
        .arg(&json));
    assert_eq!(code, 0, "{err}");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 5);
    let scan: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!((scan["predicted_slope"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    let (code, _, _) = run(lab().arg("scan-eps").arg(configs().join("eps_scan_1d.json")).args(["--eps", "0.25,0.125"]));
    assert_eq!(code, 1);
    let (code, _, _) = run(lab().arg("scan-eps").arg(configs().join("acoustic_2d.json")));
    assert_eq!(code, 4);
}
