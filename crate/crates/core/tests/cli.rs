use std::path::{Path, PathBuf};
use std::process::Command;

use qcoh::cli::run;

fn targets_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../targets")
}

fn qcoh(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let seeds = targets_dir();
    let mut full = vec!["qcoh".to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    full.push("--seeds".into());
    full.push(seeds.to_string_lossy().into_owned());
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn spectrum_of_quartic() {
    let (code, out, _) = qcoh(&["spectrum", "--target", "quartic", "--tau-order", "0"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("factor: (lambda + 24*Q)^3"), "{out}");
    assert!(out.contains("multiplicities: [3, 1]"));
    assert!(out.contains("verdict: obstructed"));
}

#[test]
fn verify_all_on_p2() {
    let (code, out, err) = qcoh(&["verify-all", "--target", "p2", "--q-order", "4", "--tau-order", "2"]);
    assert_eq!(code, 0, "{out}{err}");
    assert!(!out.contains("FAIL"));
}

#[test]
fn missing_target_is_a_config_error() {
    let (code, _, err) = qcoh(&["spectrum", "--target", "no_such_target"]);
    assert_eq!(code, 2);
    assert!(err.contains("not found"));
}

#[test]
fn bad_flags_are_config_errors() {
    assert_eq!(qcoh(&["spectrum", "--q-order", "-1", "--target", "p1"]).0, 2);
    assert_eq!(qcoh(&["frobnicate"]).0, 2);
    assert_eq!(qcoh(&["identities", "--target", "p1", "--tau-order", "0"]).0, 2);
    assert_eq!(qcoh(&["mirror", "--target", "p2"]).0, 2);
    assert_eq!(qcoh(&["decompose", "--target", "p2"]).0, 2);
}

#[test]
fn inconsistent_seed_fails_the_math() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(targets_dir().join("p2.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["name"] = "p2_bad".into();
    doc["gw_seeds"].as_array_mut().unwrap().push(serde_json::json!({
        "degree": [2], "insertions": ["H^2", "H^2", "H^2", "H^2", "H^2"], "value": 2
    }));
    let path = dir.path().join("p2_bad.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let (code, out, _) = qcoh(&["reconstruct", "--target", path.to_str().unwrap(), "--q-order", "3"]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("[FAIL] store-consistency"));
    assert!(out.contains("stored 2, recomputed 1"));
}

#[test]
fn reports_are_deterministic_twins() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = dir.path().to_str().unwrap();
        let (code, _, _) = qcoh(&["decompose", "--target", "blpt_p2", "--out", out]);
        assert_eq!(code, 0);
        let (code, _, _) = qcoh(&["reconstruct", "--target", "p2", "--q-order", "3", "--out", out]);
        assert_eq!(code, 0);
    }
    for name in ["decompose-blpt_p2.txt", "decompose-blpt_p2.report", "reconstruct-p2.report", "reconstruct-p2.gw"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
    let machine = std::fs::read_to_string(a.path().join("decompose-blpt_p2.report")).unwrap();
    assert!(machine.contains("check.valuation-split = pass"));
    assert!(machine.ends_with("status = pass\n"));
}

#[test]
fn kontsevich_numbers_from_reconstruct() {
    let (code, out, _) = qcoh(&["reconstruct", "--target", "p2", "--q-order", "4"]);
    assert_eq!(code, 0);
    assert!(out.contains("(3; H^2, H^2, H^2, H^2, H^2, H^2, H^2, H^2) = 12"));
    assert!(out.contains(") = 620"));
}

#[test]
fn qrr_and_identities_commands() {
    let (code, out, _) = qcoh(&["qrr", "--target", "p3", "--z-depth", "4"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("-691/2730"));
    let (code, out, _) = qcoh(&["identities", "--target", "p2", "--tau-order", "2", "--kmax", "2"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("[pass] eigen-ode-k2"));
}

#[test]
fn seed_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(targets_dir().join("p1.json"), dir.path().join("line.json")).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_qcoh"))
        .args(["spectrum", "--target", "line"])
        .env("QCOH_SEEDS", dir.path())
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    assert!(String::from_utf8_lossy(&status.stdout).contains("lambda^2 + -4*Q"));
}
