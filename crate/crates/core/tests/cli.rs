use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_landau-lab"))
}

const SMALL: &str = r#"
[kernel]
n_coarse = 16
n_fine = 32
L = 8.0
[homogeneity]
n = 24
L = 8.0
[family]
n = 16
L = 8.0
size = 4
[poincare]
n = 16
L = 8.0
sigmas = [1.0]
masses = [1.0, 3.0]
"#;

const TINY_RUN: &str = r#"
[run]
n = 16
L = 8.0
preset = { kind = "gaussian", mass = 1.0, sigma = 1.0 }
t_end = 2.0
mode = "landau_diffusion"
p_list = [2.0]
m_list = [2.0]
"#;

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn assert_every_item_once(s: &Value) {
    let ids: Vec<u64> = s["items"].as_array().unwrap().iter().map(|i| i["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, (1..=13).collect::<Vec<u64>>());
    assert_eq!(s["items"][12]["status"], "not_run");
}

#[test]
fn inequalities_write_checks_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, format!("experiment = \"all\"\n{SMALL}")).unwrap();
    let out = dir.path().join("out");
    let status = lab()
        .args(["inequalities", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status;
    let s = summary(&out);
    assert_every_item_once(&s);
    for item in s["items"].as_array().unwrap() {
        let evaluated = [4, 5, 11].contains(&item["id"].as_u64().unwrap());
        assert_eq!(item["status"] != "not_run", evaluated, "{item}");
    }
    assert_eq!(status.success(), s["all_pass"].as_bool().unwrap());
    assert_eq!(status.code(), Some(if status.success() { 0 } else { 1 }));
    let poincare: Value = serde_json::from_str(&std::fs::read_to_string(out.join("checks/poincare.json")).unwrap()).unwrap();
    let cal = poincare["detail"]["calibrated_c_d"].as_f64().unwrap();
    assert!((cal - 1.0 / (8.0 * std::f64::consts::PI)).abs() < 1e-15);
}

#[test]
fn json_config_drives_kernel_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("k.json");
    std::fs::write(&cfg, r#"{"experiment": "kernel_validate", "kernel": {"n_coarse": 24, "n_fine": 48, "L": 12.0}}"#).unwrap();
    let out = dir.path().join("out");
    let status = lab().arg("run").arg(&cfg).arg("--out").arg(&out).arg("--quiet").output().unwrap().status;
    let s = summary(&out);
    assert_every_item_once(&s);
    assert_eq!(s["items"][0]["status"], "pass", "{}", s["items"][0]);
    assert_eq!(s["items"][1]["measured"]["symmetric"], true);
    assert!(s["items"][1]["measured"]["trace_rel"].as_f64().unwrap() <= 1e-10);
    assert_eq!(status.success(), s["all_pass"].as_bool().unwrap());
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, format!("experiment = \"lp_decay\"\n{TINY_RUN}")).unwrap();
    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let status = lab().arg("run").arg(&cfg).arg("--out").arg(&out).arg("--quiet").output().unwrap().status;
        let s = summary(&out);
        assert_every_item_once(&s);
        assert_eq!(status.success(), s["all_pass"].as_bool().unwrap());
        csvs.push(std::fs::read(out.join("diagnostics.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let text = String::from_utf8(csvs.remove(0)).unwrap();
    assert!(text.starts_with("t,mass,entropy,lp2,linf,l1m2,diss2,poincare_ratio,ellipticity_floor,min_u,dt\n"));
}

#[test]
fn failed_fits_are_flagged_not_fatal() {
    // too short for any decay window: the item fails with its reason
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.toml");
    std::fs::write(&cfg, format!("experiment = \"lp_decay\"\n{}", TINY_RUN.replace("t_end = 2.0", "t_end = 0.05"))).unwrap();
    let out = dir.path().join("out");
    let status = lab().arg("run").arg(&cfg).arg("--out").arg(&out).arg("--quiet").output().unwrap().status;
    assert_eq!(status.code(), Some(1));
    let s = summary(&out);
    assert_eq!(s["items"][5]["status"], "fail");
    assert!(s["items"][5]["note"].as_str().unwrap().contains("insufficient samples"));
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn bad_config_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "experiment = \"lp_decay\"\nunknown_key = 3\n").unwrap();
    let output = lab().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("error"));
    let missing = lab().args(["run", "/nonexistent/config.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
