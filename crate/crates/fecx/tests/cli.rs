use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use sha2::{Digest, Sha256};

fn fecx() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fecx"))
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn sample_bytes_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"sample": {"count": 5000}}"#).unwrap();
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("run{k}"));
        let st = fecx()
            .args(["sample", "--n-particles", "4", "--seed", "42", "--threads", threads, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        outputs.push(fs::read(out.join("sample.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.swap_remove(0)).unwrap();
    assert_eq!(text.lines().count(), 5001);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let mantissa = row[0].split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
}

#[test]
fn manifest_lists_every_file_with_its_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"verify": {"export_operators": true, "export_rdms": true, "mapping_states": 5}}"#).unwrap();
    let st = fecx().args(["verify", "--n-particles", "4", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let m = manifest(&out);
    assert_eq!(m["status"], "complete");
    assert_eq!(m["config"]["verify"]["export_rdms"], true);
    let files = m["files"].as_array().unwrap();
    let mut listed: Vec<String> = files.iter().map(|f| f["path"].as_str().unwrap().to_owned()).collect();
    for f in files {
        let data = fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap(), data.len() as u64);
        let d: String = Sha256::digest(&data).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(f["sha256"].as_str().unwrap(), d);
    }
    let mut on_disk = Vec::new();
    let mut stack = vec![out.clone()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                on_disk.push(p.strip_prefix(&out).unwrap().to_string_lossy().replace('\\', "/"));
            }
        }
    }
    on_disk.retain(|p| p != "manifest.json");
    on_disk.sort();
    listed.sort();
    assert_eq!(listed, on_disk);
    let rdm: Value = serde_json::from_slice(&fs::read(out.join("rdms/rdm_set.json")).unwrap()).unwrap();
    for key in ["params", "energy", "lambda_D", "lambda_G", "coords", "degeneracy"] {
        assert!(rdm.get(key).is_some(), "{key}");
    }
    let report: Value = serde_json::from_slice(&fs::read(out.join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
}

#[test]
fn invalid_fields_are_named() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = fecx().args(["sample", "--n-particles", "5", "--out"]).arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_particles"));
    assert!(!out.exists());
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"ensemble": {"from": "nowhere"}}"#).unwrap();
    let o = fecx().args(["ensemble", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ensemble.from"));
    fs::write(&cfg, r#"{"trajectory": {"gird": 11}}"#).unwrap();
    let o = fecx().args(["trajectory", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown field `gird`"));
}

#[test]
fn flags_override_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    let out = tmp.path().join("t");
    fs::write(&cfg, r#"{"n_particles": 6, "seed": 3, "rdms": false, "trajectory": {"grid": 21}}"#).unwrap();
    let st = fecx().args(["trajectory", "--seed", "9", "--n-particles", "4", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let m = manifest(&out);
    assert_eq!(m["seed"], 9);
    assert_eq!(m["n_particles"], 4);
    assert_eq!(m["mode"], "trajectory");
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    // leap confirmation adds bisection samples to the grid
    assert!(csv.lines().count() >= 22);
    assert!(csv.starts_with("chi,lamD,lamG,expL,expW,expG,energy,dE,d2E,speed,phi,degeneracy,flags"));
}

#[test]
fn solver_failures_give_a_partial_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    let out = tmp.path().join("p");
    fs::write(
        &cfg,
        r#"{"sample": {"count": 4}, "solver": {"dense_threshold": 0, "dense_fallback": 0, "max_matvecs": 8}}"#,
    )
    .unwrap();
    let o = fecx().args(["sample", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let m = manifest(&out);
    assert_eq!(m["status"], "partial");
    assert!(!m["failures"].as_array().unwrap().is_empty());
    let csv = fs::read_to_string(out.join("sample.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",false")));
}
