//! End-to-end checks of the `chsim` binary: exit codes, artifact layout,
//! and the JSON surfaces.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chsim"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("chsim_cli_{tag}_{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn simulate_writes_artifacts_and_exits_zero() {
    let dir = scratch("simulate");
    let cfg = dir.join("run.toml");
    std::fs::write(
        &cfg,
        r#"
system = "cubic"
[grid]
n_points = 256
half_length = 20.0
[integrator]
t_end = 0.2
sample_interval = 0.1
[init.m0]
family = "gaussian"
amplitude = 0.5
center = 0.0
width = 1.0
[outputs]
snapshot_every = 1
"#,
    )
    .unwrap();
    let out = dir.join("artifacts");
    let status = bin().arg("simulate").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    for f in ["diagnostics.csv", "characteristics.csv", "manifest.json", "m_0.csv", "n_2.csv"] {
        assert!(out.join(f).exists(), "missing artifact {f}");
    }
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("t,l1_m,l1_n,consA_mv,consA_nu,consB_mvx,"));
    assert_eq!(diag.lines().count(), 1 + 3); // header + samples at t = 0, 0.1, 0.2
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"]["kind"], "completed");
    // the manifest echoes defaulted fields too
    assert_eq!(manifest["config"]["integrator"]["cfl"], 0.3);
}

#[test]
fn bad_config_exits_with_usage_code() {
    let dir = scratch("bad_config");
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "system = \"A\"\n[integrator]\ncf1 = 0.3\n").unwrap();
    let out = bin().arg("simulate").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cf1"), "stderr must name the unknown key: {err}");
}

#[test]
fn unknown_preset_exits_with_usage_code() {
    let out = bin().arg("preset").arg("no_such_thing").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn preset_pass_exit_codes_and_report() {
    let dir = scratch("preset");
    let out = bin()
        .arg("preset")
        .arg("besov_sanity")
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["preset"], "besov_sanity");
    assert_eq!(report["pass"], true);
    assert!(report["measured"]["partition_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn predict_emits_verdict_json() {
    let dir = scratch("predict");
    let cfg = dir.join("data.toml");
    std::fs::write(
        &cfg,
        r#"
system = "A"
[grid]
n_points = 512
half_length = 20.0
[init.m0]
family = "gaussian"
amplitude = 1.0
center = 0.0
width = 1.0
[init.n0]
family = "gaussian"
amplitude = 1.0
center = 0.0
width = 1.0
"#,
    )
    .unwrap();
    let out = bin()
        .arg("predict")
        .arg(&cfg)
        .arg("--family")
        .arg("A_L1")
        .arg("--x0")
        .arg("0.0")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let verdict: serde_json::Value = serde_json::from_str(
        std::str::from_utf8(&out.stdout).unwrap(),
    )
    .unwrap();
    assert!(verdict["C"].as_f64().unwrap() > 0.0);
    assert!(verdict["derivation"].as_array().unwrap().len() >= 5);
    // symmetric data: at the even-symmetry center the slope terms cancel,
    // so the x0 = 0 probe reports Qx0 = 0 and no trigger
    let probe = &verdict["extra_probes"][0];
    assert!(probe["Qx0"].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(probe["triggered"], false);
    // zero data fails with N0 = 0 everywhere
    let zero_cfg = dir.join("zero.toml");
    std::fs::write(&zero_cfg, "system = \"A\"\n").unwrap();
    let out = bin().arg("predict").arg(&zero_cfg).arg("--family").arg("A_L1").output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn besov_subcommand_reads_snapshots() {
    let dir = scratch("besov");
    // single interior-plateau mode of amplitude 0.8 on n = 256, L = 10
    let n = 256;
    let l = 10.0;
    let k = std::f64::consts::PI / l * 18.0;
    let mut text = String::from("x,value\n");
    for i in 0..n {
        let x = -l + 2.0 * l * i as f64 / n as f64;
        text.push_str(&format!("{x},{}\n", 0.8 * (k * x).cos()));
    }
    let snap = dir.join("m_0.csv");
    std::fs::write(&snap, text).unwrap();
    let out = bin()
        .arg("besov")
        .arg(&snap)
        .arg("--s")
        .arg("0")
        .arg("--p")
        .arg("inf")
        .arg("--r")
        .arg("inf")
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let norm = v["norm"].as_f64().unwrap();
    assert!((norm - 0.8).abs() < 1e-12, "B^0_inf,inf of a plateau mode is its amplitude");
}
