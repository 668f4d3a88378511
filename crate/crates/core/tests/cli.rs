//! The `fpp` binary: outputs and exit codes.

use std::path::Path;
use std::process::Command;

fn fpp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fpp")).args(args).output().unwrap()
}

fn write(path: &Path, text: &str) -> String {
    std::fs::write(path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const ENDS: &str = r#"
[experiment]
kind = "ends"
master_seed = 5
replications = 3

[distribution]
kind = "exponential"
rate = 1.0

[ends]
half_width = 20
radii = [[5, 10], [10, 20]]
"#;

#[test]
fn success_writes_reports_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir.path().join("ends.toml"), ENDS);
    let out = dir.path().join("out");
    let o = fpp(&["ends", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["ends.csv", "ends.json", "ends.timing.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("ends.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir.path().join("ends.toml"), ENDS);
    let out = dir.path().join("out");
    let o = fpp(&["ends", "--config", &cfg, "--seed", "9", "--reps", "2", "--parallel", "2", "--out", out.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("ends.json")).unwrap()).unwrap();
    assert_eq!(doc["provenance"]["master_seed"], 9);
    assert_eq!(doc["provenance"]["replications"], 2);
    assert!(!out.join("ends.csv").exists());
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let typo = write(&dir.path().join("typo.toml"), &ENDS.replace("half_width", "halfwidth"));
    let o = fpp(&["ends", "--config", &typo, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("halfwidth"));

    let range = write(&dir.path().join("range.toml"), &ENDS.replace("[10, 20]", "[10, 50]"));
    let o = fpp(&["ends", "--config", &range, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ends.radii"));

    let cfg = write(&dir.path().join("ends.toml"), ENDS);
    let o = fpp(&["tau", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = fpp(&["ends", "--config", &cfg, "--format", "xml", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn clipping_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir.path().join("tau.toml"),
        "[experiment]\nkind = \"tau\"\nmaster_seed = 3\nreplications = 10\n\n[distribution]\nkind = \"exponential\"\nrate = 1.0\n\n[region]\nmargin = 0.0\n\n[tau]\nn_values = [10.0]\n",
    );
    let o = fpp(&["tau", "--config", &cfg, "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("margin"));
}

#[test]
fn unwritable_output_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir.path().join("ends.toml"), ENDS);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = fpp(&["ends", "--config", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}
