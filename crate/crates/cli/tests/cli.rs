use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn smoke() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml")
}

fn katolab(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_katolab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("KATOLAB_CACHE")
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

#[test]
fn sweep_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let run = katolab(&["sweep", "--paths"], &smoke(), &out);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run));
    for f in ["report.json", "report.csv", "manifest.json", "timing.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    assert!(std::fs::read_dir(out.join("paths")).unwrap().count() > 0);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], "1");

    let v = katolab(&["verify"], &smoke(), &out);
    assert_eq!(v.status.code(), Some(0), "{}", text(&v));
    assert!(text(&v).contains("verify PASS"));
    assert!(text(&v).contains("stored paths"));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(katolab(&["sweep", "--threads", "1"], &smoke(), &a).status.code(), Some(0));
    assert_eq!(katolab(&["sweep", "--threads", "3"], &smoke(), &b).status.code(), Some(0));
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
    let v = katolab(&["verify"], &smoke(), &b);
    assert_eq!(v.status.code(), Some(0), "{}", text(&v));
    assert!(text(&v).contains("re-simulated"));
}

#[test]
fn bad_config_exits_two_with_all_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "[domain]\nnx = 1\n[basis]\nn_modes = 4\n[sde]\nnu = [0.05, 0.1]\ndt = -1.0\n",
    )
    .unwrap();
    let o = katolab(&["sweep"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    let msg = text(&o);
    assert!(msg.contains("nx"), "{msg}");
    assert!(msg.contains("dt"), "{msg}");
    assert!(msg.contains("(0.05, 0.1)"), "{msg}");

    std::fs::write(&cfg, "[domain]\nnx = 8\n[basis]\nn_modes = 4\n[sde]\nnu = 0.1\ntypo = 3\n").unwrap();
    assert_eq!(katolab(&["audit"], &cfg, dir.path()).status.code(), Some(2));
}

#[test]
fn injected_nan_exits_one_with_failure_record() {
    let dir = tempfile::tempdir().unwrap();
    let mut text_cfg = std::fs::read_to_string(smoke()).unwrap();
    text_cfg.push_str("\n[debug]\ninject_nan_at_point = 1\ninject_nan_at_step = 3\n");
    let cfg = dir.path().join("nan.toml");
    std::fs::write(&cfg, text_cfg).unwrap();
    let out = dir.path().join("run");
    let o = katolab(&["sweep"], &cfg, &out);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    assert!(text(&o).contains("failed"));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    let failed = &report["sweeps"][0]["failed_points"];
    assert_eq!(failed.as_array().unwrap().len(), 1);
    assert_eq!(failed[0]["failures"][0]["step"], 3);
}

#[test]
fn component_subcommands_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, file) in [("audit", "audit.json"), ("euler", "euler.json"), ("corrector", "corrector.json")] {
        let o = katolab(&[cmd], &smoke(), dir.path());
        assert!(matches!(o.status.code(), Some(0) | Some(1)), "{cmd}: {}", text(&o));
        assert!(dir.path().join(file).exists(), "{cmd} wrote no {file}");
    }
    let help = Command::new(env!("CARGO_BIN_EXE_katolab")).arg("--help").output().unwrap();
    assert!(text(&help).contains("Exit codes"));
}
