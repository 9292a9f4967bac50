//! End-to-end runs of the `rwlab` binary on the bundled configs.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn rwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn conjecture_on_chain_a_is_branch_i() {
    let o = rwlab(&["--config", &config("chain_a.toml"), "conjecture"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "branch=i"), "{text}");
    assert!(text.lines().any(|l| l == "verdict=consistent"), "{text}");
}

#[test]
fn cn_on_chain_b_is_all_zeros() {
    let o = rwlab(&["--config", &config("chain_b.toml"), "cn"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,C_n,log_C_n"));
    let mut rows = 0;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1], "0", "{line}");
        rows += 1;
    }
    assert!(rows > 100);
}

#[test]
fn recover_negative_mean_names_index_zero() {
    let o = rwlab(&["--config", &config("weight_negative_mean.toml"), "recover"]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("index 0") && err.contains("r_0 < 0"), "{err}");
    let record: serde_json::Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(record["level"], "error");
}

#[test]
fn input_errors_exit_with_three() {
    assert_eq!(rwlab(&["--config", "/nonexistent/rwlab.toml", "chain-info"]).status.code(), Some(3));
    assert_eq!(rwlab(&["no-such-command"]).status.code(), Some(3));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[chain]\nlabel = \"bad\"\np = [\"3/4\"]\nq = [\"0\"]\nr = [\"1/2\"]\n").unwrap();
    let o = rwlab(&["--config", bad.to_str().unwrap(), "chain-info"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        for (cfg, cmd) in [("chain_r2.toml", "conjecture"), ("chain_b.toml", "cn"), ("chain_c.toml", "edges")] {
            let o = rwlab(&[
                "--config",
                &config(cfg),
                "--truncation",
                "400",
                "--horizon",
                "799",
                "--out",
                dir.path().to_str().unwrap(),
                cmd,
            ]);
            assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }

    let mc = |seed: &str| {
        let o = rwlab(&["--config", &config("chain_b.toml"), "--seed", seed, "mc"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        o.stdout
    };
    assert_eq!(mc("5"), mc("5"));
}

#[test]
fn every_bundled_config_runs_end_to_end() {
    let limit = Duration::from_secs(600);
    let mut entries: Vec<_> = std::fs::read_dir(configs())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for path in entries {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let cmd = if name.contains("negative_mean") { "recover" } else { "conjecture" };
        let start = Instant::now();
        let o = rwlab(&["--config", path.to_str().unwrap(), cmd]);
        let took = start.elapsed();
        let want = if name.contains("negative_mean") { 3 } else { 0 };
        assert_eq!(o.status.code(), Some(want), "{name}: {}", stderr(&o));
        assert!(took < limit, "{name} took {took:?}");
    }
}
