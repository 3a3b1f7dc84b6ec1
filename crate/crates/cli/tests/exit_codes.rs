use std::process::Command;

fn nel(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nel"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn unknown_key_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "[nonexistence]\ncells = 64\nstpes = 3\n").unwrap();
    let out = nel(&[
        "nonexistence",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stpes"));
}

#[test]
fn missing_config_is_an_input_error() {
    let out = nel(&["symmetrize", "--config", "/nonexistent/x.conf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn passing_run_writes_log_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ok.conf");
    std::fs::write(&cfg, "[nonexistence]\ncells = 64\nsteps = 3\n").unwrap();
    let out = nel(&[
        "nonexistence",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let log = std::fs::read_to_string(dir.path().join("run.log")).unwrap();
    assert!(log.contains("seed") && log.contains("PASS"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS"));
}
