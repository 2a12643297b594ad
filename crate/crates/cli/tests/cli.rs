use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orbital-rmt"))
}

fn write(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn validate_echoes_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "w.toml", "experiment = \"wegner\"\n[model]\nkind = \"wegner_orbital\"\nl = 2\nn = 3\ng = 0.3\n");
    let out = bin().arg("validate").arg(&p).output().unwrap();
    assert!(out.status.success());
    let echo = String::from_utf8(out.stdout).unwrap();
    assert!(echo.contains("n_samples = 2000") && echo.contains("interval = [-0.025, 0.025]"), "{echo}");
    assert!(!dir.path().join("w.jsonl").exists());
}

#[test]
fn invalid_config_exits_with_code_2_and_lists_every_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "bad.toml",
        "experiment = \"bandloc\"\n[model]\nkind = \"band\"\nl = 31\nwidth = 4\n[params]\ns = 1.5\n",
    );
    let out = bin().arg("run").arg(&p).arg("--output").arg(dir.path().join("x")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("must divide 2L+1 = 63") && err.contains("0 < s < 1"), "{err}");
}

#[test]
fn run_writes_reproducible_results() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "t.toml", "experiment = \"tail\"\nn_samples = 200\n[model]\nkind = \"single_block\"\nn = 6\n");
    let mut files = Vec::new();
    for (k, w) in ["1", "3"].iter().enumerate() {
        let prefix = dir.path().join(format!("r{k}"));
        let out = bin().args(["run", p.to_str().unwrap(), "--output", prefix.to_str().unwrap(), "--workers", w]).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let csv = std::fs::read_to_string(prefix.with_extension("csv")).unwrap();
        assert!(csv.starts_with("t,prob,stderr,t_times_p,n\n"), "{csv}");
        let jsonl = std::fs::read_to_string(prefix.with_extension("jsonl")).unwrap();
        assert_eq!(jsonl.lines().count(), 1 + 4 + 1);
        assert!(prefix.with_extension("timing.json").exists());
        files.push((csv, jsonl));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn worker_env_var_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "t.toml", "experiment = \"tail\"\nn_samples = 10\n[model]\nkind = \"single_block\"\nn = 4\n");
    let out = bin()
        .env("ORBITAL_RMT_WORKERS", "zero")
        .args(["run", p.to_str().unwrap(), "--output", dir.path().join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn describe_and_selftest() {
    let out = bin().args(["describe", "minami"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success() && text.contains("lengths") && text.contains("factorial_moment"), "{text}");
    assert_eq!(bin().args(["describe", "nonsense"]).output().unwrap().status.code(), Some(2));
    let out = bin().arg("selftest").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success() && !text.contains("FAIL"), "{text}");
}
