use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: [&str; 10] = ["--years", "2", "--train_years", "1", "--epochs", "1", "--hidden_size", "3", "--lookback", "8"];

fn enspost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_enspost"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gradcheck_passes() {
    let stdout = ok(&enspost(&["gradcheck", "--seeds", "3"]));
    assert!(stdout.contains("gradcheck PASS"), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("seed ")).count(), 3);
}

#[test]
fn synth_writes_every_input_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("synth");
    let mut args = vec!["--out", path(&dir), "--seed", "3", "synth"];
    args.extend(SMALL);
    ok(&enspost(&args));
    for f in ["obs.csv", "forecasts.csv", "forcing.csv", "precip_forecasts.csv", "synth_manifest.txt"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let obs = fs::read_to_string(dir.join("obs.csv")).unwrap();
    assert!(obs.starts_with("date,flow_cms\n"));
    assert_eq!(obs.lines().count(), 1 + 731);
}

#[test]
fn staged_commands_reproduce_a_full_run() {
    let tmp = tempfile::tempdir().unwrap();
    let staged = tmp.path().join("staged");
    let full = tmp.path().join("full");
    for cmd in ["train", "postprocess", "verify"] {
        let mut args = vec!["--out", path(&staged), cmd];
        args.extend(SMALL);
        ok(&enspost(&args));
    }
    let mut args = vec!["--out", path(&full), "run"];
    args.extend(SMALL);
    let stdout = ok(&enspost(&args));
    assert!(stdout.contains("8 systems"), "{stdout}");
    for f in ["metrics.csv", "reliability.csv"] {
        assert_eq!(fs::read(staged.join(f)).unwrap(), fs::read(full.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_file_and_overrides_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.cfg");
    fs::write(&cfg, "# small experiment\nyears = 2\ntrain_years = 1\nepochs = 1\nhidden_size = 3\n").unwrap();
    let out = tmp.path().join("run");
    ok(&enspost(&["--config", path(&cfg), "--out", path(&out), "run", "--lookback=8"]));
    let record = fs::read_to_string(out.join("run.txt")).unwrap();
    assert!(record.contains("lookback = 8"), "{record}");
    assert!(record.contains("years = 2"), "{record}");
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = enspost(&["run", "--no_such_key", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_key"));

    let out = enspost(&["run", "--epochs"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("needs a value"));

    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("absent.cfg");
    let out = enspost(&["--config", path(&missing), "run"]);
    assert!(!out.status.success());
}
