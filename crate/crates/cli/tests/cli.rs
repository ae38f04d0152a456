use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minstrel-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn sweep(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["--out", out.to_str().unwrap(), "--dwell", "2", "--seed", "5"];
    args.extend_from_slice(extra);
    cli(&args)
}

fn csvs(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

#[test]
fn writes_one_csv_per_pair_and_reruns_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = sweep(out, &["--config", "no_int", "--mobility", "static,fast"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2);
    }
    assert_eq!(csvs(&a), ["no_int_fast.csv", "no_int_static.csv"]);
    for name in csvs(&a) {
        let text = fs::read_to_string(a.join(&name)).unwrap();
        assert!(text.starts_with("bin_m,n_generated,n_dropped,plr,mean_latency_us,p99_latency_us\n"));
        assert_eq!(text.lines().count(), 51, "{name}");
        assert_eq!(text, fs::read_to_string(b.join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn all_mobilities() {
    let dir = tempfile::tempdir().unwrap();
    let o = sweep(dir.path(), &["--config", "hidden", "--mobility", "all"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        csvs(dir.path()),
        ["hidden_fast.csv", "hidden_medium.csv", "hidden_slow.csv", "hidden_static.csv"]
    );
}

#[test]
fn bad_names_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for args in [["--config", "loud"], ["--mobility", "sprint"]] {
        let o = sweep(dir.path(), &args);
        assert!(!o.status.success());
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("minstrel-sim: error:"), "{err}");
        assert!(err.contains(args[1]), "{err}");
    }
    assert!(csvs(dir.path()).is_empty());
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("plain-file");
    fs::write(&blocker, "x").unwrap();
    let o = sweep(&blocker, &["--config", "no_int", "--mobility", "static"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("plain-file"));
}

#[test]
fn parameter_file_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lossy.cfg");
    fs::write(&cfg, "error.data_per = 1.0\n").unwrap();
    let out = dir.path().join("out");
    let o = sweep(&out, &["--config", "no_int", "--mobility", "static", "--params", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("no_int_static.csv")).unwrap();
    // Every frame is corrupted, so every finished packet is a drop.
    let row: Vec<&str> = text.lines().nth(10).unwrap().split(',').collect();
    assert_eq!(row[0], "10");
    assert_eq!(row[1], row[2]);

    fs::write(&cfg, "mac.nonsense = 1\n").unwrap();
    let o = sweep(&out, &["--params", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("mac.nonsense"));
}

#[test]
fn full_scale_fills_each_bin() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&[
        "--out",
        dir.path().to_str().unwrap(),
        "--config",
        "no_int",
        "--mobility",
        "static",
        "--paper-scale",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("no_int_static.csv")).unwrap();
    for line in text.lines().skip(1) {
        let n: u64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(n, 60_000, "{line}");
    }
}
