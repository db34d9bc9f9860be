use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn svmpi(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svmpi"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = svmpi(dir, args);
    assert!(
        out.status.success(),
        "svmpi {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn field(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("report lacks {key}"))
        .to_owned()
}

fn num(report: &str, key: &str) -> f64 {
    field(report, key).parse().unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

fn ad1(dir: &Path) -> (PathBuf, PathBuf) {
    ok(dir, &["generate", "--ad", "AD1", "--m", "200", "--seed", "0", "--out", "train.csv"]);
    ok(dir, &["generate", "--ad", "AD1", "--m", "300", "--seed", "1", "--out", "test.csv"]);
    (dir.join("train.csv"), dir.join("test.csv"))
}

const SMALL_GRID: [&str; 4] = ["--c-grid", "1,8", "--width-grid", "0.5,2"];

#[test]
fn generate_counts_and_repeats() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--ad", "AD1", "--m", "800", "--seed", "0", "--out", "a.csv"]);
    ok(dir.path(), &["generate", "--ad", "AD1", "--m", "800", "--seed", "0", "--out", "b.csv"]);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 801);
}

#[test]
fn bad_dataset_name_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = svmpi(dir.path(), &["generate", "--ad", "AD9", "--out", "x.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("AD9"));
    assert!(files(dir.path()).is_empty());
}

#[test]
fn interval_report_bounds_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    ad1(dir.path());
    let mut args = vec!["interval", "--data", "train.csv", "--test", "test.csv", "--method", "ssvqr", "--q-bar", "0.025"];
    args.extend(SMALL_GRID);
    args.extend(["--timing", "false", "--out", "run"]);
    let report = ok(dir.path(), &args);
    assert!(num(&report, "test.picp") > 0.8);
    assert!(num(&report, "test.sparsity_lower_pct") > 0.0);
    assert_eq!(field(&report, "config.method"), "ssvqr");
    let saved = std::fs::read_to_string(dir.path().join("run.report.txt")).unwrap();
    assert_eq!(saved, report);
    let bounds = std::fs::read_to_string(dir.path().join("run.bounds.csv")).unwrap();
    assert_eq!(bounds.lines().next().unwrap(), "index,y,lower,upper");
    assert_eq!(bounds.lines().count(), 301);
    let csv = std::fs::read_to_string(dir.path().join("run.report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);

    let again = ok(dir.path(), &args);
    assert_eq!(again, report);

    let ev = ok(
        dir.path(),
        &["evaluate", "--interval", "run.interval.json", "--data", "test.csv", "--ad", "AD1", "--out", "ev"],
    );
    assert_eq!(num(&ev, "metrics.picp"), num(&report, "test.picp"));
    assert_eq!(num(&ev, "metrics.mpiw"), num(&report, "test.mpiw"));
    assert!(num(&ev, "metrics.rmse_lower") < 1.0);
    let evb = ok(dir.path(), &["evaluate", "--bounds", "run.bounds.csv", "--coverage", "0.95", "--out", "evb"]);
    assert_eq!(num(&evb, "metrics.picp"), num(&report, "test.picp"));
}

#[test]
fn interval_tunes_q_bar_when_not_fixed() {
    let dir = tempfile::tempdir().unwrap();
    ad1(dir.path());
    let mut args = vec!["interval", "--data", "train.csv", "--method", "svqr", "--q-bar-grid", "0.01,0.025,0.04"];
    args.extend(SMALL_GRID);
    args.extend(["--out", "run"]);
    let report = ok(dir.path(), &args);
    assert_eq!(field(&report, "selected.q_bar_tuned"), "true");
    assert!(["0.01", "0.025", "0.04"].contains(&field(&report, "selected.q_bar").as_str()));
    assert_eq!(field(&report, "bounds.source"), "validation");
}

#[test]
fn failure_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    ad1(dir.path());
    let before = files(dir.path());
    let out = svmpi(dir.path(), &["interval", "--data", "train.csv", "--c-grid=-1", "--out", "bad"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("c-grid"));
    let out = svmpi(dir.path(), &["interval", "--data", "missing.csv", "--out", "bad"]);
    assert!(!out.status.success());
    assert_eq!(files(dir.path()), before);
}

#[test]
fn config_precedence_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    ad1(dir.path());
    std::fs::write(dir.path().join("cfg.toml"), "c_grid = [2.0]\nwidth-grid = \"0.5\"\nmethod = \"lssvr\"\n").unwrap();
    let report = ok(
        dir.path(),
        &["gridsearch", "--data", "train.csv", "--config", "cfg.toml", "--method", "svqr", "--out", "gs"],
    );
    assert_eq!(field(&report, "config.method"), "svqr");
    assert_eq!(field(&report, "config.c-grid"), "2.0");
    assert_eq!(field(&report, "selected.c"), "2.0");
    let grid = std::fs::read_to_string(dir.path().join("gs.grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 2);

    std::fs::write(dir.path().join("bad.toml"), "bogus = 1\n").unwrap();
    let out = svmpi(dir.path(), &["gridsearch", "--data", "train.csv", "--config", "bad.toml", "--out", "x"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

/// Replaying the config embedded in a report reproduces its metrics.
#[test]
fn embedded_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    ad1(dir.path());
    let mut args = vec!["interval", "--data", "train.csv", "--test", "test.csv", "--method", "svqr", "--q-bar", "0.02"];
    args.extend(SMALL_GRID);
    args.extend(["--seed", "3", "--out", "first"]);
    let first = ok(dir.path(), &args);
    let mut toml = String::new();
    for line in first.lines() {
        let Some(rest) = line.strip_prefix("config.") else { continue };
        let (k, v) = rest.split_once('=').unwrap();
        if k == "config" || k == "out" || v == "none" {
            continue;
        }
        toml.push_str(&format!("{k} = {v:?}\n"));
    }
    std::fs::write(dir.path().join("replay.toml"), toml).unwrap();
    let second = ok(dir.path(), &["interval", "--config", "replay.toml", "--out", "second"]);
    for key in ["selected.c", "selected.width", "test.picp", "test.mpiw", "test.cp_lower", "validation.pice"] {
        assert_eq!(field(&first, key), field(&second, key), "{key}");
    }
}

#[test]
fn featsel_reports_reduction() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("a,b,c,d,y\n");
    for i in 0..80 {
        let t = i as f64 / 10.0;
        let (a, b, c, d) = (t.sin(), (1.7 * t).cos(), (0.3 * t).sin(), ((i * 7) % 11) as f64 / 11.0);
        csv.push_str(&format!("{a},{b},{c},{d},{}\n", 2.0 * a + 0.05 * d));
    }
    std::fs::write(dir.path().join("fs.csv"), csv).unwrap();
    let report = ok(dir.path(), &["featsel", "--data", "fs.csv", "--eps", "0.05", "--c", "1", "--out", "fs"]);
    assert_eq!(field(&report, "config.eps"), "0.05");
    assert_eq!(num(&report, "selection.eps"), 0.05);
    let pct = num(&report, "selection.reduced_features_pct");
    assert!((0.0..100.0).contains(&pct));
    assert!(field(&report, "selection.kept_columns").contains('a'));
    let w = std::fs::read_to_string(dir.path().join("fs.weights.csv")).unwrap();
    assert_eq!(w.lines().count(), 5);

    let report = ok(dir.path(), &["featsel", "--data", "fs.csv", "--columns", "a,2", "--out", "fs2"]);
    assert_eq!(num(&report, "selection.candidates"), 2.0);
    let out = svmpi(dir.path(), &["featsel", "--data", "fs.csv", "--eps", "1e9", "--out", "fs4"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no features kept"));
    assert_eq!(num(&String::from_utf8_lossy(&out.stdout), "selection.reduced_features_pct"), 100.0);
    let out = svmpi(dir.path(), &["featsel", "--data", "fs.csv", "--columns", "nope", "--out", "fs3"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown column"));
}

#[test]
fn conformal_fixed_seed_trials_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    ad1(dir.path());
    let report = ok(
        dir.path(),
        &["conformal", "--data", "train.csv", "--test", "test.csv", "--trials", "10", "--seed", "4", "--out", "cf"],
    );
    assert_eq!(num(&report, "summary.picp_std"), 0.0);
    assert_eq!(num(&report, "summary.mpiw_std"), 0.0);
    assert_eq!(field(&report, "trials.degenerate"), "0");
    let trials = std::fs::read_to_string(dir.path().join("cf.trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 11);
}

#[test]
fn conformal_warns_on_small_calibration() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["generate", "--ad", "AD1", "--m", "20", "--out", "tiny.csv"]);
    let out = svmpi(
        dir.path(),
        &["conformal", "--data", "tiny.csv", "--test", "tiny.csv", "--alpha", "0.05", "--out", "cf"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let report = String::from_utf8(out.stdout).unwrap();
    assert_eq!(field(&report, "trials.degenerate"), "1");
    assert_eq!(field(&report, "calibration.offset"), "inf");
}

#[test]
fn forecast_points_and_headerless_input() {
    let dir = tempfile::tempdir().unwrap();
    let values: String = (0..120).map(|t| format!("{}\n", 5.0 + (t as f64 * 0.5).sin())).collect();
    std::fs::write(dir.path().join("s.csv"), values).unwrap();
    let report = ok(
        dir.path(),
        &[
            "forecast", "--data", "s.csv", "--no-header", "--lags", "2,4", "--c-grid", "1", "--width-grid", "1", "--out", "fc",
        ],
    );
    let test_len: usize = field(&report, "split.test").parse().unwrap();
    assert_eq!(test_len, 36);
    let points = std::fs::read_to_string(dir.path().join("fc.points.csv")).unwrap();
    assert_eq!(points.lines().next().unwrap(), "index,y_true,lower,upper");
    assert_eq!(points.lines().count(), test_len + 1);
    assert!(num(&report, "test.train_seconds") >= 0.0);
    assert!(num(&report, "test.sparsity_lower_pct") >= 0.0);
}
