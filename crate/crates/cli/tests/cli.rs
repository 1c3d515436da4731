use std::path::Path;
use std::process::{Command, Output};

use fgd_core::io::{format_signal_csv, read_signal_csv};
use fgd_core::methods::poly_detrend;
use fgd_core::pipeline::{fgd_pipeline, FgdConfig};

fn fgd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgd"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, n: &str) {
    let o = fgd(dir, &["synth", "corpus", "--n-scenarios", n]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn zero_scenarios_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fgd(tmp.path(), &["synth", "corpus", "--n-scenarios", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_scenarios"));
}

#[test]
fn missing_input_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let o = fgd(tmp.path(), &["dedrift", "nowhere.csv", "out.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere.csv"));
}

#[test]
fn malformed_csv_reports_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.csv"), "t_s,value\n0,1.0\n0.004,oops\n").unwrap();
    let o = fgd(tmp.path(), &["detect", "bad.csv", "events.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn infeasible_level_reports_the_maximum() {
    let tmp = tempfile::tempdir().unwrap();
    let mut text = String::from("t_s,value\n");
    for k in 0..200 {
        text.push_str(&format!("{},{}\n", k as f64 / 250.0, (k as f64 * 0.1).sin()));
    }
    std::fs::write(tmp.path().join("short.csv"), text).unwrap();
    let o = fgd(tmp.path(), &["dedrift", "short.csv", "out.csv", "--level", "7"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("maximum feasible level is 4"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("cfg.json"), r#"{"detect": {"kpeak": 2}}"#).unwrap();
    let o = fgd(tmp.path(), &["--config", "cfg.json", "synth", "corpus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn synth_writes_the_standard_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "2");
    for s in ["scenario_00", "scenario_01"] {
        let dir = tmp.path().join("corpus").join(s);
        for f in ["raw.csv", "clean.csv", "drift.csv", "noise.csv", "gaze.csv", "events.csv", "blinks.csv", "meta.json"] {
            assert!(dir.join(f).is_file(), "{s}/{f}");
        }
        let events = std::fs::read_to_string(dir.join("events.csv")).unwrap();
        assert_eq!(events.lines().count(), 17);
    }
    assert!(tmp.path().join("corpus/effective_config.json").is_file());
}

#[test]
fn dedrift_matches_the_library() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "1");
    let raw_path = tmp.path().join("corpus/scenario_00/raw.csv");
    let raw = read_signal_csv(&raw_path, None).unwrap();

    let o = fgd(tmp.path(), &["dedrift", "corpus/scenario_00/raw.csv", "out/fgd.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let want = format_signal_csv(&fgd_pipeline(&raw, &FgdConfig::default()).unwrap().dedrifted);
    assert_eq!(std::fs::read_to_string(tmp.path().join("out/fgd.csv")).unwrap(), want);

    let o = fgd(
        tmp.path(),
        &["dedrift", "corpus/scenario_00/raw.csv", "out/poly.csv", "--method", "poly", "--poly-order", "3"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let want = format_signal_csv(&poly_detrend(&raw, 3).unwrap().dedrifted);
    assert_eq!(std::fs::read_to_string(tmp.path().join("out/poly.csv")).unwrap(), want);
    let cfg = std::fs::read_to_string(tmp.path().join("out/effective_config.json")).unwrap();
    assert!(cfg.contains("\"poly_order\": 3"));
}

#[test]
fn single_method_compare_reports_that_method() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "2");
    let o = fgd(tmp.path(), &["compare", "corpus", "cmp", "--methods", "fgd"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("cmp/report.json")).unwrap()).unwrap();
    let methods = report["methods"].as_array().unwrap();
    assert_eq!(methods.len(), 1);
    assert_eq!(methods[0]["method"], "fgd");
    assert!(report["fgd_reduction_pct"].is_null());
}

#[test]
fn seeds_reproduce_and_differ() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |out: &str, seed: &str| {
        let o = fgd(tmp.path(), &["--seed", seed, "synth", out, "--n-scenarios", "1"]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(tmp.path().join(out).join("scenario_00/raw.csv")).unwrap()
    };
    let a = run("a", "5");
    assert_eq!(a, run("b", "5"));
    assert_ne!(a, run("c", "6"));
}
