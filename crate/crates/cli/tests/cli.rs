use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dkf() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dkf"));
    c.env_remove("DKF_THREADS").env_remove("RUST_LOG");
    c
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_into(cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    dkf().arg("run").arg(cfg).arg("--out").arg(out).args(extra).output().unwrap()
}

#[test]
fn validate_shipped_examples() {
    for name in ["paper_example1.cfg", "paper_example2.cfg"] {
        let o = dkf().arg("validate").arg(example(name)).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        let text = stdout(&o);
        assert!(text.contains("topology.strongly_connected"), "{text}");
        assert!(text.contains("observability"), "{text}");
    }
    let o = dkf().arg("validate").arg(example("paper_example1.cfg")).output().unwrap();
    assert!(stdout(&o).contains("A_k singular at k = 1, 5, 13, 17"), "{}", stdout(&o));
}

#[test]
fn validate_json_is_machine_readable() {
    let o = dkf().args(["validate", "--json"]).arg(example("paper_example1.cfg")).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["strongly_connected"], true);
}

#[test]
fn disconnected_topology_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "split.cfg",
        r#"{"model": {"preset": "paper_example_1"},
            "topology": {"edges": {"nodes": 4, "links": [[1, 2], [3, 4]], "undirected": true}},
            "horizon": 20, "trials": 2, "seed": 1}"#,
    );
    let o = dkf().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("[warn] topology.strongly_connected"), "{}", stdout(&o));
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
}

#[test]
fn zero_measurement_noise_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "r0.cfg",
        r#"{"model": {"inline": {"state_dim": 1, "a": [[1.0]], "q": [[0.1]],
                       "sensors": [{"h": [[1.0]], "r": [[0.0]]}, {"h": [[1.0]], "r": [[1.0]]}]}},
            "topology": {"edges": {"nodes": 2, "links": [[1, 2]], "undirected": true}},
            "horizon": 5, "trials": 1, "seed": 0}"#,
    );
    let o = dkf().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("[FAIL] noise.r_positive_definite"), "{}", stdout(&o));
    let o = run_into(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "bad.cfg", "{\n  \"name\": \"x\",\n  \"horizon\": \n}");
    let o = dkf().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));
}

#[test]
fn small_run_writes_tables_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex1");
    let o = run_into(&example("paper_example1.cfg"), &out, &["--trials", "20", "--filters", "ckf,cdkf-adaptive,cdkf-constant", "--verbose-weights", "--dump-states"]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    for f in ["mse.csv", "consistency.csv", "dominance.csv", "weights.csv", "states.csv", "summary.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let mse = std::fs::read_to_string(out.join("mse.csv")).unwrap();
    assert_eq!(mse.lines().next(), Some("k,filter,mse,se,trace_sum"));
    assert_eq!(mse.lines().count(), 1 + 3 * 101);
    assert!(!mse.contains("table1"));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["trials"], 20);
    assert_eq!(summary["passed"], true);
}

#[test]
fn runs_are_reproducible_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example("paper_example2.cfg");
    let a = run_into(&cfg, &dir.path().join("a"), &["--trials", "1", "--seed", "7"]);
    let b = dkf().env("DKF_THREADS", "3").arg("run").arg(&cfg).arg("--out").arg(dir.path().join("b")).args(["--trials", "1", "--seed", "7"]).output().unwrap();
    assert!(a.status.code().is_some_and(|c| c == 0 || c == 3));
    assert_eq!(a.status.code(), b.status.code());
    for f in ["mse.csv", "dominance.csv", "summary.json"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(f)).unwrap(), std::fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    let c = run_into(&cfg, &dir.path().join("c"), &["--trials", "1", "--seed", "8"]);
    assert!(c.status.code().is_some());
    assert_ne!(std::fs::read(dir.path().join("a/mse.csv")).unwrap(), std::fs::read(dir.path().join("c/mse.csv")).unwrap());
}

#[test]
fn failed_acceptance_check_exits_three() {
    // Equal-weight averaging trails the adaptive filter on this network.
    let dir = tempfile::tempdir().unwrap();
    let o = run_into(&example("paper_example1.cfg"), &dir.path().join("t1"), &["--trials", "40", "--filters", "table1,cdkf-adaptive"]);
    assert_eq!(o.status.code(), Some(3), "{}\n{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("[FAIL] ordering.table1<=cdkf-adaptive"), "{}", stdout(&o));
    assert!(dir.path().join("t1/summary.json").is_file());
}

#[test]
fn unknown_filter_is_a_usage_error() {
    let o = dkf().arg("run").arg(example("paper_example1.cfg")).args(["--filters", "ukf"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ukf"));
}

#[test]
fn compare_against_itself_has_zero_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("r");
    assert!(run_into(&example("paper_example1.cfg"), &run, &["--trials", "5", "--filters", "ckf,cdkf-adaptive,cdkf-constant"]).status.code().is_some());
    let merged = dir.path().join("merged.csv");
    let o = dkf().arg("compare").arg(&run).arg(&run).arg("--out").arg(&merged).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(&merged).unwrap();
    let header = reader.headers().unwrap().clone();
    let gaps: Vec<usize> = header.iter().enumerate().filter(|(_, h)| h.starts_with("gap:")).map(|(i, _)| i).collect();
    assert_eq!(gaps.len(), 3, "{header:?}");
    assert!(header.iter().any(|h| h == "r#2:cdkf-adaptive"));
    assert!(header.iter().any(|h| h == "r:dominance_min"));
    let mut rows = 0;
    for row in reader.records() {
        let row = row.unwrap();
        for &i in &gaps {
            assert_eq!(row[i].parse::<f64>().unwrap(), 0.0);
        }
        rows += 1;
    }
    assert_eq!(rows, 101);
}

#[test]
fn compare_pairs_runs_by_filter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example("paper_example1.cfg");
    run_into(&cfg, &dir.path().join("a"), &["--trials", "5", "--filters", "ckf,cdkf-constant"]);
    run_into(&cfg, &dir.path().join("b"), &["--trials", "5", "--seed", "3", "--filters", "cdkf-constant"]);
    let o = dkf().arg("compare").arg(dir.path().join("a")).arg(dir.path().join("b")).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let header = stdout(&o).lines().next().unwrap().to_string();
    let gaps: Vec<&str> = header.split(',').filter(|h| h.starts_with("gap:")).collect();
    assert_eq!(gaps, ["gap:cdkf-constant:b-a"]);
}

#[test]
fn compare_reports_missing_tables() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("r");
    run_into(&example("paper_example1.cfg"), &run, &["--trials", "2", "--filters", "ckf"]);
    std::fs::remove_file(run.join("mse.csv")).unwrap();
    let o = dkf().arg("compare").arg(&run).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mse.csv"), "{}", stderr(&o));

    let o = dkf().arg("compare").arg(dir.path().join("nowhere")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("does not exist"), "{}", stderr(&o));
}

#[test]
fn compare_rejects_horizon_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let short = write_cfg(
        dir.path(),
        "short.cfg",
        r#"{"name": "short", "model": {"preset": "paper_example_1"}, "topology": {"preset": "fig2_4cycle"},
            "horizon": 30, "trials": 2, "seed": 1, "filters": ["ckf"]}"#,
    );
    run_into(&short, &dir.path().join("s"), &[]);
    run_into(&example("paper_example1.cfg"), &dir.path().join("l"), &["--trials", "2", "--filters", "ckf"]);
    let o = dkf().arg("compare").arg(dir.path().join("s")).arg(dir.path().join("l")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("horizon mismatch"), "{}", stderr(&o));
}

#[test]
fn observability_report_lists_every_window_start() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("uco.csv");
    let o = dkf().arg("observability-report").arg(example("paper_example1.cfg")).args(["--window", "12", "--out"]).arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,alpha_hat,beta_hat,cond"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 100 - 12 + 1);
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r[0] as usize, k);
        assert!(r[1] > 0.0 && r[1] <= r[2], "{r:?}");
    }
    assert!(stderr(&o).contains("uniformly observable"));

    let o = dkf().arg("observability-report").arg(example("paper_example1.cfg")).args(["--window", "500"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_thread_count_is_rejected() {
    for bad in ["0", "many"] {
        let o = dkf().env("DKF_THREADS", bad).arg("validate").arg(example("paper_example1.cfg")).output().unwrap();
        assert_eq!(o.status.code(), Some(1), "{bad}");
        assert!(stderr(&o).contains("DKF_THREADS"), "{}", stderr(&o));
    }
}
