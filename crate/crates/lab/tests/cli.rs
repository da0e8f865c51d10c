use std::path::PathBuf;
use std::process::Command;

use mail_lab::{emit_csv, run, ExperimentConfig, LabError, RunRecord};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mail-lab"))
}

fn default_config() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

#[test]
fn default_config_run_twice_is_byte_identical() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut outputs = Vec::new();
    for d in &dirs {
        let status = bin().arg("run").arg("--config").arg(default_config()).arg("--out").arg(d.path()).status().unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(d.path().join("gridworld_bc.csv")).unwrap());
        assert!(d.path().join("gridworld_bc_nash_gap.svg").exists());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.pop().unwrap()).unwrap();
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn default_sweep_records() {
    let cfg = ExperimentConfig::load(default_config()).unwrap();
    let recs = run(&cfg).unwrap();
    assert_eq!(recs.len(), 20);
    // seeds outermost, budgets in config order
    assert_eq!((recs[0].seed, recs[0].budget), (42, 10));
    assert_eq!((recs[4].seed, recs[4].budget), (42, 500));
    assert_eq!((recs[19].seed, recs[19].budget), (789, 500));
    for r in &recs {
        assert!(r.error.is_none(), "{r:?}");
        assert!(r.nash_gap.unwrap() >= 0.0);
        assert!(r.wall_ms.is_none());
        // one joint query per step; Gridworld episodes last at most H steps
        assert!(r.expert_queries.unwrap() <= r.budget * 10);
        assert!(r.expert_queries.unwrap() >= r.budget);
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let cfg = ExperimentConfig::load(default_config()).unwrap();
    let mut a = Vec::new();
    emit_csv(&run(&cfg).unwrap(), &mut a).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let mut b = Vec::new();
    pool.install(|| emit_csv(&run(&cfg).unwrap(), &mut b).unwrap());
    assert_eq!(a, b);
}

#[test]
fn empty_budgets_is_config_error() {
    let text = std::fs::read_to_string(default_config()).unwrap().replace("[10, 50, 100, 200, 500]", "[]");
    assert!(matches!(ExperimentConfig::from_toml(&text), Err(LabError::Config(_))));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let status = bin().arg("run").arg("--config").arg(&path).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn single_record_csv_has_two_lines() {
    let rec = RunRecord {
        seed: 1,
        env: "chain{len=4}".into(),
        feature_map: "tabular".into(),
        algorithm: "bc".into(),
        budget: 5,
        expert_queries: Some(20),
        nash_gap: Some(0.0),
        train_loglik: Some(0.0),
        expected_tv_to_expert: Some(0.0),
        wall_ms: None,
        error: None,
    };
    let mut out = Vec::new();
    emit_csv(&[rec], &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 2);
}

#[test]
fn failing_runs_are_recorded_and_exit_one() {
    // a negative step size is rejected inside every run, not at load time
    let dir = tempfile::tempdir().unwrap();
    let custom = dir.path().join("features.json");
    std::fs::write(&custom, r#"{"name":"short","dim":1,"entries":[{"player":1,"state":0,"action":0,"phi":[0.5,0.5]}]}"#).unwrap();
    let text = "env = \"chain{len=3}\"\nfeature_map = \"tabular\"\nalgorithm = \"bc\"\nbudgets = [1, 2]\nseeds = [1]\n[bc]\nstep_size = -1.0\n";
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let recs = run(&cfg).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| r.error.is_some() && r.nash_gap.is_none()));
    let path = dir.path().join("bad_runs.toml");
    std::fs::write(&path, text).unwrap();
    let status = bin().arg("run").arg("--config").arg(&path).arg("--out").arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let csv = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    // an unusable custom table is a setup problem, hence a config error
    let text = format!(
        "env = \"chain{{len=3}}\"\nfeature_map = \"custom{{path={}}}\"\nalgorithm = \"bc\"\nbudgets = [1]\nseeds = [1]\n",
        custom.display()
    );
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    assert!(matches!(run(&cfg), Err(LabError::Config(_))));
}

#[test]
fn every_algorithm_runs_on_the_chain() {
    for (alg, expert) in [("bc", "nash"), ("lsvi-ucb-zero-bc", "nash"), ("uniform-explore-bc", "nash"), ("lsvi-ucb-zero-bc", "qre{eta=5}")] {
        let text = format!(
            "env = \"chain{{len=4}}\"\nfeature_map = \"tabular\"\nalgorithm = \"{alg}\"\nexpert = \"{expert}\"\nbudgets = [4, 16]\nseeds = [1, 2]\n[exploration]\nbeta = 3.0\n"
        );
        let recs = run(&ExperimentConfig::from_toml(&text).unwrap()).unwrap();
        assert_eq!(recs.len(), 4);
        for r in &recs {
            assert!(r.error.is_none(), "{alg}: {r:?}");
            let q = r.expert_queries.unwrap();
            let cap = if alg == "bc" { r.budget * 4 } else { 2 * r.budget * 4 };
            assert!(q <= cap && q > 0, "{alg}: {q} queries for budget {}", r.budget);
        }
    }
}

#[test]
fn plot_subcommand_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin().arg("run").arg("--config").arg(default_config()).arg("--out").arg(dir.path()).status().unwrap();
    assert!(status.success());
    let csv = dir.path().join("gridworld_bc.csv");
    let out = dir.path().join("tv.svg");
    let status = bin()
        .args(["plot", "--metric", "expected_tv_to_expert", "--x", "budget", "--csv"])
        .arg(&csv)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(std::fs::read_to_string(out).unwrap().contains("<polyline"));
    let status = bin().args(["plot", "--metric", "bogus", "--csv"]).arg(&csv).status().unwrap();
    assert_eq!(status.code(), Some(2));
}
