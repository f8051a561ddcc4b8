use std::fs;
use std::path::Path;

use pragmatune::evaluator::{Evaluator, Status, EVAL_INDEX_ENV};
use pragmatune::optimizer::{best_so_far, tune, OptimizerError, TuneOptions};
use pragmatune::perfdb::{Clock, PerfDb};
use pragmatune::problem::Problem;
use pragmatune::surrogate::Learner;

// P0 picks the script's behaviour, P1 scales the printed time.
const MOLD: &str = r#"mode=#P0
case $mode in
  crash) exit 3 ;;
  mute) echo quiet; exit 0 ;;
  sleep) sleep 5; echo 1.0 ;;
esac
echo "run $PRAGMATUNE_EVAL_INDEX" >&2
echo "0.#P1"
"#;

fn problem(dir: &Path, modes: &[&str], compile: &str, timeout: f64) -> Problem {
    let values: Vec<String> = modes.iter().map(|m| format!("\"{m}\"")).collect();
    let text = format!(
        r#"{{
  "name": "script",
  "mold": "script.sh",
  "params": [
    {{"name": "P0", "kind": "categorical", "values": [{}], "default": "{}"}},
    {{"name": "P1", "kind": "ordinal", "values": ["9", "7", "5", "3"], "default": "9"}}
  ],
  "compile": "{compile}",
  "run": "sh {{bin}}",
  "repeats": 2,
  "aggregation": "mean",
  "timeout_sec": {timeout}
}}"#,
        values.join(", "),
        modes[0]
    );
    fs::write(dir.join("script.sh"), MOLD).unwrap();
    fs::write(dir.join("script.json"), text).unwrap();
    Problem::load(&dir.join("script.json")).unwrap()
}

fn options(max_evals: usize, learner: Learner) -> TuneOptions {
    TuneOptions {
        max_evals,
        learner,
        n_init: 4,
        clock: Clock::Logical,
        ..TuneOptions::default()
    }
}

#[test]
fn failures_are_recorded_and_tuning_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let p = problem(tmp.path(), &["ok", "crash", "mute", "sleep"], "cp {src} {bin}", 0.5);
    assert_eq!(p.space.size().unwrap(), 16);
    let out = tmp.path().join("out");
    let mut eval = p.compiled_evaluator(&out).unwrap();
    let mut db = PerfDb::create(&p.space, &out).unwrap();
    let r = tune(&p.space, &options(16, Learner::RandomForest), &mut eval, &mut db).unwrap();

    let loaded = PerfDb::load(&p.space, &out).unwrap();
    assert_eq!(loaded.records(), db.records());
    let statuses: Vec<Status> = loaded.records().iter().map(|r| r.status).collect();
    assert!(statuses.contains(&Status::Ok));
    for rec in loaded.records() {
        let mode = rec.config.value(&p.space, "P0").unwrap();
        let want = match mode {
            "ok" => Status::Ok,
            "crash" | "mute" => Status::RunError,
            "sleep" => Status::Timeout,
            _ => unreachable!(),
        };
        assert_eq!(rec.status, want, "{mode}");
    }
    // every "ok" configuration prints 0.<P1>, so the best is 0.3
    assert_eq!(r.best.objective, Some(0.3));
    assert_eq!(r.best.config.value(&p.space, "P0"), Some("ok"));
    let trace = best_so_far(&r.trace).unwrap();
    assert!(trace.windows(2).all(|w| w[1].1 <= w[0].1));
}

#[test]
fn compile_errors_everywhere_mean_no_success() {
    let tmp = tempfile::tempdir().unwrap();
    let p = problem(tmp.path(), &["ok", "crash"], "false {src} {bin}", 5.0);
    let out = tmp.path().join("out");
    let mut eval = p.compiled_evaluator(&out).unwrap();
    let mut db = PerfDb::create(&p.space, &out).unwrap();
    let r = tune(&p.space, &options(5, Learner::ExtraTrees), &mut eval, &mut db);
    assert!(matches!(r, Err(OptimizerError::NoSuccessfulEvaluation)));
    assert_eq!(db.len(), 5);
    assert_eq!(db.counts().failed, 5);
    assert!(db.records().iter().all(|r| r.status == Status::CompileError));
}

#[test]
fn each_evaluation_builds_in_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let p = problem(tmp.path(), &["ok"], "cp {src} {bin}", 5.0);
    let out = tmp.path().join("out");
    let mut eval = p.compiled_evaluator(&out).unwrap();
    let config = p.space.default_configuration();
    let m = eval.evaluate(7, &config).unwrap();
    assert_eq!(m.status, Status::Ok);
    assert_eq!(m.runs, [0.9, 0.9]);
    let src = fs::read_to_string(out.join("eval_7/script.sh")).unwrap();
    assert!(src.starts_with("mode=ok\n"));
    assert!(src.contains("echo \"0.9\""));
    assert!(out.join("eval_7/script").is_file());
    assert_eq!(EVAL_INDEX_ENV, "PRAGMATUNE_EVAL_INDEX");
}

#[test]
fn mock_and_gp_runs_share_the_duplicate_accounting() {
    let p = pragmatune::corpus::load("mock_tiny").unwrap();
    let mut eval = p.mock_evaluator().unwrap();
    let mut db = PerfDb::in_memory(&p.space).unwrap();
    let r = tune(&p.space, &options(120, Learner::GaussianProcess), &mut eval, &mut db).unwrap();
    assert_eq!(r.proposed, 120);
    assert_eq!(r.evaluated + db.counts().duplicate, 120);
    assert_eq!(r.evaluated, db.counts().ok);
    assert!(db.records().iter().filter(|r| r.status == Status::Duplicate).all(|d| {
        let first = &db.records()[d.duplicate_of.unwrap() - 1];
        first.config == d.config && first.status == Status::Ok
    }));
}
