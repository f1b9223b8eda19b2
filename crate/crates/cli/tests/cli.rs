use std::path::Path;
use std::process::{Command, Output};

use convexmix::mixture::run_from;
use convexmix::signals::{generate, read_trajectory, SequenceKind, SequenceSpec};
use convexmix::{MixtureParams, MixtureState, Mode, OracleStats};
use serde_json::Value;

fn convexmix(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convexmix"))
        .current_dir(dir)
        .env_remove("CONVEXMIX_TOL")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn f(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn case1_best_weight_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = convexmix(dir.path(), &["run", "--case", "1", "--n", "10000", "--mode", "project"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(f(&s, "best_beta"), 1.0);
    assert_eq!(f(&s, "loss_best"), 0.0);
    assert_eq!(s["theorem_valid"], Value::Bool(true));
    assert!(f(&s, "regret") <= f(&s, "bound_total"));
}

#[test]
fn case2_best_weight() {
    let dir = tempfile::tempdir().unwrap();
    let o = convexmix(dir.path(), &["run", "--case", "2", "--n", "10000"]);
    assert_eq!(code(&o), 0);
    let s = json(&dir.path().join("summary.json"));
    assert!((f(&s, "best_beta") - 0.9601).abs() < 1e-4, "{s}");
}

#[test]
fn summary_matches_last_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = convexmix(
        dir.path(),
        &["run", "--case", "2", "--n", "777", "--out", "out/t.csv", "--summary", "out/s.json"],
    );
    assert_eq!(code(&o), 0);
    let rows = read_trajectory(dir.path().join("out/t.csv")).unwrap();
    let s = json(&dir.path().join("out/s.json"));
    let last = rows.last().unwrap();
    assert_eq!(rows.len(), 777);
    assert_eq!(s["n"].as_u64(), Some(777));
    assert_eq!(last.cum_loss, f(&s, "loss_alg"));
    assert_eq!(last.best_beta_prefix, f(&s, "best_beta"));
    assert_eq!(last.best_loss_prefix, f(&s, "loss_best"));
    assert_eq!(last.regret, f(&s, "regret"));
    assert_eq!(last.norm_regret, f(&s, "normalized_regret"));
    assert_eq!(last.bound_norm, f(&s, "bound_normalized"));
    assert_eq!(rows.iter().filter(|r| r.projected).count() as f64, f(&s, "projected_steps"));
}

#[test]
fn input_rows_are_preserved() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("y,yhat1,yhat2\n");
    for i in 0..137 {
        let x = (i as f64 * 0.37).sin();
        body += &format!("{},{},{}\n", x, 0.9 * x, -0.2 * x + 0.1);
    }
    std::fs::write(dir.path().join("data.csv"), body).unwrap();
    let o = convexmix(
        dir.path(),
        &["run", "--input", "data.csv", "--mu", "0.05", "--ybound", "1", "--lambda-plus", "0.1"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_trajectory(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(rows.len(), 137);
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["mode"], "monitor");
    assert_eq!(f(&s, "mu"), 0.05);
}

#[test]
fn windowed_regret_matches_fresh_computation() {
    let dir = tempfile::tempdir().unwrap();
    let o = convexmix(dir.path(), &["run", "--case", "2", "--n", "3000", "--window", "1201:2400"]);
    assert_eq!(code(&o), 0);
    let w = json(&dir.path().join("summary.json"))["window"].clone();

    let seq = generate(&SequenceSpec::new(SequenceKind::Case2, 3000, 0.54)).unwrap();
    let params = MixtureParams::new(0.04, 0.08, 0.54, Mode::Project).unwrap();
    let full = run_from(&params, MixtureState::default(), &seq.samples).unwrap();
    let start = full.records[1200];
    let slice = &seq.samples[1200..2400];
    let state = MixtureState { rho: start.rho_before, lambda: start.lambda_before, t: 1 };
    let rerun = run_from(&params, state, slice).unwrap();
    let best = OracleStats::from_samples(slice).best_beta().unwrap();
    let c = convexmix::TheoremConstants::from_mu(0.04, 0.54, 0.08).unwrap();
    let regret = rerun.total_loss() - c.loss_factor() * best.loss;

    assert_eq!(w["start"].as_u64(), Some(1201));
    assert_eq!(w["end"].as_u64(), Some(2400));
    assert!((f(&w, "loss_alg") - rerun.total_loss()).abs() <= 1e-9 * rerun.total_loss());
    assert!((f(&w, "best_beta") - best.beta).abs() <= 1e-12);
    assert!((f(&w, "regret") - regret).abs() <= 1e-9 * regret.abs().max(1.0));
    assert!(f(&w, "regret") <= f(&w, "bound_total"));
}

#[test]
fn run_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run"][..],
        &["run", "--case", "1", "--input", "x.csv"],
        &["run", "--case", "1", "--mu", "0.1", "--eps", "0.1"],
        &["run", "--case", "3"],
        &["run", "--input", "missing.csv", "--ybound", "1"],
        &["run", "--case", "1", "--window", "9:3"],
        &["run", "--case", "1", "--mu", "50"],
        &["run", "--case", "1", "--mode", "sideways"],
    ] {
        assert_eq!(code(&convexmix(dir.path(), args)), 2, "{args:?}");
    }
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"case": 2, "n": 50, "mu": 0.02, "summary": "from_cfg.json"}"#,
    )
    .unwrap();
    let o = convexmix(dir.path(), &["run", "--config", "cfg.json", "--n", "40"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&dir.path().join("from_cfg.json"));
    assert_eq!(s["n"].as_u64(), Some(40));
    assert_eq!(f(&s, "mu"), 0.02);

    std::fs::write(dir.path().join("bad.json"), r#"{"cse": 2}"#).unwrap();
    assert_eq!(code(&convexmix(dir.path(), &["run", "--config", "bad.json"])), 2);
}

#[test]
fn spec_file_source() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("seq.json"),
        r#"{"kind": "square_wave", "level": 0.5, "period": 10, "n": 200, "y_bound": 1.0}"#,
    )
    .unwrap();
    let o = convexmix(dir.path(), &["run", "--spec", "seq.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_trajectory(dir.path().join("trajectory.csv")).unwrap().len(), 200);
}

#[test]
fn verify_passes_on_theorem_constants() {
    let dir = tempfile::tempdir().unwrap();
    let o = convexmix(
        dir.path(),
        &["verify", "--trials", "100", "--n", "500", "--seed", "7", "--eps", "0.1", "--ybound", "1", "--lambda-plus", "0.08"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&dir.path().join("verify_report.json"));
    assert_eq!(r["passed"], Value::Bool(true));
    assert_eq!(f(&r, "tolerance"), 1e-9);
}

#[test]
fn verify_minimal_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let o = convexmix(dir.path(), &["verify", "--trials", "1", "--n", "1", "--seed", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&dir.path().join("verify_report.json"))["trials"].as_u64(), Some(1));

    let a = convexmix::TheoremConstants::from_eps(0.1, 1.0, 0.08).unwrap().a;
    let doubled = format!("{}", 2.0 * a);
    let o = convexmix(dir.path(), &["verify", "--trials", "3", "--n", "50", "--override-a", &doubled, "--out", "r.json"]);
    assert_eq!(code(&o), 1);
    let r = json(&dir.path().join("r.json"));
    let ident = r["suites"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == "constant_identities")
        .unwrap();
    assert!(ident["failures"].as_u64().unwrap() >= 1);
    assert!(r["failures"].as_array().unwrap().iter().any(|f| f["seed"].is_u64()));
}

#[test]
fn verify_reports_env_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_convexmix"))
        .current_dir(dir.path())
        .env("CONVEXMIX_TOL", "1e-6")
        .args(["verify", "--trials", "1", "--n", "20"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(f(&json(&dir.path().join("verify_report.json")), "tolerance"), 1e-6);
}

#[test]
fn audit_theorem_constants() {
    let dir = tempfile::tempdir().unwrap();
    let o = convexmix(
        dir.path(),
        &["lemma-audit", "--eps", "0.1", "--ybound", "1", "--lambda-plus", "0.08", "--budget", "10000"],
    );
    assert_eq!(code(&o), 0);
    let r = json(&dir.path().join("lemma_audit.json"));
    let second = &r["constructions"][1]["report"];
    assert!((f(second, "progress") - 0.1205).abs() < 5e-4);
    assert_eq!(second["violated"], Value::Bool(false));
    assert_eq!(r["evaluated"].as_u64(), Some(10000));
    assert_eq!(r["witness_count"].as_u64(), Some(0));
}

#[test]
fn audit_small_b_finds_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let o = convexmix(
        dir.path(),
        &["lemma-audit", "--a", "0.0586", "--b", "0.005", "--mu", "1.03", "--ybound", "1", "--lambda-plus", "0.08"],
    );
    assert_eq!(code(&o), 1);
    let r = json(&dir.path().join("lemma_audit.json"));
    let w = r["witnesses"].as_array().unwrap();
    assert!(!w.is_empty());
    assert!(f(&w[0]["report"], "margin") < -1e-9);
}

#[test]
fn audit_budget_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = convexmix(dir.path(), &["lemma-audit", "--budget", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&dir.path().join("lemma_audit.json"))["evaluated"].as_u64(), Some(1));
    assert_eq!(code(&convexmix(dir.path(), &["lemma-audit", "--a", "0.1", "--b", "0.1"])), 2);
    assert_eq!(code(&convexmix(dir.path(), &["lemma-audit", "--a", "-1", "--b", "0.1", "--mu", "1"])), 2);
    assert_eq!(code(&convexmix(dir.path(), &["lemma-audit", "--eps", "0.1", "--lambda-plus", "0.6"])), 2);
}

#[test]
fn plot_is_deterministic_and_bound_dominates() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&convexmix(dir.path(), &["run", "--case", "1"])), 0);
    let rows = read_trajectory(dir.path().join("trajectory.csv")).unwrap();
    assert!(rows.iter().all(|r| r.bound_norm > r.norm_regret));

    assert_eq!(code(&convexmix(dir.path(), &["plot", "--input", "trajectory.csv", "--out", "a.svg"])), 0);
    assert_eq!(code(&convexmix(dir.path(), &["plot", "--input", "trajectory.csv", "--out", "b.svg"])), 0);
    let a = std::fs::read(dir.path().join("a.svg")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.svg")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains(r#"id="regret""#) && text.contains(r#"id="bound""#));
    assert!(text.contains("ln2"));

    assert_eq!(code(&convexmix(dir.path(), &["plot", "--input", "trajectory.csv", "--out", "l.svg", "--logx"])), 0);
    assert!(std::fs::read_to_string(dir.path().join("l.svg")).unwrap().contains("log scale"));
}

#[test]
fn plot_single_row_and_missing_columns() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&convexmix(dir.path(), &["run", "--case", "1", "--n", "1"])), 0);
    assert_eq!(code(&convexmix(dir.path(), &["plot", "--input", "trajectory.csv"])), 0);
    let svg = std::fs::read_to_string(dir.path().join("regret.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<circle").count(), 2);

    std::fs::write(dir.path().join("bad.csv"), "t,y,yhat1,yhat2\n1,0,0,0\n").unwrap();
    assert_eq!(code(&convexmix(dir.path(), &["plot", "--input", "bad.csv"])), 2);
}

#[test]
fn sweep_writes_ordered_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = convexmix(dir.path(), &["sweep", "--case", "2", "--n", "500", "--mu-list", "0.08,0.02,0.04", "--out", "sw"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    let mus: Vec<f64> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(mus, vec![0.02, 0.04, 0.08]);
    for k in 1..=3 {
        let s = json(&dir.path().join(format!("sw/summary_{k}.json")));
        assert_eq!(f(&s, "mu"), mus[k - 1]);
    }
    assert_eq!(code(&convexmix(dir.path(), &["sweep", "--case", "2", "--mu-list", "0.02", "--mu", "0.1"])), 2);
}
