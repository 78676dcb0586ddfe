use std::path::Path;
use std::process::{Command, Output};

fn admitfair(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_admitfair"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = admitfair(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn subcommands_chain_from_generation_to_audit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(out, &["--seed", "7", "generate"]);
    let synthetic = out.join("synthetic.csv");
    assert_eq!(std::fs::read_to_string(&synthetic).unwrap().lines().count(), 401);

    ok(out, &["clean", "--input", path(&synthetic)]);
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("cleaning_log.json")).unwrap()).unwrap();
    assert_eq!(log["rows_after"], 361);
    let cleaned = out.join("cleaned.csv");

    ok(out, &["train", "--input", path(&cleaned), "--model", "naive_bayes"]);
    let model = out.join("model.json");
    assert!(model.is_file());

    ok(out, &["evaluate", "--input", path(&cleaned), "--model", path(&model)]);
    let predictions = out.join("predictions.csv");
    let text = std::fs::read_to_string(&predictions).unwrap();
    assert!(text.starts_with("row_id,label,probability,prediction,gender,parental_education"));
    assert_eq!(text.lines().count(), 362);

    ok(out, &["audit", "--predictions", path(&predictions)]);
    let fairness: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("fairness.json")).unwrap()).unwrap();
    assert_eq!(fairness["attributes"].as_array().unwrap().len(), 2);

    ok(out, &["explain", "--input", path(&cleaned), "--model", path(&model)]);
    assert!(out.join("importance.csv").is_file());

    ok(out, &["augment", "--input", path(&cleaned)]);
    let augmented = std::fs::read_to_string(out.join("augmented.csv")).unwrap();
    assert!(augmented.lines().next().unwrap().ends_with("LLM_score"));
}

#[test]
fn explain_of_a_logistic_model_reports_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(out, &["generate", "--rows", "150", "--anomalies", "0"]);
    let data = out.join("synthetic.csv");
    ok(out, &["train", "--input", path(&data)]);
    ok(out, &["explain", "--input", path(&data), "--model", path(&out.join("model.json"))]);
    let csv = std::fs::read_to_string(out.join("importance.csv")).unwrap();
    assert!(csv.contains("coefficient"));
    assert!(csv.contains("permutation"));
}

#[test]
fn run_then_report_summarizes_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let config = out.join("run.toml");
    std::fs::write(&config, "seed = 11\n[data.synthetic]\nrows = 200\nanomalies = 20\n[cv]\nk = 5\n").unwrap();
    ok(out, &["--config", path(&config), "run"]);
    for f in ["report.json", "model.json", "correlation.csv", "accuracy_before_after.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let summary = ok(out, &["report", "--input", path(&out.join("report.json"))]);
    assert!(summary.contains("selected"), "{summary}");
    assert!(out.join("summary.txt").is_file());
}

#[test]
fn usage_errors_exit_2_and_runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(admitfair(out, &["audit"]).status.code(), Some(2));
    assert_eq!(admitfair(out, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(admitfair(out, &["train", "--input", "x.csv", "--model", "svm"]).status.code(), Some(2));

    let missing = admitfair(out, &["clean", "--input", path(&out.join("nope.csv"))]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: "));

    let bad_config = out.join("bad.toml");
    std::fs::write(&bad_config, "[cv]\nk = 1\n").unwrap();
    assert_eq!(admitfair(out, &["--config", path(&bad_config), "run"]).status.code(), Some(1));
}
