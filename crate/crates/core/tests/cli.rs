//! End-to-end tests of the `ccsc` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use ccsc::corpus::{dataset_path, reference_counts, save_category};
use ccsc::metrics::reference_results;
use ccsc::synth::{token_disjoint_category, write_reference_shaped_corpus};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ccsc"))
}

/// Writes the token-disjoint fixture as a one-category data root.
fn fixture_root(dir: &Path) -> PathBuf {
    let root = dir.join("data");
    let java = root.join("java");
    fs::create_dir_all(&java).unwrap();
    let dataset = token_disjoint_category(40, 10, 3);
    save_category(&dataset, &java.join("ownership.csv")).unwrap();
    root
}

fn train_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let data = fixture_root(dir);
    let models = dir.join("models");
    let output = bin()
        .args(["train", "--category", "java/ownership"])
        .arg("--data-root")
        .arg(&data)
        .arg("--out")
        .arg(&models)
        .args([
            "--learning-rate",
            "1e-2",
            "--epochs",
            "5",
            "--pair-iterations",
            "2",
            "--head-iterations",
            "200",
            "--seed",
            "5",
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "train failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    (data, models)
}

#[test]
fn ingest_full_corpus_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    write_reference_shaped_corpus(dir.path(), 1).unwrap();
    let output = bin()
        .args(["ingest", "--data-root"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("all 19 categories match"), "{stdout}");
}

#[test]
fn ingest_tampered_corpus_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    write_reference_shaped_corpus(dir.path(), 2).unwrap();
    // drop one data row from java/expand.csv
    let path = dir.path().join("java/expand.csv");
    let content = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = content.lines().collect();
    lines.remove(1);
    fs::write(&path, lines.join("\n") + "\n").unwrap();

    let output = bin()
        .args(["ingest", "--data-root"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("discrepancy"), "{stdout}");
    assert!(stdout.contains("java/Expand"), "{stdout}");
}

#[test]
fn ingest_empty_directory_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args(["ingest", "--data-root"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&output.stderr).contains("no categories found"),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn train_then_evaluate_reaches_perfect_f1_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let (data, models) = train_fixture(dir.path());
    assert!(models.join("java-ownership/manifest.json").is_file());
    assert!(models.join("run_config.json").is_file());

    let evaluate = |out: &Path| {
        let output = bin()
            .args(["evaluate", "--data-root"])
            .arg(&data)
            .arg("--artifacts")
            .arg(&models)
            .arg("--out")
            .arg(out)
            .arg("--plot")
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "evaluate failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        String::from_utf8_lossy(&output.stdout).to_string()
    };
    let out1 = dir.path().join("report1");
    let out2 = dir.path().join("report2");
    let stdout = evaluate(&out1);
    evaluate(&out2);

    assert!(stdout.contains("1.00"), "{stdout}");
    let csv = fs::read_to_string(out1.join("report.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("java,Ownership,10,0,10,0,1,1,1,1,1"), "{row}");
    assert!(out1.join("report.svg").is_file());
    assert!(out1.join("report.txt").is_file());

    // byte-identical re-run
    assert_eq!(
        fs::read(out1.join("report.csv")).unwrap(),
        fs::read(out2.join("report.csv")).unwrap()
    );
}

#[test]
fn classify_single_batch_and_variant_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let (_, models) = train_fixture(dir.path());
    let artifact = models.join("java-ownership");

    let output = bin()
        .args(["classify", "--artifact"])
        .arg(&artifact)
        .args(["--text", "Written by J. Doe @author", "--classname", "A.java"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.starts_with("java/Ownership\t1\t"), "{stdout}");

    // missing classname for a with-classname artifact is a usage error
    let output = bin()
        .args(["classify", "--artifact"])
        .arg(&artifact)
        .args(["--text", "Written by J. Doe @author"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    // batch mode: one output row per input line, order preserved
    let mut child = bin()
        .args(["classify", "--artifact"])
        .arg(&artifact)
        .args(["--batch", "--classname", "B.java"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"@author wrote this\ncomputes the cached value\nmaintainer contact @author\tC.java\n")
        .unwrap();
    let output = child.wait_with_output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    let rows: Vec<&str> = stdout.lines().collect();
    assert_eq!(rows.len(), 3, "{stdout}");
    assert!(rows[0].starts_with("java/Ownership\t1\t"), "{stdout}");
    assert!(rows[1].starts_with("java/Ownership\t0\t"), "{stdout}");
    assert!(rows[2].starts_with("java/Ownership\t1\t"), "{stdout}");
}

#[test]
fn tune_with_zero_trials_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture_root(dir.path());
    let output = bin()
        .args(["tune", "--category", "java/ownership", "--trials", "0"])
        .arg("--data-root")
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&output.stderr).contains("at least 1"),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn benchmark_reports_external_backends_as_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture_root(dir.path());
    let output = bin()
        .args([
            "benchmark",
            "--category",
            "java/ownership",
            "--backends",
            "all-mpnet-base-v2",
            "--n-per-class",
            "8",
        ])
        .arg("--data-root")
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(
        String::from_utf8_lossy(&output.stderr).contains("unavailable"),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Smallest (tp, fp) whose precision/recall/F1 round-trip closest to the
/// published two-decimal values.
fn reconstruct_confusion(pos: usize, neg: usize, p: f64, r: f64, f1: f64) -> (usize, usize) {
    let mut best = (f64::INFINITY, 0usize, 0usize);
    for tp in 0..=pos {
        let rr = tp as f64 / pos as f64;
        for fp in 0..=neg {
            let pp = if tp + fp == 0 {
                0.0
            } else {
                tp as f64 / (tp + fp) as f64
            };
            let ff = if pp + rr == 0.0 {
                0.0
            } else {
                2.0 * pp * rr / (pp + rr)
            };
            let err = (pp - p).powi(2) + (rr - r).powi(2) + (ff - f1).powi(2);
            if err < best.0 {
                best = (err, tp, fp);
            }
        }
    }
    (best.1, best.2)
}

#[test]
fn evaluate_stored_predictions_reproduces_published_submission_score() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_reference_shaped_corpus(&data, 4).unwrap();

    // build per-category prediction files hitting the published P/R/F1
    let preds_root = dir.path().join("preds");
    for published in reference_results() {
        let category = published.id();
        let entry = reference_counts()
            .into_iter()
            .find(|r| r.id() == category)
            .unwrap();
        let (tp, fp) = reconstruct_confusion(
            entry.test_pos,
            entry.test_neg,
            published.precision,
            published.recall,
            published.f1,
        );
        let (dataset, _) =
            ccsc::corpus::load_category(&dataset_path(&data, &category), &category).unwrap();
        let path = dataset_path(&preds_root, &category);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        let mut csv = String::from("comment_sentence_id,prediction\n");
        let mut remaining_tp = tp;
        let mut remaining_fp = fp;
        for sample in &dataset.test {
            let prediction = if sample.label {
                let hit = remaining_tp > 0;
                remaining_tp -= hit as usize;
                hit
            } else {
                let hit = remaining_fp > 0;
                remaining_fp -= hit as usize;
                hit
            };
            csv.push_str(&format!("{},{}\n", sample.id, prediction as u8));
        }
        fs::write(&path, csv).unwrap();
    }

    let out = dir.path().join("report");
    let output = bin()
        .args(["evaluate", "--data-root"])
        .arg(&data)
        .arg("--predictions")
        .arg(&preds_root)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "evaluate failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let submission: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("submission.json")).unwrap()).unwrap();
    let score = submission["submission_score"].as_f64().unwrap();
    let fraction = submission["outperformed_fraction"].as_f64().unwrap();
    let average = submission["average_f1"].as_f64().unwrap();
    assert!((score - 0.81).abs() <= 0.005, "score {score}");
    assert_eq!(fraction, 1.0);
    assert!((average - 0.74).abs() <= 0.005, "average {average}");

    // 19 category rows plus the averages row
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 19 + 1);

    // the report command re-renders the same CSV from its own output
    let rerender = dir.path().join("rerender");
    let output = bin()
        .args(["report", "--metrics"])
        .arg(out.join("report.csv"))
        .arg("--out")
        .arg(&rerender)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert_eq!(
        fs::read(out.join("report.csv")).unwrap(),
        fs::read(rerender.join("report.csv")).unwrap()
    );
}

#[test]
fn train_reads_config_file_with_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let data = fixture_root(dir.path());
    let models = dir.path().join("models");
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        serde_json::json!({
            "data_root": data,
            "output_root": models,
            "learning_rate": 1e-2,
            "epochs": 3,
            "pair_iterations": 2,
            "seed": 9,
            "categories": ["java/ownership"],
        })
        .to_string(),
    )
    .unwrap();

    let output = bin()
        .args(["train", "--config"])
        .arg(&config)
        .args(["--epochs", "4"]) // flag wins over the file's 3
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "train failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(models.join("run_config.json")).unwrap())
            .unwrap();
    assert_eq!(echo["resolved"]["hyperparams"]["epochs"], 4);
    assert_eq!(echo["resolved"]["seed"], 9);
    assert_eq!(
        echo["resolved"]["hyperparams"]["learning_rate"].as_f64().unwrap(),
        1e-2
    );
}
