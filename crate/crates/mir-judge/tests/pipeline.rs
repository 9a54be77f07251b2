//! Integration tests for the end-to-end pipeline and the CLI surface.

use mir_judge::judge::{Judge, JudgeError, JudgeRequest, ModelParams, RemoteConfig, RemoteJudge, RetryPolicy};
use mir_judge::runner::{regenerate_report, run_experiment, ExperimentConfig};
use mir_judge::Task;
use std::path::Path;
use std::process::Command;
use std::time::Duration;

fn config_with(body: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml_str(body).unwrap()
}

/// Random judge on the key task at the reference corpus scale: 30 pieces x
/// 76 four-measure windows = 2280 labels at 30% corruption. The weighted
/// scores must land within twice the reference deviations of the random
/// baseline row: p 0.5779 +/- 0.018, r 0.4977 +/- 0.019, f 0.5186 +/- 0.018.
#[test]
fn random_key_run_reproduces_baseline_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_with(&format!(
        r#"
[experiment]
task = "key"
seed = 20240601
levels = ["basic"]
output_dir = "{}"

[corpus.synthetic]
pieces = 30
tempo_min = 110.0
tempo_max = 130.0
duration = 180.0

[judge]
kind = "random"

[segments]
policy = "measures"
measures = 4
count = 76
beats_per_measure = 4
"#,
        dir.path().display()
    ));
    let report = run_experiment(&config).unwrap();
    let level = &report.levels[0];
    assert_eq!(level.calls, 30 * 76);
    let prf = level.metrics.classification.as_ref().unwrap();
    assert_eq!(prf.support_correct + prf.support_incorrect, 2280);
    assert!(
        (prf.precision - 0.5779).abs() <= 0.018,
        "weighted precision {:.4} outside 0.5779 +/- 0.018",
        prf.precision
    );
    assert!(
        (prf.recall - 0.4977).abs() <= 0.019,
        "weighted recall {:.4} outside 0.4977 +/- 0.019",
        prf.recall
    );
    assert!(
        (prf.f1 - 0.5186).abs() <= 0.018,
        "weighted F {:.4} outside 0.5186 +/- 0.018",
        prf.f1
    );
}

/// Identical config and seed give byte-identical result files with a
/// deterministic judge, no cache involved.
#[test]
fn random_runs_are_reproducible() {
    let make = |dir: &Path| {
        config_with(&format!(
            r#"
[experiment]
task = "chord"
seed = 5150
levels = ["basic", "mask_task"]
output_dir = "{}"

[corpus.synthetic]
pieces = 3
tempo_min = 100.0
tempo_max = 120.0
duration = 40.0

[judge]
kind = "random"

[segments]
policy = "fixed_label_count"
label_count = 8
"#,
            dir.display()
        ))
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_experiment(&make(dir_a.path())).unwrap();
    run_experiment(&make(dir_b.path())).unwrap();
    for file in ["results.csv", "per_piece.csv"] {
        let a = std::fs::read(dir_a.path().join(file)).unwrap();
        let b = std::fs::read(dir_b.path().join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

/// Oracle runs stay perfect across every level for a multi-level sweep, and
/// the emitted CSV carries one row per level.
#[test]
fn multi_level_oracle_sweep_emits_all_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_with(&format!(
        r#"
[experiment]
task = "key"
seed = 31337
output_dir = "{}"

[corpus.synthetic]
pieces = 3
tempo_min = 95.0
tempo_max = 125.0
duration = 45.0
"#,
        dir.path().display()
    ));
    let report = run_experiment(&config).unwrap();
    assert_eq!(report.levels.len(), 5);
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 6); // header + 5 levels
    assert!(rows[1].starts_with("basic,"));
    assert!(rows[2].starts_with("introduce_scale,"));
    assert!(rows[5].starts_with("mask_domain,"));
    for level in &report.levels {
        let prf = level.metrics.classification.as_ref().unwrap();
        assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0), "{}", level.level_slug);
    }
}

/// The remote judge against a genuinely unreachable endpoint surfaces
/// RemoteUnavailable after the configured number of attempts.
#[test]
fn unreachable_endpoint_fails_after_bounded_retries() {
    std::env::set_var("MIR_JUDGE_PIPELINE_KEY", "k");
    let judge = RemoteJudge::new(RemoteConfig {
        // Port 1 refuses connections.
        endpoint: "http://127.0.0.1:1/v1/chat/completions".to_string(),
        api_key_env: "MIR_JUDGE_PIPELINE_KEY".to_string(),
        timeout: Duration::from_millis(400),
        retry: RetryPolicy { attempts: 3, initial_backoff: Duration::from_millis(1) },
    });
    let request = JudgeRequest::new(
        "prompt".to_string(),
        "hash".to_string(),
        Task::Key,
        ModelParams::default(),
    );
    match judge.judge(&request) {
        Err(JudgeError::RemoteUnavailable { attempts, .. }) => assert_eq!(attempts, 3),
        Err(JudgeError::Timeout { attempts }) => assert_eq!(attempts, 3),
        other => panic!("expected a remote failure, got {other:?}"),
    }
    assert_eq!(judge.remote_calls(), 3);
    std::env::remove_var("MIR_JUDGE_PIPELINE_KEY");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mir-judge"))
}

#[test]
fn cli_gen_corpus_writes_the_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["gen-corpus", "--out"])
        .arg(dir.path())
        .args(["--pieces", "2", "--seed", "9", "--duration", "20"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for piece in ["piece-000", "piece-001"] {
        for file in ["performance.mid", "beats.txt", "chords.txt", "key.txt"] {
            assert!(dir.path().join(piece).join(file).exists(), "{piece}/{file}");
        }
    }
}

#[test]
fn cli_run_stats_and_report_roundtrip() {
    let corpus = tempfile::tempdir().unwrap();
    let run_dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["gen-corpus", "--out"])
        .arg(corpus.path())
        .args(["--pieces", "2", "--seed", "4", "--duration", "40"])
        .status()
        .unwrap();
    assert!(status.success());

    let config_path = run_dir.path().join("exp.toml");
    std::fs::write(
        &config_path,
        format!(
            r#"
[experiment]
task = "key"
seed = 11
levels = ["basic"]
output_dir = "{}"

[corpus]
path = "{}"
"#,
            run_dir.path().join("out").display(),
            corpus.path().display()
        ),
    )
    .unwrap();

    // stats
    let out = bin().args(["stats", "--config"]).arg(&config_path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("#Notes"), "{stdout}");
    assert!(stdout.contains("#Tokens (per call)"), "{stdout}");

    // run (oracle by default), overriding the seed on the command line
    let out = bin()
        .args(["run", "--config"])
        .arg(&config_path)
        .args(["--seed", "12"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = run_dir.path().join("out").join("results.csv");
    let before = std::fs::read(&results).unwrap();

    // report regeneration from the archive
    let out = bin()
        .args(["report", "--run-dir"])
        .arg(run_dir.path().join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let after = std::fs::read(&results).unwrap();
    assert_eq!(before, after, "regenerated results.csv differs");
}

#[test]
fn cli_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.toml");
    std::fs::write(
        &config_path,
        r#"
[experiment]
task = "key"
output_dir = "/tmp/nowhere"
"#,
    )
    .unwrap();
    let out = bin().args(["run", "--config"]).arg(&config_path).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cli_partial_failure_exits_two_and_persists() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("exp.toml");
    std::fs::write(
        &config_path,
        format!(
            r#"
[experiment]
task = "key"
seed = 3
levels = ["basic"]
output_dir = "{}"

[corpus.synthetic]
pieces = 1
tempo_min = 120.0
tempo_max = 120.0
duration = 30.0

[judge]
kind = "remote"
endpoint = "http://127.0.0.1:1/v1/chat/completions"
api_key_env = "MIR_JUDGE_PARTIAL_KEY"
retry_attempts = 2
retry_backoff_ms = 1
timeout_ms = 300
"#,
            dir.path().join("out").display()
        ),
    )
    .unwrap();
    let out = bin()
        .env("MIR_JUDGE_PARTIAL_KEY", "k")
        .args(["run", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    // Partial artifacts persisted on abort.
    assert!(dir.path().join("out").join("corruption_logs.jsonl").exists());
    assert!(dir.path().join("out").join("responses.jsonl").exists());
    assert!(dir.path().join("out").join("meta.json").exists());
}

/// Regeneration reports the archived judge identity, not "replay".
#[test]
fn regenerated_reports_keep_judge_identity() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_with(&format!(
        r#"
[experiment]
task = "beat"
seed = 88
levels = ["basic"]
output_dir = "{}"

[corpus.synthetic]
pieces = 2
tempo_min = 100.0
tempo_max = 120.0
duration = 30.0

[judge]
kind = "random"
"#,
        dir.path().display()
    ));
    let original = run_experiment(&config).unwrap();
    assert_eq!(original.judge_id, "random");
    let regenerated = regenerate_report(dir.path()).unwrap();
    assert_eq!(regenerated.judge_id, "random");
    // Scores match exactly; cache accounting is volatile metadata.
    for (a, b) in original.levels.iter().zip(&regenerated.levels) {
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.per_piece, b.per_piece);
        assert_eq!(a.unparseable, b.unparseable);
        assert_eq!(a.calls, b.calls);
    }
}
