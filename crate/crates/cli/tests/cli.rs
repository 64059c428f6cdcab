use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn fixture(rel: &str) -> String {
    root().join("fixtures").join(rel).display().to_string()
}

fn ppgpt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppgpt")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn pipeline(out: &Path) -> Output {
    ppgpt(&[
        "pipeline",
        "--config",
        &fixture("pipeline/ppgpt.conf"),
        "--contract",
        &fixture("envelope/envelope.msol"),
        "--function",
        "addEnvelope",
        "--out",
        out.to_str().unwrap(),
    ])
}

fn records(path: &Path) -> Vec<serde_json::Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn replayed_pipeline_is_deterministic_and_reports_the_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let (ra, rb) = (pipeline(&a), pipeline(&b));
    assert_eq!(code(&ra), 2, "{}", stderr(&ra));
    assert_eq!(code(&rb), 2);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ra.stdout, rb.stdout);

    let recs = records(&a);
    assert_eq!(recs.len(), 3);
    let scores: Vec<f64> = recs.iter().filter_map(|r| r["score"].as_f64()).collect();
    assert!(scores.windows(2).all(|w| w[0] >= w[1]));
    let rule = &recs[0];
    assert_eq!(rule["refEntryId"], "redpacket-create-rule");
    assert_eq!(rule["attempts"], 2);
    assert_eq!(rule["rank"], 1);
    assert_eq!(rule["verdict"], "Violated");
    let calls = rule["counterexample"]["calls"].as_array().unwrap();
    assert_eq!(calls.len(), 2);
    assert!(calls
        .iter()
        .all(|c| c.as_str().unwrap().contains("addEnvelope(\"uniqueID\"")));
    assert_eq!(recs[1]["verdict"], "Proven");
    assert_eq!(recs[2]["status"], "failed");
    assert_eq!(recs[2]["attempts"], 9);
    assert!(recs[2].get("verdict").is_none());

    let timings = records(&dir.path().join("a.jsonl.timings.jsonl"));
    assert_eq!(timings.len(), 3);
    let cands = dir.path().join("a.jsonl.candidates.jsonl");
    let stats = ppgpt(&["stats", "--candidates", cands.to_str().unwrap()]);
    let s: serde_json::Value = serde_json::from_slice(&stats.stdout).unwrap();
    assert_eq!((s["total"].as_u64(), s["compilable"].as_u64()), (Some(3), Some(2)));
}

#[test]
fn persisted_store_gives_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store.jsonl");
    let o = ppgpt(&[
        "ingest",
        "--config",
        &fixture("pipeline/ppgpt.conf"),
        "--out",
        store.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let conf = std::fs::read_to_string(fixture("pipeline/ppgpt.conf"))
        .unwrap()
        .replace(
            "knowledgePath = knowledge.jsonl",
            &format!("knowledgePath = {}", store.display()),
        )
        .replace(
            "provider.fixtures = replay.jsonl",
            &format!("provider.fixtures = {}", fixture("pipeline/replay.jsonl")),
        );
    let conf_path = dir.path().join("store.conf");
    std::fs::write(&conf_path, conf).unwrap();
    let a = dir.path().join("a.jsonl");
    pipeline(&a);
    let b = dir.path().join("b.jsonl");
    let o = ppgpt(&[
        "pipeline",
        "--config",
        conf_path.to_str().unwrap(),
        "--contract",
        &fixture("envelope/envelope.msol"),
        "--function",
        "addEnvelope",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn empty_knowledge_base_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("knowledge.jsonl"), "").unwrap();
    std::fs::write(dir.path().join("r.jsonl"), "").unwrap();
    let conf = dir.path().join("c.conf");
    std::fs::write(
        &conf,
        "knowledgePath = knowledge.jsonl\nprovider.mode = replay\nprovider.fixtures = r.jsonl\n",
    )
    .unwrap();
    let o = ppgpt(&[
        "pipeline",
        "--config",
        conf.to_str().unwrap(),
        "--contract",
        &fixture("envelope/envelope.msol"),
        "--function",
        "addEnvelope",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no reference properties"), "{}", stderr(&o));
}

#[test]
fn unknown_function_is_an_error() {
    let o = ppgpt(&[
        "pipeline",
        "--config",
        &fixture("pipeline/ppgpt.conf"),
        "--contract",
        &fixture("envelope/envelope.msol"),
        "--function",
        "missing",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown function `missing`"));
}

#[test]
fn verify_exit_codes() {
    let o = ppgpt(&[
        "verify",
        "--contract",
        &fixture("envelope/envelope.msol"),
        "--spec",
        &fixture("envelope/rule.psl"),
    ]);
    assert_eq!(code(&o), 2);
    let o = ppgpt(&[
        "verify",
        "--contract",
        &fixture("zklink/zklink.msol"),
        "--spec",
        &fixture("zklink/withdraw_first_post.psl"),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["verdict"], "Proven");
}

#[test]
fn check_reports_diagnostics() {
    let o = ppgpt(&[
        "check",
        "--contract",
        &fixture("psl/vault.msol"),
        "--spec",
        &fixture("psl/negative/statement_in_precondition.psl"),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("E0004"));
    let o = ppgpt(&[
        "check",
        "--contract",
        &fixture("psl/vault.msol"),
        "--spec",
        &fixture("psl/10_rule_basic.psl"),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = ppgpt(&[
        "check",
        "--contract",
        &fixture("envelope/envelope.msol"),
        "--spec",
        &fixture("envelope/rule.psl"),
        "--function",
        "envelopeCreator",
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("E0205"));
}

#[test]
fn rank_fits_training_records() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.jsonl");
    let w = [0.1, 0.5, 0.2, 0.2];
    let mut text = String::new();
    for i in 0..12 {
        let f: Vec<f64> = (0..4)
            .map(|j| (((i * 7 + j * 3) % 11) as f64) / 10.0 - 0.3 + (j as f64) * 0.01 * i as f64)
            .collect();
        let actual: f64 = f.iter().zip(w).map(|(a, b)| a * b).sum();
        text += &format!(
            "{{\"xRaw\":{},\"xSummary\":{},\"yRaw\":{},\"ySummary\":{},\"actual\":{actual}}}\n",
            f[0], f[1], f[2], f[3]
        );
    }
    std::fs::write(&p, text).unwrap();
    let o = ppgpt(&["rank", "--training", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let fit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((fit["raw"]["beta"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    for m in ["mae", "mse", "rmse", "r2", "mape", "mde"] {
        assert!(fit["metrics"][m].is_number(), "{m}");
    }
}

#[test]
fn stats_on_a_match_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    std::fs::write(
        &p,
        r#"{"ground_truth":["a","b"],"generated":[{"id":"x","matches":["a"]},{"id":"y","matches":[]}]}"#,
    )
    .unwrap();
    let o = ppgpt(&["stats", "--matches", p.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!((v["recall"].as_f64(), v["precision"].as_f64()), (Some(0.5), Some(0.5)));
}
