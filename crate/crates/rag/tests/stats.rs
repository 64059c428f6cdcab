use ppgpt_rag::generation::{CandidateProperty, Status};
use ppgpt_rag::stats::*;
use ppgpt_rag::PropertyKind;

fn cand(id: &str, attempts: usize, status: Status) -> CandidateProperty {
    CandidateProperty {
        id: id.into(),
        ref_entry_id: "r".into(),
        kind: PropertyKind::Rule,
        text: String::new(),
        attempts,
        status,
        reason: None,
        transcript: vec![],
    }
}

#[test]
fn compile_success_statistics() {
    let cs = vec![
        cand("a", 0, Status::Compilable),
        cand("b", 0, Status::Compilable),
        cand("c", 2, Status::Compilable),
        cand("d", 7, Status::Compilable),
        cand("e", 9, Status::Failed),
    ];
    let s = compile_stats(&cs, 9);
    assert_eq!((s.total, s.compilable), (5, 4));
    assert!((s.success_rate - 0.8).abs() < 1e-15);
    assert_eq!(s.by_attempts.get(&0), Some(&2));
    assert_eq!(s.within.len(), 10);
    assert!((s.within[0] - 0.4).abs() < 1e-15);
    assert!((s.within[5] - 0.6).abs() < 1e-15);
    assert!((s.within[9] - 0.8).abs() < 1e-15);
    assert_eq!(compile_stats(&[], 9).success_rate, 0.0);
}

#[test]
fn candidates_round_trip_through_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.jsonl");
    let cs = [cand("a", 1, Status::Compilable), cand("b", 9, Status::Failed)];
    let text: String = cs.iter().map(|c| serde_json::to_string(c).unwrap() + "\n").collect();
    std::fs::write(&p, text).unwrap();
    assert_eq!(read_candidates(&p).unwrap(), cs);
}

#[test]
fn recall_and_precision() {
    let m: MatchFile = serde_json::from_str(
        r#"{"ground_truth": ["g1", "g2", "g3", "g4", "g5"],
            "generated": [
              {"id": "p1", "matches": ["g1"]},
              {"id": "p2", "matches": ["g1", "g2"]},
              {"id": "p3", "matches": []},
              {"id": "p4", "matches": ["g3", "unknown"]},
              {"id": "p5"}
            ]}"#,
    )
    .unwrap();
    let r = recall_precision(&m);
    assert_eq!(
        (r.matched_truth, r.truth, r.matched_generated, r.generated),
        (3, 5, 3, 5)
    );
    assert!((r.recall - 0.6).abs() < 1e-15);
    assert!((r.precision - 0.6).abs() < 1e-15);
    let empty = recall_precision(&MatchFile::default());
    assert_eq!((empty.recall, empty.precision), (0.0, 0.0));
}
