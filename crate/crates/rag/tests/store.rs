mod common;

use common::entry;
use ppgpt_rag::embed::{dot, Embedder, HashedEmbedder};
use ppgpt_rag::store::KnowledgeStore;
use ppgpt_rag::{Error, PropertyKind};
use proptest::prelude::*;

fn corpus() -> Vec<ppgpt_rag::knowledge::KnowledgeEntry> {
    vec![
        entry("transfer", "function transfer(address to, uint256 amount) public { balances[msg.sender] -= amount; balances[to] += amount; }", PropertyKind::Rule),
        entry("withdraw", "function withdraw(uint256 amount) public { require(balances[msg.sender] >= amount); balances[msg.sender] -= amount; withdrawn += 1; }", PropertyKind::Condition),
        entry("pause", "function setPaused(bool p) public onlyOwner { paused = p; }", PropertyKind::Invariant),
    ]
}

fn unit2(cos: f64) -> Vec<f64> {
    vec![cos, (1.0 - cos * cos).sqrt()]
}

#[test]
fn self_retrieval_is_exact() {
    let e = HashedEmbedder::default();
    let s = KnowledgeStore::ingest(&corpus(), &e).unwrap();
    for want in corpus() {
        let got = s.retrieve(&want.code, &e, 0.8, None).unwrap();
        assert_eq!(got[0].entry, want);
        assert!((got[0].similarity - 1.0).abs() < 1e-6);
    }
}

#[test]
fn stored_vectors_are_unit() {
    let e = HashedEmbedder::default();
    let s = KnowledgeStore::ingest(&corpus(), &e).unwrap();
    for x in s.entries() {
        let v = s.vector(&x.id).unwrap();
        assert_eq!(v.len(), e.dimension());
        assert!((dot(v, v) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn threshold_filters_hand_vectors() {
    let mut s = KnowledgeStore::new(2);
    s.insert_vector(entry("high", "a", PropertyKind::Rule), unit2(0.9))
        .unwrap();
    s.insert_vector(entry("low", "b", PropertyKind::Rule), unit2(0.7))
        .unwrap();
    s.insert_vector(entry("same", "c", PropertyKind::Rule), vec![3.0, 0.0])
        .unwrap();
    let got = s.retrieve_vector(vec![1.0, 0.0], 0.8, None).unwrap();
    let ids: Vec<&str> = got.iter().map(|r| r.entry.id.as_str()).collect();
    assert_eq!(ids, ["same", "high"]);
    assert!((got[1].similarity - 0.9).abs() < 1e-12);
    assert!(s.retrieve_vector(vec![1.0, 0.0], 1.01, None).unwrap().is_empty());
    assert_eq!(s.retrieve_vector(vec![1.0, 0.0], -1.0, Some(1)).unwrap().len(), 1);
}

#[test]
fn ties_break_by_id() {
    let mut s = KnowledgeStore::new(2);
    for id in ["b", "c", "a"] {
        s.insert_vector(entry(id, id, PropertyKind::Rule), unit2(0.5)).unwrap();
    }
    let got = s.retrieve_vector(vec![1.0, 0.0], 0.0, None).unwrap();
    let ids: Vec<&str> = got.iter().map(|r| r.entry.id.as_str()).collect();
    assert_eq!(ids, ["a", "b", "c"]);
}

#[test]
fn persist_load_is_byte_identical() {
    let e = HashedEmbedder::default();
    let s = KnowledgeStore::ingest(&corpus(), &e).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("store.jsonl");
    s.persist(&p).unwrap();
    let loaded = KnowledgeStore::load(&p).unwrap();
    assert_eq!(loaded, s);
    let q = dir.path().join("again.jsonl");
    loaded.persist(&q).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
    for x in corpus() {
        let a = serde_json::to_string(&s.retrieve(&x.code, &e, -1.0, None).unwrap()).unwrap();
        let b = serde_json::to_string(&loaded.retrieve(&x.code, &e, -1.0, None).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn corrupt_files_are_rejected() {
    let e = HashedEmbedder::default();
    let s = KnowledgeStore::ingest(&corpus(), &e).unwrap();
    let mut buf = Vec::new();
    s.write_to(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let cut = &text[..text.len() - 20];
    assert!(matches!(KnowledgeStore::from_text(cut), Err(Error::Corrupt(_))));
    let short: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
    assert!(matches!(KnowledgeStore::from_text(&short), Err(Error::Corrupt(_))));
    let future = text.replacen("\"version\":1", "\"version\":2", 1);
    assert!(matches!(KnowledgeStore::from_text(&future), Err(Error::Version(2))));
}

#[test]
fn ingest_is_idempotent_and_rejects_conflicts() {
    let e = HashedEmbedder::default();
    let mut s = KnowledgeStore::ingest(&corpus(), &e).unwrap();
    s.add(&corpus(), &e).unwrap();
    assert_eq!(s.len(), 3);
    let mut changed = corpus()[0].clone();
    changed.property = "different".into();
    assert!(matches!(s.add(&[changed], &e), Err(Error::DuplicateId(id)) if id == "transfer"));
}

#[test]
fn dimension_mismatch_and_empty_store() {
    let mut s = KnowledgeStore::new(4);
    let err = s
        .insert_vector(entry("x", "x", PropertyKind::Rule), vec![1.0, 0.0])
        .unwrap_err();
    assert!(matches!(err, Error::Dimension { expected: 4, got: 2 }));
    let err = s.retrieve("anything", &HashedEmbedder::new(4), 0.8, None).unwrap_err();
    assert_eq!(err.to_string(), "no reference properties");
    let mut bad = entry("", "x", PropertyKind::Rule);
    assert!(matches!(
        s.insert_vector(bad.clone(), vec![1.0; 4]),
        Err(Error::InvalidEntry { .. })
    ));
    bad.id = "y".into();
    bad.code = " ".into();
    assert!(matches!(
        s.insert_vector(bad, vec![1.0; 4]),
        Err(Error::InvalidEntry { .. })
    ));
}

proptest! {
    #[test]
    fn retrieval_ignores_positive_scaling(
        vs in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 3), 0.01f64..100.0), 1..8),
        q in prop::collection::vec(-1.0f64..1.0, 3),
        qs in 0.01f64..100.0,
    ) {
        prop_assume!(q.iter().any(|x| x.abs() > 1e-3));
        prop_assume!(vs.iter().all(|(v, _)| v.iter().any(|x| x.abs() > 1e-3)));
        let mut a = KnowledgeStore::new(3);
        let mut b = KnowledgeStore::new(3);
        for (i, (v, scale)) in vs.iter().enumerate() {
            let e = entry(&format!("e{i}"), "code", PropertyKind::Rule);
            a.insert_vector(e.clone(), v.clone()).unwrap();
            b.insert_vector(e, v.iter().map(|x| x * scale).collect()).unwrap();
        }
        let ra = a.retrieve_vector(q.clone(), -1.0, None).unwrap();
        let rb = b.retrieve_vector(q.iter().map(|x| x * qs).collect(), -1.0, None).unwrap();
        prop_assert_eq!(ra.len(), rb.len());
        for (x, y) in ra.iter().zip(&rb) {
            prop_assert!((x.similarity - y.similarity).abs() < 1e-9);
        }
        let ia: Vec<_> = ra.iter().map(|r| r.similarity).collect();
        // Orders agree up to ties within rounding.
        for w in ia.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }
}
