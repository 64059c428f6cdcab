use ppgpt_cli::config::{Config, EmbedMode, ProviderMode};
use std::path::Path;

#[test]
fn defaults() {
    let c = Config::parse("", Path::new("/base")).unwrap();
    assert_eq!(c.retrieve_threshold, 0.8);
    assert_eq!(c.retrieve_max, None);
    assert_eq!(c.gen_max_attempts, 9);
    assert_eq!(c.rank_k, 2);
    assert_eq!(c.bmc_depth, 3);
    assert_eq!(c.loop_bound, 5);
    assert_eq!(c.solver_timeout_ms, 10_000);
    assert_eq!(c.solver_cmd, ["z3", "-in"]);
    assert_eq!(c.provider_mode, ProviderMode::Remote);
    assert_eq!(c.embed_mode, EmbedMode::Hashed);
    assert!((c.rank_weights.sum() - 1.0).abs() < 1e-12);
}

#[test]
fn keys_and_paths() {
    let text = "# comment\nknowledgePath = kb/knowledge.jsonl\nsolver.cmd = cvc5 --lang smt2\nretrieve.max = 3\n\
                provider.mode = replay\nprovider.fixtures = a.jsonl, b.jsonl\nrank.weights = 1, 1, 1, 1\n";
    let c = Config::parse(text, Path::new("/base")).unwrap();
    assert_eq!(c.knowledge_path.as_deref(), Some(Path::new("/base/kb/knowledge.jsonl")));
    assert_eq!(c.solver_cmd, ["cvc5", "--lang", "smt2"]);
    assert_eq!(c.retrieve_max, Some(3));
    assert_eq!(c.provider_fixtures.len(), 2);
    assert_eq!(c.provider_fixtures[1], Path::new("/base/b.jsonl"));
    assert_eq!(c.rank_weights.as_array(), [0.25; 4]);
}

#[test]
fn invalid_values() {
    for bad in [
        "retrieve.threshold = 1.5",
        "rank.k = 0",
        "bmc.depth = -1",
        "no equals sign",
        "unknown.key = 1",
        "provider.mode = replay",
        "provider.mode = fast",
        "rank.weights = 1, 2",
        "solver.cmd =",
    ] {
        let e = Config::parse(bad, Path::new(".")).unwrap_err();
        assert_eq!(e.stage, "config", "{bad}");
    }
    let e = Config::parse("\n\nrank.k = x", Path::new(".")).unwrap_err();
    assert!(e.message.starts_with("line 3:"), "{e}");
}
