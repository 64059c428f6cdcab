mod common;

use common::{fixture_text, program};
use ppgpt_core::checker::compile_candidate;
use ppgpt_core::ir::Program;
use ppgpt_core::{render_diagnostics, SourceFile};
use ppgpt_rag::generation::*;
use ppgpt_rag::knowledge::KnowledgeEntry;
use ppgpt_rag::prompts::{build_prompt, Bindings, PromptKind};
use ppgpt_rag::provider::{prompt_hash, Exchange, GenParams, LlmProvider, ReplayProvider};
use ppgpt_rag::{Error, PropertyKind};
use proptest::prelude::*;
use std::sync::atomic::{AtomicUsize, Ordering};

const BAD: &str = "rule broken() {\n addEnvelope(missingVar);\n assert(true);\n}";
const UNCOVERED: &str = "rule idle() {\n address $c = envelopeCreator(\"x\");\n assert($c == $c);\n}";

fn good() -> String {
    fixture_text("envelope/rule.psl").trim().to_string()
}

fn setup() -> (Program, Target) {
    let p = program("envelope/envelope.msol");
    let src = SourceFile::new("envelope.msol", fixture_text("envelope/envelope.msol"));
    let t = Target::of(&p, &src, "addEnvelope").unwrap();
    (p, t)
}

fn reference(kind: PropertyKind) -> KnowledgeEntry {
    KnowledgeEntry {
        id: "ref1".into(),
        code: "function add(string calldata id) public { boxes[id].owner = msg.sender; }".into(),
        code_summary: String::new(),
        property: "rule addSetsOwner() { add(\"a\"); assert(boxes[\"a\"].owner == msg.sender); }".into(),
        property_summary: String::new(),
        kind,
        source: "test".into(),
    }
}

struct Counting<P>(P, AtomicUsize);

impl<P: LlmProvider> LlmProvider for Counting<P> {
    fn complete(&self, prompt: &str, params: &GenParams) -> ppgpt_rag::Result<String> {
        self.1.fetch_add(1, Ordering::SeqCst);
        self.0.complete(prompt, params)
    }
}

fn scripted(rs: &[&str]) -> Counting<ReplayProvider> {
    Counting(ReplayProvider::scripted(rs.iter().copied()), AtomicUsize::new(0))
}

fn run(responses: &[&str], max: usize) -> (CandidateProperty, usize) {
    let (p, t) = setup();
    let prov = scripted(responses);
    let r = reference(PropertyKind::Rule);
    let c = generate_candidate(&prov, &r, &t, &GenParams::default()).unwrap();
    let c = revise_until_compilable(&prov, &p, c, &r, &t, max, &GenParams::default());
    let calls = prov.1.load(Ordering::SeqCst);
    (c, calls)
}

#[test]
fn fixture_texts_behave_as_labelled() {
    let (p, t) = setup();
    let check = |s: &str| {
        compile_candidate(
            &p,
            &SourceFile::new("c", s),
            Some(PropertyKind::Rule),
            Some(&t.func_name),
        )
    };
    assert!(!check(BAD).compiles());
    let u = check(UNCOVERED);
    assert!(u.compiles() && !u.covered);
    let g = check(&good());
    assert!(g.compiles() && g.covered);
}

#[test]
fn compilable_at_once() {
    let g = good();
    let (c, calls) = run(&[&g], DEFAULT_MAX_ATTEMPTS);
    assert_eq!((c.status, c.attempts, calls), (Status::Compilable, 0, 1));
    assert_eq!(c.text, g);
    assert_eq!(c.id, "addEnvelope/ref1");
    assert_eq!(c.transcript.len(), 1);
    assert_eq!(c.transcript[0].kind, PromptKind::RuleGen);
}

#[test]
fn two_revisions() {
    let g = good();
    let (c, calls) = run(&[BAD, BAD, &g], DEFAULT_MAX_ATTEMPTS);
    assert_eq!((c.status, c.attempts, calls), (Status::Compilable, 2, 3));
    let kinds: Vec<_> = c.transcript.iter().map(|t| t.kind).collect();
    assert_eq!(
        kinds,
        [PromptKind::RuleGen, PromptKind::CommonRevise, PromptKind::CommonRevise]
    );
}

#[test]
fn nine_revisions_then_failed() {
    let (c, calls) = run(&[BAD; 10], DEFAULT_MAX_ATTEMPTS);
    assert_eq!((c.status, c.attempts, calls), (Status::Failed, 9, 10));
    assert_eq!(c.transcript.len(), 10);
    assert!(c.reason.unwrap().contains("9 revisions"));
    let (c, calls) = run(&[BAD; 20], DEFAULT_MAX_ATTEMPTS);
    assert_eq!((c.attempts, calls), (9, 10));
}

#[test]
fn uncovered_rule_gets_the_special_prompt() {
    let g = good();
    let (c, _) = run(&[UNCOVERED, &g], DEFAULT_MAX_ATTEMPTS);
    assert_eq!((c.status, c.attempts), (Status::Compilable, 1));
    let t = &c.transcript[1];
    assert_eq!(t.kind, PromptKind::SpecialRevise);
    assert!(t.prompt.contains(&reference(PropertyKind::Rule).property));
    assert!(t.prompt.contains("lacks core function execution for: addEnvelope"));
}

#[test]
fn replayed_text_is_exact_and_fences_are_stripped() {
    let g = good();
    let fenced = format!("Here is the rule:\n```solidity\n{g}\n```\nDone.");
    let (c, _) = run(&[&fenced], 9);
    assert_eq!(c.text, g);
    assert_eq!(c.transcript[0].response, fenced);
    let prose = format!("Sure.\n{g}");
    let (c, _) = run(&[&prose], 9);
    assert_eq!(c.text, g);
}

#[test]
fn replay_is_keyed_by_prompt_hash() {
    let (_, t) = setup();
    let r = reference(PropertyKind::Rule);
    let scripted_once = ReplayProvider::scripted(["X"]);
    let c = generate_candidate(&scripted_once, &r, &t, &GenParams::default()).unwrap();
    let prov = ReplayProvider::new([Exchange {
        prompt_hash: prompt_hash(&c.transcript[0].prompt),
        response: "R".into(),
    }]);
    let c2 = generate_candidate(&prov, &r, &t, &GenParams::default()).unwrap();
    assert_eq!(c2.text, "R");
    assert!(matches!(
        generate_candidate(&prov, &r, &t, &GenParams::default()),
        Err(Error::Provider(_))
    ));
}

#[test]
fn condition_and_invariant_references_use_the_condition_template() {
    let p = program("zklink/zklink.msol");
    let src = SourceFile::new("zklink.msol", fixture_text("zklink/zklink.msol"));
    let t = Target::of(&p, &src, "withdrawForwardFee").unwrap();
    let spec = fixture_text("zklink/withdraw.psl");
    for kind in [PropertyKind::Condition, PropertyKind::Invariant] {
        let prov = ReplayProvider::scripted([spec.as_str()]);
        let r = reference(kind);
        let c = generate_candidate(&prov, &r, &t, &GenParams::default()).unwrap();
        assert_eq!(c.kind, PropertyKind::Condition);
        assert_eq!(c.transcript[0].kind, PromptKind::ConditionGen);
        assert!(c.transcript[0].prompt.contains("function withdrawForwardFee{{"));
        let c = revise_until_compilable(&prov, &p, c, &r, &t, 9, &GenParams::default());
        assert_eq!((c.status, c.attempts), (Status::Compilable, 0));
    }
}

#[test]
fn condition_for_another_function_is_a_compile_failure() {
    let p = program("zklink/zklink.msol");
    let src = SourceFile::new("zklink.msol", fixture_text("zklink/zklink.msol"));
    let t = Target::of(&p, &src, "withdrawForwardFee").unwrap();
    let other = "function setValidator(address _validator, bool _active)\npostcondition {\n _validators[_validator] == _active;\n}";
    let spec = fixture_text("zklink/withdraw.psl");
    let prov = ReplayProvider::scripted([other, spec.as_str()]);
    let r = reference(PropertyKind::Condition);
    let c = generate_candidate(&prov, &r, &t, &GenParams::default()).unwrap();
    let c = revise_until_compilable(&prov, &p, c, &r, &t, 9, &GenParams::default());
    assert_eq!((c.status, c.attempts), (Status::Compilable, 1));
    assert_eq!(c.transcript[1].kind, PromptKind::CommonRevise);
    assert!(c.transcript[1].prompt.contains("E0205"));
}

#[test]
fn provider_errors() {
    let (p, t) = setup();
    let r = reference(PropertyKind::Rule);
    let empty = ReplayProvider::new([]);
    assert!(matches!(
        generate_candidate(&empty, &r, &t, &GenParams::default()),
        Err(Error::Provider(_))
    ));
    let once = ReplayProvider::scripted([BAD]);
    let c = generate_candidate(&once, &r, &t, &GenParams::default()).unwrap();
    let c = revise_until_compilable(&once, &p, c, &r, &t, 9, &GenParams::default());
    assert_eq!((c.status, c.attempts), (Status::Failed, 0));
    assert!(c.reason.unwrap().contains("no recorded response"));
}

#[test]
fn summaries() {
    let prov = ReplayProvider::scripted(["  Stores an envelope.\n"]);
    let s = summarize(&prov, "function f() {}", SummaryMode::Code, &GenParams::default()).unwrap();
    assert_eq!(s, "Stores an envelope.");
    assert!(matches!(
        summarize(&prov, "  ", SummaryMode::Property, &GenParams::default()),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn loop_is_deterministic() {
    let g = good();
    let (a, _) = run(&[BAD, UNCOVERED, &g], 9);
    let (b, _) = run(&[BAD, UNCOVERED, &g], 9);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

/// Expected revise prompt after `prev`, built independently of the loop.
fn expected_revision(p: &Program, t: &Target, r: &KnowledgeEntry, prev: &str) -> Option<(PromptKind, String)> {
    let c = compile_candidate(
        p,
        &SourceFile::new("candidate.psl", prev),
        Some(PropertyKind::Rule),
        Some(&t.func_name),
    );
    let mut b = Bindings::new();
    let kind = if !c.compiles() {
        b.insert("error_info", render_diagnostics(&c.diagnostics));
        PromptKind::CommonRevise
    } else if !c.covered {
        b.insert("knowledge_rule", r.property.clone());
        PromptKind::SpecialRevise
    } else {
        return None;
    };
    b.insert("spec_res", prev.to_string());
    b.insert("func_code", t.func_code.clone());
    b.insert("contract_code", t.contract_code.clone());
    b.insert("function_name", t.func_name.clone());
    Some((kind, build_prompt(kind, &b).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn revise_prompts_follow_the_previous_compile(script in prop::collection::vec(0usize..3, 10..14), max in 0usize..10) {
        let g = good();
        let pool = [BAD, UNCOVERED, g.as_str()];
        let responses: Vec<&str> = script.iter().map(|&i| pool[i]).collect();
        let (p, t) = setup();
        let r = reference(PropertyKind::Rule);
        let prov = scripted(&responses);
        let c = generate_candidate(&prov, &r, &t, &GenParams::default()).unwrap();
        let c = revise_until_compilable(&prov, &p, c, &r, &t, max, &GenParams::default());
        prop_assert!(c.attempts <= max);
        prop_assert_eq!(prov.1.load(Ordering::SeqCst), c.attempts + 1);
        prop_assert_eq!(c.transcript.len(), c.attempts + 1);
        for w in c.transcript.windows(2) {
            let (kind, prompt) = expected_revision(&p, &t, &r, &w[0].response).unwrap();
            prop_assert_eq!(w[1].kind, kind);
            prop_assert_eq!(&w[1].prompt, &prompt);
        }
        let last_ok = expected_revision(&p, &t, &r, &c.transcript.last().unwrap().response).is_none();
        match c.status {
            Status::Compilable => prop_assert!(last_ok),
            Status::Failed => prop_assert!(!last_ok),
            Status::Compiling => prop_assert!(false),
        }
    }
}
