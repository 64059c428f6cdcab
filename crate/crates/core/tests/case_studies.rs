mod common;

use common::*;
use ppgpt_core::ir::Spec;
use ppgpt_core::verifier::*;

#[test]
fn envelope_overwrite_is_found_and_replays() {
    let p = program(&fixture("envelope/envelope.msol"));
    let s = specs(&p, &fixture("envelope/rule.psl"));
    let Spec::Rule(rule) = &s[0] else { panic!() };
    let v = verify_property(&p, Property::Rule(rule), &VerifyOptions::default());
    let t = v.trace().unwrap_or_else(|| panic!("{v}"));
    assert!(t.len() <= 3);
    let calls: Vec<_> = t.steps.iter().map(|s| s.function.as_str()).collect();
    assert_eq!(calls, ["addEnvelope", "addEnvelope"]);
    assert!(!t.steps[0].in_property && t.steps[1].in_property);
    // Both calls use the same envelope id.
    assert_eq!(t.steps[0].args[0], t.steps[1].args[0]);

    let failing = t
        .replay(&p, Property::Rule(rule))
        .expect("replay reproduces the violation");
    assert_eq!(failing, t.failing_span);
    assert!(fixture("envelope/rule.psl").slice(failing).starts_with("assert("));
}

#[test]
fn envelope_trace_is_deterministic() {
    let p = program(&fixture("envelope/envelope.msol"));
    let s = specs(&p, &fixture("envelope/rule.psl"));
    let run = || serde_json::to_string(&verify_spec(&p, &s[0], &VerifyOptions::default())).unwrap();
    assert_eq!(run(), run());
}

#[test]
fn zklink_conditions() {
    let p = program(&fixture("zklink/zklink.msol"));
    let all = specs(&p, &fixture("zklink/withdraw.psl"));
    let Spec::Function(f) = &all[0] else { panic!() };
    assert_eq!((f.pre.len(), f.post.len()), (3, 2));
    let first = specs(&p, &fixture("zklink/withdraw_first_post.psl"));
    let v = verify_property(&p, property(&first[0]), &VerifyOptions::default());
    assert!(matches!(v, Verdict::Proven), "{v}");
}

#[test]
fn zklink_mutant_is_violated() {
    let p = program(&fixture("zklink/zklink_mutated.msol"));
    let s = specs(&p, &fixture("zklink/withdraw_first_post.psl"));
    let prop = property(&s[0]);
    let v = verify_property(&p, prop, &VerifyOptions::default());
    let t = v.trace().unwrap_or_else(|| panic!("{v}"));
    assert!(t.len() <= 3);
    assert_eq!(t.steps.last().unwrap().function, "withdrawForwardFee");
    assert!(t.replay(&p, prop).is_some());
}
