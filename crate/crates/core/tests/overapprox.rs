mod common;

use common::*;
use ppgpt_core::verifier::*;

fn run(contract: &str, spec: &str) -> Verdict {
    let p = program(&fixture(contract));
    let s = specs(&p, &fixture(spec));
    verify_property(&p, property(&s[0]), &VerifyOptions::default())
}

#[test]
fn sha3_is_injective() {
    let v = run("overapprox/hash.msol", "overapprox/injective.psl");
    assert!(matches!(v, Verdict::Proven), "{v}");
    let v = run("overapprox/hash.msol", "overapprox/collision.psl");
    assert!(matches!(v, Verdict::Proven), "{v}");
}

#[test]
fn external_return_values_are_fresh() {
    let v = run("overapprox/external.msol", "overapprox/external_independent.psl");
    assert!(matches!(v, Verdict::Proven), "{v}");
    let v = run("overapprox/external.msol", "overapprox/external_dependent.psl");
    assert!(!v.is_proven(), "{v}");
}

#[test]
fn low_level_call_success_is_assumed() {
    let p = program_text(
        "contract C { uint256 n;
         function pay(uint256 v) public { (bool s, ) = msg.sender.call{value: v}(\"\"); require(s); n = n + 1; } }",
    );
    let s = spec_text(&p, "function pay postcondition { n == old(n) + 1; }");
    // Not vacuous: the path after `require(s)` is feasible.
    assert!(matches!(
        verify_property(&p, property(&s), &VerifyOptions::default()),
        Verdict::Proven
    ));
}
