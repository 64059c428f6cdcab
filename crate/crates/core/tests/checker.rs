mod common;

use common::*;
use ppgpt_core::checker::*;
use ppgpt_core::frontend::parse_spec;
use ppgpt_core::ir::Spec;
use ppgpt_core::{render_diagnostics, SourceFile};

fn check(contract: &str, spec: &str, target: Option<&str>) -> CheckReport {
    let p = program(&fixture(contract));
    let src = SourceFile::new("s.psl", spec);
    let units = parse_spec(&src).unwrap();
    check_spec(&p, &units[0], &src, target)
}

#[test]
fn zklink_conditions_check() {
    let p = program(&fixture("zklink/zklink.msol"));
    let src = fixture("zklink/withdraw.psl");
    let units = parse_spec(&src).unwrap();
    let r = check_spec(&p, &units[0], &src, None);
    assert!(r.ok, "{}", render_diagnostics(&r.issues));
}

#[test]
fn undeclared_helper_in_precondition() {
    let r = check(
        "zklink/zklink.msol",
        "function withdrawForwardFee precondition { helper(_amount) > 0; }",
        None,
    );
    assert!(!r.ok);
    assert_eq!(r.issues[0].code, "E0101");
}

#[test]
fn symbolic_alias_of_state_var() {
    let r = check(
        "psl/vault.msol",
        "rule r() { deposit(); assert($totalSupply <= totalSupply); }",
        Some("deposit"),
    );
    assert!(r.ok, "{}", render_diagnostics(&r.issues));
    assert!(r.coverage["r"]);
}

#[test]
fn report_is_deterministic() {
    let text = "rule r() { assert(nope); }";
    let a = check("psl/vault.msol", text, None);
    let b = check("psl/vault.msol", text, None);
    assert_eq!(render_diagnostics(&a.issues), render_diagnostics(&b.issues));
    assert_eq!(a.ok, a.issues.is_empty());
}

fn rule_of(contract: &str, text: &str) -> (ppgpt_core::ir::Program, Spec) {
    let p = program(&fixture(contract));
    let s = spec_text(&p, text);
    (p, s)
}

#[test]
fn coverage() {
    let p = program(&fixture("envelope/envelope.msol"));
    let s = specs(&p, &fixture("envelope/rule.psl"));
    let Spec::Rule(r) = &s[0] else { panic!() };
    assert_eq!(check_target_coverage(&p, r, "addEnvelope"), Ok(true));

    let (p, s) = rule_of("psl/vault.msol", "rule r() { assert(true); }");
    let Spec::Rule(r) = &s else { panic!() };
    assert_eq!(check_target_coverage(&p, r, "deposit"), Ok(false));

    let (p, s) = rule_of(
        "psl/vault.msol",
        "rule r(uint256 a) { if (a > 1) { withdraw(a); } assert(true); }",
    );
    let Spec::Rule(r) = &s else { panic!() };
    assert_eq!(check_target_coverage(&p, r, "withdraw"), Ok(true));
    assert_eq!(check_target_coverage(&p, r, "deposit"), Ok(false));
    assert!(check_target_coverage(&p, r, "missing").is_err());
}

#[test]
fn candidate_compilation() {
    let p = program(&fixture("psl/vault.msol"));
    let rule = SourceFile::new("c.psl", "rule r() { deposit(); assert(totalSupply > 0); }");
    let c = compile_candidate(&p, &rule, Some(PropertyKind::Rule), Some("deposit"));
    assert!(c.compiles() && c.covered);
    let c = compile_candidate(&p, &rule, Some(PropertyKind::Rule), Some("withdraw"));
    assert!(c.compiles() && !c.covered);
    let c = compile_candidate(&p, &rule, Some(PropertyKind::Condition), Some("deposit"));
    assert_eq!(c.diagnostics[0].code, "E0204");
    let bad = SourceFile::new("c.psl", "rule r() { deposit() }");
    let c = compile_candidate(&p, &bad, Some(PropertyKind::Rule), None);
    assert_eq!(c.diagnostics[0].code, "E0002");
    let empty = SourceFile::new("c.psl", "");
    assert!(!compile_candidate(&p, &empty, None, None).compiles());
    let cond = SourceFile::new(
        "c.psl",
        "function withdraw postcondition { withdrawn >= old(withdrawn); }",
    );
    let c = compile_candidate(&p, &cond, Some(PropertyKind::Condition), Some("withdraw"));
    assert!(c.compiles() && c.covered);
}
