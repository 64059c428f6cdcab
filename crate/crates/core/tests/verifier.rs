mod common;

use common::*;
use num_bigint::BigInt;
use ppgpt_core::interp::{CVal, Env, Interp, SpecRun};
use ppgpt_core::ir::Spec;
use ppgpt_core::solver::{check_sat, Formula};
use ppgpt_core::symexec::{ExecOptions, Executor, PathOutcome};
use ppgpt_core::term::Term;
use ppgpt_core::verifier::*;

fn opts() -> VerifyOptions {
    VerifyOptions::default()
}

fn verdict(contract: &str, spec: &str) -> Verdict {
    let p = program_text(contract);
    let s = spec_text(&p, spec);
    verify_property(&p, property(&s), &opts())
}

#[test]
fn increment_is_proven() {
    let v = verdict(
        "contract C { uint256 c; function inc() public { c = c + 1; } }",
        "function inc postcondition { c == old(c) + 1; }",
    );
    assert!(matches!(v, Verdict::Proven), "{v}");
}

#[test]
fn reset_violates_frame_with_reachable_trace() {
    let src = "contract C { uint256 x;
        function set(uint256 v) public { x = v; }
        function reset() public { x = 0; } }";
    let p = program_text(src);
    let s = spec_text(&p, "function reset postcondition { x == old(x); }");
    let v = verify_property(&p, property(&s), &opts());
    let t = v.trace().unwrap_or_else(|| panic!("{v}"));
    assert!(t.len() <= 3);
    let last = t.steps.last().unwrap();
    assert_eq!(last.function, "reset");
    assert!(last.in_property);
    let set = t.steps.iter().find(|s| s.function == "set").unwrap();
    assert_ne!(set.args[0], "0");
    assert!(t.replay(&p, property(&s)).is_some());

    // Brute force over 0..=7: exactly the nonzero entry values falsify it.
    let Spec::Function(f) = &s else { unreachable!() };
    let mut it = Interp::new(&p);
    let bad: Vec<i64> = (0..8)
        .filter(|&x0| {
            let st = ppgpt_core::interp::CState {
                store: vec![CVal::int(x0)],
            };
            it.check_function(&st, f.func, &f.pre, &f.post, vec![], &Env::new())
                .unwrap()
                == SpecRun::Post(vec![false])
        })
        .collect();
    assert_eq!(bad, (1..8).collect::<Vec<_>>());
}

#[test]
fn zklink_first_postcondition_is_proven() {
    let p = program(&fixture("zklink/zklink.msol"));
    let s = specs(&p, &fixture("zklink/withdraw_first_post.psl"));
    let Spec::Function(f) = &s[0] else { panic!() };
    assert_eq!(f.pre.len(), 3);
    assert!(matches!(verify_property(&p, property(&s[0]), &opts()), Verdict::Proven));
}

const PAIRED: &str = "contract C { uint256 s; uint256 t;
    function deposit(uint256 a) public { t = t + a; s = s + a; }
    function skew(uint256 a) public { s = s + a; } }";

#[test]
fn invariant_per_function() {
    let p = program_text(PAIRED);
    let Spec::Invariant(inv) = spec_text(&p, "invariant eq { s == t; }") else {
        panic!()
    };
    let v: std::collections::BTreeMap<_, _> = verify_invariant(&p, &inv, &opts()).into_iter().collect();
    assert!(matches!(v["deposit"], Verdict::Proven));
    assert!(v["skew"].is_violated(), "{}", v["skew"]);
    let Spec::Invariant(t) = spec_text(&p, "invariant t { true; }") else {
        panic!()
    };
    assert!(verify_invariant(&p, &t, &opts()).iter().all(|(_, v)| v.is_proven()));
}

#[test]
fn unreachable_violation_is_unknown() {
    let p = program_text(
        "contract C { uint256 s; uint256 t;
         function deposit(uint256 a) public { t = t + a; s = s + a; } }",
    );
    let s = spec_text(&p, "function deposit postcondition { s == t; }");
    let prop = property(&s);
    assert_eq!(modular_violation(&p, prop, &opts()), Some(true));
    match verify_property(&p, prop, &opts()) {
        Verdict::Unknown(r) => assert_eq!(r, "unconfirmed"),
        v => panic!("{v}"),
    }
    match bmc_refute(&p, prop, 3, &opts()) {
        Verdict::Unknown(r) => assert_eq!(r, "no reachable counterexample within depth"),
        v => panic!("{v}"),
    }
    assert!(matches!(bmc_refute(&p, prop, 0, &opts()), Verdict::Unknown(_)));

    // Independent check: every deposit sequence of length <= 3 over 0..=7
    // keeps s == t from the deployed state.
    let mut it = Interp::new(&p);
    let f = p.function("deposit").unwrap();
    let mut frontier = vec![it.deploy(&Env::new(), vec![]).unwrap()];
    for _ in 0..3 {
        let mut next = vec![];
        for st in &frontier {
            for a in 0..8 {
                let (st2, _) = it.call(st, f, vec![CVal::int(a)], &Env::new()).unwrap();
                assert_eq!(st2.store[0], st2.store[1]);
                next.push(st2);
            }
        }
        next.dedup();
        frontier = next;
    }
}

#[test]
fn rule_examples() {
    let p = program_text("contract C { uint256 x; function f() public {} }");
    let v = verify_property(
        &p,
        property(&spec_text(&p, "rule r(uint256 y) { assume(y > 0); assert(y >= 1); }")),
        &opts(),
    );
    assert!(matches!(v, Verdict::Proven), "{v}");
    let v = verify_property(
        &p,
        property(&spec_text(&p, "rule r() { assume(false); assert(false); }")),
        &opts(),
    );
    assert!(matches!(v, Verdict::VacuouslyProven), "{v}");
}

#[test]
fn overflow_partition_matches_interpreter() {
    let p = program_text("contract C { uint8 x; function inc() public { x = x + 1; } }");
    let f = p.function("inc").unwrap();
    let mut ex = Executor::new(&p, ExecOptions::default());
    let st = ex.init_state();
    let x0 = st.state_scalar(0).unwrap().clone();
    let outs = ex.execute_function(st, f, vec![]).unwrap();
    let normal: Vec<_> = outs.iter().filter(|o| o.is_normal()).collect();
    let reverted = outs
        .iter()
        .filter(|o| matches!(o, PathOutcome::Reverted { .. }))
        .count();
    assert_eq!((normal.len(), reverted), (1, 1));
    let after = normal[0].state().state_scalar(0).unwrap().clone();

    let mut it = Interp::new(&p);
    let ok: Vec<i64> = (0..256)
        .filter(|&v| {
            let st = ppgpt_core::interp::CState {
                store: vec![CVal::int(v)],
            };
            it.call(&st, f, vec![], &Env::new()).is_ok()
        })
        .collect();
    let in_ok = Term::or(ok.iter().map(|v| Term::eq(x0.clone(), Term::int(*v))));
    let pc = normal[0].state().path_cond();
    let rpc = outs
        .iter()
        .find(|o| matches!(o, PathOutcome::Reverted { .. }))
        .unwrap()
        .state()
        .path_cond();
    // Normal inputs are exactly the ones the interpreter accepts.
    let sat = |t: Term| !check_sat(&Formula::new(vec![t]), 10_000).unwrap().is_unsat();
    assert!(!sat(Term::and2(pc.clone(), Term::not(in_ok.clone()))));
    assert!(!sat(Term::and2(rpc.clone(), in_ok)));
    assert!(sat(pc.clone()) && sat(rpc));
    let wrong = Term::and2(pc, Term::ne(after, Term::add(x0, Term::int(1))));
    assert!(check_sat(&Formula::new(vec![wrong]), 10_000).unwrap().is_unsat());
}

#[test]
fn init_state_snapshots_old_store() {
    let p = program_text("contract C { uint256 x; address owner; }");
    let mut ex = Executor::new(&p, ExecOptions::default());
    let st = ex.init_state();
    for id in 0..2 {
        assert_eq!(st.state_scalar(id), st.old_scalar(id));
    }
    let x0 = st.state_scalar(0).unwrap().clone();
    let below = Term::and2(st.path_cond(), Term::lt(x0.clone(), Term::int(0)));
    assert!(check_sat(&Formula::new(vec![below]), 10_000).unwrap().is_unsat());
    let huge = Term::and2(st.path_cond(), Term::ge(x0, Term::int(BigInt::from(2).pow(256))));
    assert!(check_sat(&Formula::new(vec![huge]), 10_000).unwrap().is_unsat());
}

#[test]
fn loop_beyond_bound_is_unknown() {
    let v = verdict(
        "contract C { uint256 x; function f(uint256 n) public { for (uint256 i = 0; i < n; i++) { x = x + 1; } } }",
        "function f postcondition { x >= old(x); }",
    );
    match v {
        Verdict::Unknown(r) => assert_eq!(r, "loop bound"),
        v => panic!("{v}"),
    }
    let v = verdict(
        "contract C { uint256 x; function f() public { for (uint256 i = 0; i < 3; i++) { x = x + 1; } } }",
        "function f postcondition { x == old(x) + 3; }",
    );
    assert!(matches!(v, Verdict::Proven), "{v}");
}

#[test]
fn monotone_counter_and_frame() {
    let src = "contract C { uint256 a; uint256 b; function bump(uint256 k) public { a = a + k; } }";
    assert!(verdict(src, "function bump postcondition { a >= old(a); b == old(b); }").is_proven());
    assert!(verdict(src, "function bump postcondition { a > old(a); }").is_violated());
}

#[test]
fn evaluation_is_left_to_right() {
    let src = "contract C { uint256 x;
        function g() internal returns (uint256) { x = x + 1; return x; }
        function f() public returns (uint256) { return g() * 10 + g(); } }";
    let v = verdict(src, "function f postcondition { x == old(x) + 2; }");
    assert!(v.is_proven(), "{v}");
    let p = program_text(src);
    let mut it = Interp::new(&p);
    let st = ppgpt_core::interp::CState {
        store: vec![CVal::int(0)],
    };
    let (_, r) = it.call(&st, p.function("f").unwrap(), vec![], &Env::new()).unwrap();
    assert_eq!(r[0].as_int().unwrap(), BigInt::from(12));
}

#[test]
fn combine_prefers_violation_then_unknown() {
    let u = Verdict::Unknown("x".into());
    assert!(matches!(combine(&[Verdict::Proven, u.clone()]), Verdict::Unknown(_)));
    assert!(matches!(
        combine(&[Verdict::VacuouslyProven, Verdict::VacuouslyProven]),
        Verdict::VacuouslyProven
    ));
    assert!(matches!(
        combine(&[Verdict::VacuouslyProven, Verdict::Proven]),
        Verdict::Proven
    ));
}
