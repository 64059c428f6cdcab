use num_bigint::BigInt;
use ppgpt_core::solver::*;
use ppgpt_core::term::{Sort, Term};

fn x() -> Term {
    Term::var("x", Sort::Int)
}

#[test]
fn contradictory_bounds_are_unsat() {
    let f = Formula::new(vec![Term::gt(x(), Term::int(0)), Term::lt(x(), Term::int(0))]);
    let script = encode_formula(&f).unwrap();
    assert!(script.starts_with("(set-logic QF_AUFLIA)\n"));
    assert!(script.contains("(declare-fun x () Int)"));
    assert!(script.ends_with("(check-sat)\n"));
    assert!(check_sat(&f, 10_000).unwrap().is_unsat());
}

#[test]
fn unique_integer_model() {
    let f = Formula::new(vec![Term::gt(x(), Term::int(2)), Term::lt(x(), Term::int(4))]);
    match check_sat(&f, 10_000).unwrap() {
        SolverVerdict::Sat(m) => {
            assert_eq!(m.eval_int(&x()).unwrap(), BigInt::from(3));
            for a in &f.assertions {
                assert!(m.eval_bool(a).unwrap());
            }
        }
        v => panic!("expected sat, got {v:?}"),
    }
}

#[test]
fn hash_injectivity_refutes_collision() {
    let (a, b) = (Term::var("a", Sort::Int), Term::var("b", Sort::Int));
    let ha = Term::app(&sha3_name(1), vec![a.clone()]);
    let hb = Term::app(&sha3_name(1), vec![b.clone()]);
    let f = Formula::new(vec![Term::eq(ha, hb), Term::ne(a, b)]);
    assert_eq!(f.axioms.len(), 3);
    assert!(check_sat(&f, 10_000).unwrap().is_unsat());
}

#[test]
fn encoding_is_deterministic() {
    let t = Term::add(x(), Term::var("y", Sort::Int));
    let shared = Term::mul(t.clone(), t.clone());
    let f = Formula::new(vec![
        Term::gt(shared.clone(), Term::int(5)),
        Term::lt(shared, Term::int(50)),
    ]);
    let a = encode_formula(&f).unwrap();
    let b = encode_formula(&Formula::new(f.assertions.clone())).unwrap();
    assert_eq!(a, b);
    assert!(a.contains("QF_AUFNIA"));
    assert!(a.contains("define-fun"));
    assert!(check_sat(&f, 10_000).unwrap().is_sat());
}

#[test]
fn timeout_yields_unknown() {
    // Products of many unknowns are hard enough to outlast a 1 ms budget.
    let vars: Vec<Term> = (0..40).map(|i| Term::var(&format!("v{i}"), Sort::Int)).collect();
    let mut assertions = Vec::new();
    for w in vars.windows(3) {
        let p = Term::mul(Term::mul(w[0].clone(), w[1].clone()), w[2].clone());
        assertions.push(Term::eq(p, Term::int(1_000_003)));
        assertions.push(Term::gt(w[0].clone(), Term::int(1)));
    }
    match check_sat(&Formula::new(assertions), 1).unwrap() {
        SolverVerdict::Unknown(r) => assert_eq!(r, "timeout"),
        v => panic!("expected timeout, got {v:?}"),
    }
}

#[test]
fn missing_solver_is_reported() {
    let cfg = SolverConfig::with_command("definitely-not-a-solver-binary", 1000);
    let f = Formula::new(vec![Term::tt()]);
    assert!(matches!(check_sat_with(&f, &cfg), Err(SolverError::Unavailable(_))));
}

#[test]
fn array_model_round_trip() {
    let arr = Term::var("m", Sort::array_of(Sort::Int));
    let f = Formula::new(vec![
        Term::eq(Term::select(arr.clone(), Term::int(7)), Term::int(42)),
        Term::gt(Term::select(arr.clone(), x()), Term::int(100)),
    ]);
    match check_sat(&f, 10_000).unwrap() {
        SolverVerdict::Sat(m) => {
            for a in &f.assertions {
                assert!(m.eval_bool(a).unwrap(), "{a}");
            }
        }
        v => panic!("expected sat, got {v:?}"),
    }
}

fn small_term() -> impl proptest::strategy::Strategy<Value = Term> {
    use proptest::prelude::*;
    let leaf = prop_oneof![
        (0usize..3).prop_map(|i| Term::var(["a", "b", "c"][i], Sort::Int)),
        (-5i64..6).prop_map(Term::int),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Term::add(x, y)),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Term::sub(x, y)),
            (inner.clone(), -3i64..4).prop_map(|(x, k)| Term::mul(x, Term::int(k))),
        ]
    })
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

    // Any model the bridge reports satisfies every assertion it was given.
    #[test]
    fn models_satisfy_assertions(l in small_term(), r in small_term(), s in small_term(), k in -10i64..10) {
        let f = Formula::new(vec![Term::le(l.clone(), r.clone()), Term::ne(s, Term::int(k)), Term::gt(Term::add(l, r), Term::int(k))]);
        if let SolverVerdict::Sat(m) = check_sat(&f, 10_000).unwrap() {
            for a in &f.assertions {
                proptest::prop_assert!(m.eval_bool(a).unwrap());
            }
        }
    }
}
