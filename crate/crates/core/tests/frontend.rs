use ppgpt_core::frontend::ast::{span_pairs, SpecUnit, StmtKind};
use ppgpt_core::frontend::printer::{print_source_unit, print_spec_units};
use ppgpt_core::frontend::*;
use ppgpt_core::ir::{TExprKind, TStmt};
use ppgpt_core::{render_diagnostics, SourceFile};
use proptest::prelude::*;
use std::path::{Path, PathBuf};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(rel: &str) -> SourceFile {
    let p = fixtures().join(rel);
    SourceFile::new(rel, std::fs::read_to_string(&p).unwrap())
}

fn corpus() -> Vec<SourceFile> {
    let mut paths: Vec<_> = std::fs::read_dir(fixtures().join("psl"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "psl"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            SourceFile::new(
                p.file_name().unwrap().to_string_lossy(),
                std::fs::read_to_string(p).unwrap(),
            )
        })
        .collect()
}

fn spec_roundtrip(src: &SourceFile) -> (Vec<SpecUnit>, Vec<SpecUnit>) {
    let units = parse_spec(src).unwrap_or_else(|d| panic!("{}", render_diagnostics(&d)));
    let printed = print_spec_units(&units);
    let again = parse_spec(&SourceFile::new("printed.psl", printed.clone()))
        .unwrap_or_else(|d| panic!("{}\n{printed}", render_diagnostics(&d)));
    (units, again)
}

#[test]
fn corpus_round_trips_and_resolves() {
    let files = corpus();
    assert!(files.len() >= 20);
    let program = load_program(&read("psl/vault.msol"), None).unwrap();
    for src in &files {
        let (units, again) = spec_roundtrip(src);
        let a: Vec<_> = units.iter().map(|u| u.without_spans()).collect();
        let b: Vec<_> = again.iter().map(|u| u.without_spans()).collect();
        assert_eq!(a, b, "{}", src.name());
        if let Err(d) = load_specs(&program, src) {
            panic!("{}", render_diagnostics(&d));
        }
    }
}

#[test]
fn corpus_covers_every_production() {
    let mut inv = false;
    let mut pre = false;
    let mut post_old = false;
    let (mut assume, mut call, mut assert, mut dollar) = (false, false, false, false);
    for src in corpus() {
        let text = src.text().to_string();
        for u in parse_spec(&src).unwrap() {
            match u {
                SpecUnit::Invariant(_) => inv = true,
                SpecUnit::Function(f) => {
                    pre |= !f.pre.is_empty();
                    post_old |= !f.post.is_empty() && text.contains("old(");
                }
                SpecUnit::Rule(r) => {
                    dollar |= text.contains('$');
                    for s in &r.body.stmts {
                        if let StmtKind::Expr(e) = &s.kind {
                            let t = src.slice(e.span);
                            assume |= t.starts_with("assume(");
                            assert |= t.starts_with("assert(");
                            call |= !t.starts_with("assume(") && !t.starts_with("assert(");
                        }
                    }
                }
            }
        }
    }
    assert!(inv && pre && post_old && assume && call && assert && dollar);
}

#[test]
fn child_spans_nest_in_parents() {
    for src in corpus() {
        for u in parse_spec(&src).unwrap() {
            for (parent, child) in span_pairs(&u) {
                assert!(parent.contains(&child), "{}: {parent:?} !⊇ {child:?}", src.name());
                assert!(child.end <= src.text().len());
            }
        }
    }
}

#[test]
fn statement_in_precondition_is_rejected() {
    let d = parse_spec(&read("psl/negative/statement_in_precondition.psl")).unwrap_err();
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].code, "E0004");
    assert_eq!(
        render_diagnostics(&d),
        "E0004 psl/negative/statement_in_precondition.psl:2:20: only expression statements are permitted in a precondition\n"
    );
}

#[test]
fn negative_specs_report_their_codes() {
    let program = load_program(&read("psl/vault.msol"), None).unwrap();
    for (file, code) in [
        ("psl/negative/require_in_rule.psl", "E0106"),
        ("psl/negative/symbolic_in_condition.psl", "E0201"),
        ("psl/negative/non_boolean.psl", "E0202"),
    ] {
        let d = load_specs(&program, &read(file)).unwrap_err();
        assert_eq!(d[0].code, code, "{file}");
    }
}

#[test]
fn minimal_contract() {
    let u = parse_contract(&SourceFile::new("c.msol", "contract C { uint256 x; }")).unwrap();
    assert_eq!(u.contracts.len(), 1);
    assert_eq!(u.contracts[0].state_vars.len(), 1);
    assert!(u.contracts[0].functions.is_empty());
}

#[test]
fn missing_contract_name_points_at_brace() {
    let d = parse_contract(&SourceFile::new("c.msol", "contract {")).unwrap_err();
    assert_eq!(d[0].code, "E0002");
    assert_eq!(d[0].span.start, 9);
}

#[test]
fn standalone_shape() {
    let u = parse_contract(&read("zklink/standalone.msol")).unwrap();
    let c = u
        .contracts
        .iter()
        .find(|c| c.name.name == "SimplifiedStandaloneZkLink")
        .unwrap();
    assert_eq!(c.state_vars.len(), 4);
    let f = c
        .functions
        .iter()
        .find(|f| f.name.name == "withdrawForwardFee")
        .unwrap();
    assert_eq!(f.modifiers.len(), 2);
}

#[test]
fn withdraw_spec_shape() {
    let units = parse_spec(&read("zklink/withdraw.psl")).unwrap();
    match &units[..] {
        [SpecUnit::Function(f)] => {
            assert_eq!(f.func_name.name, "withdrawForwardFee");
            assert_eq!((f.pre.len(), f.post.len()), (3, 2));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn single_assert_rule() {
    let units = parse_spec(&SourceFile::new("r.psl", "rule r() { assert(1 == 1); }")).unwrap();
    match &units[..] {
        [SpecUnit::Rule(r)] => assert_eq!(r.body.stmts.len(), 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn contract_fixtures_round_trip() {
    for rel in [
        "psl/vault.msol",
        "zklink/standalone.msol",
        "zklink/zklink.msol",
        "envelope/envelope.msol",
    ] {
        let src = read(rel);
        let u = parse_contract(&src).unwrap();
        let printed = print_source_unit(&u);
        let again = parse_contract(&SourceFile::new("p.msol", printed.clone())).unwrap();
        assert_eq!(u.without_spans(), again.without_spans(), "{rel}");
        assert_eq!(print_source_unit(&again), printed);
    }
}

#[test]
fn super_resolves_to_parent() {
    let src = SourceFile::new(
        "s.msol",
        "contract A { uint256 x; function f() public virtual { x = 1; } }
         contract B is A { function f() public override { super.f(); x = x + 1; } }",
    );
    let p = load_program(&src, Some("B")).unwrap();
    let f = p.dispatch["f"];
    assert_eq!(p.functions[f].contract, "B");
    let mut callees = vec![];
    TStmt::walk_exprs(&p.functions[f].body, &mut |e| {
        e.visit(&mut |x| {
            if let TExprKind::Call { func, .. } = &x.kind {
                callees.push(p.functions[*func].contract.clone());
            }
        })
    });
    assert_eq!(callees, ["A"]);
}

#[test]
fn diamond_linearization() {
    let src = SourceFile::new(
        "d.msol",
        "contract A {} contract B is A {} contract C is A {} contract D is B, C {}",
    );
    let p = load_program(&src, Some("D")).unwrap();
    assert_eq!(p.linearization, ["D", "C", "B", "A"]);
}

#[test]
fn reserved_result_names_are_undeclared() {
    let p = load_program(&read("zklink/zklink.msol"), None).unwrap();
    let src = SourceFile::new(
        "r.psl",
        "function withdrawForwardFee\npostcondition { __result__ == 0; }",
    );
    let d = load_specs(&p, &src).unwrap_err();
    assert_eq!(d[0].code, "E0101");
}

#[test]
fn old_and_dunder_old_agree() {
    let a = parse_spec(&SourceFile::new("a", "invariant i { old(x) == x; }")).unwrap();
    let b = parse_spec(&SourceFile::new("b", "invariant i { __old__(x) == x; }")).unwrap();
    assert_eq!(a[0].without_spans(), b[0].without_spans());
}

#[test]
fn rendering() {
    assert_eq!(render_diagnostics(&[]), "");
    let d = parse_contract(&SourceFile::new("x.msol", "contract C { uint256 x }")).unwrap_err();
    let text = render_diagnostics(&d);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("E0002 x.msol:1:"));
}

#[test]
fn diagnostics_are_deterministic() {
    let src = read("psl/negative/statement_in_precondition.psl");
    let a = render_diagnostics(&parse_spec(&src).unwrap_err());
    let b = render_diagnostics(&parse_spec(&src).unwrap_err());
    assert_eq!(a, b);
}

fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        "[a-z][a-z0-9_]{0,4}".prop_filter("keyword", |s| !matches!(
            s.as_str(),
            "if" | "do"
                | "for"
                | "new"
                | "old"
                | "true"
                | "false"
                | "while"
                | "else"
                | "emit"
                | "break"
                | "return"
                | "delete"
                | "int"
                | "uint"
                | "bool"
                | "bytes"
                | "string"
                | "address"
                | "this"
        )),
        (0u64..1000).prop_map(|n| n.to_string()),
        Just("true".to_string()),
        Just("msg.sender".to_string()),
        "[a-z]{1,3}".prop_map(|s| format!("${s}")),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        let op = prop::sample::select(vec![
            "+", "-", "*", "/", "%", "**", "<", ">", "<=", ">=", "==", "!=", "&&", "||",
        ]);
        prop_oneof![
            (inner.clone(), op, inner.clone()).prop_map(|(a, o, b)| format!("{a} {o} {b}")),
            inner.clone().prop_map(|a| format!("!({a})")),
            inner.clone().prop_map(|a| format!("({a})")),
            inner.clone().prop_map(|a| format!("old({a})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("m[{a}][{b}]")),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(a, b, c)| format!("({a} ? {b} : {c})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("g({a}, {b}).f")),
        ]
    })
}

proptest! {
    #[test]
    fn printed_exprs_reparse_equal(e in expr_text()) {
        let text = format!("rule r() {{ assert({e}); }}");
        let (units, again) = spec_roundtrip(&SourceFile::new("gen.psl", text));
        prop_assert_eq!(units[0].without_spans(), again[0].without_spans());
        let printed = print_spec_units(&units);
        prop_assert_eq!(print_spec_units(&again), printed);
    }

    #[test]
    fn parsing_is_deterministic(e in expr_text()) {
        let src = SourceFile::new("gen.psl", format!("invariant i {{ {e}; }}"));
        prop_assert_eq!(parse_spec(&src).map_err(|d| render_diagnostics(&d)),
                        parse_spec(&src).map_err(|d| render_diagnostics(&d)));
    }
}
