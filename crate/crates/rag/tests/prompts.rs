use ppgpt_rag::prompts::{build_prompt, Bindings, PromptKind, SPEC_GRAMMAR_EXAMPLE};
use ppgpt_rag::Error;

fn bind(kind: PromptKind) -> Bindings {
    kind.placeholders().iter().map(|n| (*n, format!("<{n}>"))).collect()
}

#[test]
fn rule_prompt_has_all_parts() {
    let mut b = bind(PromptKind::RuleGen);
    b.insert("spec_grammar", SPEC_GRAMMAR_EXAMPLE.into());
    let p = build_prompt(PromptKind::RuleGen, &b).unwrap();
    for i in 1..=6 {
        assert!(p.contains(&format!("\n{i}. ")), "instruction {i}");
    }
    assert!(!p.contains("\n7. "));
    assert!(p.contains("[function code to be tested]: <func_code>"));
    assert!(p.contains("[contract code to be tested]: <contract_code>"));
    assert!(p.contains("[rule code]: <rule_property>"));
    assert!(p.contains("rule depositIncreasesBalance"));
    assert!(p.contains("rule [name of rule]() {{logic of rule}}"));
}

#[test]
fn condition_prompt_substitutes_inside_braces() {
    let p = build_prompt(PromptKind::ConditionGen, &bind(PromptKind::ConditionGen)).unwrap();
    assert!(p.contains("function <func_name>{{"));
    assert!(p.contains("only use the state variables in the <func_name> itself"));
    assert!(p.contains("`__old__(xxx)`"));
    for i in 1..=10 {
        assert!(p.contains(&format!("\n{i}. ")), "instruction {i}");
    }
}

#[test]
fn missing_binding_is_an_error() {
    let mut b = bind(PromptKind::ConditionGen);
    b.remove("condition_property");
    match build_prompt(PromptKind::ConditionGen, &b) {
        Err(Error::MissingPlaceholder(n)) => assert_eq!(n, "condition_property"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn revise_prompts() {
    let p = build_prompt(PromptKind::SpecialRevise, &bind(PromptKind::SpecialRevise)).unwrap();
    assert!(p.contains("This rule lacks core function execution for: <function_name>."));
    assert!(p.contains("Here is the knowledge rule you should learn from: <knowledge_rule>."));
    let p = build_prompt(PromptKind::CommonRevise, &bind(PromptKind::CommonRevise)).unwrap();
    assert!(p.contains("When this code is compiled with a solc-like program, an error occurs: <error_info>."));
    assert!(p.contains("test the function [<function_name>]"));
}

#[test]
fn bound_text_is_not_rescanned() {
    let mut b = bind(PromptKind::SummarizeCode);
    b.insert("text", "mapping {text} {func_code}".into());
    let p = build_prompt(PromptKind::SummarizeCode, &b).unwrap();
    assert!(p.contains("mapping {text} {func_code}"));
}

#[test]
fn every_placeholder_appears_in_its_template() {
    use PromptKind::*;
    for k in [
        RuleGen,
        ConditionGen,
        CommonRevise,
        SpecialRevise,
        SummarizeCode,
        SummarizeProperty,
    ] {
        for n in k.placeholders() {
            assert!(k.template().contains(&format!("{{{n}}}")), "{k:?} {n}");
        }
        let p = build_prompt(k, &bind(k)).unwrap();
        for n in k.placeholders() {
            assert!(!p.contains(&format!("{{{n}}}")), "{k:?} {n} left unbound");
        }
    }
}
