#![allow(dead_code)]

use ppgpt_core::frontend::{load_program, load_specs};
use ppgpt_core::ir::{Program, Spec};
use ppgpt_core::verifier::Property;
use ppgpt_core::{render_diagnostics, SourceFile};
use std::path::Path;

pub fn fixture(rel: &str) -> SourceFile {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel);
    SourceFile::new(rel, std::fs::read_to_string(p).unwrap())
}

pub fn program(src: &SourceFile) -> Program {
    load_program(src, None).unwrap_or_else(|d| panic!("{}", render_diagnostics(&d)))
}

pub fn program_text(text: &str) -> Program {
    program(&SourceFile::new("t.msol", text))
}

pub fn specs(p: &Program, src: &SourceFile) -> Vec<Spec> {
    load_specs(p, src)
        .unwrap_or_else(|d| panic!("{}", render_diagnostics(&d)))
        .into_iter()
        .map(|(_, s)| s)
        .collect()
}

pub fn spec_text(p: &Program, text: &str) -> Spec {
    let mut v = specs(p, &SourceFile::new("t.psl", text));
    assert_eq!(v.len(), 1);
    v.remove(0)
}

pub fn property(s: &Spec) -> Property<'_> {
    match s {
        Spec::Function(f) => Property::of_function_spec(f),
        Spec::Rule(r) => Property::Rule(r),
        Spec::Invariant(_) => panic!("invariants expand per function"),
    }
}
