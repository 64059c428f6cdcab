#![allow(dead_code)]

use ppgpt_core::frontend::load_program;
use ppgpt_core::ir::Program;
use ppgpt_core::{render_diagnostics, SourceFile};
use ppgpt_rag::knowledge::KnowledgeEntry;
use ppgpt_rag::PropertyKind;
use std::path::Path;

pub fn fixture_text(rel: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(rel);
    std::fs::read_to_string(p).unwrap()
}

pub fn program(rel: &str) -> Program {
    let src = SourceFile::new(rel, fixture_text(rel));
    load_program(&src, None).unwrap_or_else(|d| panic!("{}", render_diagnostics(&d)))
}

pub fn entry(id: &str, code: &str, kind: PropertyKind) -> KnowledgeEntry {
    KnowledgeEntry {
        id: id.into(),
        code: code.into(),
        code_summary: format!("summary of {id}"),
        property: format!("property of {id}"),
        property_summary: String::new(),
        kind,
        source: "test".into(),
    }
}
