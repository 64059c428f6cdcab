//! Lexing, parsing and name/type resolution of MiniSol and PSL sources.

pub mod ast;
pub mod diagnostics;
pub mod lexer;
pub mod parser;
pub mod printer;
pub mod resolve;
pub mod span;

use crate::ir::{Program, Spec};
use diagnostics::{codes, Diagnostic};
use span::SourceFile;
use std::collections::BTreeMap;

pub use resolve::{linearize, resolve, resolve_spec};

/// Parse a contract source unit and check that contract names are unique.
pub fn parse_contract(src: &SourceFile) -> Result<ast::SourceUnit, Vec<Diagnostic>> {
    let unit = parser::parse_source_unit(src).map_err(|d| vec![d])?;
    let mut seen = BTreeMap::new();
    let mut diags = Vec::new();
    for c in &unit.contracts {
        if seen.insert(c.name.name.clone(), c.name.span).is_some() {
            diags.push(Diagnostic::error(
                src,
                codes::DUPLICATE,
                c.name.span,
                format!("contract `{}` is declared more than once", c.name.name),
            ));
        }
    }
    if diags.is_empty() {
        Ok(unit)
    } else {
        Err(diags)
    }
}

pub fn parse_spec(src: &SourceFile) -> Result<Vec<ast::SpecUnit>, Vec<Diagnostic>> {
    parser::parse_spec_units(src).map_err(|d| vec![d])
}

/// Parse and resolve a contract file in one step.
pub fn load_program(src: &SourceFile, subject: Option<&str>) -> Result<Program, Vec<Diagnostic>> {
    let unit = parse_contract(src)?;
    resolve(&unit, src, subject)
}

/// Parse a spec file and resolve every unit against `program`, collecting
/// all diagnostics.
pub fn load_specs(program: &Program, src: &SourceFile) -> Result<Vec<(ast::SpecUnit, Spec)>, Vec<Diagnostic>> {
    let units = parse_spec(src)?;
    let mut out = Vec::new();
    let mut diags = Vec::new();
    for u in units {
        match resolve_spec(program, &u, src) {
            Ok(s) => out.push((u, s)),
            Err(mut d) => diags.append(&mut d),
        }
    }
    if diags.is_empty() {
        Ok(out)
    } else {
        Err(diags)
    }
}
