//! Well-formedness checks on compiled specifications and the target
//! coverage check used when generating properties.

use crate::frontend::ast::SpecUnit;
use crate::frontend::diagnostics::{codes, Diagnostic};
use crate::frontend::span::SourceFile;
use crate::frontend::{parse_spec, resolve_spec};
use crate::ir::{FuncId, Program, RuleSpec, Spec, TExprKind, TStmt};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// The three kinds of property a specification unit can express.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyKind {
    Rule,
    /// Function-level pre/postconditions.
    Condition,
    Invariant,
}

impl PropertyKind {
    pub const ALL: [PropertyKind; 3] = [PropertyKind::Rule, PropertyKind::Condition, PropertyKind::Invariant];

    pub fn of(unit: &SpecUnit) -> PropertyKind {
        match unit {
            SpecUnit::Invariant(_) => PropertyKind::Invariant,
            SpecUnit::Function(_) => PropertyKind::Condition,
            SpecUnit::Rule(_) => PropertyKind::Rule,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PropertyKind::Rule => "rule",
            PropertyKind::Condition => "condition",
            PropertyKind::Invariant => "invariant",
        }
    }
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PropertyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rule" => Ok(PropertyKind::Rule),
            "condition" => Ok(PropertyKind::Condition),
            "invariant" => Ok(PropertyKind::Invariant),
            _ => Err(format!("unknown property kind `{s}`")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub ok: bool,
    pub issues: Vec<Diagnostic>,
    /// Rule name to whether it calls the target function.
    pub coverage: BTreeMap<String, bool>,
    pub spec: Option<Spec>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown function `{0}`")]
pub struct UnknownFunction(pub String);

/// Functions a rule body calls directly, in order of appearance.
pub fn rule_calls(rule: &RuleSpec) -> Vec<FuncId> {
    let mut out = Vec::new();
    TStmt::walk_exprs(&rule.body, &mut |e| {
        e.visit(&mut |x| {
            if let TExprKind::Call { func, .. } = &x.kind {
                out.push(*func);
            }
        })
    });
    out
}

/// Whether the rule body directly calls `target`.
pub fn check_target_coverage(program: &Program, rule: &RuleSpec, target: &str) -> Result<bool, UnknownFunction> {
    if program.function(target).is_none() {
        return Err(UnknownFunction(target.to_string()));
    }
    Ok(rule_calls(rule)
        .into_iter()
        .any(|f| program.functions[f].name == target))
}

fn covers(program: &Program, spec: &Spec, target: &str) -> bool {
    match spec {
        Spec::Invariant(_) => true,
        Spec::Function(f) => f.name == target,
        Spec::Rule(r) => check_target_coverage(program, r, target).unwrap_or(false),
    }
}

fn coverage_issue(src: &SourceFile, unit: &SpecUnit, target: &str) -> Diagnostic {
    Diagnostic::error(
        src,
        codes::TARGET_NOT_COVERED,
        unit.span(),
        format!("`{}` does not exercise the target function `{target}`", unit.name()),
    )
}

/// Resolve and check one specification unit. With a target, rules that do
/// not call it are reported as issues.
pub fn check_spec(program: &Program, unit: &SpecUnit, src: &SourceFile, target: Option<&str>) -> CheckReport {
    let mut coverage = BTreeMap::new();
    let (spec, mut issues) = match resolve_spec(program, unit, src) {
        Ok(s) => (Some(s), Vec::new()),
        Err(d) => (None, d),
    };
    if let Some(Spec::Rule(r)) = &spec {
        let covered = match target {
            Some(t) => check_target_coverage(program, r, t).unwrap_or(false),
            None => !rule_calls(r).is_empty(),
        };
        coverage.insert(r.name.clone(), covered);
    }
    if let (Some(s), Some(t)) = (&spec, target) {
        if !covers(program, s, t) {
            issues.push(coverage_issue(src, unit, t));
        }
    }
    CheckReport {
        ok: issues.is_empty(),
        issues,
        coverage,
        spec,
    }
}

/// A generated property text after compilation.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub units: Vec<(SpecUnit, Spec)>,
    /// Compiler errors, including kind mismatches.
    pub diagnostics: Vec<Diagnostic>,
    /// Every unit exercises the target (vacuously true without a target).
    pub covered: bool,
}

impl Candidate {
    pub fn compiles(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Compile a candidate text. Coverage is reported separately from the
/// diagnostics so that callers can pick the matching repair.
pub fn compile_candidate(
    program: &Program,
    src: &SourceFile,
    kind: Option<PropertyKind>,
    target: Option<&str>,
) -> Candidate {
    let units = match parse_spec(src) {
        Ok(u) => u,
        Err(diagnostics) => {
            return Candidate {
                units: vec![],
                diagnostics,
                covered: false,
            }
        }
    };
    let mut diagnostics = Vec::new();
    if units.is_empty() {
        diagnostics.push(Diagnostic::error(
            src,
            codes::SYNTAX,
            crate::Span::point(src.text().len()),
            "expected a rule, function specification or invariant",
        ));
    }
    let mut out = Vec::new();
    for u in units {
        let found = PropertyKind::of(&u);
        if let Some(k) = kind {
            if k != found {
                diagnostics.push(Diagnostic::error(
                    src,
                    codes::KIND_MISMATCH,
                    u.span(),
                    format!("expected a {k} but found a {found}"),
                ));
                continue;
            }
        }
        match resolve_spec(program, &u, src) {
            Ok(s) => out.push((u, s)),
            Err(mut d) => diagnostics.append(&mut d),
        }
    }
    let covered = match target {
        Some(t) => !out.is_empty() && out.iter().all(|(_, s)| covers(program, s, t)),
        None => true,
    };
    Candidate {
        units: out,
        diagnostics,
        covered,
    }
}

/// Coverage diagnostics for the units of a candidate that do not exercise
/// `target`.
pub fn coverage_diagnostics(
    program: &Program,
    src: &SourceFile,
    candidate: &Candidate,
    target: &str,
) -> Vec<Diagnostic> {
    candidate
        .units
        .iter()
        .filter(|(_, s)| !covers(program, s, target))
        .map(|(u, _)| coverage_issue(src, u, target))
        .collect()
}
