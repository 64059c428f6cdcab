//! Candidate generation from one reference property and the
//! compile-and-revise loop.

use crate::knowledge::KnowledgeEntry;
use crate::prompts::{build_prompt, Bindings, PromptKind, SPEC_GRAMMAR_EXAMPLE};
use crate::provider::{GenParams, LlmProvider};
use crate::{Error, PropertyKind, Result};
use ppgpt_core::checker::{compile_candidate, coverage_diagnostics};
use ppgpt_core::ir::Program;
use ppgpt_core::{render_diagnostics, SourceFile};
use serde::{Deserialize, Serialize};

pub const DEFAULT_MAX_ATTEMPTS: usize = 9;

/// The subject function.
#[derive(Clone, Debug)]
pub struct Target {
    pub func_name: String,
    pub func_code: String,
    pub contract_code: String,
}

impl Target {
    /// The function `name` of `program`, which was compiled from `src`.
    pub fn of(program: &Program, src: &SourceFile, name: &str) -> Option<Target> {
        let f = &program.functions[program.function(name)?];
        Some(Target {
            func_name: name.to_string(),
            func_code: src.slice(f.span).to_string(),
            contract_code: src.text().to_string(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Compiling,
    Compilable,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub kind: PromptKind,
    pub prompt: String,
    pub response: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateProperty {
    pub id: String,
    pub ref_entry_id: String,
    pub kind: PropertyKind,
    pub text: String,
    /// Revision calls made after the initial generation.
    pub attempts: usize,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub transcript: Vec<Turn>,
}

/// Kind of property generated from a reference of kind `k`. Invariant
/// references produce function conditions.
pub fn generated_kind(k: PropertyKind) -> PropertyKind {
    match k {
        PropertyKind::Rule => PropertyKind::Rule,
        PropertyKind::Condition | PropertyKind::Invariant => PropertyKind::Condition,
    }
}

pub fn generation_template(k: PropertyKind) -> PromptKind {
    match generated_kind(k) {
        PropertyKind::Rule => PromptKind::RuleGen,
        _ => PromptKind::ConditionGen,
    }
}

/// The property text inside an LLM response: the first fenced block if
/// any, otherwise everything from the first line that starts a property.
pub fn extract_property(response: &str) -> String {
    if let Some(start) = response.find("```") {
        let body = &response[start + 3..];
        let body = body.split_once('\n').map_or("", |(_, b)| b);
        let end = body.find("```").unwrap_or(body.len());
        return body[..end].trim().to_string();
    }
    let starts = |l: &str| {
        let l = l.trim_start();
        ["rule ", "function ", "invariant "].iter().any(|k| l.starts_with(k))
    };
    let mut offset = 0;
    for line in response.split_inclusive('\n') {
        if starts(line) {
            return response[offset..].trim().to_string();
        }
        offset += line.len();
    }
    response.trim().to_string()
}

fn call(provider: &dyn LlmProvider, kind: PromptKind, b: &Bindings, params: &GenParams) -> Result<Turn> {
    let prompt = build_prompt(kind, b)?;
    let response = provider.complete(&prompt, params)?;
    Ok(Turn { kind, prompt, response })
}

pub fn generate_candidate(
    provider: &dyn LlmProvider,
    reference: &KnowledgeEntry,
    target: &Target,
    params: &GenParams,
) -> Result<CandidateProperty> {
    let kind = generation_template(reference.kind);
    let mut b = Bindings::new();
    b.insert("func_code", target.func_code.clone());
    match kind {
        PromptKind::RuleGen => {
            b.insert("contract_code", target.contract_code.clone());
            b.insert("rule_property", reference.property.clone());
            b.insert("spec_grammar", SPEC_GRAMMAR_EXAMPLE.to_string());
        }
        _ => {
            b.insert("condition_property", reference.property.clone());
            b.insert("func_name", target.func_name.clone());
        }
    }
    let turn = call(provider, kind, &b, params)?;
    Ok(CandidateProperty {
        id: format!("{}/{}", target.func_name, reference.id),
        ref_entry_id: reference.id.clone(),
        kind: generated_kind(reference.kind),
        text: extract_property(&turn.response),
        attempts: 0,
        status: Status::Compiling,
        reason: None,
        transcript: vec![turn],
    })
}

/// Outcome of compiling the current candidate text.
enum Check {
    Ok,
    /// Diagnostics rendered for the common revise prompt.
    Errors(String),
    /// Compiles, but the rule never calls the target.
    Uncovered,
}

fn check(program: &Program, c: &CandidateProperty, target: &Target) -> Check {
    let src = SourceFile::new("candidate.psl", c.text.clone());
    let compiled = compile_candidate(program, &src, Some(c.kind), Some(&target.func_name));
    if !compiled.compiles() {
        return Check::Errors(render_diagnostics(&compiled.diagnostics));
    }
    if compiled.covered {
        return Check::Ok;
    }
    match c.kind {
        PropertyKind::Rule => Check::Uncovered,
        _ => Check::Errors(render_diagnostics(&coverage_diagnostics(
            program,
            &src,
            &compiled,
            &target.func_name,
        ))),
    }
}

/// Compile, and on failure ask for a revision, until the candidate compiles
/// and exercises the target or `max_attempts` revisions have been made.
pub fn revise_until_compilable(
    provider: &dyn LlmProvider,
    program: &Program,
    mut c: CandidateProperty,
    reference: &KnowledgeEntry,
    target: &Target,
    max_attempts: usize,
    params: &GenParams,
) -> CandidateProperty {
    loop {
        let (kind, mut b) = match check(program, &c, target) {
            Check::Ok => {
                c.status = Status::Compilable;
                return c;
            }
            Check::Errors(info) => {
                let mut b = Bindings::new();
                b.insert("error_info", info);
                (PromptKind::CommonRevise, b)
            }
            Check::Uncovered => {
                let mut b = Bindings::new();
                b.insert("knowledge_rule", reference.property.clone());
                (PromptKind::SpecialRevise, b)
            }
        };
        if c.attempts >= max_attempts {
            c.status = Status::Failed;
            c.reason = Some(format!("not compilable after {max_attempts} revisions"));
            return c;
        }
        b.insert("spec_res", c.text.clone());
        b.insert("func_code", target.func_code.clone());
        b.insert("contract_code", target.contract_code.clone());
        b.insert("function_name", target.func_name.clone());
        match call(provider, kind, &b, params) {
            Ok(turn) => {
                c.attempts += 1;
                c.text = extract_property(&turn.response);
                c.transcript.push(turn);
            }
            Err(e) => {
                c.status = Status::Failed;
                c.reason = Some(e.to_string());
                return c;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SummaryMode {
    Code,
    Property,
}

pub fn summarize(provider: &dyn LlmProvider, text: &str, mode: SummaryMode, params: &GenParams) -> Result<String> {
    if text.trim().is_empty() {
        return Err(Error::Precondition("cannot summarize empty text".into()));
    }
    let kind = match mode {
        SummaryMode::Code => PromptKind::SummarizeCode,
        SummaryMode::Property => PromptKind::SummarizeProperty,
    };
    let mut b = Bindings::new();
    b.insert("text", text.to_string());
    Ok(call(provider, kind, &b, params)?.response.trim().to_string())
}
