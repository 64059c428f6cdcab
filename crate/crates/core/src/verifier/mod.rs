//! Property verification.
//!
//! Each property is first discharged modularly from an arbitrary storage
//! state. A satisfiable violation is only a candidate: bounded model
//! checking then searches for a concrete transaction sequence from
//! deployment that reaches it, and the sequence is replayed on the concrete
//! interpreter before the property is reported as violated.

mod bmc;

pub use bmc::{bmc_refute, ReplayData};

use crate::frontend::span::Span;
use crate::ir::*;
use crate::solver::{check_sat_with, Formula, Model, SolverConfig, SolverVerdict};
use crate::symexec::{ExecError, ExecOptions, Executor, PathOutcome, SymState};
use crate::term::Term;
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub solver: SolverConfig,
    pub loop_bound: usize,
    pub call_depth: usize,
    /// Maximum number of transactions in a counterexample, including the
    /// property's own calls.
    pub bmc_depth: usize,
    /// Bound on array arguments during bounded model checking.
    pub bmc_max_array_len: u64,
    /// Restrict integer inputs and storage to this inclusive range.
    pub input_domain: Option<(BigInt, BigInt)>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            solver: SolverConfig::default(),
            loop_bound: 5,
            call_depth: 3,
            bmc_depth: 3,
            bmc_max_array_len: 4,
            input_domain: None,
        }
    }
}

impl VerifyOptions {
    fn exec(&self, max_array_len: Option<u64>) -> ExecOptions {
        ExecOptions {
            loop_bound: self.loop_bound,
            call_depth: self.call_depth,
            input_domain: self.input_domain.clone(),
            max_array_len,
        }
    }
}

/// One call in a counterexample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub function: String,
    pub args: Vec<String>,
    pub sender: String,
    pub value: String,
    /// Made by the property itself rather than the reaching prefix.
    pub in_property: bool,
}

/// Concrete counterexample confirmed by replay.
#[derive(Clone, Debug, Serialize)]
pub struct Trace {
    pub deployer: String,
    pub constructor_args: Vec<String>,
    /// Storage right after deployment.
    pub initial_state: Vec<(String, String)>,
    pub steps: Vec<TraceStep>,
    /// Rule inputs or the checked function's arguments.
    pub property_inputs: Vec<(String, String)>,
    pub failing_span: Span,
    #[serde(skip)]
    pub replay: ReplayData,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Re-execute concretely; returns the span of the failing assertion or
    /// postcondition if the violation reproduces.
    pub fn replay(&self, program: &Program, property: Property) -> Option<Span> {
        bmc::replay(program, property, &self.replay).map(|r| r.failing)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", content = "detail")]
pub enum Verdict {
    Proven,
    VacuouslyProven,
    Violated(Box<Trace>),
    Unknown(String),
}

impl Verdict {
    pub fn is_proven(&self) -> bool {
        matches!(self, Verdict::Proven | Verdict::VacuouslyProven)
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Proven => "Proven",
            Verdict::VacuouslyProven => "VacuouslyProven",
            Verdict::Violated(_) => "Violated",
            Verdict::Unknown(_) => "Unknown",
        }
    }

    pub fn trace(&self) -> Option<&Trace> {
        match self {
            Verdict::Violated(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Unknown(r) => write!(f, "Unknown({r})"),
            v => f.write_str(v.label()),
        }
    }
}

/// A property reduced to what the executor checks.
#[derive(Clone, Copy, Debug)]
pub enum Property<'a> {
    /// Call `func` assuming `pre`; `post` must hold on normal exit.
    Function {
        func: FuncId,
        pre: &'a [TExpr],
        post: &'a [TExpr],
    },
    Rule(&'a RuleSpec),
}

impl<'a> Property<'a> {
    pub fn of_function_spec(s: &'a FunctionSpecIr) -> Self {
        Property::Function {
            func: s.func,
            pre: &s.pre,
            post: &s.post,
        }
    }

    /// The inductive step of an invariant for one function.
    pub fn of_invariant(inv: &'a InvariantSpec, func: FuncId) -> Self {
        Property::Function {
            func,
            pre: &inv.exprs,
            post: &inv.exprs,
        }
    }

    pub(crate) fn run(&self, ex: &mut Executor, st: SymState) -> Result<Vec<PathOutcome>, ExecError> {
        match self {
            Property::Function { func, pre, post } => ex.run_function_check(st, *func, pre, post),
            Property::Rule(r) => ex.run_rule(st, r),
        }
    }
}

/// Verdict of one property, or of an invariant for one function.
#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub kind: &'static str,
    pub function: Option<String>,
    pub span: Span,
    pub verdict: Verdict,
}

pub(crate) fn solve(terms: Vec<Term>, cfg: &SolverConfig) -> Result<Option<Model>, String> {
    let f = Formula::new(terms);
    match check_sat_with(&f, cfg) {
        Ok(SolverVerdict::Sat(m)) => Ok(Some(m)),
        Ok(SolverVerdict::Unsat) => Ok(None),
        Ok(SolverVerdict::Unknown(r)) => Err(r),
        Err(e) => Err(e.to_string()),
    }
}

/// Disjunct for one normal outcome: its path is feasible and some
/// obligation fails.
pub(crate) fn violation_of(st: &SymState) -> Term {
    let all = Term::and(st.obligations.iter().map(|o| o.cond.clone()));
    Term::and2(st.path_cond(), Term::not(all))
}

pub(crate) fn unsupported(e: ExecError) -> String {
    format!("unsupported: {}", e.message)
}

enum Modular {
    Clean { vacuous: bool },
    Candidate,
    Truncated,
}

fn modular(program: &Program, property: Property, opts: &VerifyOptions) -> Result<Modular, String> {
    let mut ex = Executor::new(program, opts.exec(None));
    let st = ex.init_state();
    let outs = property.run(&mut ex, st).map_err(unsupported)?;
    let normal: Vec<&SymState> = outs
        .iter()
        .filter_map(|o| match o {
            PathOutcome::Normal { state, .. } => Some(state),
            _ => None,
        })
        .collect();
    let candidates: Vec<Term> = normal
        .iter()
        .filter(|s| !s.obligations.is_empty())
        .map(|s| violation_of(s))
        .collect();
    if !candidates.is_empty() && solve(vec![Term::or(candidates)], &opts.solver)?.is_some() {
        return Ok(Modular::Candidate);
    }
    let truncated: Vec<Term> = outs
        .iter()
        .filter_map(|o| match o {
            PathOutcome::Truncated { state, .. } => Some(state.path_cond()),
            _ => None,
        })
        .collect();
    if !truncated.is_empty() && solve(vec![Term::or(truncated)], &opts.solver)?.is_some() {
        return Ok(Modular::Truncated);
    }
    let feasible = Term::or(normal.iter().map(|s| s.path_cond()));
    let vacuous = solve(vec![feasible], &opts.solver)?.is_none();
    Ok(Modular::Clean { vacuous })
}

/// Modular stage alone: `Some(true)` when a violating entry state exists,
/// `Some(false)` when none does, `None` when undecided.
pub fn modular_violation(program: &Program, property: Property, opts: &VerifyOptions) -> Option<bool> {
    match modular(program, property, opts) {
        Ok(Modular::Candidate) => Some(true),
        Ok(Modular::Clean { .. }) => Some(false),
        _ => None,
    }
}

pub fn verify_property(program: &Program, property: Property, opts: &VerifyOptions) -> Verdict {
    match modular(program, property, opts) {
        Err(r) => Verdict::Unknown(r),
        Ok(Modular::Clean { vacuous: true }) => Verdict::VacuouslyProven,
        Ok(Modular::Clean { vacuous: false }) => Verdict::Proven,
        Ok(Modular::Truncated) => Verdict::Unknown("loop bound".into()),
        Ok(Modular::Candidate) => match bmc::search(program, property, opts, opts.bmc_depth) {
            Ok(Some(trace)) => Verdict::Violated(Box::new(trace)),
            Ok(None) => Verdict::Unknown("unconfirmed".into()),
            Err(r) => Verdict::Unknown(r),
        },
    }
}

pub fn verify_function_spec(program: &Program, spec: &FunctionSpecIr, opts: &VerifyOptions) -> Verdict {
    verify_property(program, Property::of_function_spec(spec), opts)
}

pub fn verify_rule(program: &Program, rule: &RuleSpec, opts: &VerifyOptions) -> Verdict {
    verify_property(program, Property::Rule(rule), opts)
}

/// Check the invariant across every externally callable function.
pub fn verify_invariant(program: &Program, inv: &InvariantSpec, opts: &VerifyOptions) -> Vec<(String, Verdict)> {
    let entries = program.entry_points();
    entries
        .par_iter()
        .map(|&f| {
            let name = program.functions[f].name.clone();
            (name, verify_property(program, Property::of_invariant(inv, f), opts))
        })
        .collect()
}

/// Combine per-function verdicts: any violation wins, then any unknown.
pub fn combine(verdicts: &[Verdict]) -> Verdict {
    if let Some(v) = verdicts.iter().find(|v| v.is_violated()) {
        return v.clone();
    }
    if let Some(v) = verdicts.iter().find(|v| matches!(v, Verdict::Unknown(_))) {
        return v.clone();
    }
    if !verdicts.is_empty() && verdicts.iter().all(|v| matches!(v, Verdict::VacuouslyProven)) {
        Verdict::VacuouslyProven
    } else {
        Verdict::Proven
    }
}

pub fn verify_spec(program: &Program, spec: &Spec, opts: &VerifyOptions) -> Vec<PropertyResult> {
    match spec {
        Spec::Invariant(inv) => verify_invariant(program, inv, opts)
            .into_iter()
            .map(|(f, verdict)| PropertyResult {
                name: inv.name.clone(),
                kind: "invariant",
                function: Some(f),
                span: inv.span,
                verdict,
            })
            .collect(),
        Spec::Function(s) => vec![PropertyResult {
            name: s.name.clone(),
            kind: "function",
            function: Some(s.name.clone()),
            span: s.span,
            verdict: verify_function_spec(program, s, opts),
        }],
        Spec::Rule(r) => vec![PropertyResult {
            name: r.name.clone(),
            kind: "rule",
            function: None,
            span: r.span,
            verdict: verify_rule(program, r, opts),
        }],
    }
}

/// Verify many properties in parallel; results keep the input order.
pub fn verify_all(program: &Program, specs: &[Spec], opts: &VerifyOptions) -> Vec<PropertyResult> {
    specs
        .par_iter()
        .map(|s| verify_spec(program, s, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
