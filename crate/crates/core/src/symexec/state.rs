//! Symbolic machine state.
//!
//! Aggregates (mappings, arrays, structs) are flattened into leaves. A leaf
//! is addressed by the chain of field selections, element steps and the
//! array length marker that leads to it from the root, and holds one term
//! whose sort has an array layer per element step.

use crate::frontend::span::Span;
use crate::ir::{EnvVar, FuncId, Program};
use crate::term::{Sort, Term};
use crate::types::Ty;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LeafStep {
    Field(usize),
    Elem,
    Len,
}

pub type LeafPath = Vec<LeafStep>;

/// Leaves of one aggregate or scalar variable. Scalars have the single
/// leaf `[]`.
pub type Agg = BTreeMap<LeafPath, Term>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Root {
    State(usize),
    /// A state variable read in the pre-state of the transaction.
    OldState(usize),
    Mem(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Field(usize),
    Index(Term),
}

/// Location of a value in storage or memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Place {
    pub root: Root,
    pub steps: Vec<Step>,
    pub ty: Ty,
}

impl Place {
    pub fn leaf_prefix(&self) -> LeafPath {
        self.steps
            .iter()
            .map(|s| match s {
                Step::Field(i) => LeafStep::Field(*i),
                Step::Index(_) => LeafStep::Elem,
            })
            .collect()
    }

    pub fn indices(&self) -> Vec<Term> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Index(t) => Some(t.clone()),
                Step::Field(_) => None,
            })
            .collect()
    }

    pub fn child(&self, step: Step, ty: Ty) -> Place {
        let mut steps = self.steps.clone();
        steps.push(step);
        Place {
            root: self.root,
            steps,
            ty,
        }
    }
}

/// Runtime value of an expression or local variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Val {
    Scalar(Term),
    Ref(Place),
    Tuple(Vec<Option<Val>>),
    Void,
}

impl Val {
    pub fn term(&self) -> Option<&Term> {
        match self {
            Val::Scalar(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MemObj {
    pub ty: Ty,
    pub leaves: Agg,
}

/// Symbolic input of one call, captured at entry.
#[derive(Clone, Debug)]
pub enum SymArg {
    Scalar(Term),
    Mem(MemObj),
}

/// One transaction (or direct rule-level call) along a path.
#[derive(Clone, Debug)]
pub struct TxRecord {
    pub func: Option<FuncId>,
    pub env: BTreeMap<EnvVar, Term>,
    pub args: Vec<SymArg>,
    /// Made by a rule body rather than by the transaction prefix.
    pub from_rule: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    pub cond: Term,
    pub span: Span,
}

/// Store, pre-state snapshot, path condition and environment of one path.
#[derive(Clone, Debug)]
pub struct SymState {
    pub store: Vec<Agg>,
    /// Store at entry of the current transaction; `old(·)` reads here.
    pub old_store: Vec<Agg>,
    pub mem: Vec<MemObj>,
    pub locals: Vec<Option<Val>>,
    /// Conjuncts of the path condition.
    pub path: Vec<Term>,
    pub env: BTreeMap<EnvVar, Term>,
    pub obligations: Vec<Obligation>,
    pub log: Vec<TxRecord>,
    /// Fresh values produced by external calls and `abi.decode`, in the
    /// order the path consumes them.
    pub ext: Vec<Term>,
    /// Over-approximations applied on this path (e.g. havocked calls).
    pub approximations: Vec<String>,
}

impl SymState {
    pub fn path_cond(&self) -> Term {
        Term::and(self.path.iter().cloned())
    }

    pub fn assume(&mut self, c: Term) {
        if !c.is_true() {
            self.path.push(c);
        }
    }

    pub fn agg(&self, root: Root) -> &Agg {
        match root {
            Root::State(i) => &self.store[i],
            Root::OldState(i) => &self.old_store[i],
            Root::Mem(i) => &self.mem[i].leaves,
        }
    }

    pub fn agg_mut(&mut self, root: Root) -> &mut Agg {
        match root {
            Root::State(i) => &mut self.store[i],
            Root::OldState(_) => panic!("the pre-state is read-only"),
            Root::Mem(i) => &mut self.mem[i].leaves,
        }
    }

    /// Current term of a scalar state variable.
    pub fn state_scalar(&self, id: usize) -> Option<&Term> {
        self.store.get(id)?.get(&Vec::new())
    }

    pub fn old_scalar(&self, id: usize) -> Option<&Term> {
        self.old_store.get(id)?.get(&Vec::new())
    }
}

/// Enumerate the leaves of a type with their term sorts.
pub fn leaves_of(program: &Program, ty: &Ty) -> Vec<(LeafPath, Sort)> {
    let mut out = Vec::new();
    collect_leaves(program, ty, &mut Vec::new(), 0, &mut out);
    out
}

fn wrap(sort: Sort, layers: usize) -> Sort {
    (0..layers).fold(sort, |s, _| Sort::array_of(s))
}

fn collect_leaves(program: &Program, ty: &Ty, prefix: &mut LeafPath, layers: usize, out: &mut Vec<(LeafPath, Sort)>) {
    match ty {
        Ty::Mapping(_, v) => {
            prefix.push(LeafStep::Elem);
            collect_leaves(program, v, prefix, layers + 1, out);
            prefix.pop();
        }
        Ty::Array(e) => {
            prefix.push(LeafStep::Len);
            out.push((prefix.clone(), wrap(Sort::Int, layers)));
            prefix.pop();
            prefix.push(LeafStep::Elem);
            collect_leaves(program, e, prefix, layers + 1, out);
            prefix.pop();
        }
        Ty::Struct(s) => {
            for (i, (_, fty)) in program.structs[*s].fields.iter().enumerate() {
                prefix.push(LeafStep::Field(i));
                collect_leaves(program, fty, prefix, layers, out);
                prefix.pop();
            }
        }
        Ty::Bool => out.push((prefix.clone(), wrap(Sort::Bool, layers))),
        _ => out.push((prefix.clone(), wrap(Sort::Int, layers))),
    }
}

/// Type of the value found at the end of a leaf path.
pub fn leaf_type(program: &Program, ty: &Ty, path: &[LeafStep]) -> Ty {
    let mut t = ty.clone();
    for s in path {
        t = match (s, &t) {
            (LeafStep::Elem, Ty::Mapping(_, v)) => (**v).clone(),
            (LeafStep::Elem, Ty::Array(e)) => (**e).clone(),
            (LeafStep::Len, Ty::Array(_)) => Ty::uint256(),
            (LeafStep::Field(i), Ty::Struct(s)) => program.structs[*s].fields[*i].1.clone(),
            _ => panic!("leaf path does not match type"),
        };
    }
    t
}

/// Human-readable leaf suffix used in symbol names, e.g. `[].creator`.
pub fn leaf_suffix(program: &Program, ty: &Ty, path: &[LeafStep]) -> String {
    let mut out = String::new();
    let mut t = ty.clone();
    for s in path {
        match (s, &t) {
            (LeafStep::Elem, _) => out.push_str("[]"),
            (LeafStep::Len, _) => out.push_str(".length"),
            (LeafStep::Field(i), Ty::Struct(sid)) => {
                out.push('.');
                out.push_str(&program.structs[*sid].fields[*i].0);
            }
            _ => {}
        }
        t = leaf_type(program, &t, std::slice::from_ref(s));
    }
    out
}

/// Default term of a scalar type.
pub fn default_scalar(ty: &Ty) -> Term {
    match ty {
        Ty::Bool => Term::ff(),
        _ => Term::int(ty.default_int()),
    }
}

/// Aggregate (or scalar) holding the default value of `ty` everywhere.
pub fn default_agg(program: &Program, ty: &Ty) -> Agg {
    leaves_of(program, ty)
        .into_iter()
        .map(|(path, sort)| {
            let base = match path.last() {
                Some(LeafStep::Len) => Term::int(0),
                _ => default_scalar(&leaf_type(program, ty, &path)),
            };
            let t = wrap_const(base, &sort);
            (path, t)
        })
        .collect()
}

fn wrap_const(base: Term, sort: &Sort) -> Term {
    match sort {
        Sort::Array(e) => Term::const_array(sort.clone(), wrap_const(base, e)),
        _ => base,
    }
}

impl fmt::Display for SymState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, agg) in self.store.iter().enumerate() {
            for (p, t) in agg {
                writeln!(f, "s{i}{p:?} = {t}")?;
            }
        }
        write!(f, "path: {}", self.path_cond())
    }
}
