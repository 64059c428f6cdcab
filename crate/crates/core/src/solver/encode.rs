//! Closed quantifier-free formulas and their SMT-LIB rendering.

use super::sexpr::{symbol, term_to_smt_with};
use crate::term::{Sort, Term, TermNode};
use num_bigint::BigInt;
use num_traits::One;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write;

/// Name prefix of the uninterpreted hash functions, one per arity.
pub const SHA3_PREFIX: &str = "sha3_";

pub fn sha3_name(arity: usize) -> String {
    format!("{SHA3_PREFIX}{arity}")
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Decl {
    Const(String, Sort),
    /// Uninterpreted function from `arity` integers to an integer.
    Fun(String, usize),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Const(n, _) | Decl::Fun(n, _) => n,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Formula {
    pub declarations: Vec<Decl>,
    pub assertions: Vec<Term>,
    /// Range and pairwise injectivity instances for every hash application.
    pub axioms: Vec<Term>,
}

#[derive(Debug, thiserror::Error)]
pub enum EncodeError {
    #[error("symbol `{0}` is used with two different sorts")]
    SortClash(String),
    #[error("assertion is not boolean: {0}")]
    NotBoolean(String),
}

impl Formula {
    pub fn new(assertions: Vec<Term>) -> Formula {
        let mut consts: BTreeMap<String, Sort> = BTreeMap::new();
        let mut funs: BTreeMap<String, usize> = BTreeMap::new();
        let mut apps: Vec<Term> = Vec::new();
        let mut seen = HashSet::new();
        for a in &assertions {
            a.visit_unique(&mut seen, &mut |t| match t.node() {
                TermNode::Var(n, s) => {
                    consts.entry(n.to_string()).or_insert_with(|| s.clone());
                }
                TermNode::App(f, args) => {
                    funs.insert(f.to_string(), args.len());
                    if f.starts_with(SHA3_PREFIX) {
                        apps.push(t.clone());
                    }
                }
                _ => {}
            });
        }
        // Deterministic order independent of traversal details.
        apps.sort_by_cached_key(|t| t.to_string());
        apps.dedup();
        let hi = BigInt::one() << 256;
        let mut axioms = Vec::new();
        for a in &apps {
            axioms.push(Term::in_range(a, &BigInt::from(0), Some(&hi)));
        }
        for (i, a) in apps.iter().enumerate() {
            for b in &apps[i + 1..] {
                let (TermNode::App(f, xs), TermNode::App(g, ys)) = (a.node(), b.node()) else {
                    continue;
                };
                if f != g {
                    continue;
                }
                let same_args = Term::and(xs.iter().zip(ys).map(|(x, y)| Term::eq(x.clone(), y.clone())));
                axioms.push(Term::implies(Term::eq(a.clone(), b.clone()), same_args));
            }
        }
        let mut declarations: Vec<Decl> = consts.into_iter().map(|(n, s)| Decl::Const(n, s)).collect();
        declarations.extend(funs.into_iter().map(|(n, k)| Decl::Fun(n, k)));
        Formula {
            declarations,
            assertions,
            axioms,
        }
    }

    pub fn check(&self) -> Result<(), EncodeError> {
        let mut sorts: HashMap<&str, &Sort> = HashMap::new();
        for d in &self.declarations {
            if let Decl::Const(n, s) = d {
                if let Some(prev) = sorts.insert(n, s) {
                    if prev != s {
                        return Err(EncodeError::SortClash(n.clone()));
                    }
                }
            }
        }
        for a in self.assertions.iter().chain(&self.axioms) {
            if a.sort() != Sort::Bool {
                return Err(EncodeError::NotBoolean(a.to_string()));
            }
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        self.assertions.iter().chain(&self.axioms).all(|t| t.is_linear())
    }

    pub fn logic(&self) -> &'static str {
        if self.is_linear() {
            "QF_AUFLIA"
        } else {
            "QF_AUFNIA"
        }
    }
}

/// Render the formula as an SMT-LIB v2 script ending in `(check-sat)`.
/// Subterms shared between several parents are bound once with
/// `define-fun` so that the script stays linear in the term DAG size.
pub fn encode_formula(f: &Formula) -> Result<String, EncodeError> {
    f.check()?;
    let mut out = String::new();
    let _ = writeln!(out, "(set-logic {})", f.logic());
    for d in &f.declarations {
        match d {
            Decl::Const(n, s) => {
                let _ = writeln!(out, "(declare-fun {} () {})", symbol(n), s);
            }
            Decl::Fun(n, k) => {
                let _ = writeln!(out, "(declare-fun {} ({}) Int)", symbol(n), vec!["Int"; *k].join(" "));
            }
        }
    }
    let roots: Vec<&Term> = f.axioms.iter().chain(&f.assertions).collect();
    // Count parents per subterm over the whole DAG.
    let mut parents: HashMap<Term, usize> = HashMap::new();
    let mut order: Vec<Term> = Vec::new();
    let mut seen = HashSet::new();
    for r in &roots {
        r.visit_unique(&mut seen, &mut |t| {
            for c in t.children() {
                *parents.entry(c.clone()).or_default() += 1;
            }
            order.push(t.clone());
        });
    }
    let mut names: HashMap<Term, String> = HashMap::new();
    for t in &order {
        let shared = parents.get(t).copied().unwrap_or(0) >= 2;
        let leaf = matches!(t.node(), TermNode::Int(_) | TermNode::Bool(_) | TermNode::Var(..));
        if !shared || leaf {
            continue;
        }
        let body = term_to_smt_with(t, &|s| if s == t { None } else { names.get(s).cloned() });
        let name = format!("%{}", names.len());
        let _ = writeln!(out, "(define-fun {} () {} {})", symbol(&name), t.sort(), body);
        names.insert(t.clone(), symbol(&name));
    }
    for r in roots {
        let body = term_to_smt_with(r, &|s| names.get(s).cloned());
        let _ = writeln!(out, "(assert {body})");
    }
    out.push_str("(check-sat)\n");
    Ok(out)
}
