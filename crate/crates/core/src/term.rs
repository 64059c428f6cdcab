//! Sorted solver terms with folding smart constructors.
//!
//! Every scalar of the source language is an `Int` (addresses, fixed bytes
//! and string encodings included) or a `Bool`. Aggregates are nested integer
//! indexed arrays.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Bool,
    /// Integer-indexed array with the given element sort.
    Array(Box<Sort>),
}

impl Sort {
    pub fn array_of(elem: Sort) -> Sort {
        Sort::Array(Box::new(elem))
    }

    pub fn element(&self) -> Option<&Sort> {
        match self {
            Sort::Array(e) => Some(e),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => write!(f, "Int"),
            Sort::Bool => write!(f, "Bool"),
            Sort::Array(e) => write!(f, "(Array Int {e})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TermNode {
    Int(BigInt),
    Bool(bool),
    Var(Arc<str>, Sort),
    Add(Term, Term),
    Sub(Term, Term),
    Mul(Term, Term),
    /// Division truncating towards zero; the divisor is never zero where
    /// the executor emits it.
    Div(Term, Term),
    /// Remainder with the sign of the dividend.
    Rem(Term, Term),
    /// Euclidean remainder, used for wrap-around conversions.
    Mod(Term, Term),
    Neg(Term),
    Ite(Term, Term, Term),
    Eq(Term, Term),
    Lt(Term, Term),
    Le(Term, Term),
    And(Vec<Term>),
    Or(Vec<Term>),
    Not(Term),
    Select(Term, Term),
    Store(Term, Term, Term),
    /// Array whose every element is the given value.
    ConstArray(Sort, Term),
    /// Uninterpreted function application; result sort is `Int`.
    App(Arc<str>, Vec<Term>),
}

/// Shared, immutable term. Equality is structural.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term(Arc<TermNode>);

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::solver::sexpr::term_to_smt(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::solver::sexpr::term_to_smt(self))
    }
}

#[allow(clippy::should_implement_trait)]
impl Term {
    fn mk(n: TermNode) -> Term {
        Term(Arc::new(n))
    }

    pub fn node(&self) -> &TermNode {
        &self.0
    }

    pub fn int(v: impl Into<BigInt>) -> Term {
        Term::mk(TermNode::Int(v.into()))
    }

    pub fn bool(b: bool) -> Term {
        Term::mk(TermNode::Bool(b))
    }

    pub fn tt() -> Term {
        Term::bool(true)
    }

    pub fn ff() -> Term {
        Term::bool(false)
    }

    pub fn var(name: &str, sort: Sort) -> Term {
        Term::mk(TermNode::Var(name.into(), sort))
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self.node() {
            TermNode::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self.node() {
            TermNode::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn is_true(&self) -> bool {
        self.as_bool() == Some(true)
    }

    pub fn is_false(&self) -> bool {
        self.as_bool() == Some(false)
    }

    pub fn sort(&self) -> Sort {
        match self.node() {
            TermNode::Int(_)
            | TermNode::Add(..)
            | TermNode::Sub(..)
            | TermNode::Mul(..)
            | TermNode::Div(..)
            | TermNode::Rem(..)
            | TermNode::Mod(..)
            | TermNode::Neg(_)
            | TermNode::App(..) => Sort::Int,
            TermNode::Bool(_)
            | TermNode::Eq(..)
            | TermNode::Lt(..)
            | TermNode::Le(..)
            | TermNode::And(_)
            | TermNode::Or(_)
            | TermNode::Not(_) => Sort::Bool,
            TermNode::Var(_, s) => s.clone(),
            TermNode::Ite(_, a, _) => a.sort(),
            TermNode::Select(a, _) => a.sort().element().cloned().expect("select on a non-array"),
            TermNode::Store(a, _, _) => a.sort(),
            TermNode::ConstArray(s, _) => s.clone(),
        }
    }

    pub fn children(&self) -> Vec<&Term> {
        match self.node() {
            TermNode::Int(_) | TermNode::Bool(_) | TermNode::Var(..) => vec![],
            TermNode::Add(a, b)
            | TermNode::Sub(a, b)
            | TermNode::Mul(a, b)
            | TermNode::Div(a, b)
            | TermNode::Rem(a, b)
            | TermNode::Mod(a, b)
            | TermNode::Eq(a, b)
            | TermNode::Lt(a, b)
            | TermNode::Le(a, b)
            | TermNode::Select(a, b) => vec![a, b],
            TermNode::Neg(a) | TermNode::Not(a) | TermNode::ConstArray(_, a) => vec![a],
            TermNode::Ite(a, b, c) | TermNode::Store(a, b, c) => vec![a, b, c],
            TermNode::And(v) | TermNode::Or(v) | TermNode::App(_, v) => v.iter().collect(),
        }
    }

    /// Visit every distinct subterm once, children before parents.
    pub fn visit_unique(&self, seen: &mut std::collections::HashSet<Term>, f: &mut dyn FnMut(&Term)) {
        if !seen.insert(self.clone()) {
            return;
        }
        for c in self.children() {
            c.visit_unique(seen, f);
        }
        f(self);
    }

    /// Whether the term is linear integer arithmetic (no product or
    /// division of two non-constant terms).
    pub fn is_linear(&self) -> bool {
        let mut linear = true;
        let mut seen = std::collections::HashSet::new();
        self.visit_unique(&mut seen, &mut |t| match t.node() {
            TermNode::Mul(a, b) if a.as_int().is_none() && b.as_int().is_none() => linear = false,
            TermNode::Div(_, b) | TermNode::Rem(_, b) | TermNode::Mod(_, b) if b.as_int().is_none() => linear = false,
            _ => {}
        });
        linear
    }

    pub fn add(a: Term, b: Term) -> Term {
        match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) => Term::int(x + y),
            (Some(x), _) if x.is_zero() => b,
            (_, Some(y)) if y.is_zero() => a,
            _ => Term::mk(TermNode::Add(a, b)),
        }
    }

    pub fn sub(a: Term, b: Term) -> Term {
        match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) => Term::int(x - y),
            (_, Some(y)) if y.is_zero() => a,
            _ if a == b => Term::int(0),
            _ => Term::mk(TermNode::Sub(a, b)),
        }
    }

    pub fn mul(a: Term, b: Term) -> Term {
        match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) => Term::int(x * y),
            (Some(x), _) | (_, Some(x)) if x.is_zero() => Term::int(0),
            (Some(x), _) if x.is_one() => b,
            (_, Some(y)) if y.is_one() => a,
            _ => Term::mk(TermNode::Mul(a, b)),
        }
    }

    pub fn div(a: Term, b: Term) -> Term {
        match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) if !y.is_zero() => Term::int(tdiv(x, y)),
            (_, Some(y)) if y.is_one() => a,
            _ => Term::mk(TermNode::Div(a, b)),
        }
    }

    pub fn rem(a: Term, b: Term) -> Term {
        match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) if !y.is_zero() => Term::int(trem(x, y)),
            _ => Term::mk(TermNode::Rem(a, b)),
        }
    }

    pub fn modulo(a: Term, b: Term) -> Term {
        match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) if !y.is_zero() => Term::int(x.mod_floor(&y.abs())),
            _ => Term::mk(TermNode::Mod(a, b)),
        }
    }

    pub fn neg(a: Term) -> Term {
        match a.node() {
            TermNode::Int(x) => Term::int(-x),
            TermNode::Neg(inner) => inner.clone(),
            _ => Term::mk(TermNode::Neg(a)),
        }
    }

    /// Integer power with a constant exponent, expanded into products.
    pub fn pow(a: Term, e: u32) -> Term {
        if let Some(x) = a.as_int() {
            return Term::int(num_traits::pow(x.clone(), e as usize));
        }
        let mut acc = Term::int(1);
        for _ in 0..e {
            acc = Term::mul(acc, a.clone());
        }
        acc
    }

    pub fn ite(c: Term, a: Term, b: Term) -> Term {
        match c.as_bool() {
            Some(true) => a,
            Some(false) => b,
            None if a == b => a,
            None => match (a.as_bool(), b.as_bool()) {
                (Some(true), Some(false)) => c,
                (Some(false), Some(true)) => Term::not(c),
                _ => Term::mk(TermNode::Ite(c, a, b)),
            },
        }
    }

    pub fn eq(a: Term, b: Term) -> Term {
        if a == b {
            return Term::tt();
        }
        match (a.node(), b.node()) {
            (TermNode::Int(x), TermNode::Int(y)) => Term::bool(x == y),
            (TermNode::Bool(x), TermNode::Bool(y)) => Term::bool(x == y),
            (TermNode::Bool(true), _) => b,
            (_, TermNode::Bool(true)) => a,
            (TermNode::Bool(false), _) => Term::not(b),
            (_, TermNode::Bool(false)) => Term::not(a),
            _ => Term::mk(TermNode::Eq(a, b)),
        }
    }

    pub fn ne(a: Term, b: Term) -> Term {
        Term::not(Term::eq(a, b))
    }

    pub fn lt(a: Term, b: Term) -> Term {
        match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) => Term::bool(x < y),
            _ if a == b => Term::ff(),
            _ => Term::mk(TermNode::Lt(a, b)),
        }
    }

    pub fn le(a: Term, b: Term) -> Term {
        match (a.as_int(), b.as_int()) {
            (Some(x), Some(y)) => Term::bool(x <= y),
            _ if a == b => Term::tt(),
            _ => Term::mk(TermNode::Le(a, b)),
        }
    }

    pub fn gt(a: Term, b: Term) -> Term {
        Term::lt(b, a)
    }

    pub fn ge(a: Term, b: Term) -> Term {
        Term::le(b, a)
    }

    pub fn and(items: impl IntoIterator<Item = Term>) -> Term {
        let mut out: Vec<Term> = Vec::new();
        for t in items {
            match t.node() {
                TermNode::Bool(true) => {}
                TermNode::Bool(false) => return Term::ff(),
                TermNode::And(inner) => {
                    for i in inner {
                        if !out.contains(i) {
                            out.push(i.clone());
                        }
                    }
                }
                _ => {
                    if !out.contains(&t) {
                        out.push(t)
                    }
                }
            }
        }
        match out.len() {
            0 => Term::tt(),
            1 => out.pop().unwrap(),
            _ => Term::mk(TermNode::And(out)),
        }
    }

    pub fn and2(a: Term, b: Term) -> Term {
        Term::and([a, b])
    }

    pub fn or(items: impl IntoIterator<Item = Term>) -> Term {
        let mut out: Vec<Term> = Vec::new();
        for t in items {
            match t.node() {
                TermNode::Bool(false) => {}
                TermNode::Bool(true) => return Term::tt(),
                TermNode::Or(inner) => {
                    for i in inner {
                        if !out.contains(i) {
                            out.push(i.clone());
                        }
                    }
                }
                _ => {
                    if !out.contains(&t) {
                        out.push(t)
                    }
                }
            }
        }
        match out.len() {
            0 => Term::ff(),
            1 => out.pop().unwrap(),
            _ => Term::mk(TermNode::Or(out)),
        }
    }

    pub fn or2(a: Term, b: Term) -> Term {
        Term::or([a, b])
    }

    pub fn not(a: Term) -> Term {
        match a.node() {
            TermNode::Bool(b) => Term::bool(!b),
            TermNode::Not(inner) => inner.clone(),
            _ => Term::mk(TermNode::Not(a)),
        }
    }

    pub fn implies(a: Term, b: Term) -> Term {
        Term::or2(Term::not(a), b)
    }

    pub fn select(arr: Term, idx: Term) -> Term {
        match arr.node() {
            TermNode::ConstArray(_, v) => v.clone(),
            TermNode::Store(inner, k, v) => {
                if *k == idx {
                    return v.clone();
                }
                if let (Some(_), Some(_)) = (k.as_int(), idx.as_int()) {
                    // Distinct literal keys cannot alias.
                    return Term::select(inner.clone(), idx);
                }
                Term::mk(TermNode::Select(arr, idx))
            }
            _ => Term::mk(TermNode::Select(arr, idx)),
        }
    }

    pub fn store(arr: Term, idx: Term, val: Term) -> Term {
        // Overwriting the same literal key drops the shadowed store.
        if let TermNode::Store(inner, k, _) = arr.node() {
            if *k == idx {
                return Term::store(inner.clone(), idx, val);
            }
        }
        Term::mk(TermNode::Store(arr, idx, val))
    }

    pub fn const_array(sort: Sort, val: Term) -> Term {
        debug_assert!(matches!(sort, Sort::Array(_)));
        Term::mk(TermNode::ConstArray(sort, val))
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::mk(TermNode::App(name.into(), args))
    }

    /// Inclusive range constraint `lo <= t < hi`.
    pub fn in_range(t: &Term, lo: &BigInt, hi: Option<&BigInt>) -> Term {
        let low = Term::le(Term::int(lo.clone()), t.clone());
        match hi {
            Some(h) => Term::and2(low, Term::lt(t.clone(), Term::int(h.clone()))),
            None => low,
        }
    }

    /// Replace variables by terms, rebuilding through the smart
    /// constructors so that the result is folded.
    pub fn substitute(&self, f: &dyn Fn(&str, &Sort) -> Option<Term>) -> Term {
        let mut cache = std::collections::HashMap::new();
        self.subst_rec(f, &mut cache)
    }

    fn subst_rec(
        &self,
        f: &dyn Fn(&str, &Sort) -> Option<Term>,
        cache: &mut std::collections::HashMap<Term, Term>,
    ) -> Term {
        if let Some(t) = cache.get(self) {
            return t.clone();
        }
        let mut r = |t: &Term| t.subst_rec(f, cache);
        let out = match self.node() {
            TermNode::Int(_) | TermNode::Bool(_) => self.clone(),
            TermNode::Var(n, s) => f(n, s).unwrap_or_else(|| self.clone()),
            TermNode::Add(a, b) => Term::add(r(a), r(b)),
            TermNode::Sub(a, b) => Term::sub(r(a), r(b)),
            TermNode::Mul(a, b) => Term::mul(r(a), r(b)),
            TermNode::Div(a, b) => Term::div(r(a), r(b)),
            TermNode::Rem(a, b) => Term::rem(r(a), r(b)),
            TermNode::Mod(a, b) => Term::modulo(r(a), r(b)),
            TermNode::Neg(a) => Term::neg(r(a)),
            TermNode::Ite(c, a, b) => Term::ite(r(c), r(a), r(b)),
            TermNode::Eq(a, b) => Term::eq(r(a), r(b)),
            TermNode::Lt(a, b) => Term::lt(r(a), r(b)),
            TermNode::Le(a, b) => Term::le(r(a), r(b)),
            TermNode::And(v) => Term::and(v.iter().map(&mut r).collect::<Vec<_>>()),
            TermNode::Or(v) => Term::or(v.iter().map(&mut r).collect::<Vec<_>>()),
            TermNode::Not(a) => Term::not(r(a)),
            TermNode::Select(a, i) => Term::select(r(a), r(i)),
            TermNode::Store(a, i, v) => Term::store(r(a), r(i), r(v)),
            TermNode::ConstArray(s, v) => Term::const_array(s.clone(), r(v)),
            TermNode::App(n, args) => Term::app(n, args.iter().map(&mut r).collect()),
        };
        cache.insert(self.clone(), out.clone());
        out
    }

    /// Free variables with their sorts, in first-occurrence order.
    pub fn free_vars(&self, out: &mut Vec<(Arc<str>, Sort)>) {
        let mut seen = std::collections::HashSet::new();
        self.visit_unique(&mut seen, &mut |t| {
            if let TermNode::Var(n, s) = t.node() {
                if !out.iter().any(|(m, _)| m == n) {
                    out.push((n.clone(), s.clone()));
                }
            }
        });
    }
}

/// Integer division truncating towards zero.
pub fn tdiv(a: &BigInt, b: &BigInt) -> BigInt {
    let q = a.abs() / b.abs();
    if a.is_negative() != b.is_negative() {
        -q
    } else {
        q
    }
}

/// Remainder with the sign of the dividend.
pub fn trem(a: &BigInt, b: &BigInt) -> BigInt {
    let r = a.abs() % b.abs();
    if a.is_negative() {
        -r
    } else {
        r
    }
}

/// Small exponents only; used when folding constant powers.
pub fn small_exponent(e: &BigInt) -> Option<u32> {
    e.to_u32().filter(|e| *e <= 4096)
}
