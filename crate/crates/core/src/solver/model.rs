//! Solver models and a ground evaluator for terms.

use super::sexpr::SExpr;
use crate::term::{tdiv, trem, Sort, Term, TermNode};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    Array(Arc<ArrayValue>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ArrayValue {
    Table {
        default: Value,
        entries: BTreeMap<BigInt, Value>,
    },
    /// `(lambda ((x Int)) body)` as printed by some solvers.
    Lambda { param: String, body: SExpr },
    /// `(_ as-array f)`: the array is the graph of a model function.
    AsArray(String),
    /// Writes on top of a functional array.
    Overlay {
        base: Value,
        entries: BTreeMap<BigInt, Value>,
    },
}

impl Value {
    pub fn int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn default_of(sort: &Sort) -> Value {
        match sort {
            Sort::Int => Value::Int(BigInt::zero()),
            Sort::Bool => Value::Bool(false),
            Sort::Array(e) => Value::Array(Arc::new(ArrayValue::Table {
                default: Value::default_of(e),
                entries: BTreeMap::new(),
            })),
        }
    }
}

#[derive(Clone, Debug)]
enum Def {
    Value(Value),
    Fun { params: Vec<String>, body: SExpr },
}

/// Interpretation of declared symbols. Symbols the model does not mention
/// evaluate to the default of their sort.
#[derive(Clone, Debug, Default)]
pub struct Model {
    defs: BTreeMap<String, Def>,
}

#[derive(Debug, thiserror::Error)]
#[error("cannot evaluate model expression: {0}")]
pub struct EvalError(pub String);

type Env = HashMap<String, Value>;

impl Model {
    pub fn from_values(values: impl IntoIterator<Item = (String, Value)>) -> Model {
        Model {
            defs: values.into_iter().map(|(k, v)| (k, Def::Value(v))).collect(),
        }
    }

    pub fn set(&mut self, name: &str, v: Value) {
        self.defs.insert(name.to_string(), Def::Value(v));
    }

    /// Parse the response to `(get-model)`.
    pub fn parse(text: &str) -> Result<Model, String> {
        let items = super::sexpr::parse_all(text)?;
        let mut defs = BTreeMap::new();
        let body: Vec<SExpr> = match items.as_slice() {
            [SExpr::List(l)] => {
                // Older solvers wrap the definitions in `(model ...)`.
                if l.first().and_then(|a| a.atom()) == Some("model") {
                    l[1..].to_vec()
                } else {
                    l.clone()
                }
            }
            _ => return Err(format!("unexpected model shape: {text}")),
        };
        for d in body {
            let l = d.list().ok_or("model entry is not a list")?;
            if l.first().and_then(|a| a.atom()) != Some("define-fun") || l.len() != 5 {
                continue;
            }
            let name = l[1].atom().ok_or("bad define-fun name")?.to_string();
            let params: Vec<String> = l[2]
                .list()
                .ok_or("bad define-fun parameters")?
                .iter()
                .filter_map(|p| {
                    p.list()
                        .and_then(|p| p.first())
                        .and_then(|n| n.atom())
                        .map(str::to_string)
                })
                .collect();
            defs.insert(
                name,
                Def::Fun {
                    params,
                    body: l[4].clone(),
                },
            );
        }
        let mut m = Model { defs };
        // Constants are evaluated eagerly so that lookups are cheap.
        let names: Vec<String> = m
            .defs
            .iter()
            .filter(|(_, d)| matches!(d, Def::Fun { params, .. } if params.is_empty()))
            .map(|(n, _)| n.clone())
            .collect();
        for n in names {
            if let Some(Def::Fun { body, .. }) = m.defs.get(&n).cloned() {
                if let Ok(v) = m.eval_sexpr(&body, &Env::new()) {
                    m.defs.insert(n, Def::Value(v));
                }
            }
        }
        Ok(m)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(|s| s.as_str())
    }

    pub fn constant(&self, name: &str) -> Option<Value> {
        match self.defs.get(name)? {
            Def::Value(v) => Some(v.clone()),
            Def::Fun { params, body } if params.is_empty() => self.eval_sexpr(body, &Env::new()).ok(),
            Def::Fun { .. } => None,
        }
    }

    fn apply(&self, name: &str, args: Vec<Value>) -> Result<Value, EvalError> {
        match self.defs.get(name) {
            Some(Def::Fun { params, body }) if params.len() == args.len() => {
                let env: Env = params.iter().cloned().zip(args).collect();
                self.eval_sexpr(body, &env)
            }
            Some(Def::Value(v)) if args.is_empty() => Ok(v.clone()),
            Some(_) => Err(EvalError(format!("arity mismatch applying `{name}`"))),
            // Unconstrained uninterpreted functions may be omitted.
            None => Ok(Value::Int(BigInt::zero())),
        }
    }

    pub fn select(&self, arr: &Value, idx: &BigInt) -> Result<Value, EvalError> {
        let Value::Array(a) = arr else {
            return Err(EvalError("select on a non-array".into()));
        };
        match &**a {
            ArrayValue::Table { default, entries } => Ok(entries.get(idx).cloned().unwrap_or_else(|| default.clone())),
            ArrayValue::Lambda { param, body } => {
                let mut env = Env::new();
                env.insert(param.clone(), Value::Int(idx.clone()));
                self.eval_sexpr(body, &env)
            }
            ArrayValue::AsArray(f) => self.apply(f, vec![Value::Int(idx.clone())]),
            ArrayValue::Overlay { base, entries } => match entries.get(idx) {
                Some(v) => Ok(v.clone()),
                None => self.select(base, idx),
            },
        }
    }

    fn store(&self, arr: &Value, idx: BigInt, v: Value) -> Result<Value, EvalError> {
        let Value::Array(a) = arr else {
            return Err(EvalError("store on a non-array".into()));
        };
        match &**a {
            ArrayValue::Table { default, entries } => {
                let mut entries = entries.clone();
                entries.insert(idx, v);
                Ok(Value::Array(Arc::new(ArrayValue::Table {
                    default: default.clone(),
                    entries,
                })))
            }
            ArrayValue::Overlay { base, entries } => {
                let mut entries = entries.clone();
                entries.insert(idx, v);
                Ok(Value::Array(Arc::new(ArrayValue::Overlay {
                    base: base.clone(),
                    entries,
                })))
            }
            _ => {
                let mut entries = BTreeMap::new();
                entries.insert(idx, v);
                Ok(Value::Array(Arc::new(ArrayValue::Overlay {
                    base: arr.clone(),
                    entries,
                })))
            }
        }
    }

    fn eval_sexpr(&self, e: &SExpr, env: &Env) -> Result<Value, EvalError> {
        match e {
            SExpr::Atom(a) => {
                if let Ok(v) = a.parse::<BigInt>() {
                    return Ok(Value::Int(v));
                }
                match a.as_str() {
                    "true" => return Ok(Value::Bool(true)),
                    "false" => return Ok(Value::Bool(false)),
                    _ => {}
                }
                if let Some(v) = env.get(a) {
                    return Ok(v.clone());
                }
                self.apply(a, vec![])
            }
            SExpr::List(l) => {
                let Some(head) = l.first() else {
                    return Err(EvalError("empty application".into()));
                };
                if let SExpr::List(h) = head {
                    // ((as const (Array Int Int)) v)
                    if h.first().and_then(|x| x.atom()) == Some("as")
                        && h.get(1).and_then(|x| x.atom()) == Some("const")
                    {
                        let v = self.eval_sexpr(&l[1], env)?;
                        return Ok(Value::Array(Arc::new(ArrayValue::Table {
                            default: v,
                            entries: BTreeMap::new(),
                        })));
                    }
                    return Err(EvalError(format!("unsupported head {head}")));
                }
                let h = head.atom().unwrap();
                let args = &l[1..];
                let ev = |x: &SExpr| self.eval_sexpr(x, env);
                let int = |x: &SExpr| -> Result<BigInt, EvalError> {
                    ev(x)?
                        .int()
                        .cloned()
                        .ok_or_else(|| EvalError(format!("expected integer in {x}")))
                };
                let boolean = |x: &SExpr| -> Result<bool, EvalError> {
                    ev(x)?
                        .bool()
                        .ok_or_else(|| EvalError(format!("expected boolean in {x}")))
                };
                match h {
                    "-" if args.len() == 1 => Ok(Value::Int(-int(&args[0])?)),
                    "-" => {
                        let mut acc = int(&args[0])?;
                        for a in &args[1..] {
                            acc -= int(a)?;
                        }
                        Ok(Value::Int(acc))
                    }
                    "+" => {
                        let mut acc = BigInt::zero();
                        for a in args {
                            acc += int(a)?;
                        }
                        Ok(Value::Int(acc))
                    }
                    "*" => {
                        let mut acc = BigInt::from(1);
                        for a in args {
                            acc *= int(a)?;
                        }
                        Ok(Value::Int(acc))
                    }
                    "div" => {
                        let (a, b) = (int(&args[0])?, int(&args[1])?);
                        if b.is_zero() {
                            return Ok(Value::Int(BigInt::zero()));
                        }
                        // Euclidean division.
                        let q = a.div_floor(&b.abs());
                        Ok(Value::Int(if b.is_negative() { -q } else { q }))
                    }
                    "mod" => {
                        let (a, b) = (int(&args[0])?, int(&args[1])?);
                        if b.is_zero() {
                            return Ok(Value::Int(a));
                        }
                        Ok(Value::Int(a.mod_floor(&b.abs())))
                    }
                    "abs" => Ok(Value::Int(int(&args[0])?.abs())),
                    "ite" => {
                        if boolean(&args[0])? {
                            ev(&args[1])
                        } else {
                            ev(&args[2])
                        }
                    }
                    "=" => {
                        let a = ev(&args[0])?;
                        for b in &args[1..] {
                            if !self.values_equal(&a, &ev(b)?)? {
                                return Ok(Value::Bool(false));
                            }
                        }
                        Ok(Value::Bool(true))
                    }
                    "distinct" => {
                        let vs: Vec<Value> = args.iter().map(ev).collect::<Result<_, _>>()?;
                        for i in 0..vs.len() {
                            for j in i + 1..vs.len() {
                                if self.values_equal(&vs[i], &vs[j])? {
                                    return Ok(Value::Bool(false));
                                }
                            }
                        }
                        Ok(Value::Bool(true))
                    }
                    "<" | "<=" | ">" | ">=" => {
                        let (a, b) = (int(&args[0])?, int(&args[1])?);
                        Ok(Value::Bool(match h {
                            "<" => a < b,
                            "<=" => a <= b,
                            ">" => a > b,
                            _ => a >= b,
                        }))
                    }
                    "and" => {
                        for a in args {
                            if !boolean(a)? {
                                return Ok(Value::Bool(false));
                            }
                        }
                        Ok(Value::Bool(true))
                    }
                    "or" => {
                        for a in args {
                            if boolean(a)? {
                                return Ok(Value::Bool(true));
                            }
                        }
                        Ok(Value::Bool(false))
                    }
                    "not" => Ok(Value::Bool(!boolean(&args[0])?)),
                    "=>" => Ok(Value::Bool(!boolean(&args[0])? || boolean(&args[1])?)),
                    "let" => {
                        let mut inner = env.clone();
                        for b in args[0].list().ok_or_else(|| EvalError("bad let".into()))? {
                            let b = b.list().ok_or_else(|| EvalError("bad let binding".into()))?;
                            let name = b[0].atom().ok_or_else(|| EvalError("bad let name".into()))?;
                            inner.insert(name.to_string(), ev(&b[1])?);
                        }
                        self.eval_sexpr(&args[1], &inner)
                    }
                    "select" => {
                        let a = ev(&args[0])?;
                        self.select(&a, &int(&args[1])?)
                    }
                    "store" => {
                        let a = ev(&args[0])?;
                        self.store(&a, int(&args[1])?, ev(&args[2])?)
                    }
                    "lambda" => {
                        let params = args[0].list().ok_or_else(|| EvalError("bad lambda".into()))?;
                        let param = params
                            .first()
                            .and_then(|p| p.list())
                            .and_then(|p| p.first())
                            .and_then(|p| p.atom())
                            .ok_or_else(|| EvalError("bad lambda parameter".into()))?;
                        if params.len() != 1 || !env.is_empty() {
                            return Err(EvalError("unsupported lambda".into()));
                        }
                        Ok(Value::Array(Arc::new(ArrayValue::Lambda {
                            param: param.to_string(),
                            body: args[1].clone(),
                        })))
                    }
                    "_" if args.first().and_then(|a| a.atom()) == Some("as-array") => {
                        let f = args[1].atom().ok_or_else(|| EvalError("bad as-array".into()))?;
                        Ok(Value::Array(Arc::new(ArrayValue::AsArray(f.to_string()))))
                    }
                    f => {
                        let vals = args.iter().map(ev).collect::<Result<Vec<_>, _>>()?;
                        self.apply(f, vals)
                    }
                }
            }
        }
    }

    fn values_equal(&self, a: &Value, b: &Value) -> Result<bool, EvalError> {
        match (a, b) {
            (Value::Int(x), Value::Int(y)) => Ok(x == y),
            (Value::Bool(x), Value::Bool(y)) => Ok(x == y),
            (Value::Array(x), Value::Array(y)) => match (&**x, &**y) {
                (
                    ArrayValue::Table {
                        default: d1,
                        entries: e1,
                    },
                    ArrayValue::Table {
                        default: d2,
                        entries: e2,
                    },
                ) => {
                    if !self.values_equal(d1, d2)? {
                        return Ok(false);
                    }
                    for k in e1.keys().chain(e2.keys()) {
                        if !self.values_equal(&self.select(a, k)?, &self.select(b, k)?)? {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                }
                _ => Err(EvalError("cannot compare functional arrays".into())),
            },
            _ => Err(EvalError("sort mismatch in equality".into())),
        }
    }

    /// Evaluate a term. Free symbols missing from the model take the
    /// default value of their sort.
    pub fn eval(&self, t: &Term) -> Result<Value, EvalError> {
        let mut cache = HashMap::new();
        self.eval_rec(t, &mut cache)
    }

    pub fn eval_int(&self, t: &Term) -> Result<BigInt, EvalError> {
        self.eval(t)?
            .int()
            .cloned()
            .ok_or_else(|| EvalError(format!("expected an integer for {t}")))
    }

    pub fn eval_bool(&self, t: &Term) -> Result<bool, EvalError> {
        self.eval(t)?
            .bool()
            .ok_or_else(|| EvalError(format!("expected a boolean for {t}")))
    }

    fn eval_rec(&self, t: &Term, cache: &mut HashMap<Term, Value>) -> Result<Value, EvalError> {
        if let Some(v) = cache.get(t) {
            return Ok(v.clone());
        }
        let int = |x: &Term, cache: &mut HashMap<Term, Value>| -> Result<BigInt, EvalError> {
            self.eval_rec(x, cache)?
                .int()
                .cloned()
                .ok_or_else(|| EvalError(format!("expected integer: {x}")))
        };
        let v = match t.node() {
            TermNode::Int(v) => Value::Int(v.clone()),
            TermNode::Bool(b) => Value::Bool(*b),
            TermNode::Var(n, s) => match self.defs.get(&**n) {
                Some(_) => self
                    .constant(n)
                    .ok_or_else(|| EvalError(format!("`{n}` is a function")))?,
                None => Value::default_of(s),
            },
            TermNode::Add(a, b) => Value::Int(int(a, cache)? + int(b, cache)?),
            TermNode::Sub(a, b) => Value::Int(int(a, cache)? - int(b, cache)?),
            TermNode::Mul(a, b) => Value::Int(int(a, cache)? * int(b, cache)?),
            TermNode::Div(a, b) => {
                let (x, y) = (int(a, cache)?, int(b, cache)?);
                Value::Int(if y.is_zero() { BigInt::zero() } else { tdiv(&x, &y) })
            }
            TermNode::Rem(a, b) => {
                let (x, y) = (int(a, cache)?, int(b, cache)?);
                Value::Int(if y.is_zero() { x } else { trem(&x, &y) })
            }
            TermNode::Mod(a, b) => {
                let (x, y) = (int(a, cache)?, int(b, cache)?);
                Value::Int(if y.is_zero() { x } else { x.mod_floor(&y.abs()) })
            }
            TermNode::Neg(a) => Value::Int(-int(a, cache)?),
            TermNode::Ite(c, a, b) => {
                let c = self
                    .eval_rec(c, cache)?
                    .bool()
                    .ok_or_else(|| EvalError("ite condition".into()))?;
                if c {
                    self.eval_rec(a, cache)?
                } else {
                    self.eval_rec(b, cache)?
                }
            }
            TermNode::Eq(a, b) => {
                let (x, y) = (self.eval_rec(a, cache)?, self.eval_rec(b, cache)?);
                Value::Bool(self.values_equal(&x, &y)?)
            }
            TermNode::Lt(a, b) => Value::Bool(int(a, cache)? < int(b, cache)?),
            TermNode::Le(a, b) => Value::Bool(int(a, cache)? <= int(b, cache)?),
            TermNode::And(items) => {
                let mut r = true;
                for i in items {
                    if !self
                        .eval_rec(i, cache)?
                        .bool()
                        .ok_or_else(|| EvalError("and operand".into()))?
                    {
                        r = false;
                        break;
                    }
                }
                Value::Bool(r)
            }
            TermNode::Or(items) => {
                let mut r = false;
                for i in items {
                    if self
                        .eval_rec(i, cache)?
                        .bool()
                        .ok_or_else(|| EvalError("or operand".into()))?
                    {
                        r = true;
                        break;
                    }
                }
                Value::Bool(r)
            }
            TermNode::Not(a) => Value::Bool(
                !self
                    .eval_rec(a, cache)?
                    .bool()
                    .ok_or_else(|| EvalError("not operand".into()))?,
            ),
            TermNode::Select(a, i) => {
                let arr = self.eval_rec(a, cache)?;
                let idx = int(i, cache)?;
                self.select(&arr, &idx)?
            }
            TermNode::Store(a, i, v) => {
                let arr = self.eval_rec(a, cache)?;
                let idx = int(i, cache)?;
                let val = self.eval_rec(v, cache)?;
                self.store(&arr, idx, val)?
            }
            TermNode::ConstArray(_, v) => Value::Array(Arc::new(ArrayValue::Table {
                default: self.eval_rec(v, cache)?,
                entries: BTreeMap::new(),
            })),
            TermNode::App(f, args) => {
                let vals = args
                    .iter()
                    .map(|a| self.eval_rec(a, cache))
                    .collect::<Result<Vec<_>, _>>()?;
                self.apply(f, vals)?
            }
        };
        cache.insert(t.clone(), v.clone());
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_solver_model() {
        let text = "(\n  (define-fun a () (Array Int Int)\n    (store ((as const (Array Int Int)) 7) 1 5))\n  (define-fun x () Int\n    (- 3))\n  (define-fun h ((x!0 Int) (x!1 Int)) Int\n    (ite (and (= x!0 3) (= x!1 7722)) 4\n      9))\n)";
        let m = Model::parse(text).unwrap();
        let a = Term::var("a", Sort::array_of(Sort::Int));
        assert_eq!(
            m.eval_int(&Term::select(a.clone(), Term::int(1))).unwrap(),
            BigInt::from(5)
        );
        assert_eq!(m.eval_int(&Term::select(a, Term::int(2))).unwrap(), BigInt::from(7));
        assert_eq!(m.eval_int(&Term::var("x", Sort::Int)).unwrap(), BigInt::from(-3));
        let h = Term::app("h", vec![Term::int(3), Term::int(7722)]);
        assert_eq!(m.eval_int(&h).unwrap(), BigInt::from(4));
        assert_eq!(m.eval_int(&Term::var("missing", Sort::Int)).unwrap(), BigInt::from(0));
    }

    #[test]
    fn as_array_and_lambda() {
        let text = "((define-fun a () (Array Int Int) (_ as-array k!0)) (define-fun k!0 ((x!0 Int)) Int (ite (= x!0 2) 8 1)) (define-fun b () (Array Int Int) (lambda ((i Int)) (+ i 1))))";
        let m = Model::parse(text).unwrap();
        let a = Term::var("a", Sort::array_of(Sort::Int));
        let b = Term::var("b", Sort::array_of(Sort::Int));
        assert_eq!(m.eval_int(&Term::select(a, Term::int(2))).unwrap(), BigInt::from(8));
        assert_eq!(m.eval_int(&Term::select(b, Term::int(4))).unwrap(), BigInt::from(5));
    }
}
