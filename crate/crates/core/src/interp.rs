//! Concrete interpreter over tree-shaped values.
//!
//! Used to replay counterexample traces and as a brute-force reference in
//! tests. Semantics follow the symbolic executor: checked arithmetic
//! reverts, specification arithmetic is unbounded with `x / 0 == 0`,
//! external calls succeed and their results come from a queue.

use crate::frontend::span::Span;
use crate::ir::*;
use crate::term::{small_exponent, tdiv, trem};
use crate::types::{encode_bytes, render_scalar, Ty};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, VecDeque};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CVal {
    Int(BigInt),
    Bool(bool),
    Map(BTreeMap<BigInt, CVal>),
    Arr(Vec<CVal>),
    Struct(Vec<CVal>),
}

impl CVal {
    pub fn int(v: impl Into<BigInt>) -> CVal {
        CVal::Int(v.into())
    }

    pub fn default_of(program: &Program, ty: &Ty) -> CVal {
        match ty {
            Ty::Bool => CVal::Bool(false),
            Ty::Mapping(..) => CVal::Map(BTreeMap::new()),
            Ty::Array(_) => CVal::Arr(Vec::new()),
            Ty::Struct(s) => CVal::Struct(
                program.structs[*s]
                    .fields
                    .iter()
                    .map(|(_, t)| CVal::default_of(program, t))
                    .collect(),
            ),
            t => CVal::Int(t.default_int()),
        }
    }

    /// Integer encoding of a scalar; booleans are 0 or 1.
    pub fn as_int(&self) -> Option<BigInt> {
        match self {
            CVal::Int(v) => Some(v.clone()),
            CVal::Bool(b) => Some(BigInt::from(*b as u8)),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            CVal::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Source-like rendering; mappings list their non-default entries.
    pub fn render(&self, program: &Program, ty: &Ty) -> String {
        match (self, ty) {
            (CVal::Int(v), t) => render_scalar(t, v),
            (CVal::Bool(b), _) => b.to_string(),
            (CVal::Map(m), Ty::Mapping(k, v)) => {
                let def = CVal::default_of(program, v);
                let items: Vec<String> = m
                    .iter()
                    .filter(|(_, x)| **x != def)
                    .map(|(key, x)| format!("{}: {}", render_scalar(k, key), x.render(program, v)))
                    .collect();
                format!("{{{}}}", items.join(", "))
            }
            (CVal::Arr(items), Ty::Array(e)) => {
                let items: Vec<String> = items.iter().map(|x| x.render(program, e)).collect();
                format!("[{}]", items.join(", "))
            }
            (CVal::Struct(fields), Ty::Struct(s)) => {
                let info = &program.structs[*s];
                let items: Vec<String> = fields
                    .iter()
                    .zip(&info.fields)
                    .map(|(x, (n, t))| format!("{n}: {}", x.render(program, t)))
                    .collect();
                format!("{}{{{}}}", info.name, items.join(", "))
            }
            (v, _) => format!("{v:?}"),
        }
    }
}

/// Concrete contract storage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CState {
    pub store: Vec<CVal>,
}

pub type Env = BTreeMap<EnvVar, BigInt>;

/// Why concrete execution stopped early.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Halt {
    Revert {
        reason: String,
        span: Span,
    },
    /// Unsupported construct or resource limit.
    Error(String),
}

/// Result of running a function specification on concrete inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecRun {
    PreFalse,
    Reverted,
    /// Truth value of each postcondition.
    Post(Vec<bool>),
}

/// Result of running a rule body on concrete inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleRun {
    AssumeFailed,
    Reverted,
    Completed {
        /// Spans of the assertions that evaluated to false.
        failed: Vec<Span>,
        /// Calls made by the rule body, in order.
        calls: Vec<(FuncId, Vec<CVal>)>,
        state: CState,
    },
}

pub type HashFn<'a> = Box<dyn Fn(usize, &[BigInt]) -> BigInt + 'a>;

/// Reference hash for sha3 over integer encodings: SHA-256 of the
/// length-prefixed big-endian arguments.
pub fn reference_hash(arity: usize, args: &[BigInt]) -> BigInt {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update((arity as u64).to_be_bytes());
    for a in args {
        let (sign, bytes) = a.to_bytes_be();
        h.update([(sign == num_bigint::Sign::Minus) as u8]);
        h.update((bytes.len() as u64).to_be_bytes());
        h.update(&bytes);
    }
    BigInt::from_bytes_be(num_bigint::Sign::Plus, &h.finalize())
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum CRoot {
    State(usize),
    Old(usize),
    Mem(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum CStep {
    Key(BigInt),
    Idx(usize),
    Field(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct CPlace {
    root: CRoot,
    steps: Vec<CStep>,
}

#[derive(Clone, Debug)]
enum IVal {
    V(CVal),
    Ref(CPlace),
    Tuple(Vec<Option<IVal>>),
    Void,
}

struct Frame<'a> {
    infos: &'a [LocalInfo],
    returns: &'a [LocalId],
    locals: Vec<Option<IVal>>,
    pred: bool,
    old: bool,
    rule: bool,
    depth: usize,
}

struct Tx {
    store: Vec<CVal>,
    old: Vec<CVal>,
    mem: Vec<CVal>,
    env: Env,
    calls: Vec<(FuncId, Vec<CVal>)>,
}

enum Flow {
    Next,
    Return,
}

type X<T> = Result<T, Halt>;

fn revert<T>(reason: &str, span: Span) -> X<T> {
    Err(Halt::Revert {
        reason: reason.to_string(),
        span,
    })
}

fn unsupported<T>(m: impl Into<String>) -> X<T> {
    Err(Halt::Error(m.into()))
}

fn pow2(n: u32) -> BigInt {
    BigInt::one() << n
}

pub(crate) fn in_type(v: &BigInt, ty: &Ty) -> bool {
    ty.contains(v)
}

/// Explicit conversion between scalar types on integer encodings.
pub fn convert_int(v: &BigInt, from: &Ty, to: &Ty) -> Option<BigInt> {
    use Ty::*;
    let wrap = |v: &BigInt, bits: u32| v.mod_floor(&pow2(bits));
    Some(match (from, to) {
        (FixedBytes(a), FixedBytes(b)) => {
            let (a, b) = (*a as u32, *b as u32);
            if a <= b {
                v * pow2(8 * (b - a))
            } else {
                v / pow2(8 * (a - b))
            }
        }
        (Bool, Bool) | (String | Bytes, String | Bytes) => v.clone(),
        (Uint(_) | Int(_) | Lit | Address | FixedBytes(_), Uint(n)) => wrap(v, *n as u32),
        (Uint(_) | Int(_) | Lit, Int(n)) => {
            let half = pow2(*n as u32 - 1);
            wrap(&(v + &half), *n as u32) - half
        }
        (Uint(_) | Lit | FixedBytes(_) | Address, Address) => wrap(v, 160),
        (Uint(_) | Lit, FixedBytes(n)) => wrap(v, 8 * *n as u32),
        _ => return None,
    })
}

pub struct Interp<'p> {
    pub program: &'p Program,
    hash: HashFn<'p>,
    ext: VecDeque<CVal>,
    fuel: u64,
}

const FUEL: u64 = 1_000_000;
const MAX_DEPTH: usize = 64;
const MAX_NEW_ARRAY: usize = 100_000;

impl<'p> Interp<'p> {
    pub fn new(program: &'p Program) -> Self {
        Interp {
            program,
            hash: Box::new(reference_hash),
            ext: VecDeque::new(),
            fuel: FUEL,
        }
    }

    pub fn with_hash(mut self, hash: HashFn<'p>) -> Self {
        self.hash = hash;
        self
    }

    /// Values returned by external calls and `abi.decode`, consumed in order.
    pub fn with_external_results(mut self, values: impl IntoIterator<Item = CVal>) -> Self {
        self.ext = values.into_iter().collect();
        self
    }

    pub fn default_state(&self) -> CState {
        CState {
            store: self
                .program
                .state_vars
                .iter()
                .map(|v| CVal::default_of(self.program, &v.ty))
                .collect(),
        }
    }

    fn tx(&self, st: &CState, env: &Env) -> Tx {
        Tx {
            store: st.store.clone(),
            old: st.store.clone(),
            mem: Vec::new(),
            env: env.clone(),
            calls: Vec::new(),
        }
    }

    /// Run initializers and constructors, base first.
    pub fn deploy(&mut self, env: &Env, args: Vec<CVal>) -> X<CState> {
        self.fuel = FUEL;
        let program = self.program;
        let mut tx = self.tx(&self.default_state(), env);
        let mut args = Some(args);
        for step in &program.construction {
            for &sid in &step.initializers {
                let init = program.state_vars[sid].init.as_ref().expect("initializer");
                let mut fr = Frame {
                    infos: &[],
                    returns: &[],
                    locals: vec![],
                    pred: false,
                    old: false,
                    rule: false,
                    depth: 0,
                };
                let v = self.eval(&mut tx, &mut fr, init)?;
                let v = self.materialize(&tx, v)?;
                tx.store[sid] = v;
            }
            if let Some(fid) = step.constructor {
                let f = &program.functions[fid];
                if !f.payable && !env_value(&tx.env).is_zero() {
                    return revert("value sent to non-payable constructor", f.span);
                }
                let a = if f.params.is_empty() {
                    vec![]
                } else {
                    args.take().unwrap_or_default()
                };
                let ivals = self.args_to_ivals(&mut tx, a);
                self.call_fn(&mut tx, fid, ivals, 0)?;
            }
        }
        Ok(CState { store: tx.store })
    }

    fn args_to_ivals(&self, tx: &mut Tx, args: Vec<CVal>) -> Vec<IVal> {
        args.into_iter()
            .map(|a| match a {
                CVal::Int(_) | CVal::Bool(_) => IVal::V(a),
                agg => {
                    tx.mem.push(agg);
                    IVal::Ref(CPlace {
                        root: CRoot::Mem(tx.mem.len() - 1),
                        steps: vec![],
                    })
                }
            })
            .collect()
    }

    /// One external transaction.
    pub fn call(&mut self, st: &CState, func: FuncId, args: Vec<CVal>, env: &Env) -> X<(CState, Vec<CVal>)> {
        self.fuel = FUEL;
        let f = &self.program.functions[func];
        if !f.payable && !env_value(env).is_zero() {
            return revert("value sent to non-payable function", f.span);
        }
        let mut tx = self.tx(st, env);
        let ivals = self.args_to_ivals(&mut tx, args);
        let ret = self.call_fn(&mut tx, func, ivals, 0)?;
        let rets = match ret {
            IVal::Void => vec![],
            IVal::Tuple(items) => items
                .into_iter()
                .flatten()
                .map(|v| self.materialize(&tx, v))
                .collect::<X<_>>()?,
            v => vec![self.materialize(&tx, v)?],
        };
        Ok((CState { store: tx.store }, rets))
    }

    /// Evaluate `pre`, run the function, then evaluate `post`.
    pub fn check_function(
        &mut self,
        st: &CState,
        func: FuncId,
        pre: &[TExpr],
        post: &[TExpr],
        args: Vec<CVal>,
        env: &Env,
    ) -> X<SpecRun> {
        self.fuel = FUEL;
        let program = self.program;
        let f = &program.functions[func];
        let mut tx = self.tx(st, env);
        let ivals = self.args_to_ivals(&mut tx, args);
        let mut fr = Frame {
            infos: &f.locals,
            returns: &f.returns,
            locals: vec![None; f.locals.len()],
            pred: true,
            old: false,
            rule: false,
            depth: 0,
        };
        for (&p, v) in f.params.iter().zip(ivals.iter()) {
            fr.locals[p] = Some(v.clone());
        }
        for e in pre {
            if !self.eval_bool(&mut tx, &mut fr, e)? {
                return Ok(SpecRun::PreFalse);
            }
        }
        if !f.payable && !env_value(env).is_zero() {
            return Ok(SpecRun::Reverted);
        }
        let entry = fr.locals.clone();
        let (locals, _) = match self.run_frame(&mut tx, func, ivals, 0) {
            Ok(r) => r,
            Err(Halt::Revert { .. }) => return Ok(SpecRun::Reverted),
            Err(e) => return Err(e),
        };
        fr.locals = entry;
        for &r in &f.returns {
            fr.locals[r] = locals[r].clone();
        }
        let mut out = Vec::new();
        for e in post {
            out.push(self.eval_bool(&mut tx, &mut fr, e)?);
        }
        Ok(SpecRun::Post(out))
    }

    /// Run a rule body. `inputs` holds the rule parameters followed by the
    /// implicit variables, in declaration order.
    pub fn run_rule(&mut self, st: &CState, rule: &RuleSpec, inputs: Vec<CVal>, env: &Env) -> X<RuleRun> {
        self.fuel = FUEL;
        let mut tx = self.tx(st, env);
        let mut fr = Frame {
            infos: &rule.locals,
            returns: &[],
            locals: vec![None; rule.locals.len()],
            pred: false,
            old: false,
            rule: true,
            depth: 0,
        };
        let slots: Vec<LocalId> = rule
            .params
            .iter()
            .copied()
            .chain(rule.implicit.iter().map(|(l, _)| *l))
            .collect();
        if slots.len() != inputs.len() {
            return unsupported("rule input count mismatch");
        }
        let ivals = self.args_to_ivals(&mut tx, inputs);
        for (l, v) in slots.into_iter().zip(ivals) {
            fr.locals[l] = Some(v);
        }
        for (l, alias) in &rule.implicit {
            if let Some(sid) = alias {
                let v = fr.locals[*l].clone();
                if let Some(IVal::V(v)) = v {
                    if v.as_int() != tx.store[*sid].as_int() {
                        return Ok(RuleRun::AssumeFailed);
                    }
                }
            }
        }
        let mut failed = Vec::new();
        match self.exec_rule_block(&mut tx, &mut fr, &rule.body, &mut failed) {
            Ok(true) => Ok(RuleRun::Completed {
                failed,
                calls: tx.calls,
                state: CState { store: tx.store },
            }),
            Ok(false) => Ok(RuleRun::AssumeFailed),
            Err(Halt::Revert { .. }) => Ok(RuleRun::Reverted),
            Err(e) => Err(e),
        }
    }

    /// Evaluate state-only predicates (invariants) on a state.
    pub fn eval_predicates(&mut self, st: &CState, exprs: &[TExpr], env: &Env) -> X<Vec<bool>> {
        let mut tx = self.tx(st, env);
        let mut fr = Frame {
            infos: &[],
            returns: &[],
            locals: vec![],
            pred: true,
            old: false,
            rule: false,
            depth: 0,
        };
        exprs.iter().map(|e| self.eval_bool(&mut tx, &mut fr, e)).collect()
    }

    // ----- statements -----

    /// Rule statements; `Ok(false)` when an assumption fails.
    fn exec_rule_block(&mut self, tx: &mut Tx, fr: &mut Frame, stmts: &[TStmt], failed: &mut Vec<Span>) -> X<bool> {
        for s in stmts {
            match s {
                TStmt::Assume { cond } => {
                    fr.pred = true;
                    let c = self.eval_bool(tx, fr, cond);
                    fr.pred = false;
                    if !c? {
                        return Ok(false);
                    }
                }
                TStmt::Assert { cond, span } => {
                    fr.pred = true;
                    let c = self.eval_bool(tx, fr, cond);
                    fr.pred = false;
                    if !c? {
                        failed.push(*span);
                    }
                }
                TStmt::If { cond, then, els } => {
                    let c = self.eval_bool(tx, fr, cond)?;
                    if !self.exec_rule_block(tx, fr, if c { then } else { els }, failed)? {
                        return Ok(false);
                    }
                }
                other => {
                    self.exec(tx, fr, other)?;
                }
            }
        }
        Ok(true)
    }

    fn exec_block(&mut self, tx: &mut Tx, fr: &mut Frame, stmts: &[TStmt]) -> X<Flow> {
        for s in stmts {
            if let Flow::Return = self.exec(tx, fr, s)? {
                return Ok(Flow::Return);
            }
        }
        Ok(Flow::Next)
    }

    fn exec(&mut self, tx: &mut Tx, fr: &mut Frame, s: &TStmt) -> X<Flow> {
        match s {
            TStmt::Decl { local, init } => {
                let v = match init {
                    Some(e) => self.eval(tx, fr, e)?,
                    None => {
                        let info = &fr.infos[*local];
                        match info.kind {
                            LocalKind::Value => IVal::V(CVal::default_of(self.program, &info.ty)),
                            LocalKind::Memory => self.new_mem(tx, CVal::default_of(self.program, &info.ty)),
                            LocalKind::Storage => return unsupported("uninitialized storage pointer"),
                        }
                    }
                };
                self.bind(tx, fr, *local, v)?;
            }
            TStmt::TupleDecl { locals, init } => {
                let IVal::Tuple(items) = self.eval(tx, fr, init)? else {
                    return unsupported("tuple expected");
                };
                for (l, v) in locals.iter().zip(items) {
                    if let (Some(l), Some(v)) = (l, v) {
                        self.bind(tx, fr, *l, v)?;
                    }
                }
            }
            TStmt::Assign { lhs, op, rhs, span } => {
                let target = self.target(tx, fr, lhs)?;
                let mut v = self.eval(tx, fr, rhs)?;
                if let Some(op) = op {
                    let cur = match &target {
                        Target::Local(l) => match &fr.locals[*l] {
                            Some(IVal::V(v)) => v.as_int(),
                            _ => None,
                        },
                        Target::Place(p) => self.read(tx, p)?.as_int(),
                    };
                    let (Some(a), IVal::V(b)) = (cur, &v) else {
                        return unsupported("compound assignment on non-scalar");
                    };
                    let b = b.as_int().expect("scalar");
                    v = IVal::V(CVal::Int(self.arith(*op, ArithMode::Checked, a, b, &lhs.ty, *span)?));
                }
                self.assign(tx, fr, target, v)?;
            }
            TStmt::TupleAssign { lhs, rhs } => {
                let mut targets = Vec::new();
                for l in lhs {
                    targets.push(match l {
                        Some(e) => Some(self.target(tx, fr, e)?),
                        None => None,
                    });
                }
                let IVal::Tuple(items) = self.eval(tx, fr, rhs)? else {
                    return unsupported("tuple expected");
                };
                for (t, v) in targets.into_iter().zip(items) {
                    if let (Some(t), Some(v)) = (t, v) {
                        self.assign(tx, fr, t, v)?;
                    }
                }
            }
            TStmt::Expr(e) => {
                self.eval(tx, fr, e)?;
            }
            TStmt::If { cond, then, els } => {
                let c = self.eval_bool(tx, fr, cond)?;
                return self.exec_block(tx, fr, if c { then } else { els });
            }
            TStmt::Loop { cond, body, .. } => {
                while self.eval_bool(tx, fr, cond)? {
                    self.burn()?;
                    if let Flow::Return = self.exec_block(tx, fr, body)? {
                        return Ok(Flow::Return);
                    }
                }
            }
            TStmt::Return { values, .. } => {
                let mut vals = Vec::new();
                for v in values {
                    vals.push(self.eval(tx, fr, v)?);
                }
                if vals.len() == 1 && fr.returns.len() > 1 {
                    if let IVal::Tuple(items) = vals.pop().unwrap() {
                        vals = items.into_iter().map(|v| v.unwrap_or(IVal::Void)).collect();
                    }
                }
                let returns = fr.returns;
                for (r, v) in returns.iter().zip(vals) {
                    self.bind(tx, fr, *r, v)?;
                }
                return Ok(Flow::Return);
            }
            TStmt::Require { cond, span } => {
                if !self.eval_bool(tx, fr, cond)? {
                    return revert("require failed", *span);
                }
            }
            TStmt::Revert { span } => return revert("revert", *span),
            TStmt::Assume { .. } | TStmt::Assert { .. } => {
                return unsupported("assume/assert outside a rule body");
            }
            TStmt::Delete { target } => match self.target(tx, fr, target)? {
                Target::Local(l) => {
                    let ty = fr.infos[l].ty.clone();
                    fr.locals[l] = Some(IVal::V(CVal::default_of(self.program, &ty)));
                }
                Target::Place(p) => {
                    let d = CVal::default_of(self.program, &target.ty);
                    *self.slot(tx, &p)? = d;
                }
            },
            TStmt::Push { array, value, span } => {
                let Target::Place(p) = self.target(tx, fr, array)? else {
                    return unsupported("push on a local");
                };
                let Ty::Array(elem) = &array.ty else {
                    return unsupported("push on a non-array");
                };
                let v = match value {
                    Some(v) => {
                        let v = self.eval(tx, fr, v)?;
                        self.materialize(tx, v)?
                    }
                    None => CVal::default_of(self.program, elem),
                };
                match self.slot(tx, &p)? {
                    CVal::Arr(items) => items.push(v),
                    _ => return revert("push target is not an array", *span),
                }
            }
            TStmt::Pop { array, span } => {
                let Target::Place(p) = self.target(tx, fr, array)? else {
                    return unsupported("pop on a local");
                };
                match self.slot(tx, &p)? {
                    CVal::Arr(items) => {
                        if items.pop().is_none() {
                            return revert("pop on empty array", *span);
                        }
                    }
                    _ => return unsupported("pop on a non-array"),
                }
            }
            TStmt::Region(body) => {
                self.exec_block(tx, fr, body)?;
            }
        }
        Ok(Flow::Next)
    }

    fn burn(&mut self) -> X<()> {
        if self.fuel == 0 {
            return unsupported("execution step limit exceeded");
        }
        self.fuel -= 1;
        Ok(())
    }

    fn new_mem(&self, tx: &mut Tx, v: CVal) -> IVal {
        tx.mem.push(v);
        IVal::Ref(CPlace {
            root: CRoot::Mem(tx.mem.len() - 1),
            steps: vec![],
        })
    }

    /// Copy a referenced aggregate out of storage or memory.
    fn materialize(&self, tx: &Tx, v: IVal) -> X<CVal> {
        match v {
            IVal::V(v) => Ok(v),
            IVal::Ref(p) => self.read(tx, &p),
            _ => unsupported("tuple or void value used as a value"),
        }
    }

    fn bind(&self, tx: &mut Tx, fr: &mut Frame, l: LocalId, v: IVal) -> X<()> {
        let v = match (fr.infos[l].kind, v) {
            (LocalKind::Memory, IVal::Ref(p)) if !matches!(p.root, CRoot::Mem(_)) => {
                let copy = self.read(tx, &p)?;
                self.new_mem(tx, copy)
            }
            (_, v) => v,
        };
        fr.locals[l] = Some(v);
        Ok(())
    }

    fn assign(&self, tx: &mut Tx, fr: &mut Frame, t: Target, v: IVal) -> X<()> {
        match t {
            Target::Local(l) => self.bind(tx, fr, l, v),
            Target::Place(p) => {
                let v = self.materialize(tx, v)?;
                *self.slot(tx, &p)? = v;
                Ok(())
            }
        }
    }

    fn target(&mut self, tx: &mut Tx, fr: &mut Frame, e: &TExpr) -> X<Target> {
        match &e.kind {
            TExprKind::Local(l) => Ok(Target::Local(*l)),
            TExprKind::State(id) => Ok(Target::Place(CPlace {
                root: CRoot::State(*id),
                steps: vec![],
            })),
            _ => Ok(Target::Place(self.place(tx, fr, e)?)),
        }
    }

    fn place(&mut self, tx: &mut Tx, fr: &mut Frame, e: &TExpr) -> X<CPlace> {
        match &e.kind {
            TExprKind::Index(base, idx) => {
                let IVal::Ref(mut p) = self.eval(tx, fr, base)? else {
                    return unsupported("indexing is only supported on mappings and arrays");
                };
                let k = self.eval(tx, fr, idx)?;
                let IVal::V(k) = k else {
                    return unsupported("scalar index expected");
                };
                let k = k.as_int().expect("scalar index");
                match &base.ty {
                    Ty::Mapping(..) => p.steps.push(CStep::Key(k)),
                    Ty::Array(_) => {
                        let len = match &*self.read_ref(tx, &p)? {
                            CVal::Arr(items) => items.len(),
                            _ => 0,
                        };
                        if !fr.pred && (k.is_negative() || k >= BigInt::from(len)) {
                            return revert("array index out of bounds", e.span);
                        }
                        match k.to_usize() {
                            Some(i) => p.steps.push(CStep::Idx(i)),
                            None => return unsupported("array index too large"),
                        }
                    }
                    _ => return unsupported("indexing a non-aggregate"),
                }
                Ok(p)
            }
            TExprKind::Field(base, i) => {
                let IVal::Ref(mut p) = self.eval(tx, fr, base)? else {
                    return unsupported("field access on a non-struct value");
                };
                p.steps.push(CStep::Field(*i));
                Ok(p)
            }
            _ => match self.eval(tx, fr, e)? {
                IVal::Ref(p) => Ok(p),
                _ => unsupported("expression has no location"),
            },
        }
    }

    fn root<'t>(&self, tx: &'t Tx, r: &CRoot) -> &'t CVal {
        match r {
            CRoot::State(i) => &tx.store[*i],
            CRoot::Old(i) => &tx.old[*i],
            CRoot::Mem(i) => &tx.mem[*i],
        }
    }

    /// Read through a place; absent mapping keys and array slots read as
    /// the default of their type.
    fn read_ref<'t>(&self, tx: &'t Tx, p: &CPlace) -> X<std::borrow::Cow<'t, CVal>> {
        let mut cur = self.root(tx, &p.root);
        for (n, s) in p.steps.iter().enumerate() {
            let next = match (s, cur) {
                (CStep::Key(k), CVal::Map(m)) => m.get(k),
                (CStep::Idx(i), CVal::Arr(items)) => items.get(*i),
                (CStep::Field(i), CVal::Struct(fields)) => fields.get(*i),
                _ => return unsupported("place does not match value"),
            };
            match next {
                Some(v) => cur = v,
                None => {
                    let ty = self.place_type(p, n + 1);
                    return Ok(std::borrow::Cow::Owned(CVal::default_of(self.program, &ty)));
                }
            }
        }
        Ok(std::borrow::Cow::Borrowed(cur))
    }

    fn read(&self, tx: &Tx, p: &CPlace) -> X<CVal> {
        Ok(self.read_ref(tx, p)?.into_owned())
    }

    /// Type at the first `n` steps of a place.
    fn place_type(&self, p: &CPlace, n: usize) -> Ty {
        let mut ty = match &p.root {
            CRoot::State(i) | CRoot::Old(i) => self.program.state_vars[*i].ty.clone(),
            CRoot::Mem(_) => return Ty::Void,
        };
        for s in &p.steps[..n] {
            ty = match (s, ty) {
                (CStep::Key(_), Ty::Mapping(_, v)) => *v,
                (CStep::Idx(_), Ty::Array(e)) => *e,
                (CStep::Field(i), Ty::Struct(s)) => self.program.structs[s].fields[*i].1.clone(),
                _ => Ty::Void,
            };
        }
        ty
    }

    /// Mutable slot for a place, creating absent mapping entries.
    fn slot<'t>(&self, tx: &'t mut Tx, p: &CPlace) -> X<&'t mut CVal> {
        let mut ty_at = Vec::new();
        for n in 1..=p.steps.len() {
            ty_at.push(self.place_type(p, n));
        }
        let mut cur = match &p.root {
            CRoot::State(i) => &mut tx.store[*i],
            CRoot::Mem(i) => &mut tx.mem[*i],
            CRoot::Old(_) => return unsupported("write to the pre-state"),
        };
        for (n, s) in p.steps.iter().enumerate() {
            cur = match (s, cur) {
                (CStep::Key(k), CVal::Map(m)) => {
                    let d = CVal::default_of(self.program, &ty_at[n]);
                    m.entry(k.clone()).or_insert(d)
                }
                (CStep::Idx(i), CVal::Arr(items)) => match items.get_mut(*i) {
                    Some(v) => v,
                    None => return unsupported("write past the end of an array"),
                },
                (CStep::Field(i), CVal::Struct(fields)) => &mut fields[*i],
                _ => return unsupported("place does not match value"),
            };
        }
        Ok(cur)
    }

    // ----- expressions -----

    fn eval_bool(&mut self, tx: &mut Tx, fr: &mut Frame, e: &TExpr) -> X<bool> {
        match self.eval(tx, fr, e)? {
            IVal::V(CVal::Bool(b)) => Ok(b),
            _ => unsupported("boolean expected"),
        }
    }

    fn eval_int(&mut self, tx: &mut Tx, fr: &mut Frame, e: &TExpr) -> X<BigInt> {
        match self.eval(tx, fr, e)? {
            IVal::V(v) => v.as_int().ok_or_else(|| Halt::Error("integer expected".into())),
            _ => unsupported("integer expected"),
        }
    }

    fn eval(&mut self, tx: &mut Tx, fr: &mut Frame, e: &TExpr) -> X<IVal> {
        use TExprKind as K;
        let v = |c: CVal| Ok(IVal::V(c));
        match &e.kind {
            K::Int(n) => v(CVal::Int(n.clone())),
            K::Bool(b) => v(CVal::Bool(*b)),
            K::Local(l) => fr.locals[*l]
                .clone()
                .ok_or_else(|| Halt::Error(format!("use of unbound local {}", fr.infos[*l].name))),
            K::State(id) => {
                let root = if fr.old { CRoot::Old(*id) } else { CRoot::State(*id) };
                let p = CPlace { root, steps: vec![] };
                if e.ty.is_scalar() {
                    v(self.read(tx, &p)?)
                } else {
                    Ok(IVal::Ref(p))
                }
            }
            K::Env(x) => v(CVal::Int(tx.env.get(x).cloned().unwrap_or_default())),
            K::Old(inner) => {
                let saved = fr.old;
                fr.old = true;
                let r = self.eval(tx, fr, inner);
                fr.old = saved;
                r
            }
            K::Arith(op, mode, a, b) => {
                let a = self.eval_int(tx, fr, a)?;
                let b = self.eval_int(tx, fr, b)?;
                v(CVal::Int(self.arith(*op, *mode, a, b, &e.ty, e.span)?))
            }
            K::Cmp(op, a, b) => {
                let a = self.eval(tx, fr, a)?;
                let b = self.eval(tx, fr, b)?;
                let (IVal::V(a), IVal::V(b)) = (a, b) else {
                    return unsupported("comparison of non-scalars");
                };
                let (a, b) = (a.as_int().unwrap(), b.as_int().unwrap());
                v(CVal::Bool(match op {
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                }))
            }
            K::And(a, b) => {
                let r = self.eval_bool(tx, fr, a)? && self.eval_bool(tx, fr, b)?;
                v(CVal::Bool(r))
            }
            K::Or(a, b) => {
                let r = self.eval_bool(tx, fr, a)? || self.eval_bool(tx, fr, b)?;
                v(CVal::Bool(r))
            }
            K::Not(a) => {
                let r = !self.eval_bool(tx, fr, a)?;
                v(CVal::Bool(r))
            }
            K::Neg(mode, a) => {
                let r = -self.eval_int(tx, fr, a)?;
                if *mode == ArithMode::Checked && e.ty.range().is_some() && !in_type(&r, &e.ty) {
                    return revert("arithmetic overflow", e.span);
                }
                v(CVal::Int(r))
            }
            K::Ternary(c, a, b) => {
                if self.eval_bool(tx, fr, c)? {
                    self.eval(tx, fr, a)
                } else {
                    self.eval(tx, fr, b)
                }
            }
            K::Index(..) | K::Field(..) => {
                let p = self.place(tx, fr, e)?;
                if e.ty.is_scalar() {
                    v(self.read(tx, &p)?)
                } else {
                    Ok(IVal::Ref(p))
                }
            }
            K::Length(a) => {
                let p = self.place(tx, fr, a)?;
                match &*self.read_ref(tx, &p)? {
                    CVal::Arr(items) => v(CVal::int(items.len())),
                    _ => unsupported("length of a non-array"),
                }
            }
            K::Call { func, args } => {
                let mut vals = Vec::new();
                for a in args {
                    vals.push(self.eval(tx, fr, a)?);
                }
                if fr.rule {
                    let f = &self.program.functions[*func];
                    if !f.payable && !env_value(&tx.env).is_zero() {
                        return revert("value sent to non-payable function", f.span);
                    }
                    let snapshot = vals
                        .iter()
                        .map(|x| self.materialize(tx, x.clone()))
                        .collect::<X<Vec<_>>>()?;
                    tx.calls.push((*func, snapshot));
                    self.call_fn(tx, *func, vals, 0)
                } else {
                    self.call_fn(tx, *func, vals, fr.depth + 1)
                }
            }
            K::ExternalCall {
                kind,
                target,
                value,
                data,
            } => {
                self.eval(tx, fr, target)?;
                if let Some(x) = value {
                    self.eval(tx, fr, x)?;
                }
                if let Some(x) = data {
                    self.eval(tx, fr, x)?;
                }
                match kind {
                    ExtKind::Call => {
                        let data = self.ext.pop_front().unwrap_or_else(|| CVal::Int(encode_bytes(&[])));
                        Ok(IVal::Tuple(vec![Some(IVal::V(CVal::Bool(true))), Some(IVal::V(data))]))
                    }
                    ExtKind::Send => v(CVal::Bool(true)),
                    ExtKind::Transfer => Ok(IVal::Void),
                }
            }
            K::Sha3(args) => {
                let mut ints = Vec::new();
                for a in args {
                    ints.push(self.eval_int(tx, fr, a)?);
                }
                v(CVal::Int((self.hash)(args.len(), &ints)))
            }
            K::Convert(a) => {
                let x = self.eval(tx, fr, a)?;
                let IVal::V(x) = x else {
                    return unsupported("conversion of a non-scalar");
                };
                if let (Ty::Bool, CVal::Bool(_)) = (&e.ty, &x) {
                    return v(x);
                }
                match convert_int(&x.as_int().unwrap(), &a.ty, &e.ty) {
                    Some(r) => v(CVal::Int(r)),
                    None => unsupported("unsupported conversion"),
                }
            }
            K::NewArray(n) => {
                let n = self.eval_int(tx, fr, n)?;
                let Ty::Array(elem) = &e.ty else {
                    return unsupported("new of a non-array");
                };
                let n = match n.to_usize() {
                    Some(n) if n <= MAX_NEW_ARRAY => n,
                    _ => return unsupported("array allocation too large"),
                };
                let d = CVal::default_of(self.program, elem);
                Ok(self.new_mem(tx, CVal::Arr(vec![d; n])))
            }
            K::AbiDecode(d) => {
                self.eval(tx, fr, d)?;
                let x = self
                    .ext
                    .pop_front()
                    .unwrap_or_else(|| CVal::default_of(self.program, &e.ty));
                v(x)
            }
            K::Tuple(items) => {
                let mut out = Vec::new();
                for i in items {
                    out.push(match i {
                        Some(x) => Some(self.eval(tx, fr, x)?),
                        None => None,
                    });
                }
                Ok(IVal::Tuple(out))
            }
        }
    }

    fn arith(&self, op: ArithOp, mode: ArithMode, a: BigInt, b: BigInt, ty: &Ty, span: Span) -> X<BigInt> {
        let checked = mode == ArithMode::Checked && ty.range().is_some();
        let r = match op {
            ArithOp::Add => a + b,
            ArithOp::Sub => a - b,
            ArithOp::Mul => a * b,
            ArithOp::Div | ArithOp::Mod => {
                if b.is_zero() {
                    if checked {
                        return revert("division by zero", span);
                    }
                    BigInt::zero()
                } else if op == ArithOp::Div {
                    tdiv(&a, &b)
                } else {
                    trem(&a, &b)
                }
            }
            ArithOp::Pow => match small_exponent(&b) {
                Some(k) => num_traits::pow(a, k as usize),
                None => return unsupported("exponent out of range"),
            },
        };
        if checked && !in_type(&r, ty) {
            return revert("arithmetic overflow", span);
        }
        Ok(r)
    }

    // ----- calls -----

    /// Run a function body; returns the final locals and the flow result.
    fn run_frame(&mut self, tx: &mut Tx, func: FuncId, args: Vec<IVal>, depth: usize) -> X<(Vec<Option<IVal>>, ())> {
        if depth > MAX_DEPTH {
            return unsupported("call depth exceeded");
        }
        let program = self.program;
        let f = &program.functions[func];
        let mut fr = Frame {
            infos: &f.locals,
            returns: &f.returns,
            locals: vec![None; f.locals.len()],
            pred: false,
            old: false,
            rule: false,
            depth,
        };
        for (&p, v) in f.params.iter().zip(args) {
            self.bind(tx, &mut fr, p, v)?;
        }
        for &r in &f.returns {
            let info = &f.locals[r];
            fr.locals[r] = match info.kind {
                LocalKind::Value => Some(IVal::V(CVal::default_of(program, &info.ty))),
                LocalKind::Memory => Some(self.new_mem(tx, CVal::default_of(program, &info.ty))),
                LocalKind::Storage => None,
            };
        }
        self.exec_block(tx, &mut fr, &f.body)?;
        Ok((fr.locals, ()))
    }

    fn call_fn(&mut self, tx: &mut Tx, func: FuncId, args: Vec<IVal>, depth: usize) -> X<IVal> {
        let f = &self.program.functions[func];
        let (locals, _) = self.run_frame(tx, func, args, depth)?;
        let mut rets: Vec<IVal> = f
            .returns
            .iter()
            .map(|r| locals[*r].clone().unwrap_or(IVal::Void))
            .collect();
        Ok(match rets.len() {
            0 => IVal::Void,
            1 => rets.pop().unwrap(),
            _ => IVal::Tuple(rets.into_iter().map(Some).collect()),
        })
    }
}

enum Target {
    Local(LocalId),
    Place(CPlace),
}

fn env_value(env: &Env) -> BigInt {
    env.get(&EnvVar::Value).cloned().unwrap_or_default()
}
