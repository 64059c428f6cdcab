use super::state::*;
use super::{ExecError, ExecOptions, PathOutcome};
use crate::frontend::span::Span;
use crate::ir::*;
use crate::solver::sha3_name;
use crate::term::{small_exponent, Sort, Term};
use crate::types::Ty;
use num_bigint::BigInt;
use num_traits::One;
use std::collections::BTreeSet;

type Paths<T> = Vec<(SymState, T)>;
type R<T> = Result<Paths<T>, ExecError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Flow {
    Next,
    Return,
}

/// Evaluation context of the current frame.
#[derive(Clone, Copy)]
struct Ctx<'a> {
    locals: &'a [LocalInfo],
    returns: &'a [LocalId],
    depth: usize,
    /// Specification predicate: no bounds checks.
    pred: bool,
    /// Read state variables from the pre-state.
    old: bool,
    /// Directly inside a rule body: calls start a new call stack.
    rule: bool,
}

#[derive(Clone)]
enum Target {
    Local(LocalId),
    Place(Place),
}

fn err<T>(message: impl Into<String>, span: Span) -> Result<T, ExecError> {
    Err(ExecError {
        message: message.into(),
        span,
    })
}

fn sort_of(ty: &Ty) -> Sort {
    match ty {
        Ty::Bool => Sort::Bool,
        _ => Sort::Int,
    }
}

fn nested_select(mut t: Term, idx: &[Term]) -> Term {
    for i in idx {
        t = Term::select(t, i.clone());
    }
    t
}

fn nested_store(arr: Term, idx: &[Term], v: Term) -> Term {
    match idx.split_first() {
        None => v,
        Some((i, rest)) => {
            let inner = nested_store(Term::select(arr.clone(), i.clone()), rest, v);
            Term::store(arr, i.clone(), inner)
        }
    }
}

fn pow2(n: u32) -> BigInt {
    BigInt::one() << n
}

/// Whether evaluating `e` can neither fork nor revert.
fn is_simple(e: &TExpr, pred: bool) -> bool {
    !e.any(&|x| match &x.kind {
        TExprKind::Call { .. } | TExprKind::ExternalCall { .. } | TExprKind::NewArray(_) | TExprKind::AbiDecode(_) => {
            true
        }
        TExprKind::Arith(_, ArithMode::Checked, ..) | TExprKind::Neg(ArithMode::Checked, _) => true,
        TExprKind::Index(b, _) => !pred && matches!(b.ty, Ty::Array(_)),
        TExprKind::Ternary(..) | TExprKind::And(..) | TExprKind::Or(..) => !x.ty.is_scalar(),
        _ => false,
    })
}

/// Whether every value of `from` is representable in `to` unchanged.
fn fits(from: &Ty, to: &Ty) -> bool {
    if from == to {
        return true;
    }
    match (from.range(), to.range()) {
        (Some((flo, fhi)), Some((tlo, thi))) => {
            flo >= tlo
                && match (fhi, thi) {
                    (_, None) => true,
                    (Some(f), Some(t)) => f <= t,
                    (None, Some(_)) => false,
                }
        }
        _ => false,
    }
}

/// Explicit conversion between scalar types on integer encodings.
pub(crate) fn convert_term(t: Term, from: &Ty, to: &Ty) -> Result<Term, String> {
    use Ty::*;
    if let Some(v) = t.as_int() {
        if from == &Lit && to.contains(v) {
            return Ok(t);
        }
    }
    if fits(from, to) && !matches!((from, to), (FixedBytes(_), FixedBytes(_))) {
        return Ok(t);
    }
    let wrap_unsigned = |t: Term, bits: u32| Term::modulo(t, Term::int(pow2(bits)));
    match (from, to) {
        (Bool, Bool) | (String, Bytes) | (Bytes, String) | (String, String) | (Bytes, Bytes) => Ok(t),
        (FixedBytes(a), FixedBytes(b)) => {
            let (a, b) = (*a as u32, *b as u32);
            Ok(match a.cmp(&b) {
                std::cmp::Ordering::Equal => t,
                std::cmp::Ordering::Less => Term::mul(t, Term::int(pow2(8 * (b - a)))),
                std::cmp::Ordering::Greater => Term::div(t, Term::int(pow2(8 * (a - b)))),
            })
        }
        (Uint(_) | Int(_) | Lit | Address | FixedBytes(_), Uint(n)) => Ok(wrap_unsigned(t, *n as u32)),
        (Uint(_) | Int(_) | Lit, Int(n)) => {
            let half = Term::int(pow2(*n as u32 - 1));
            Ok(Term::sub(wrap_unsigned(Term::add(t, half.clone()), *n as u32), half))
        }
        (Uint(_) | Lit | FixedBytes(_) | Address, Address) => Ok(wrap_unsigned(t, 160)),
        (Uint(_) | Lit, FixedBytes(n)) => Ok(wrap_unsigned(t, 8 * *n as u32)),
        _ => Err("unsupported conversion".into()),
    }
}

pub struct Executor<'p> {
    pub program: &'p Program,
    pub opts: ExecOptions,
    fresh: usize,
    sink: Vec<PathOutcome>,
    this: Term,
}

impl<'p> Executor<'p> {
    pub fn new(program: &'p Program, opts: ExecOptions) -> Self {
        let this = Term::var("this", Sort::Int);
        Executor {
            program,
            opts,
            fresh: 0,
            sink: Vec::new(),
            this,
        }
    }

    pub fn fresh_var(&mut self, name: &str, sort: Sort) -> Term {
        self.fresh += 1;
        Term::var(&format!("{name}!{}", self.fresh), sort)
    }

    /// Range facts for a value of type `ty`, narrowed to the input domain
    /// for integer types.
    fn range_of(&self, t: &Term, ty: &Ty) -> Term {
        let mut c = match ty.range() {
            Some((lo, hi)) => Term::in_range(t, &lo, hi.as_ref()),
            None => Term::tt(),
        };
        if let (Some((lo, hi)), true) = (&self.opts.input_domain, matches!(ty, Ty::Uint(_) | Ty::Int(_))) {
            c = Term::and2(c, Term::in_range(t, lo, Some(&(hi + 1))));
        }
        c
    }

    fn len_range(&self, t: &Term) -> Term {
        let hi = match self.opts.max_array_len {
            Some(n) => BigInt::from(n) + 1,
            None => pow2(64),
        };
        Term::in_range(t, &BigInt::from(0), Some(&hi))
    }

    fn assume_once(st: &mut SymState, c: Term) {
        if !c.is_true() && !st.path.contains(&c) {
            st.path.push(c);
        }
    }

    fn fresh_input(&mut self, st: &mut SymState, name: &str, ty: &Ty) -> Term {
        let t = self.fresh_var(name, sort_of(ty));
        let c = self.range_of(&t, ty);
        st.assume(c);
        t
    }

    /// Fresh aggregate of type `ty`; leaves outside any element layer are
    /// range-constrained right away, the rest on read.
    fn fresh_agg(&mut self, st: &mut SymState, name: &str, ty: &Ty) -> Agg {
        let mut agg = Agg::new();
        for (path, sort) in leaves_of(self.program, ty) {
            let label = format!("{name}{}", leaf_suffix(self.program, ty, &path));
            let t = self.fresh_var(&label, sort);
            if !path.contains(&LeafStep::Elem) {
                let c = if path.last() == Some(&LeafStep::Len) {
                    self.len_range(&t)
                } else {
                    self.range_of(&t, &leaf_type(self.program, ty, &path))
                };
                st.assume(c);
            }
            agg.insert(path, t);
        }
        agg
    }

    fn new_env(&mut self, st: &mut SymState) {
        st.env.clear();
        for v in EnvVar::ALL {
            let t = if v == EnvVar::This {
                self.this.clone()
            } else {
                self.fresh_input(st, v.name(), &v.ty())
            };
            st.env.insert(v, t);
        }
    }

    fn empty_state(&self) -> SymState {
        SymState {
            store: Vec::new(),
            old_store: Vec::new(),
            mem: Vec::new(),
            locals: Vec::new(),
            path: Vec::new(),
            env: Default::default(),
            obligations: Vec::new(),
            log: Vec::new(),
            ext: Vec::new(),
            approximations: Vec::new(),
        }
    }

    /// Arbitrary storage: every state variable holds a fresh symbol.
    pub fn init_state(&mut self) -> SymState {
        let mut st = self.empty_state();
        let program = self.program;
        for sv in &program.state_vars {
            let agg = self.fresh_agg(&mut st, &sv.name, &sv.ty);
            st.store.push(agg);
        }
        let this_range = Term::in_range(&self.this, &BigInt::from(0), Some(&pow2(160)));
        st.assume(this_range);
        st.old_store = st.store.clone();
        self.new_env(&mut st);
        st
    }

    /// Deploy the contract from default storage: initializers and
    /// constructors run base first with symbolic constructor arguments.
    pub fn deploy(&mut self) -> Result<Vec<PathOutcome>, ExecError> {
        let program = self.program;
        let mut st = self.empty_state();
        for sv in &program.state_vars {
            st.store.push(default_agg(program, &sv.ty));
        }
        let this_range = Term::in_range(&self.this, &BigInt::from(0), Some(&pow2(160)));
        st.assume(this_range);
        self.begin_tx(&mut st);
        let value = st.env[&EnvVar::Value].clone();
        let mark = self.sink.len();
        let mut record = TxRecord {
            func: None,
            env: st.env.clone(),
            args: Vec::new(),
            from_rule: false,
        };
        let mut paths: Paths<()> = vec![(st, ())];
        for step in &program.construction {
            for &sid in &step.initializers {
                let init = program.state_vars[sid].init.as_ref().expect("initializer");
                let cx = Ctx {
                    locals: &[],
                    returns: &[],
                    depth: 0,
                    pred: false,
                    old: false,
                    rule: false,
                };
                let mut next = Vec::new();
                for (s, _) in paths {
                    for (s, v) in self.eval(s, init, cx)? {
                        let place = Place {
                            root: Root::State(sid),
                            steps: vec![],
                            ty: program.state_vars[sid].ty.clone(),
                        };
                        next.extend(self.assign(s, Target::Place(place), v, cx)?);
                    }
                }
                paths = next;
            }
            if let Some(fid) = step.constructor {
                let f = &program.functions[fid];
                record.func = Some(fid);
                let mut next = Vec::new();
                for (mut s, _) in paths {
                    if !f.payable {
                        s.assume(Term::eq(value.clone(), Term::int(0)));
                    }
                    let mut args = Vec::new();
                    for &p in &f.params {
                        let (v, a) = self.fresh_arg(&mut s, &f.locals[p].name, &f.locals[p].ty);
                        args.push(v);
                        record.args.push(a);
                    }
                    for (s, _) in self.call_function(s, fid, args, 0)? {
                        next.push((s, ()));
                    }
                }
                paths = next;
            }
        }
        let mut out: Vec<PathOutcome> = Vec::new();
        for (mut s, _) in paths {
            s.log.push(record.clone());
            s.mem.clear();
            s.old_store = s.store.clone();
            out.push(PathOutcome::Normal {
                state: s,
                returns: vec![],
            });
        }
        out.extend(self.sink.split_off(mark));
        Ok(out)
    }

    fn begin_tx(&mut self, st: &mut SymState) {
        st.old_store = st.store.clone();
        st.mem.clear();
        st.locals.clear();
        self.new_env(st);
    }

    /// Fresh argument for a parameter of type `ty`.
    fn fresh_arg(&mut self, st: &mut SymState, name: &str, ty: &Ty) -> (Val, SymArg) {
        if ty.is_scalar() {
            let t = self.fresh_input(st, name, ty);
            (Val::Scalar(t.clone()), SymArg::Scalar(t))
        } else {
            let leaves = self.fresh_agg(st, name, ty);
            let obj = MemObj { ty: ty.clone(), leaves };
            st.mem.push(obj.clone());
            let place = Place {
                root: Root::Mem(st.mem.len() - 1),
                steps: vec![],
                ty: ty.clone(),
            };
            (Val::Ref(place), SymArg::Mem(obj))
        }
    }

    fn drain(&mut self, mark: usize, paths: Paths<Vec<Val>>) -> Vec<PathOutcome> {
        let mut out: Vec<PathOutcome> = paths
            .into_iter()
            .map(|(state, returns)| PathOutcome::Normal { state, returns })
            .collect();
        out.extend(self.sink.split_off(mark));
        out
    }

    /// Run `func` on `st` with the given arguments, inside the current
    /// transaction.
    pub fn execute_function(
        &mut self,
        st: SymState,
        func: FuncId,
        args: Vec<Val>,
    ) -> Result<Vec<PathOutcome>, ExecError> {
        let f = &self.program.functions[func];
        if args.len() != f.params.len() {
            return err("argument count mismatch", f.span);
        }
        let mark = self.sink.len();
        let paths = self.call_function(st, func, args, 0)?;
        let paths = paths
            .into_iter()
            .map(|(s, v)| {
                let rets = match v {
                    Val::Void => vec![],
                    Val::Tuple(items) => items.into_iter().flatten().collect(),
                    v => vec![v],
                };
                (s, rets)
            })
            .collect();
        Ok(self.drain(mark, paths))
    }

    /// A complete external transaction calling `func` with fresh arguments
    /// and environment.
    pub fn execute_transaction(&mut self, st: SymState, func: FuncId) -> Result<Vec<PathOutcome>, ExecError> {
        self.run_function_check(st, func, &[], &[])
    }

    /// Transaction calling `func` with `pre` assumed on entry and `post`
    /// recorded as obligations on normal exit. `post` sees the parameters'
    /// entry values and the final return values.
    pub fn run_function_check(
        &mut self,
        mut st: SymState,
        func: FuncId,
        pre: &[TExpr],
        post: &[TExpr],
    ) -> Result<Vec<PathOutcome>, ExecError> {
        let program = self.program;
        let f = &program.functions[func];
        self.begin_tx(&mut st);
        if !f.payable {
            let v = st.env[&EnvVar::Value].clone();
            st.assume(Term::eq(v, Term::int(0)));
        }
        let mut record = TxRecord {
            func: Some(func),
            env: st.env.clone(),
            args: Vec::new(),
            from_rule: false,
        };
        let mut args = Vec::new();
        for &p in &f.params {
            let (v, a) = self.fresh_arg(&mut st, &f.locals[p].name, &f.locals[p].ty);
            args.push(v);
            record.args.push(a);
        }
        st.log.push(record);
        let mark = self.sink.len();
        self.enter_frame(&mut st, func, args);
        let entry_locals = st.locals.clone();
        let pcx = Ctx {
            locals: &f.locals,
            returns: &f.returns,
            depth: 0,
            pred: true,
            old: false,
            rule: false,
        };
        let mut paths: Paths<()> = vec![(st, ())];
        for e in pre {
            let mut next = Vec::new();
            for (s, _) in paths {
                for (mut s, v) in self.eval(s, e, pcx)? {
                    s.assume(v.term().cloned().expect("boolean precondition"));
                    next.push((s, ()));
                }
            }
            paths = next;
        }
        let mut finished: Paths<Vec<Val>> = Vec::new();
        for (s, _) in paths {
            for (mut s, flow) in self.exec_body(s, func, 0)? {
                let _ = flow;
                let rets: Vec<Val> = f
                    .returns
                    .iter()
                    .map(|r| s.locals[*r].clone().unwrap_or(Val::Void))
                    .collect();
                if post.is_empty() {
                    finished.push((s, rets));
                    continue;
                }
                let mut view = entry_locals.clone();
                for (r, v) in f.returns.iter().zip(&rets) {
                    view[*r] = Some(v.clone());
                }
                s.locals = view;
                let mut pp: Paths<()> = vec![(s, ())];
                for e in post {
                    let mut next = Vec::new();
                    for (s, _) in pp {
                        for (mut s, v) in self.eval(s, e, pcx)? {
                            let cond = v.term().cloned().expect("boolean postcondition");
                            s.obligations.push(Obligation { cond, span: e.span });
                            next.push((s, ()));
                        }
                    }
                    pp = next;
                }
                finished.extend(pp.into_iter().map(|(s, _)| (s, rets.clone())));
            }
        }
        Ok(self.drain(mark, finished))
    }

    /// Execute a rule body as one transaction context. Assertions become
    /// obligations of the normal outcomes.
    pub fn run_rule(&mut self, mut st: SymState, rule: &RuleSpec) -> Result<Vec<PathOutcome>, ExecError> {
        self.begin_tx(&mut st);
        st.locals = vec![None; rule.locals.len()];
        let mut record = TxRecord {
            func: None,
            env: st.env.clone(),
            args: Vec::new(),
            from_rule: true,
        };
        for &p in &rule.params {
            let info = &rule.locals[p];
            let (v, a) = self.fresh_arg(&mut st, &info.name, &info.ty);
            st.locals[p] = Some(v);
            record.args.push(a);
        }
        for &(lid, alias) in &rule.implicit {
            let info = &rule.locals[lid];
            let t = self.fresh_input(&mut st, &info.name, &info.ty);
            if let Some(sid) = alias {
                let cur = st.state_scalar(sid).cloned().expect("scalar state variable");
                st.assume(Term::eq(t.clone(), cur));
            }
            st.locals[lid] = Some(Val::Scalar(t.clone()));
            record.args.push(SymArg::Scalar(t));
        }
        st.log.push(record);
        let cx = Ctx {
            locals: &rule.locals,
            returns: &[],
            depth: 0,
            pred: false,
            old: false,
            rule: true,
        };
        let mark = self.sink.len();
        let paths = self.exec_block(st, &rule.body, cx)?;
        let paths = paths.into_iter().map(|(s, _)| (s, vec![])).collect();
        Ok(self.drain(mark, paths))
    }

    // ----- paths -----

    fn revert(&mut self, st: &SymState, cond: Term, reason: &str, span: Span) {
        if cond.is_false() {
            return;
        }
        let mut s = st.clone();
        s.assume(cond);
        self.sink.push(PathOutcome::Reverted {
            state: s,
            reason: reason.to_string(),
            span,
        });
    }

    fn fork(st: SymState, c: &Term) -> (Option<SymState>, Option<SymState>) {
        if c.is_true() {
            return (Some(st), None);
        }
        if c.is_false() {
            return (None, Some(st));
        }
        let mut t = st.clone();
        t.assume(c.clone());
        let mut f = st;
        f.assume(Term::not(c.clone()));
        (Some(t), Some(f))
    }

    /// Continue only where `ok` holds; the rest reverts.
    fn guard(&mut self, mut st: SymState, ok: Term, reason: &str, span: Span) -> Option<SymState> {
        if ok.is_true() {
            return Some(st);
        }
        self.revert(&st, Term::not(ok.clone()), reason, span);
        if ok.is_false() {
            return None;
        }
        st.assume(ok);
        Some(st)
    }

    // ----- places -----

    fn read_leaf(&self, st: &mut SymState, root: Root, path: &[LeafStep], idx: &[Term], ty: &Ty, is_len: bool) -> Term {
        let base = match st.agg(root).get(path) {
            Some(t) => t.clone(),
            None => panic!("missing leaf {path:?}"),
        };
        let t = nested_select(base, idx);
        if !idx.is_empty() {
            let c = if is_len {
                self.len_range(&t)
            } else {
                self.range_of(&t, ty)
            };
            Self::assume_once(st, c);
        }
        t
    }

    fn read_scalar(&self, st: &mut SymState, p: &Place) -> Term {
        let path = p.leaf_prefix();
        self.read_leaf(st, p.root, &path, &p.indices(), &p.ty, false)
    }

    fn read_len(&self, st: &mut SymState, p: &Place) -> Term {
        let mut path = p.leaf_prefix();
        path.push(LeafStep::Len);
        self.read_leaf(st, p.root, &path, &p.indices(), &Ty::uint256(), true)
    }

    fn write_leaf(st: &mut SymState, root: Root, path: &[LeafStep], idx: &[Term], v: Term) {
        let agg = st.agg_mut(root);
        let cur = agg.get(path).cloned().expect("leaf");
        agg.insert(path.to_vec(), nested_store(cur, idx, v));
    }

    fn write_scalar(st: &mut SymState, p: &Place, v: Term) {
        let path = p.leaf_prefix();
        Self::write_leaf(st, p.root, &path, &p.indices(), v);
    }

    fn write_len(st: &mut SymState, p: &Place, v: Term) {
        let mut path = p.leaf_prefix();
        path.push(LeafStep::Len);
        Self::write_leaf(st, p.root, &path, &p.indices(), v);
    }

    /// Snapshot the aggregate below `p` as leaf suffix -> term.
    fn read_agg(&self, st: &SymState, p: &Place) -> Vec<(LeafPath, Term)> {
        let prefix = p.leaf_prefix();
        let idx = p.indices();
        leaves_of(self.program, &p.ty)
            .into_iter()
            .map(|(suffix, _)| {
                let mut full = prefix.clone();
                full.extend_from_slice(&suffix);
                let base = st.agg(p.root).get(&full).cloned().expect("leaf");
                (suffix, nested_select(base, &idx))
            })
            .collect()
    }

    fn write_agg(st: &mut SymState, p: &Place, leaves: Vec<(LeafPath, Term)>) {
        let prefix = p.leaf_prefix();
        let idx = p.indices();
        for (suffix, t) in leaves {
            let mut full = prefix.clone();
            full.extend(suffix);
            Self::write_leaf(st, p.root, &full, &idx, t);
        }
    }

    fn write_default(&self, st: &mut SymState, p: &Place) {
        if p.ty.is_scalar() {
            Self::write_scalar(st, p, default_scalar(&p.ty));
        } else {
            let leaves = default_agg(self.program, &p.ty).into_iter().collect();
            Self::write_agg(st, p, leaves);
        }
    }

    fn new_mem(st: &mut SymState, ty: &Ty, leaves: Agg) -> Place {
        st.mem.push(MemObj { ty: ty.clone(), leaves });
        Place {
            root: Root::Mem(st.mem.len() - 1),
            steps: vec![],
            ty: ty.clone(),
        }
    }

    /// Copy an aggregate into a fresh memory object.
    fn copy_to_mem(&self, st: &mut SymState, src: &Place) -> Place {
        let leaves: Agg = self.read_agg(st, src).into_iter().collect();
        Self::new_mem(st, &src.ty, leaves)
    }

    // ----- statements -----

    fn exec_block(&mut self, st: SymState, stmts: &[TStmt], cx: Ctx) -> R<Flow> {
        let mut live: Paths<Flow> = vec![(st, Flow::Next)];
        for s in stmts {
            let mut next = Vec::new();
            for (st, flow) in live {
                if flow == Flow::Return {
                    next.push((st, flow));
                } else {
                    next.extend(self.exec_stmt(st, s, cx)?);
                }
            }
            live = next;
            if live.is_empty() {
                break;
            }
        }
        Ok(live)
    }

    fn pred_cx(cx: Ctx) -> Ctx {
        Ctx { pred: true, ..cx }
    }

    fn exec_stmt(&mut self, st: SymState, s: &TStmt, cx: Ctx) -> R<Flow> {
        match s {
            TStmt::Decl { local, init } => {
                let vals = match init {
                    Some(e) => self.eval(st, e, cx)?,
                    None => {
                        let mut st = st;
                        let info = &cx.locals[*local];
                        let v = match info.kind {
                            LocalKind::Value => Val::Scalar(default_scalar(&info.ty)),
                            LocalKind::Memory => {
                                let leaves = default_agg(self.program, &info.ty);
                                Val::Ref(Self::new_mem(&mut st, &info.ty, leaves))
                            }
                            LocalKind::Storage => return err("uninitialized storage pointer", info.span),
                        };
                        vec![(st, v)]
                    }
                };
                let mut out = Vec::new();
                for (mut st, v) in vals {
                    self.bind_local(&mut st, *local, v, cx);
                    out.push((st, Flow::Next));
                }
                Ok(out)
            }
            TStmt::TupleDecl { locals, init } => {
                let mut out = Vec::new();
                for (mut st, v) in self.eval(st, init, cx)? {
                    let Val::Tuple(items) = v else {
                        return err("tuple expected", init.span);
                    };
                    for (l, v) in locals.iter().zip(items) {
                        if let (Some(l), Some(v)) = (l, v) {
                            self.bind_local(&mut st, *l, v, cx);
                        }
                    }
                    out.push((st, Flow::Next));
                }
                Ok(out)
            }
            TStmt::Assign { lhs, op, rhs, span } => {
                let mut out = Vec::new();
                for (st, target) in self.eval_target(st, lhs, cx)? {
                    for (st, v) in self.eval(st, rhs, cx)? {
                        let v = match op {
                            None => vec![(st, v)],
                            Some(op) => {
                                let mut st = st;
                                let cur = match &target {
                                    Target::Local(l) => st.locals[*l].clone().and_then(|v| v.term().cloned()),
                                    Target::Place(p) => Some(self.read_scalar(&mut st, p)),
                                };
                                let (Some(a), Some(b)) = (cur, v.term().cloned()) else {
                                    return err("compound assignment on non-scalar", *span);
                                };
                                self.arith(st, *op, ArithMode::Checked, a, b, &lhs.ty, *span)?
                            }
                        };
                        for (st, v) in v {
                            out.extend(
                                self.assign(st, target.clone(), v, cx)?
                                    .into_iter()
                                    .map(|(s, _)| (s, Flow::Next)),
                            );
                        }
                    }
                }
                Ok(out)
            }
            TStmt::TupleAssign { lhs, rhs } => {
                let mut paths: Paths<Vec<Option<Target>>> = vec![(st, vec![])];
                for l in lhs {
                    let mut next = Vec::new();
                    for (st, ts) in paths {
                        match l {
                            None => {
                                let mut ts = ts;
                                ts.push(None);
                                next.push((st, ts));
                            }
                            Some(e) => {
                                for (st, t) in self.eval_target(st, e, cx)? {
                                    let mut ts2 = ts.clone();
                                    ts2.push(Some(t));
                                    next.push((st, ts2));
                                }
                            }
                        }
                    }
                    paths = next;
                }
                let mut out = Vec::new();
                for (st, targets) in paths {
                    for (st, v) in self.eval(st, rhs, cx)? {
                        let Val::Tuple(items) = v else {
                            return err("tuple expected", rhs.span);
                        };
                        let mut cur: Paths<()> = vec![(st, ())];
                        for (t, v) in targets.iter().zip(items) {
                            if let (Some(t), Some(v)) = (t, v) {
                                let mut next = Vec::new();
                                for (s, _) in cur {
                                    next.extend(self.assign(s, t.clone(), v.clone(), cx)?);
                                }
                                cur = next;
                            }
                        }
                        out.extend(cur.into_iter().map(|(s, _)| (s, Flow::Next)));
                    }
                }
                Ok(out)
            }
            TStmt::Expr(e) => Ok(self
                .eval(st, e, cx)?
                .into_iter()
                .map(|(s, _)| (s, Flow::Next))
                .collect()),
            TStmt::If { cond, then, els } => {
                let mut out = Vec::new();
                for (st, c) in self.eval(st, cond, cx)? {
                    let c = c.term().cloned().expect("boolean condition");
                    let (t, f) = Self::fork(st, &c);
                    if let Some(t) = t {
                        out.extend(self.exec_block(t, then, cx)?);
                    }
                    if let Some(f) = f {
                        out.extend(self.exec_block(f, els, cx)?);
                    }
                }
                Ok(out)
            }
            TStmt::Loop { cond, body, span } => self.exec_loop(st, cond, body, *span, 0, cx),
            TStmt::Return { values, .. } => {
                let refs: Vec<&TExpr> = values.iter().collect();
                let mut out = Vec::new();
                for (mut st, vals) in self.eval_seq(st, &refs, cx)? {
                    let vals = if vals.len() == 1 && cx.returns.len() > 1 {
                        match vals.into_iter().next().unwrap() {
                            Val::Tuple(items) => items.into_iter().map(|v| v.unwrap_or(Val::Void)).collect(),
                            v => vec![v],
                        }
                    } else {
                        vals
                    };
                    for (r, v) in cx.returns.iter().zip(vals) {
                        self.bind_local(&mut st, *r, v, cx);
                    }
                    out.push((st, Flow::Return));
                }
                Ok(out)
            }
            TStmt::Require { cond, span } => {
                let mut out = Vec::new();
                for (st, c) in self.eval(st, cond, cx)? {
                    let c = c.term().cloned().expect("boolean condition");
                    if let Some(st) = self.guard(st, c, "require failed", *span) {
                        out.push((st, Flow::Next));
                    }
                }
                Ok(out)
            }
            TStmt::Revert { span } => {
                self.revert(&st, Term::tt(), "revert", *span);
                Ok(vec![])
            }
            TStmt::Assume { cond } => {
                let mut out = Vec::new();
                for (mut st, c) in self.eval(st, cond, Self::pred_cx(cx))? {
                    st.assume(c.term().cloned().expect("boolean condition"));
                    out.push((st, Flow::Next));
                }
                Ok(out)
            }
            TStmt::Assert { cond, span } => {
                let mut out = Vec::new();
                for (mut st, c) in self.eval(st, cond, Self::pred_cx(cx))? {
                    let cond = c.term().cloned().expect("boolean condition");
                    st.obligations.push(Obligation { cond, span: *span });
                    out.push((st, Flow::Next));
                }
                Ok(out)
            }
            TStmt::Delete { target } => {
                let mut out = Vec::new();
                for (mut st, t) in self.eval_target(st, target, cx)? {
                    match t {
                        Target::Local(l) => {
                            let info = &cx.locals[l];
                            if info.kind != LocalKind::Value {
                                return err("delete of a reference local", target.span);
                            }
                            st.locals[l] = Some(Val::Scalar(default_scalar(&info.ty)));
                        }
                        Target::Place(p) => self.write_default(&mut st, &p),
                    }
                    out.push((st, Flow::Next));
                }
                Ok(out)
            }
            TStmt::Push { array, value, span } => {
                let mut out = Vec::new();
                for (st, t) in self.eval_target(st, array, cx)? {
                    let Target::Place(p) = t else {
                        return err("push on a local", *span);
                    };
                    let vals = match value {
                        Some(v) => self.eval(st, v, cx)?,
                        None => vec![(st, Val::Void)],
                    };
                    let Ty::Array(elem) = &p.ty else {
                        return err("push on a non-array", *span);
                    };
                    for (mut st, v) in vals {
                        let len = self.read_len(&mut st, &p);
                        let slot = p.child(Step::Index(len.clone()), (**elem).clone());
                        match v {
                            Val::Void => self.write_default(&mut st, &slot),
                            v => {
                                st = self
                                    .assign(st, Target::Place(slot), v, cx)?
                                    .pop()
                                    .map(|(s, _)| s)
                                    .expect("assignment path");
                            }
                        }
                        Self::write_len(&mut st, &p, Term::add(len, Term::int(1)));
                        out.push((st, Flow::Next));
                    }
                }
                Ok(out)
            }
            TStmt::Pop { array, span } => {
                let mut out = Vec::new();
                for (mut st, t) in self.eval_target(st, array, cx)? {
                    let Target::Place(p) = t else {
                        return err("pop on a local", *span);
                    };
                    let Ty::Array(elem) = &p.ty else {
                        return err("pop on a non-array", *span);
                    };
                    let len = self.read_len(&mut st, &p);
                    let ok = Term::gt(len.clone(), Term::int(0));
                    if let Some(mut st) = self.guard(st, ok, "pop on empty array", *span) {
                        let last = Term::sub(len, Term::int(1));
                        let slot = p.child(Step::Index(last.clone()), (**elem).clone());
                        self.write_default(&mut st, &slot);
                        Self::write_len(&mut st, &p, last);
                        out.push((st, Flow::Next));
                    }
                }
                Ok(out)
            }
            TStmt::Region(body) => Ok(self
                .exec_block(st, body, cx)?
                .into_iter()
                .map(|(s, _)| (s, Flow::Next))
                .collect()),
        }
    }

    fn exec_loop(&mut self, st: SymState, cond: &TExpr, body: &[TStmt], span: Span, iter: usize, cx: Ctx) -> R<Flow> {
        let mut out = Vec::new();
        for (st, c) in self.eval(st, cond, cx)? {
            let c = c.term().cloned().expect("boolean condition");
            let (t, f) = Self::fork(st, &c);
            if let Some(f) = f {
                out.push((f, Flow::Next));
            }
            if let Some(t) = t {
                if iter >= self.opts.loop_bound {
                    self.sink.push(PathOutcome::Truncated { state: t, span });
                    continue;
                }
                for (s, flow) in self.exec_block(t, body, cx)? {
                    match flow {
                        Flow::Return => out.push((s, flow)),
                        Flow::Next => out.extend(self.exec_loop(s, cond, body, span, iter + 1, cx)?),
                    }
                }
            }
        }
        Ok(out)
    }

    /// Bind a value to a local according to its storage kind.
    fn bind_local(&self, st: &mut SymState, l: LocalId, v: Val, cx: Ctx) {
        let info = &cx.locals[l];
        let v = match (info.kind, v) {
            (LocalKind::Memory, Val::Ref(p)) if !matches!(p.root, Root::Mem(_)) => Val::Ref(self.copy_to_mem(st, &p)),
            (_, v) => v,
        };
        st.locals[l] = Some(v);
    }

    fn assign(&mut self, mut st: SymState, target: Target, v: Val, cx: Ctx) -> R<()> {
        match target {
            Target::Local(l) => self.bind_local(&mut st, l, v, cx),
            Target::Place(p) => match v {
                Val::Scalar(t) => Self::write_scalar(&mut st, &p, t),
                Val::Ref(src) => {
                    let leaves = self.read_agg(&st, &src);
                    Self::write_agg(&mut st, &p, leaves);
                }
                _ => return err("cannot assign a tuple or void value", Span::default()),
            },
        }
        Ok(vec![(st, ())])
    }

    fn eval_target(&mut self, st: SymState, e: &TExpr, cx: Ctx) -> R<Target> {
        match &e.kind {
            TExprKind::Local(l) => {
                // Assigning a whole reference local rebinds it; writes through
                // its projections go through the Index/Field cases.
                Ok(vec![(st, Target::Local(*l))])
            }
            TExprKind::State(id) => Ok(vec![(
                st,
                Target::Place(Place {
                    root: Root::State(*id),
                    steps: vec![],
                    ty: e.ty.clone(),
                }),
            )]),
            TExprKind::Index(..) | TExprKind::Field(..) => {
                let mut out = Vec::new();
                for (st, p) in self.eval_place(st, e, cx)? {
                    out.push((st, Target::Place(p)));
                }
                Ok(out)
            }
            _ => err("expression is not assignable", e.span),
        }
    }

    /// Evaluate an lvalue-like expression to its place.
    fn eval_place(&mut self, st: SymState, e: &TExpr, cx: Ctx) -> R<Place> {
        match &e.kind {
            TExprKind::Index(base, idx) => {
                let mut out = Vec::new();
                for (st, b) in self.eval(st, base, cx)? {
                    let Val::Ref(bp) = b else {
                        return err("indexing is only supported on mappings and arrays", e.span);
                    };
                    for (mut st, k) in self.eval(st, idx, cx)? {
                        let k = k.term().cloned().expect("scalar index");
                        let place = bp.child(Step::Index(k.clone()), e.ty.clone());
                        if matches!(bp.ty, Ty::Array(_)) && !cx.pred {
                            let len = self.read_len(&mut st, &bp);
                            let ok = Term::lt(k, len);
                            if let Some(st) = self.guard(st, ok, "array index out of bounds", e.span) {
                                out.push((st, place))
                            }
                        } else {
                            out.push((st, place));
                        }
                    }
                }
                Ok(out)
            }
            TExprKind::Field(base, i) => {
                let mut out = Vec::new();
                for (st, b) in self.eval(st, base, cx)? {
                    let Val::Ref(bp) = b else {
                        return err("field access on a non-struct value", e.span);
                    };
                    out.push((st, bp.child(Step::Field(*i), e.ty.clone())));
                }
                Ok(out)
            }
            _ => {
                let mut out = Vec::new();
                for (st, v) in self.eval(st, e, cx)? {
                    let Val::Ref(p) = v else {
                        return err("expression has no location", e.span);
                    };
                    out.push((st, p));
                }
                Ok(out)
            }
        }
    }

    // ----- expressions -----

    fn eval_seq(&mut self, st: SymState, es: &[&TExpr], cx: Ctx) -> R<Vec<Val>> {
        let mut paths: Paths<Vec<Val>> = vec![(st, vec![])];
        for e in es {
            let mut next = Vec::new();
            for (st, vs) in paths {
                for (st, v) in self.eval(st, e, cx)? {
                    let mut vs = vs.clone();
                    vs.push(v);
                    next.push((st, vs));
                }
            }
            paths = next;
        }
        Ok(paths)
    }

    fn eval_scalars(&mut self, st: SymState, es: &[&TExpr], cx: Ctx) -> R<Vec<Term>> {
        let mut out = Vec::new();
        for (st, vs) in self.eval_seq(st, es, cx)? {
            let mut ts = Vec::new();
            for (v, e) in vs.iter().zip(es) {
                match v.term() {
                    Some(t) => ts.push(t.clone()),
                    None => return err("scalar value expected", e.span),
                }
            }
            out.push((st, ts));
        }
        Ok(out)
    }

    fn eval(&mut self, st: SymState, e: &TExpr, cx: Ctx) -> R<Val> {
        use TExprKind as K;
        let scalar = |paths: Paths<Term>| paths.into_iter().map(|(s, t)| (s, Val::Scalar(t))).collect::<Vec<_>>();
        match &e.kind {
            K::Int(v) => Ok(vec![(st, Val::Scalar(Term::int(v.clone())))]),
            K::Bool(b) => Ok(vec![(st, Val::Scalar(Term::bool(*b)))]),
            K::Local(l) => match st.locals.get(*l).cloned().flatten() {
                Some(v) => Ok(vec![(st, v)]),
                None => err(format!("use of unbound local {}", cx.locals[*l].name), e.span),
            },
            K::State(id) => {
                let root = if cx.old { Root::OldState(*id) } else { Root::State(*id) };
                let place = Place {
                    root,
                    steps: vec![],
                    ty: e.ty.clone(),
                };
                if e.ty.is_scalar() {
                    let mut st = st;
                    let t = self.read_scalar(&mut st, &place);
                    Ok(vec![(st, Val::Scalar(t))])
                } else {
                    Ok(vec![(st, Val::Ref(place))])
                }
            }
            K::Env(v) => {
                let t = st.env.get(v).cloned().expect("environment initialized");
                Ok(vec![(st, Val::Scalar(t))])
            }
            K::Old(inner) => self.eval(st, inner, Ctx { old: true, ..cx }),
            K::Arith(op, mode, a, b) => {
                let mut out = Vec::new();
                for (st, ts) in self.eval_scalars(st, &[a, b], cx)? {
                    out.extend(self.arith(st, *op, *mode, ts[0].clone(), ts[1].clone(), &e.ty, e.span)?);
                }
                Ok(out)
            }
            K::Cmp(op, a, b) => {
                let paths = self.eval_scalars(st, &[a, b], cx)?;
                Ok(scalar(
                    paths
                        .into_iter()
                        .map(|(s, ts)| {
                            let (a, b) = (ts[0].clone(), ts[1].clone());
                            let t = match op {
                                CmpOp::Eq => Term::eq(a, b),
                                CmpOp::Ne => Term::ne(a, b),
                                CmpOp::Lt => Term::lt(a, b),
                                CmpOp::Le => Term::le(a, b),
                                CmpOp::Gt => Term::gt(a, b),
                                CmpOp::Ge => Term::ge(a, b),
                            };
                            (s, t)
                        })
                        .collect(),
                ))
            }
            K::And(a, b) | K::Or(a, b) => {
                let is_and = matches!(e.kind, K::And(..));
                let simple = is_simple(b, cx.pred);
                let mut out = Vec::new();
                for (st, va) in self.eval(st, a, cx)? {
                    let ta = va.term().cloned().expect("boolean operand");
                    if simple {
                        for (st, vb) in self.eval(st, b, cx)? {
                            let tb = vb.term().cloned().expect("boolean operand");
                            let t = if is_and {
                                Term::and2(ta.clone(), tb)
                            } else {
                                Term::or2(ta.clone(), tb)
                            };
                            out.push((st, Val::Scalar(t)));
                        }
                        continue;
                    }
                    let (t, f) = Self::fork(st, &ta);
                    let (short, long) = if is_and { (f, t) } else { (t, f) };
                    if let Some(s) = short {
                        out.push((s, Val::Scalar(Term::bool(!is_and))));
                    }
                    if let Some(s) = long {
                        out.extend(self.eval(s, b, cx)?);
                    }
                }
                Ok(out)
            }
            K::Not(a) => Ok(self
                .eval(st, a, cx)?
                .into_iter()
                .map(|(s, v)| (s, Val::Scalar(Term::not(v.term().cloned().expect("boolean operand")))))
                .collect()),
            K::Neg(mode, a) => {
                let mut out = Vec::new();
                for (st, v) in self.eval(st, a, cx)? {
                    let r = Term::neg(v.term().cloned().expect("integer operand"));
                    if *mode == ArithMode::Checked && e.ty.range().is_some() {
                        let ok = self.type_range(&r, &e.ty);
                        if let Some(st) = self.guard(st, ok, "arithmetic overflow", e.span) {
                            out.push((st, Val::Scalar(r)));
                        }
                    } else {
                        out.push((st, Val::Scalar(r)));
                    }
                }
                Ok(out)
            }
            K::Ternary(c, a, b) => {
                let simple = e.ty.is_scalar() && is_simple(a, cx.pred) && is_simple(b, cx.pred);
                let mut out = Vec::new();
                for (st, vc) in self.eval(st, c, cx)? {
                    let tc = vc.term().cloned().expect("boolean condition");
                    if simple {
                        for (st, va) in self.eval(st, a, cx)? {
                            for (st, vb) in self.eval(st, b, cx)? {
                                let t = Term::ite(
                                    tc.clone(),
                                    va.term().cloned().expect("scalar"),
                                    vb.term().cloned().expect("scalar"),
                                );
                                out.push((st, Val::Scalar(t)));
                            }
                        }
                        continue;
                    }
                    let (t, f) = Self::fork(st, &tc);
                    if let Some(t) = t {
                        out.extend(self.eval(t, a, cx)?);
                    }
                    if let Some(f) = f {
                        out.extend(self.eval(f, b, cx)?);
                    }
                }
                Ok(out)
            }
            K::Index(..) | K::Field(..) => {
                let mut out = Vec::new();
                for (mut st, p) in self.eval_place(st, e, cx)? {
                    if e.ty.is_scalar() {
                        let t = self.read_scalar(&mut st, &p);
                        out.push((st, Val::Scalar(t)));
                    } else {
                        out.push((st, Val::Ref(p)));
                    }
                }
                Ok(out)
            }
            K::Length(a) => {
                let mut out = Vec::new();
                for (mut st, p) in self.eval_place(st, a, cx)? {
                    let t = self.read_len(&mut st, &p);
                    out.push((st, Val::Scalar(t)));
                }
                Ok(out)
            }
            K::Call { func, args } => {
                let refs: Vec<&TExpr> = args.iter().collect();
                let mut out = Vec::new();
                for (mut st, vals) in self.eval_seq(st, &refs, cx)? {
                    if cx.rule {
                        let f = &self.program.functions[*func];
                        if !f.payable {
                            let v = st.env[&EnvVar::Value].clone();
                            st.assume(Term::eq(v, Term::int(0)));
                        }
                        let args = vals
                            .iter()
                            .map(|v| match v {
                                Val::Ref(p) => SymArg::Mem(MemObj {
                                    ty: p.ty.clone(),
                                    leaves: self.read_agg(&st, p).into_iter().collect(),
                                }),
                                v => SymArg::Scalar(v.term().cloned().unwrap_or_else(Term::tt)),
                            })
                            .collect();
                        st.log.push(TxRecord {
                            func: Some(*func),
                            env: st.env.clone(),
                            args,
                            from_rule: true,
                        });
                        let saved = std::mem::take(&mut st.locals);
                        for (mut s, v) in self.call_function(st, *func, vals, 0)? {
                            s.locals = saved.clone();
                            out.push((s, v));
                        }
                    } else {
                        out.extend(self.call_function(st, *func, vals, cx.depth + 1)?);
                    }
                }
                Ok(out)
            }
            K::ExternalCall {
                kind,
                target,
                value,
                data,
            } => {
                let mut refs: Vec<&TExpr> = vec![target];
                refs.extend(value.as_deref());
                refs.extend(data.as_deref());
                let mut out = Vec::new();
                for (mut st, _) in self.eval_seq(st, &refs, cx)? {
                    match kind {
                        ExtKind::Call => {
                            let ok = self.fresh_var("call.success", Sort::Bool);
                            st.assume(ok.clone());
                            let data = self.fresh_input(&mut st, "call.returndata", &Ty::Bytes);
                            st.ext.push(data.clone());
                            out.push((st, Val::Tuple(vec![Some(Val::Scalar(ok)), Some(Val::Scalar(data))])));
                        }
                        ExtKind::Send => {
                            let ok = self.fresh_var("send.success", Sort::Bool);
                            st.assume(ok.clone());
                            out.push((st, Val::Scalar(ok)));
                        }
                        ExtKind::Transfer => out.push((st, Val::Void)),
                    }
                }
                Ok(out)
            }
            K::Sha3(args) => {
                let refs: Vec<&TExpr> = args.iter().collect();
                let name = sha3_name(args.len());
                Ok(self
                    .eval_scalars(st, &refs, cx)?
                    .into_iter()
                    .map(|(s, ts)| {
                        let ts = ts
                            .into_iter()
                            .map(|t| match t.sort() {
                                Sort::Bool => Term::ite(t, Term::int(1), Term::int(0)),
                                _ => t,
                            })
                            .collect();
                        (s, Val::Scalar(Term::app(&name, ts)))
                    })
                    .collect())
            }
            K::Convert(a) => {
                let mut out = Vec::new();
                for (st, v) in self.eval(st, a, cx)? {
                    let t = v.term().cloned().expect("scalar conversion operand");
                    match convert_term(t, &a.ty, &e.ty) {
                        Ok(t) => out.push((st, Val::Scalar(t))),
                        Err(m) => return err(m, e.span),
                    }
                }
                Ok(out)
            }
            K::NewArray(n) => {
                let mut out = Vec::new();
                for (mut st, v) in self.eval(st, n, cx)? {
                    let n = v.term().cloned().expect("array length");
                    let mut leaves = default_agg(self.program, &e.ty);
                    leaves.insert(vec![LeafStep::Len], n);
                    let p = Self::new_mem(&mut st, &e.ty, leaves);
                    out.push((st, Val::Ref(p)));
                }
                Ok(out)
            }
            K::AbiDecode(d) => {
                let mut out = Vec::new();
                for (mut st, _) in self.eval(st, d, cx)? {
                    let t = self.fresh_input(&mut st, "abi.decode", &e.ty);
                    st.ext.push(t.clone());
                    out.push((st, Val::Scalar(t)));
                }
                Ok(out)
            }
            K::Tuple(items) => {
                let refs: Vec<&TExpr> = items.iter().flatten().collect();
                let mut out = Vec::new();
                for (st, vals) in self.eval_seq(st, &refs, cx)? {
                    let mut it = vals.into_iter();
                    let items = items.iter().map(|i| i.as_ref().map(|_| it.next().unwrap())).collect();
                    out.push((st, Val::Tuple(items)));
                }
                Ok(out)
            }
        }
    }

    fn type_range(&self, t: &Term, ty: &Ty) -> Term {
        match ty.range() {
            Some((lo, hi)) => Term::in_range(t, &lo, hi.as_ref()),
            None => Term::tt(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn arith(&mut self, st: SymState, op: ArithOp, mode: ArithMode, a: Term, b: Term, ty: &Ty, span: Span) -> R<Val> {
        let zero = Term::int(0);
        let nonzero = Term::ne(b.clone(), zero.clone());
        let r = match op {
            ArithOp::Add => Term::add(a, b),
            ArithOp::Sub => Term::sub(a, b),
            ArithOp::Mul => Term::mul(a, b),
            ArithOp::Div | ArithOp::Mod => {
                let raw = if op == ArithOp::Div {
                    Term::div(a, b)
                } else {
                    Term::rem(a, b)
                };
                match mode {
                    ArithMode::Math => Term::ite(nonzero.clone(), raw, zero),
                    ArithMode::Checked => raw,
                }
            }
            ArithOp::Pow => match b.as_int().and_then(small_exponent) {
                Some(k) => Term::pow(a, k),
                None => return err("exponent must be a constant", span),
            },
        };
        if mode == ArithMode::Math || ty.range().is_none() {
            return Ok(vec![(st, Val::Scalar(r))]);
        }
        let ok = self.type_range(&r, ty);
        let st = if matches!(op, ArithOp::Div | ArithOp::Mod) {
            match self.guard(st, nonzero, "division by zero", span) {
                Some(st) => st,
                None => return Ok(vec![]),
            }
        } else {
            st
        };
        Ok(self
            .guard(st, ok, "arithmetic overflow", span)
            .map(|s| vec![(s, Val::Scalar(r))])
            .unwrap_or_default())
    }

    // ----- calls -----

    fn enter_frame(&mut self, st: &mut SymState, func: FuncId, args: Vec<Val>) {
        let f = &self.program.functions[func];
        st.locals = vec![None; f.locals.len()];
        let cx = Ctx {
            locals: &f.locals,
            returns: &f.returns,
            depth: 0,
            pred: false,
            old: false,
            rule: false,
        };
        for (&p, v) in f.params.iter().zip(args) {
            self.bind_local(st, p, v, cx);
        }
        for &r in &f.returns {
            let info = &f.locals[r];
            let v = match info.kind {
                LocalKind::Value => Some(Val::Scalar(default_scalar(&info.ty))),
                LocalKind::Memory => {
                    let leaves = default_agg(self.program, &info.ty);
                    Some(Val::Ref(Self::new_mem(st, &info.ty, leaves)))
                }
                LocalKind::Storage => None,
            };
            st.locals[r] = v;
        }
    }

    fn exec_body(&mut self, st: SymState, func: FuncId, depth: usize) -> R<Flow> {
        let f = &self.program.functions[func];
        let cx = Ctx {
            locals: &f.locals,
            returns: &f.returns,
            depth,
            pred: false,
            old: false,
            rule: false,
        };
        self.exec_block(st, &f.body, cx)
    }

    fn call_function(&mut self, mut st: SymState, func: FuncId, args: Vec<Val>, depth: usize) -> R<Val> {
        if depth > self.opts.call_depth {
            return Ok(vec![self.havoc_call(st, func)]);
        }
        let f = &self.program.functions[func];
        let saved = std::mem::take(&mut st.locals);
        self.enter_frame(&mut st, func, args);
        let mut out = Vec::new();
        for (mut s, _) in self.exec_body(st, func, depth)? {
            let mut rets: Vec<Val> = f
                .returns
                .iter()
                .map(|r| s.locals[*r].clone().unwrap_or(Val::Void))
                .collect();
            s.locals = saved.clone();
            let v = match rets.len() {
                0 => Val::Void,
                1 => rets.pop().unwrap(),
                _ => Val::Tuple(rets.into_iter().map(Some).collect()),
            };
            out.push((s, v));
        }
        Ok(out)
    }

    /// Replace a call beyond the depth bound by fresh values for everything
    /// it may write.
    fn havoc_call(&mut self, mut st: SymState, func: FuncId) -> (SymState, Val) {
        let program = self.program;
        let written = self.footprint(func);
        for (sid, sv) in program.state_vars.iter().enumerate() {
            if written.as_ref().is_none_or(|w| w.contains(&sid)) && !sv.constant {
                let agg = self.fresh_agg(&mut st, &sv.name, &sv.ty);
                st.store[sid] = agg;
            }
        }
        st.approximations
            .push(format!("call depth bound at {}", program.functions[func].name));
        let f = &program.functions[func];
        let mut rets = Vec::new();
        for &r in &f.returns {
            let info = &f.locals[r];
            rets.push(self.fresh_arg(&mut st, &info.name, &info.ty).0);
        }
        let v = match rets.len() {
            0 => Val::Void,
            1 => rets.pop().unwrap(),
            _ => Val::Tuple(rets.into_iter().map(Some).collect()),
        };
        (st, v)
    }

    /// State variables a function may write, transitively; `None` when a
    /// write goes through a storage pointer.
    fn footprint(&self, func: FuncId) -> Option<BTreeSet<StateId>> {
        let mut seen = BTreeSet::new();
        let mut out = BTreeSet::new();
        let mut stack = vec![func];
        let mut unknown = false;
        while let Some(fid) = stack.pop() {
            if !seen.insert(fid) {
                continue;
            }
            let f = &self.program.functions[fid];
            let mut root = |e: &TExpr| {
                let mut cur = e;
                loop {
                    match &cur.kind {
                        TExprKind::Index(b, _) | TExprKind::Field(b, _) | TExprKind::Length(b) => cur = b,
                        TExprKind::State(id) => {
                            out.insert(*id);
                            break;
                        }
                        TExprKind::Local(l) => {
                            if f.locals[*l].kind == LocalKind::Storage && !std::ptr::eq(cur, e) {
                                unknown = true;
                            }
                            break;
                        }
                        _ => break,
                    }
                }
            };
            TStmt::walk(&f.body, &mut |s| match s {
                TStmt::Assign { lhs, .. } => root(lhs),
                TStmt::TupleAssign { lhs, .. } => lhs.iter().flatten().for_each(&mut root),
                TStmt::Delete { target } => root(target),
                TStmt::Push { array, .. } | TStmt::Pop { array, .. } => root(array),
                _ => {}
            });
            TStmt::walk_exprs(&f.body, &mut |e| {
                e.visit(&mut |x| {
                    if let TExprKind::Call { func, .. } = &x.kind {
                        stack.push(*func);
                    }
                })
            });
        }
        if unknown {
            None
        } else {
            Some(out)
        }
    }
}
