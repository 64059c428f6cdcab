//! Typed intermediate representation shared by the symbolic executor, the
//! concrete interpreter and the verifier.
//!
//! Assignments only appear at statement level; expressions may still have
//! effects through function calls and external calls.

use crate::frontend::span::{SourceFile, Span};
use crate::types::{StructInfo, Ty};
use num_bigint::BigInt;
use std::collections::BTreeMap;

pub type LocalId = usize;
pub type StateId = usize;
pub type FuncId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnvVar {
    Sender,
    Value,
    Timestamp,
    BlockNumber,
    Origin,
    This,
}

impl EnvVar {
    pub const ALL: [EnvVar; 6] = [
        EnvVar::Sender,
        EnvVar::Value,
        EnvVar::Timestamp,
        EnvVar::BlockNumber,
        EnvVar::Origin,
        EnvVar::This,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvVar::Sender => "msg.sender",
            EnvVar::Value => "msg.value",
            EnvVar::Timestamp => "block.timestamp",
            EnvVar::BlockNumber => "block.number",
            EnvVar::Origin => "tx.origin",
            EnvVar::This => "this",
        }
    }

    pub fn ty(self) -> Ty {
        match self {
            EnvVar::Sender | EnvVar::Origin | EnvVar::This => Ty::Address,
            _ => Ty::uint256(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Mod => "%",
            ArithOp::Pow => "**",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

/// Whether arithmetic reverts on overflow (contract code) or is evaluated
/// over unbounded integers (specification predicates).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithMode {
    Checked,
    Math,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtKind {
    /// `addr.call{value: v}(data)` returning `(bool, bytes)`.
    Call,
    /// `addr.send(v)` returning `bool`.
    Send,
    /// `addr.transfer(v)`.
    Transfer,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TExprKind {
    /// Integer-encoded constant of any non-boolean scalar type.
    Int(BigInt),
    Bool(bool),
    Local(LocalId),
    State(StateId),
    Env(EnvVar),
    /// Evaluate the operand in the pre-state of the enclosing transaction.
    Old(Box<TExpr>),
    Arith(ArithOp, ArithMode, Box<TExpr>, Box<TExpr>),
    Cmp(CmpOp, Box<TExpr>, Box<TExpr>),
    And(Box<TExpr>, Box<TExpr>),
    Or(Box<TExpr>, Box<TExpr>),
    Not(Box<TExpr>),
    Neg(ArithMode, Box<TExpr>),
    Ternary(Box<TExpr>, Box<TExpr>, Box<TExpr>),
    Index(Box<TExpr>, Box<TExpr>),
    Field(Box<TExpr>, usize),
    Length(Box<TExpr>),
    Call {
        func: FuncId,
        args: Vec<TExpr>,
    },
    ExternalCall {
        kind: ExtKind,
        target: Box<TExpr>,
        value: Option<Box<TExpr>>,
        data: Option<Box<TExpr>>,
    },
    /// keccak256 over the listed arguments, modeled as an injective
    /// uninterpreted function of their encodings.
    Sha3(Vec<TExpr>),
    /// Explicit conversion to `self.ty`.
    Convert(Box<TExpr>),
    /// `new T[](n)`: fresh zero-filled memory array of type `self.ty`.
    NewArray(Box<TExpr>),
    /// `abi.decode(data, (T))` for a scalar `T = self.ty`.
    AbiDecode(Box<TExpr>),
    Tuple(Vec<Option<TExpr>>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Ty,
    pub span: Span,
}

impl TExpr {
    pub fn new(kind: TExprKind, ty: Ty, span: Span) -> Self {
        TExpr { kind, ty, span }
    }

    pub fn bool_const(b: bool, span: Span) -> Self {
        TExpr::new(TExprKind::Bool(b), Ty::Bool, span)
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut dyn FnMut(&TExpr)) {
        f(self);
        match &self.kind {
            TExprKind::Old(a)
            | TExprKind::Not(a)
            | TExprKind::Neg(_, a)
            | TExprKind::Field(a, _)
            | TExprKind::Length(a)
            | TExprKind::Convert(a)
            | TExprKind::NewArray(a)
            | TExprKind::AbiDecode(a) => a.visit(f),
            TExprKind::Arith(_, _, a, b)
            | TExprKind::Cmp(_, a, b)
            | TExprKind::And(a, b)
            | TExprKind::Or(a, b)
            | TExprKind::Index(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            TExprKind::Ternary(a, b, c) => {
                a.visit(f);
                b.visit(f);
                c.visit(f);
            }
            TExprKind::Call { args, .. } | TExprKind::Sha3(args) => {
                for a in args {
                    a.visit(f);
                }
            }
            TExprKind::ExternalCall {
                target, value, data, ..
            } => {
                target.visit(f);
                if let Some(v) = value {
                    v.visit(f);
                }
                if let Some(d) = data {
                    d.visit(f);
                }
            }
            TExprKind::Tuple(items) => {
                for a in items.iter().flatten() {
                    a.visit(f);
                }
            }
            TExprKind::Int(_) | TExprKind::Bool(_) | TExprKind::Local(_) | TExprKind::State(_) | TExprKind::Env(_) => {}
        }
    }

    pub fn any(&self, pred: &dyn Fn(&TExpr) -> bool) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= pred(e));
        found
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TStmt {
    /// Declare a local; `None` initializes to the type default.
    Decl {
        local: LocalId,
        init: Option<TExpr>,
    },
    TupleDecl {
        locals: Vec<Option<LocalId>>,
        init: TExpr,
    },
    Assign {
        lhs: TExpr,
        op: Option<ArithOp>,
        rhs: TExpr,
        span: Span,
    },
    TupleAssign {
        lhs: Vec<Option<TExpr>>,
        rhs: TExpr,
    },
    Expr(TExpr),
    If {
        cond: TExpr,
        then: Vec<TStmt>,
        els: Vec<TStmt>,
    },
    /// `while (cond) body`; `for` loops are lowered onto this form.
    Loop {
        cond: TExpr,
        body: Vec<TStmt>,
        span: Span,
    },
    Return {
        values: Vec<TExpr>,
        span: Span,
    },
    /// `require(cond)` and contract-level `assert(cond)`.
    Require {
        cond: TExpr,
        span: Span,
    },
    Revert {
        span: Span,
    },
    Assume {
        cond: TExpr,
    },
    Assert {
        cond: TExpr,
        span: Span,
    },
    Delete {
        target: TExpr,
    },
    Push {
        array: TExpr,
        value: Option<TExpr>,
        span: Span,
    },
    Pop {
        array: TExpr,
        span: Span,
    },
    /// Function body wrapped by modifiers; a `return` inside ends the region
    /// and execution resumes after the modifier's `_`.
    Region(Vec<TStmt>),
}

impl TStmt {
    /// Visit every statement, including nested ones, in pre-order.
    pub fn walk<'a>(stmts: &'a [TStmt], f: &mut dyn FnMut(&'a TStmt)) {
        for s in stmts {
            f(s);
            match s {
                TStmt::If { then, els, .. } => {
                    TStmt::walk(then, f);
                    TStmt::walk(els, f);
                }
                TStmt::Loop { body, .. } => TStmt::walk(body, f),
                TStmt::Region(b) => TStmt::walk(b, f),
                _ => {}
            }
        }
    }

    /// Visit every expression directly owned by statements in the list,
    /// recursively.
    pub fn walk_exprs<'a>(stmts: &'a [TStmt], f: &mut dyn FnMut(&'a TExpr)) {
        TStmt::walk(stmts, &mut |s| match s {
            TStmt::Decl { init, .. } => {
                if let Some(e) = init {
                    f(e)
                }
            }
            TStmt::TupleDecl { init, .. } => f(init),
            TStmt::Assign { lhs, rhs, .. } => {
                f(lhs);
                f(rhs);
            }
            TStmt::TupleAssign { lhs, rhs } => {
                for e in lhs.iter().flatten() {
                    f(e);
                }
                f(rhs);
            }
            TStmt::Expr(e)
            | TStmt::Require { cond: e, .. }
            | TStmt::Assume { cond: e }
            | TStmt::Assert { cond: e, .. }
            | TStmt::Delete { target: e }
            | TStmt::Pop { array: e, .. } => f(e),
            TStmt::If { cond, .. } | TStmt::Loop { cond, .. } => f(cond),
            TStmt::Return { values, .. } => {
                for v in values {
                    f(v);
                }
            }
            TStmt::Push { array, value, .. } => {
                f(array);
                if let Some(v) = value {
                    f(v);
                }
            }
            TStmt::Revert { .. } | TStmt::Region(_) => {}
        });
    }
}

/// How a local variable holds its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalKind {
    /// Scalar held by value.
    Value,
    /// Aggregate in transaction memory (including calldata parameters).
    Memory,
    /// Pointer into contract storage.
    Storage,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalInfo {
    pub name: String,
    pub ty: Ty,
    pub kind: LocalKind,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Visibility {
    Public,
    External,
    Internal,
    Private,
}

impl Visibility {
    pub fn is_callable_externally(self) -> bool {
        matches!(self, Visibility::Public | Visibility::External)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FnKind {
    Function,
    Constructor,
    Receive,
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    /// Contract that defines this implementation.
    pub contract: String,
    pub kind: FnKind,
    pub visibility: Visibility,
    pub payable: bool,
    /// `view` or `pure`.
    pub read_only: bool,
    pub params: Vec<LocalId>,
    pub returns: Vec<LocalId>,
    pub locals: Vec<LocalInfo>,
    pub body: Vec<TStmt>,
    pub span: Span,
}

impl Function {
    pub fn param_types(&self) -> Vec<Ty> {
        self.params.iter().map(|p| self.locals[*p].ty.clone()).collect()
    }

    pub fn return_type(&self) -> Ty {
        match self.returns.len() {
            0 => Ty::Void,
            1 => self.locals[self.returns[0]].ty.clone(),
            _ => Ty::Tuple(self.returns.iter().map(|r| self.locals[*r].ty.clone()).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVar {
    pub name: String,
    pub ty: Ty,
    pub contract: String,
    pub init: Option<TExpr>,
    /// Constants are inlined at use sites and never stored.
    pub constant: bool,
    pub span: Span,
}

/// Construction step for one contract of the linearization, base first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructorStep {
    pub contract: String,
    /// State variables with initializers declared by this contract.
    pub initializers: Vec<StateId>,
    pub constructor: Option<FuncId>,
}

#[derive(Clone, Debug)]
pub struct Program {
    pub source: SourceFile,
    pub contract: String,
    /// Most derived first.
    pub linearization: Vec<String>,
    pub structs: Vec<StructInfo>,
    pub state_vars: Vec<StateVar>,
    pub functions: Vec<Function>,
    /// Externally callable entry points of the subject contract, by name.
    pub dispatch: BTreeMap<String, FuncId>,
    /// Internal dispatch (virtual resolution) of every function name.
    pub internal: BTreeMap<String, FuncId>,
    pub construction: Vec<ConstructorStep>,
    pub events: BTreeMap<String, Vec<Ty>>,
}

impl Program {
    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_vars.iter().position(|v| v.name == name)
    }

    pub fn function(&self, name: &str) -> Option<FuncId> {
        self.dispatch.get(name).or_else(|| self.internal.get(name)).copied()
    }

    /// Public and external functions in name order.
    pub fn entry_points(&self) -> Vec<FuncId> {
        self.dispatch.values().copied().collect()
    }

    pub fn ty_name(&self, ty: &Ty) -> String {
        crate::types::TyDisplay {
            ty,
            structs: &self.structs,
        }
        .to_string()
    }

    pub fn constructors(&self) -> impl Iterator<Item = FuncId> + '_ {
        self.construction.iter().filter_map(|c| c.constructor)
    }
}

/// Resolved specification property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Spec {
    Invariant(InvariantSpec),
    Function(FunctionSpecIr),
    Rule(RuleSpec),
}

impl Spec {
    pub fn name(&self) -> &str {
        match self {
            Spec::Invariant(i) => &i.name,
            Spec::Function(f) => &f.name,
            Spec::Rule(r) => &r.name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantSpec {
    pub name: String,
    pub exprs: Vec<TExpr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSpecIr {
    /// Function name being specified.
    pub name: String,
    pub func: FuncId,
    /// Expressions refer to the function's own parameter and return locals.
    pub pre: Vec<TExpr>,
    pub post: Vec<TExpr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSpec {
    pub name: String,
    pub locals: Vec<LocalInfo>,
    pub params: Vec<LocalId>,
    /// `$`-variables used without declaration: fresh rule-level symbols,
    /// tied to the same-named state variable when one exists.
    pub implicit: Vec<(LocalId, Option<StateId>)>,
    pub body: Vec<TStmt>,
    pub span: Span,
}
