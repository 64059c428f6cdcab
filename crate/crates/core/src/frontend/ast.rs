//! Untyped syntax trees for MiniSol contracts and PSL specifications.
//!
//! Every node carries the byte span it was parsed from. Structural equality
//! that ignores spans is available through [`SourceUnit::without_spans`] and
//! [`SpecUnit::without_spans`].

use super::span::Span;
use num_bigint::BigUint;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

impl Ident {
    pub fn is_symbolic(&self) -> bool {
        self.name.starts_with('$')
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceUnit {
    pub pragmas: Vec<String>,
    pub contracts: Vec<ContractDef>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractDef {
    pub name: Ident,
    pub is_abstract: bool,
    pub bases: Vec<Ident>,
    pub structs: Vec<StructDef>,
    pub events: Vec<EventDef>,
    pub state_vars: Vec<StateVarDef>,
    pub modifiers: Vec<ModifierDef>,
    pub functions: Vec<FunctionDef>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructDef {
    pub name: Ident,
    pub fields: Vec<(TypeName, Ident)>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventDef {
    pub name: Ident,
    pub params: Vec<Param>,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Visibility {
    Public,
    External,
    Internal,
    Private,
}

impl Visibility {
    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Public => "public",
            Visibility::External => "external",
            Visibility::Internal => "internal",
            Visibility::Private => "private",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mutability {
    Pure,
    View,
    Payable,
}

impl Mutability {
    pub fn as_str(self) -> &'static str {
        match self {
            Mutability::Pure => "pure",
            Mutability::View => "view",
            Mutability::Payable => "payable",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DataLocation {
    Memory,
    Storage,
    Calldata,
}

impl DataLocation {
    pub fn as_str(self) -> &'static str {
        match self {
            DataLocation::Memory => "memory",
            DataLocation::Storage => "storage",
            DataLocation::Calldata => "calldata",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateVarDef {
    pub ty: TypeName,
    pub name: Ident,
    pub visibility: Option<Visibility>,
    pub constant: bool,
    pub immutable: bool,
    pub init: Option<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub ty: TypeName,
    pub location: Option<DataLocation>,
    pub name: Option<Ident>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModifierDef {
    pub name: Ident,
    pub params: Vec<Param>,
    pub is_virtual: bool,
    pub is_override: bool,
    pub body: Block,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModifierInvocation {
    pub name: Ident,
    pub args: Option<Vec<Expr>>,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionKind {
    Function,
    Constructor,
    Receive,
    Fallback,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionDef {
    pub kind: FunctionKind,
    pub name: Ident,
    pub params: Vec<Param>,
    pub returns: Vec<Param>,
    pub visibility: Option<Visibility>,
    pub mutability: Option<Mutability>,
    pub is_virtual: bool,
    pub is_override: bool,
    pub modifiers: Vec<ModifierInvocation>,
    pub body: Option<Block>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElementaryType {
    Uint(u16),
    Int(u16),
    Bool,
    Address { payable: bool },
    FixedBytes(u8),
    String,
    Bytes,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeNameKind {
    Elementary(ElementaryType),
    Mapping(Box<TypeName>, Box<TypeName>),
    Array(Box<TypeName>),
    User(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeName {
    pub kind: TypeNameKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalDecl {
    pub ty: TypeName,
    pub location: Option<DataLocation>,
    pub name: Ident,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    /// `T x = e;` or `(T a, , T b) = e;` (tuple form when `tuple` is set).
    VarDecl {
        decls: Vec<Option<LocalDecl>>,
        init: Option<Expr>,
        tuple: bool,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Option<Box<Stmt>>,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        update: Option<Expr>,
        body: Box<Stmt>,
    },
    Block(Block),
    Return(Option<Expr>),
    Emit(Expr),
    /// The `_;` placeholder inside modifier bodies.
    Placeholder,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Pow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    /// Single `&`, read as logical conjunction.
    Amp,
}

impl BinOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Amp => "&",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And | BinOp::Amp => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
            BinOp::Pow => 7,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
    Delete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AssignOp {
    Assign,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl AssignOp {
    pub fn as_str(self) -> &'static str {
        match self {
            AssignOp::Assign => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Mod => "%=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Ident(String),
    Number(BigUint),
    /// Hex literal; the digit count decides between address, bytes32 and
    /// plain integer typing.
    Hex(String),
    Bool(bool),
    Str(String),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Unary {
        op: UnOp,
        operand: Box<Expr>,
    },
    Assign {
        op: AssignOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Ternary {
        cond: Box<Expr>,
        then: Box<Expr>,
        els: Box<Expr>,
    },
    Index {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    Member {
        base: Box<Expr>,
        member: Ident,
    },
    Call {
        callee: Box<Expr>,
        options: Vec<(Ident, Expr)>,
        args: Vec<Expr>,
    },
    /// `new T` as a callee, e.g. `new uint256[](n)`.
    New(TypeName),
    /// Elementary type used as a callee for conversions, e.g. `address(0)`.
    TypeExpr(TypeName),
    /// `(a, b)` with possibly omitted components. Plain parentheses do not
    /// produce a node.
    Tuple(Vec<Option<Expr>>),
    /// `old(e)` or `__old__(e)` inside specifications.
    Old(Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }
}

// ---------------------------------------------------------------------------
// Specifications
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantDecl {
    pub name: Ident,
    pub exprs: Vec<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSpec {
    pub func_name: Ident,
    /// Parameter list when the header spells it out, `None` for `function f {`.
    pub params: Option<Vec<Param>>,
    pub pre: Vec<Expr>,
    pub post: Vec<Expr>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleDecl {
    pub name: Ident,
    pub params: Vec<Param>,
    pub body: Block,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecUnit {
    Invariant(InvariantDecl),
    Function(FunctionSpec),
    Rule(RuleDecl),
}

impl SpecUnit {
    pub fn name(&self) -> &str {
        match self {
            SpecUnit::Invariant(i) => &i.name.name,
            SpecUnit::Function(f) => &f.func_name.name,
            SpecUnit::Rule(r) => &r.name.name,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            SpecUnit::Invariant(i) => i.span,
            SpecUnit::Function(f) => f.span,
            SpecUnit::Rule(r) => r.span,
        }
    }

    pub fn kind_str(&self) -> &'static str {
        match self {
            SpecUnit::Invariant(_) => "invariant",
            SpecUnit::Function(_) => "condition",
            SpecUnit::Rule(_) => "rule",
        }
    }
}

// ---------------------------------------------------------------------------
// Span traversal
// ---------------------------------------------------------------------------

/// Visits every span in a tree, parents before children. The callback gets
/// the parent span (if any) alongside each node span.
pub trait SpanWalk {
    fn walk_spans(&mut self, parent: Option<Span>, f: &mut dyn FnMut(Option<Span>, &mut Span));
}

macro_rules! walk_vec {
    ($v:expr, $p:expr, $f:expr) => {
        for x in $v.iter_mut() {
            x.walk_spans($p, $f);
        }
    };
}

impl SpanWalk for Ident {
    fn walk_spans(&mut self, parent: Option<Span>, f: &mut dyn FnMut(Option<Span>, &mut Span)) {
        f(parent, &mut self.span);
    }
}

impl SpanWalk for TypeName {
    fn walk_spans(&mut self, parent: Option<Span>, f: &mut dyn FnMut(Option<Span>, &mut Span)) {
        let me = self.span;
        f(parent, &mut self.span);
        match &mut self.kind {
            TypeNameKind::Mapping(k, v) => {
                k.walk_spans(Some(me), f);
                v.walk_spans(Some(me), f);
            }
            TypeNameKind::Array(e) => e.walk_spans(Some(me), f),
            _ => {}
        }
    }
}

impl SpanWalk for Param {
    fn walk_spans(&mut self, parent: Option<Span>, f: &mut dyn FnMut(Option<Span>, &mut Span)) {
        let me = self.span;
        f(parent, &mut self.span);
        self.ty.walk_spans(Some(me), f);
        if let Some(n) = &mut self.name {
            n.walk_spans(Some(me), f);
        }
    }
}

impl SpanWalk for Expr {
    fn walk_spans(&mut self, parent: Option<Span>, f: &mut dyn FnMut(Option<Span>, &mut Span)) {
        let me = Some(self.span);
        f(parent, &mut self.span);
        match &mut self.kind {
            ExprKind::Binary { lhs, rhs, .. } | ExprKind::Assign { lhs, rhs, .. } => {
                lhs.walk_spans(me, f);
                rhs.walk_spans(me, f);
            }
            ExprKind::Unary { operand, .. } => operand.walk_spans(me, f),
            ExprKind::Ternary { cond, then, els } => {
                cond.walk_spans(me, f);
                then.walk_spans(me, f);
                els.walk_spans(me, f);
            }
            ExprKind::Index { base, index } => {
                base.walk_spans(me, f);
                index.walk_spans(me, f);
            }
            ExprKind::Member { base, member } => {
                base.walk_spans(me, f);
                member.walk_spans(me, f);
            }
            ExprKind::Call { callee, options, args } => {
                callee.walk_spans(me, f);
                for (k, v) in options.iter_mut() {
                    k.walk_spans(me, f);
                    v.walk_spans(me, f);
                }
                walk_vec!(args, me, f);
            }
            ExprKind::New(t) | ExprKind::TypeExpr(t) => t.walk_spans(me, f),
            ExprKind::Tuple(items) => {
                for e in items.iter_mut().flatten() {
                    e.walk_spans(me, f);
                }
            }
            ExprKind::Old(e) => e.walk_spans(me, f),
            ExprKind::Ident(_) | ExprKind::Number(_) | ExprKind::Hex(_) | ExprKind::Bool(_) | ExprKind::Str(_) => {}
        }
    }
}

impl SpanWalk for LocalDecl {
    fn walk_spans(&mut self, parent: Option<Span>, f: &mut dyn FnMut(Option<Span>, &mut Span)) {
        let me = Some(self.span);
        f(parent, &mut self.span);
        self.ty.walk_spans(me, f);
        self.name.walk_spans(me, f);
    }
}

impl SpanWalk for Block {
    fn walk_spans(&mut self, parent: Option<Span>, f: &mut dyn FnMut(Option<Span>, &mut Span)) {
        let me = Some(self.span);
        f(parent, &mut self.span);
        walk_vec!(self.stmts, me, f);
    }
}

impl SpanWalk for Stmt {
    fn walk_spans(&mut self, parent: Option<Span>, f: &mut dyn FnMut(Option<Span>, &mut Span)) {
        let me = Some(self.span);
        f(parent, &mut self.span);
        match &mut self.kind {
            StmtKind::VarDecl { decls, init, .. } => {
                for d in decls.iter_mut().flatten() {
                    d.walk_spans(me, f);
                }
                if let Some(e) = init {
                    e.walk_spans(me, f);
                }
            }
            StmtKind::Expr(e) | StmtKind::Emit(e) => e.walk_spans(me, f),
            StmtKind::If { cond, then, els } => {
                cond.walk_spans(me, f);
                then.walk_spans(me, f);
                if let Some(e) = els {
                    e.walk_spans(me, f);
                }
            }
            StmtKind::While { cond, body } => {
                cond.walk_spans(me, f);
                body.walk_spans(me, f);
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                if let Some(i) = init {
                    i.walk_spans(me, f);
                }
                if let Some(c) = cond {
                    c.walk_spans(me, f);
                }
                if let Some(u) = update {
                    u.walk_spans(me, f);
                }
                body.walk_spans(me, f);
            }
            StmtKind::Block(b) => b.walk_spans(me, f),
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    e.walk_spans(me, f);
                }
            }
            StmtKind::Placeholder => {}
        }
    }
}

impl SpanWalk for FunctionDef {
    fn walk_spans(&mut self, parent: Option<Span>, f: &mut dyn FnMut(Option<Span>, &mut Span)) {
        let me = Some(self.span);
        f(parent, &mut self.span);
        self.name.walk_spans(me, f);
        walk_vec!(self.params, me, f);
        walk_vec!(self.returns, me, f);
        for m in self.modifiers.iter_mut() {
            let mspan = Some(m.span);
            f(me, &mut m.span);
            m.name.walk_spans(mspan, f);
            if let Some(args) = &mut m.args {
                walk_vec!(args, mspan, f);
            }
        }
        if let Some(b) = &mut self.body {
            b.walk_spans(me, f);
        }
    }
}

impl SpanWalk for ContractDef {
    fn walk_spans(&mut self, parent: Option<Span>, f: &mut dyn FnMut(Option<Span>, &mut Span)) {
        let me = Some(self.span);
        f(parent, &mut self.span);
        self.name.walk_spans(me, f);
        walk_vec!(self.bases, me, f);
        for s in self.structs.iter_mut() {
            let sp = Some(s.span);
            f(me, &mut s.span);
            s.name.walk_spans(sp, f);
            for (t, n) in s.fields.iter_mut() {
                t.walk_spans(sp, f);
                n.walk_spans(sp, f);
            }
        }
        for e in self.events.iter_mut() {
            let sp = Some(e.span);
            f(me, &mut e.span);
            e.name.walk_spans(sp, f);
            walk_vec!(e.params, sp, f);
        }
        for v in self.state_vars.iter_mut() {
            let sp = Some(v.span);
            f(me, &mut v.span);
            v.ty.walk_spans(sp, f);
            v.name.walk_spans(sp, f);
            if let Some(i) = &mut v.init {
                i.walk_spans(sp, f);
            }
        }
        for m in self.modifiers.iter_mut() {
            let sp = Some(m.span);
            f(me, &mut m.span);
            m.name.walk_spans(sp, f);
            walk_vec!(m.params, sp, f);
            m.body.walk_spans(sp, f);
        }
        walk_vec!(self.functions, me, f);
    }
}

impl SpanWalk for SourceUnit {
    fn walk_spans(&mut self, parent: Option<Span>, f: &mut dyn FnMut(Option<Span>, &mut Span)) {
        let me = Some(self.span);
        f(parent, &mut self.span);
        walk_vec!(self.contracts, me, f);
    }
}

impl SpanWalk for SpecUnit {
    fn walk_spans(&mut self, parent: Option<Span>, f: &mut dyn FnMut(Option<Span>, &mut Span)) {
        match self {
            SpecUnit::Invariant(i) => {
                let me = Some(i.span);
                f(parent, &mut i.span);
                i.name.walk_spans(me, f);
                walk_vec!(i.exprs, me, f);
            }
            SpecUnit::Function(s) => {
                let me = Some(s.span);
                f(parent, &mut s.span);
                s.func_name.walk_spans(me, f);
                if let Some(ps) = &mut s.params {
                    walk_vec!(ps, me, f);
                }
                walk_vec!(s.pre, me, f);
                walk_vec!(s.post, me, f);
            }
            SpecUnit::Rule(r) => {
                let me = Some(r.span);
                f(parent, &mut r.span);
                r.name.walk_spans(me, f);
                walk_vec!(r.params, me, f);
                r.body.walk_spans(me, f);
            }
        }
    }
}

fn zero_spans<T: SpanWalk + Clone>(node: &T) -> T {
    let mut copy = node.clone();
    copy.walk_spans(None, &mut |_, s| *s = Span::default());
    copy
}

impl SourceUnit {
    /// Copy with every span zeroed, for structural comparison.
    pub fn without_spans(&self) -> SourceUnit {
        zero_spans(self)
    }
}

impl SpecUnit {
    pub fn without_spans(&self) -> SpecUnit {
        zero_spans(self)
    }
}

/// Collect `(parent, child)` span pairs for containment checks.
pub fn span_pairs<T: SpanWalk + Clone>(node: &T) -> Vec<(Span, Span)> {
    let mut copy = node.clone();
    let mut pairs = Vec::new();
    copy.walk_spans(None, &mut |p, s| {
        if let Some(p) = p {
            pairs.push((p, *s));
        }
    });
    pairs
}
