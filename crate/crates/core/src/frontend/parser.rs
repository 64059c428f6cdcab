//! Recursive-descent parser for MiniSol contracts and PSL specifications.
//!
//! Keywords are contextual: the lexer produces plain words and the parser
//! decides by position. Parsing stops at the first error.

use super::ast::*;
use super::diagnostics::{codes, Diagnostic};
use super::lexer::{tokenize, Token, TokenKind};
use super::span::{SourceFile, Span};
use num_bigint::BigUint;
use num_traits::{Num, Pow};

type PResult<T> = Result<T, Diagnostic>;

/// Words that can never start a declaration's type or name a variable.
const RESERVED: &[&str] = &[
    "return",
    "emit",
    "if",
    "else",
    "while",
    "for",
    "do",
    "break",
    "continue",
    "delete",
    "new",
    "true",
    "false",
    "memory",
    "storage",
    "calldata",
    "returns",
    "public",
    "private",
    "internal",
    "external",
    "pure",
    "view",
    "payable",
    "virtual",
    "override",
    "constant",
    "immutable",
    "function",
    "modifier",
    "event",
    "struct",
    "contract",
    "mapping",
    "unchecked",
    "assembly",
    "try",
    "catch",
    "indexed",
    "anonymous",
];

const UNIT_WORDS: &[(&str, u64)] = &[
    ("wei", 1),
    ("gwei", 1_000_000_000),
    ("ether", 1_000_000_000_000_000_000),
    ("seconds", 1),
    ("minutes", 60),
    ("hours", 3600),
    ("days", 86_400),
    ("weeks", 604_800),
];

pub fn elementary_type(word: &str) -> Option<ElementaryType> {
    match word {
        "bool" => return Some(ElementaryType::Bool),
        "address" => return Some(ElementaryType::Address { payable: false }),
        "string" => return Some(ElementaryType::String),
        "bytes" => return Some(ElementaryType::Bytes),
        "uint" => return Some(ElementaryType::Uint(256)),
        "int" => return Some(ElementaryType::Int(256)),
        "byte" => return Some(ElementaryType::FixedBytes(1)),
        _ => {}
    }
    let bits = |rest: &str| -> Option<u16> {
        if rest.starts_with('0') {
            return None;
        }
        let n: u16 = rest.parse().ok()?;
        (n.is_multiple_of(8) && (8..=256).contains(&n)).then_some(n)
    };
    if let Some(rest) = word.strip_prefix("uint") {
        return bits(rest).map(ElementaryType::Uint);
    }
    if let Some(rest) = word.strip_prefix("int") {
        return bits(rest).map(ElementaryType::Int);
    }
    if let Some(rest) = word.strip_prefix("bytes") {
        if rest.starts_with('0') {
            return None;
        }
        let n: u8 = rest.parse().ok()?;
        return (1..=32).contains(&n).then_some(ElementaryType::FixedBytes(n));
    }
    None
}

struct Parser<'a> {
    src: &'a SourceFile,
    toks: Vec<Token>,
    pos: usize,
    /// Inside a specification: `old`/`__old__` calls become `Old` nodes.
    spec: bool,
}

impl<'a> Parser<'a> {
    fn new(src: &'a SourceFile, spec: bool) -> PResult<Self> {
        Ok(Parser {
            src,
            toks: tokenize(src)?,
            pos: 0,
            spec,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Token {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i]
    }

    fn start(&self) -> usize {
        self.peek().span.start
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.toks[self.pos - 1].span.end
        }
    }

    fn span_from(&self, start: usize) -> Span {
        Span::new(start, self.prev_end().max(start))
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if !matches!(t.kind, TokenKind::Eof) {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Punct(q) if *q == p)
    }

    fn is_punct_at(&self, n: usize, p: &str) -> bool {
        matches!(&self.peek_at(n).kind, TokenKind::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Word(x) if x == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, span: Span, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::error(self.src, codes::SYNTAX, span, msg)
    }

    fn unsupported(&self, span: Span, what: &str) -> Diagnostic {
        Diagnostic::error(self.src, codes::UNSUPPORTED, span, format!("{what} is not supported"))
    }

    fn expected(&self, what: &str) -> Diagnostic {
        let t = self.peek();
        self.error(t.span, format!("expected {what}, found {}", t.describe()))
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.is_punct(p) {
            Ok(self.bump().span)
        } else {
            Err(self.expected(&format!("`{p}`")))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<Span> {
        if self.is_word(w) {
            Ok(self.bump().span)
        } else {
            Err(self.expected(&format!("`{w}`")))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Ident> {
        match &self.peek().kind {
            TokenKind::Word(w) if !RESERVED.contains(&w.as_str()) => {
                let t = self.bump();
                let TokenKind::Word(name) = t.kind else { unreachable!() };
                Ok(Ident { name, span: t.span })
            }
            _ => Err(self.expected(what)),
        }
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Eof)
    }

    // -----------------------------------------------------------------------
    // Source units
    // -----------------------------------------------------------------------

    fn source_unit(&mut self) -> PResult<SourceUnit> {
        let start = self.start();
        let mut pragmas = Vec::new();
        let mut contracts = Vec::new();
        while !self.at_eof() {
            let t = self.peek().clone();
            match &t.kind {
                TokenKind::Word(w) if w == "pragma" => {
                    self.bump();
                    let body_start = self.start();
                    while !self.is_punct(";") {
                        if self.at_eof() {
                            return Err(self.expected("`;`"));
                        }
                        self.bump();
                    }
                    let end = self.prev_end().max(body_start);
                    pragmas.push(self.src.text()[body_start..end].to_string());
                    self.bump();
                }
                TokenKind::Word(w) if w == "contract" || w == "abstract" => {
                    contracts.push(self.contract()?);
                }
                TokenKind::Word(w) if matches!(w.as_str(), "library" | "interface" | "import" | "using" | "enum") => {
                    return Err(self.unsupported(t.span, &format!("`{w}`")));
                }
                _ => return Err(self.expected("`contract` or `pragma`")),
            }
        }
        Ok(SourceUnit {
            pragmas,
            contracts,
            span: Span::new(start.min(self.prev_end()), self.prev_end()),
        })
    }

    fn contract(&mut self) -> PResult<ContractDef> {
        let start = self.start();
        let is_abstract = self.eat_word("abstract");
        self.expect_word("contract")?;
        let name = self.ident("contract name")?;
        let mut bases = Vec::new();
        if self.eat_word("is") {
            loop {
                bases.push(self.ident("base contract name")?);
                if self.is_punct("(") {
                    return Err(self.unsupported(self.peek().span, "base constructor arguments"));
                }
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct("{")?;
        let mut c = ContractDef {
            name,
            is_abstract,
            bases,
            structs: Vec::new(),
            events: Vec::new(),
            state_vars: Vec::new(),
            modifiers: Vec::new(),
            functions: Vec::new(),
            span: Span::default(),
        };
        while !self.eat_punct("}") {
            if self.at_eof() {
                return Err(self.expected("`}`"));
            }
            self.member(&mut c)?;
        }
        c.span = self.span_from(start);
        Ok(c)
    }

    fn member(&mut self, c: &mut ContractDef) -> PResult<()> {
        let t = self.peek().clone();
        let TokenKind::Word(w) = &t.kind else {
            return Err(self.expected("contract member"));
        };
        match w.as_str() {
            "struct" => c.structs.push(self.struct_def()?),
            "event" => c.events.push(self.event_def()?),
            "modifier" => c.modifiers.push(self.modifier_def()?),
            "function" | "constructor" | "receive" | "fallback" => c.functions.push(self.function_def()?),
            "using" | "enum" | "error" | "type" => return Err(self.unsupported(t.span, &format!("`{w}` declaration"))),
            _ => c.state_vars.push(self.state_var()?),
        }
        Ok(())
    }

    fn struct_def(&mut self) -> PResult<StructDef> {
        let start = self.start();
        self.expect_word("struct")?;
        let name = self.ident("struct name")?;
        self.expect_punct("{")?;
        let mut fields = Vec::new();
        while !self.eat_punct("}") {
            let ty = self.type_name()?;
            let fname = self.ident("field name")?;
            self.expect_punct(";")?;
            fields.push((ty, fname));
        }
        Ok(StructDef {
            name,
            fields,
            span: self.span_from(start),
        })
    }

    fn event_def(&mut self) -> PResult<EventDef> {
        let start = self.start();
        self.expect_word("event")?;
        let name = self.ident("event name")?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.eat_punct(")") {
            loop {
                let pstart = self.start();
                let ty = self.type_name()?;
                self.eat_word("indexed");
                let pname = if matches!(self.peek().kind, TokenKind::Word(_)) {
                    Some(self.ident("parameter name")?)
                } else {
                    None
                };
                params.push(Param {
                    ty,
                    location: None,
                    name: pname,
                    span: self.span_from(pstart),
                });
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        self.eat_word("anonymous");
        self.expect_punct(";")?;
        Ok(EventDef {
            name,
            params,
            span: self.span_from(start),
        })
    }

    fn modifier_def(&mut self) -> PResult<ModifierDef> {
        let start = self.start();
        self.expect_word("modifier")?;
        let name = self.ident("modifier name")?;
        let params = if self.is_punct("(") {
            self.param_list()?
        } else {
            Vec::new()
        };
        let mut is_virtual = false;
        let mut is_override = false;
        loop {
            if self.eat_word("virtual") {
                is_virtual = true;
            } else if self.is_word("override") {
                self.override_spec()?;
                is_override = true;
            } else {
                break;
            }
        }
        let body = self.block()?;
        Ok(ModifierDef {
            name,
            params,
            is_virtual,
            is_override,
            body,
            span: self.span_from(start),
        })
    }

    fn override_spec(&mut self) -> PResult<()> {
        self.expect_word("override")?;
        if self.eat_punct("(") {
            loop {
                self.ident("contract name")?;
                if self.eat_punct(")") {
                    break;
                }
                self.expect_punct(",")?;
            }
        }
        Ok(())
    }

    fn function_def(&mut self) -> PResult<FunctionDef> {
        let start = self.start();
        let head = self.bump();
        let TokenKind::Word(kw) = &head.kind else {
            unreachable!()
        };
        let (kind, name) = match kw.as_str() {
            "function" => (FunctionKind::Function, self.ident("function name")?),
            "constructor" => (
                FunctionKind::Constructor,
                Ident {
                    name: "constructor".into(),
                    span: head.span,
                },
            ),
            "receive" => (
                FunctionKind::Receive,
                Ident {
                    name: "receive".into(),
                    span: head.span,
                },
            ),
            _ => (
                FunctionKind::Fallback,
                Ident {
                    name: "fallback".into(),
                    span: head.span,
                },
            ),
        };
        let params = self.param_list()?;
        let mut f = FunctionDef {
            kind,
            name,
            params,
            returns: Vec::new(),
            visibility: None,
            mutability: None,
            is_virtual: false,
            is_override: false,
            modifiers: Vec::new(),
            body: None,
            span: Span::default(),
        };
        loop {
            let t = self.peek().clone();
            let TokenKind::Word(w) = &t.kind else { break };
            match w.as_str() {
                "public" | "external" | "internal" | "private" => {
                    if f.visibility.is_some() {
                        return Err(self.error(t.span, "visibility specified twice"));
                    }
                    f.visibility = Some(match w.as_str() {
                        "public" => Visibility::Public,
                        "external" => Visibility::External,
                        "internal" => Visibility::Internal,
                        _ => Visibility::Private,
                    });
                    self.bump();
                }
                "pure" | "view" | "payable" => {
                    if f.mutability.is_some() {
                        return Err(self.error(t.span, "state mutability specified twice"));
                    }
                    f.mutability = Some(match w.as_str() {
                        "pure" => Mutability::Pure,
                        "view" => Mutability::View,
                        _ => Mutability::Payable,
                    });
                    self.bump();
                }
                "virtual" => {
                    self.bump();
                    f.is_virtual = true;
                }
                "override" => {
                    self.override_spec()?;
                    f.is_override = true;
                }
                "returns" => {
                    self.bump();
                    f.returns = self.param_list()?;
                }
                _ => {
                    let mstart = self.start();
                    let mname = self.ident("modifier name")?;
                    let args = if self.is_punct("(") {
                        Some(self.call_args()?)
                    } else {
                        None
                    };
                    f.modifiers.push(ModifierInvocation {
                        name: mname,
                        args,
                        span: self.span_from(mstart),
                    });
                }
            }
        }
        if !self.eat_punct(";") {
            f.body = Some(self.block()?);
        }
        f.span = self.span_from(start);
        Ok(f)
    }

    fn param_list(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        loop {
            let start = self.start();
            let ty = self.type_name()?;
            let location = self.data_location();
            let name = if matches!(&self.peek().kind, TokenKind::Word(w) if !RESERVED.contains(&w.as_str())) {
                Some(self.ident("parameter name")?)
            } else {
                None
            };
            params.push(Param {
                ty,
                location,
                name,
                span: self.span_from(start),
            });
            if self.eat_punct(")") {
                return Ok(params);
            }
            self.expect_punct(",")?;
        }
    }

    fn data_location(&mut self) -> Option<DataLocation> {
        let loc = match &self.peek().kind {
            TokenKind::Word(w) if w == "memory" => DataLocation::Memory,
            TokenKind::Word(w) if w == "storage" => DataLocation::Storage,
            TokenKind::Word(w) if w == "calldata" => DataLocation::Calldata,
            _ => return None,
        };
        self.bump();
        Some(loc)
    }

    fn state_var(&mut self) -> PResult<StateVarDef> {
        let start = self.start();
        let ty = self.type_name()?;
        let mut visibility = None;
        let mut constant = false;
        let mut immutable = false;
        loop {
            let t = self.peek().clone();
            match &t.kind {
                TokenKind::Word(w) if matches!(w.as_str(), "public" | "private" | "internal") => {
                    if visibility.is_some() {
                        return Err(self.error(t.span, "visibility specified twice"));
                    }
                    visibility = Some(match w.as_str() {
                        "public" => Visibility::Public,
                        "private" => Visibility::Private,
                        _ => Visibility::Internal,
                    });
                    self.bump();
                }
                TokenKind::Word(w) if w == "constant" => {
                    constant = true;
                    self.bump();
                }
                TokenKind::Word(w) if w == "immutable" => {
                    immutable = true;
                    self.bump();
                }
                TokenKind::Word(w) if w == "override" => {
                    self.override_spec()?;
                }
                _ => break,
            }
        }
        let name = self.ident("state variable name")?;
        let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
        self.expect_punct(";")?;
        Ok(StateVarDef {
            ty,
            name,
            visibility,
            constant,
            immutable,
            init,
            span: self.span_from(start),
        })
    }

    // -----------------------------------------------------------------------
    // Types
    // -----------------------------------------------------------------------

    fn type_name(&mut self) -> PResult<TypeName> {
        let start = self.start();
        let t = self.peek().clone();
        let base = match &t.kind {
            TokenKind::Word(w) if w == "mapping" => {
                self.bump();
                self.expect_punct("(")?;
                let key = self.type_name()?;
                if matches!(&self.peek().kind, TokenKind::Word(_)) {
                    self.ident("key name")?;
                }
                self.expect_punct("=>")?;
                let value = self.type_name()?;
                if matches!(&self.peek().kind, TokenKind::Word(_)) {
                    self.ident("value name")?;
                }
                self.expect_punct(")")?;
                TypeName {
                    kind: TypeNameKind::Mapping(Box::new(key), Box::new(value)),
                    span: self.span_from(start),
                }
            }
            TokenKind::Word(w) => {
                if let Some(mut e) = elementary_type(w) {
                    self.bump();
                    if matches!(e, ElementaryType::Address { .. }) && self.eat_word("payable") {
                        e = ElementaryType::Address { payable: true };
                    }
                    TypeName {
                        kind: TypeNameKind::Elementary(e),
                        span: self.span_from(start),
                    }
                } else if RESERVED.contains(&w.as_str()) || w.starts_with('$') {
                    return Err(self.expected("type name"));
                } else {
                    self.bump();
                    if self.is_punct(".") {
                        return Err(self.unsupported(self.peek().span, "qualified type name"));
                    }
                    TypeName {
                        kind: TypeNameKind::User(w.clone()),
                        span: t.span,
                    }
                }
            }
            _ => return Err(self.expected("type name")),
        };
        let mut ty = base;
        while self.is_punct("[") {
            if !self.is_punct_at(1, "]") {
                let s = self.peek().span;
                if matches!(self.peek_at(1).kind, TokenKind::Number(_)) && self.is_punct_at(2, "]") {
                    return Err(self.unsupported(s.to(self.peek_at(2).span), "fixed-size array"));
                }
                return Err(self.error(self.peek_at(1).span, "expected `]`"));
            }
            self.bump();
            self.bump();
            ty = TypeName {
                kind: TypeNameKind::Array(Box::new(ty)),
                span: self.span_from(start),
            };
        }
        Ok(ty)
    }

    /// Tentatively read `Type [location] name`; restores the position and
    /// returns `None` when the tokens do not form a declaration head.
    fn try_decl_head(&mut self) -> Option<LocalDecl> {
        let save = self.pos;
        let start = self.start();
        if let TokenKind::Word(w) = &self.peek().kind {
            if RESERVED.contains(&w.as_str()) && w != "mapping" {
                return None;
            }
        } else {
            return None;
        }
        let Ok(ty) = self.type_name() else {
            self.pos = save;
            return None;
        };
        let location = self.data_location();
        match &self.peek().kind {
            TokenKind::Word(w) if !RESERVED.contains(&w.as_str()) => {
                let name = self.ident("variable name").ok()?;
                Some(LocalDecl {
                    ty,
                    location,
                    name,
                    span: self.span_from(start),
                })
            }
            _ => {
                self.pos = save;
                None
            }
        }
    }

    // -----------------------------------------------------------------------
    // Statements
    // -----------------------------------------------------------------------

    fn block(&mut self) -> PResult<Block> {
        let start = self.start();
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.eat_punct("}") {
            if self.at_eof() {
                return Err(self.expected("`}`"));
            }
            stmts.push(self.stmt()?);
        }
        Ok(Block {
            stmts,
            span: self.span_from(start),
        })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        let t = self.peek().clone();
        let kind = match &t.kind {
            TokenKind::Punct("{") => StmtKind::Block(self.block()?),
            TokenKind::Word(w) => match w.as_str() {
                "if" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    let then = Box::new(self.stmt()?);
                    let els = if self.eat_word("else") {
                        Some(Box::new(self.stmt()?))
                    } else {
                        None
                    };
                    StmtKind::If { cond, then, els }
                }
                "while" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let cond = self.expr()?;
                    self.expect_punct(")")?;
                    let body = Box::new(self.stmt()?);
                    StmtKind::While { cond, body }
                }
                "for" => {
                    self.bump();
                    self.expect_punct("(")?;
                    let init = if self.eat_punct(";") {
                        None
                    } else {
                        Some(Box::new(self.simple_stmt()?))
                    };
                    let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
                    self.expect_punct(";")?;
                    let update = if self.is_punct(")") { None } else { Some(self.expr()?) };
                    self.expect_punct(")")?;
                    let body = Box::new(self.stmt()?);
                    StmtKind::For {
                        init,
                        cond,
                        update,
                        body,
                    }
                }
                "return" => {
                    self.bump();
                    let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
                    self.expect_punct(";")?;
                    StmtKind::Return(value)
                }
                "emit" => {
                    self.bump();
                    let e = self.expr()?;
                    if !matches!(e.kind, ExprKind::Call { .. }) {
                        return Err(self.error(e.span, "expected event invocation after `emit`"));
                    }
                    self.expect_punct(";")?;
                    StmtKind::Emit(e)
                }
                "_" if self.is_punct_at(1, ";") => {
                    self.bump();
                    self.bump();
                    StmtKind::Placeholder
                }
                "unchecked" | "assembly" | "try" | "do" | "break" | "continue" | "throw" => {
                    return Err(self.unsupported(t.span, &format!("`{w}`")));
                }
                "revert" if matches!(self.peek_at(1).kind, TokenKind::Word(_)) => {
                    return Err(self.unsupported(t.span, "custom error revert"));
                }
                _ => return self.simple_stmt(),
            },
            _ => return self.simple_stmt(),
        };
        Ok(Stmt {
            kind,
            span: self.span_from(start),
        })
    }

    /// Declaration or expression statement, terminated by `;`.
    fn simple_stmt(&mut self) -> PResult<Stmt> {
        let start = self.start();
        if self.is_punct("(") {
            if let Some(decls) = self.try_tuple_decl() {
                self.expect_punct("=")?;
                let init = self.expr()?;
                self.expect_punct(";")?;
                return Ok(Stmt {
                    kind: StmtKind::VarDecl {
                        decls,
                        init: Some(init),
                        tuple: true,
                    },
                    span: self.span_from(start),
                });
            }
        }
        if let Some(decl) = self.try_decl_head() {
            let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
            self.expect_punct(";")?;
            return Ok(Stmt {
                kind: StmtKind::VarDecl {
                    decls: vec![Some(decl)],
                    init,
                    tuple: false,
                },
                span: self.span_from(start),
            });
        }
        let e = self.expr()?;
        self.expect_punct(";")?;
        Ok(Stmt {
            kind: StmtKind::Expr(e),
            span: self.span_from(start),
        })
    }

    /// `(T a, , T b)` followed by `=`. Restores the position on mismatch.
    fn try_tuple_decl(&mut self) -> Option<Vec<Option<LocalDecl>>> {
        let save = self.pos;
        self.bump();
        let mut decls = Vec::new();
        let mut any = false;
        loop {
            if self.is_punct(",") {
                self.bump();
                decls.push(None);
                continue;
            }
            if self.is_punct(")") {
                self.bump();
                break;
            }
            match self.try_decl_head() {
                Some(d) => {
                    any = true;
                    decls.push(Some(d));
                }
                None => {
                    self.pos = save;
                    return None;
                }
            }
            if self.eat_punct(")") {
                break;
            }
            if !self.eat_punct(",") {
                self.pos = save;
                return None;
            }
            if self.is_punct(")") {
                decls.push(None);
            }
        }
        if !any || !self.is_punct("=") {
            self.pos = save;
            return None;
        }
        Some(decls)
    }

    // -----------------------------------------------------------------------
    // Expressions
    // -----------------------------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        let start = self.start();
        let lhs = self.ternary()?;
        let op = match &self.peek().kind {
            TokenKind::Punct("=") => AssignOp::Assign,
            TokenKind::Punct("+=") => AssignOp::Add,
            TokenKind::Punct("-=") => AssignOp::Sub,
            TokenKind::Punct("*=") => AssignOp::Mul,
            TokenKind::Punct("/=") => AssignOp::Div,
            TokenKind::Punct("%=") => AssignOp::Mod,
            TokenKind::Punct(p @ ("|=" | "&=" | "^=" | "<<=" | ">>=" | "**=")) => {
                let p = *p;
                return Err(self.unsupported(self.peek().span, &format!("operator `{p}`")));
            }
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Expr::new(
            ExprKind::Assign {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            self.span_from(start),
        ))
    }

    fn ternary(&mut self) -> PResult<Expr> {
        let start = self.start();
        let cond = self.binary(1)?;
        if !self.eat_punct("?") {
            return Ok(cond);
        }
        let then = self.expr()?;
        self.expect_punct(":")?;
        let els = self.ternary()?;
        Ok(Expr::new(
            ExprKind::Ternary {
                cond: Box::new(cond),
                then: Box::new(then),
                els: Box::new(els),
            },
            self.span_from(start),
        ))
    }

    fn binop(&self) -> PResult<Option<BinOp>> {
        let t = self.peek();
        let TokenKind::Punct(p) = &t.kind else { return Ok(None) };
        Ok(Some(match *p {
            "||" => BinOp::Or,
            "&&" => BinOp::And,
            "&" => BinOp::Amp,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Mod,
            "**" => BinOp::Pow,
            "|" | "^" | "<<" | ">>" => return Err(self.unsupported(t.span, &format!("bitwise operator `{p}`"))),
            _ => return Ok(None),
        }))
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let start = self.start();
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop()? {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.bump();
            let next = if op == BinOp::Pow { prec } else { prec + 1 };
            let rhs = self.binary(next)?;
            lhs = Expr::new(
                ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                self.span_from(start),
            );
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.start();
        let t = self.peek().clone();
        let op = match &t.kind {
            TokenKind::Punct("!") => Some(UnOp::Not),
            TokenKind::Punct("-") => Some(UnOp::Neg),
            TokenKind::Punct("++") => Some(UnOp::PreInc),
            TokenKind::Punct("--") => Some(UnOp::PreDec),
            TokenKind::Punct("~") => {
                return Err(self.unsupported(t.span, "bitwise operator `~`"));
            }
            TokenKind::Punct("+") => {
                return Err(self.unsupported(t.span, "unary `+`"));
            }
            TokenKind::Word(w) if w == "delete" => Some(UnOp::Delete),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let operand = self.unary()?;
            return Ok(Expr::new(
                ExprKind::Unary {
                    op,
                    operand: Box::new(operand),
                },
                self.span_from(start),
            ));
        }
        self.postfix()
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if self.eat_punct(")") {
            return Ok(args);
        }
        if self.is_punct("{") {
            return Err(self.unsupported(self.peek().span, "named call arguments"));
        }
        loop {
            args.push(self.expr()?);
            if self.eat_punct(")") {
                return Ok(args);
            }
            self.expect_punct(",")?;
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let start = self.start();
        let mut e = self.primary()?;
        loop {
            if self.is_punct("[") {
                self.bump();
                if self.is_punct("]") || self.is_punct(":") {
                    return Err(self.unsupported(self.peek().span, "index range or empty index"));
                }
                let index = self.expr()?;
                self.expect_punct("]")?;
                e = Expr::new(
                    ExprKind::Index {
                        base: Box::new(e),
                        index: Box::new(index),
                    },
                    self.span_from(start),
                );
            } else if self.is_punct(".") {
                self.bump();
                let member = self.member_name()?;
                e = Expr::new(
                    ExprKind::Member {
                        base: Box::new(e),
                        member,
                    },
                    self.span_from(start),
                );
            } else if self.is_punct("{")
                && matches!(self.peek_at(1).kind, TokenKind::Word(_))
                && self.is_punct_at(2, ":")
            {
                self.bump();
                let mut options = Vec::new();
                loop {
                    let key = self.ident("call option name")?;
                    self.expect_punct(":")?;
                    let value = self.expr()?;
                    options.push((key, value));
                    if self.eat_punct("}") {
                        break;
                    }
                    self.expect_punct(",")?;
                }
                if !self.is_punct("(") {
                    return Err(self.expected("`(`"));
                }
                let args = self.call_args()?;
                e = Expr::new(
                    ExprKind::Call {
                        callee: Box::new(e),
                        options,
                        args,
                    },
                    self.span_from(start),
                );
            } else if self.is_punct("(") {
                if self.spec {
                    if let ExprKind::Ident(name) = &e.kind {
                        if name == "old" || name == "__old__" {
                            let args = self.call_args()?;
                            if args.len() != 1 {
                                return Err(
                                    self.error(self.span_from(start), format!("`{name}` takes exactly one argument"))
                                );
                            }
                            let inner = args.into_iter().next().unwrap();
                            e = Expr::new(ExprKind::Old(Box::new(inner)), self.span_from(start));
                            continue;
                        }
                    }
                }
                let args = self.call_args()?;
                e = Expr::new(
                    ExprKind::Call {
                        callee: Box::new(e),
                        options: Vec::new(),
                        args,
                    },
                    self.span_from(start),
                );
            } else if self.is_punct("++") || self.is_punct("--") {
                let op = if self.is_punct("++") {
                    UnOp::PostInc
                } else {
                    UnOp::PostDec
                };
                self.bump();
                e = Expr::new(
                    ExprKind::Unary {
                        op,
                        operand: Box::new(e),
                    },
                    self.span_from(start),
                );
            } else {
                return Ok(e);
            }
        }
    }

    fn member_name(&mut self) -> PResult<Ident> {
        // Member names may coincide with reserved words (`x.length`, `abi.decode`).
        match &self.peek().kind {
            TokenKind::Word(_) => {
                let t = self.bump();
                let TokenKind::Word(name) = t.kind else { unreachable!() };
                Ok(Ident { name, span: t.span })
            }
            _ => Err(self.expected("member name")),
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.start();
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Number(n) => {
                self.bump();
                let mut value =
                    parse_decimal(n).ok_or_else(|| self.error(t.span, format!("malformed number `{n}`")))?;
                if let TokenKind::Word(w) = &self.peek().kind {
                    if let Some((_, mult)) = UNIT_WORDS.iter().find(|(u, _)| u == w) {
                        value *= BigUint::from(*mult);
                        self.bump();
                    }
                }
                Ok(Expr::new(ExprKind::Number(value), self.span_from(start)))
            }
            TokenKind::Hex(h) => {
                self.bump();
                Ok(Expr::new(ExprKind::Hex(h.clone()), t.span))
            }
            TokenKind::Str(s) => {
                self.bump();
                Ok(Expr::new(ExprKind::Str(s.clone()), t.span))
            }
            TokenKind::Punct("(") => {
                self.bump();
                let mut items: Vec<Option<Expr>> = Vec::new();
                let mut saw_comma = false;
                loop {
                    if self.is_punct(",") {
                        self.bump();
                        items.push(None);
                        saw_comma = true;
                        continue;
                    }
                    if self.is_punct(")") {
                        if saw_comma {
                            items.push(None);
                        }
                        self.bump();
                        break;
                    }
                    items.push(Some(self.expr()?));
                    if self.eat_punct(")") {
                        break;
                    }
                    self.expect_punct(",")?;
                    saw_comma = true;
                }
                if items.len() == 1 && !saw_comma {
                    if let Some(inner) = items.pop().flatten() {
                        return Ok(inner);
                    }
                }
                if items.is_empty() {
                    return Err(self.error(self.span_from(start), "empty parentheses"));
                }
                Ok(Expr::new(ExprKind::Tuple(items), self.span_from(start)))
            }
            TokenKind::Punct("[") => Err(self.unsupported(t.span, "inline array literal")),
            TokenKind::Word(w) => match w.as_str() {
                "true" | "false" => {
                    self.bump();
                    Ok(Expr::new(ExprKind::Bool(w == "true"), t.span))
                }
                "new" => {
                    self.bump();
                    let ty = self.type_name()?;
                    if !self.is_punct("(") {
                        return Err(self.expected("`(`"));
                    }
                    Ok(Expr::new(ExprKind::New(ty), self.span_from(start)))
                }
                "payable" => {
                    self.bump();
                    Ok(Expr::new(
                        ExprKind::TypeExpr(TypeName {
                            kind: TypeNameKind::Elementary(ElementaryType::Address { payable: true }),
                            span: t.span,
                        }),
                        t.span,
                    ))
                }
                "type" if self.is_punct_at(1, "(") => Err(self.unsupported(t.span, "`type(...)`")),
                "function" | "assembly" | "unchecked" => Err(self.unsupported(t.span, &format!("`{w}` expression"))),
                _ => {
                    if elementary_type(w).is_some() {
                        let ty = self.type_name()?;
                        let span = self.span_from(start);
                        return Ok(Expr::new(ExprKind::TypeExpr(ty), span));
                    }
                    if RESERVED.contains(&w.as_str()) {
                        return Err(self.expected("expression"));
                    }
                    self.bump();
                    Ok(Expr::new(ExprKind::Ident(w.clone()), t.span))
                }
            },
            _ => Err(self.expected("expression")),
        }
    }

    // -----------------------------------------------------------------------
    // Specifications
    // -----------------------------------------------------------------------

    fn spec_units(&mut self) -> PResult<Vec<SpecUnit>> {
        let mut units = Vec::new();
        while !self.at_eof() {
            let t = self.peek().clone();
            match &t.kind {
                TokenKind::Word(w) if w == "invariant" => units.push(self.invariant()?),
                TokenKind::Word(w) if w == "function" => units.push(self.function_spec()?),
                TokenKind::Word(w) if w == "rule" => units.push(self.rule()?),
                TokenKind::Word(w) if w == "pragma" => {
                    while !self.eat_punct(";") {
                        if self.at_eof() {
                            return Err(self.expected("`;`"));
                        }
                        self.bump();
                    }
                }
                _ => return Err(self.expected("`invariant`, `function` or `rule`")),
            }
        }
        Ok(units)
    }

    /// Statements of an invariant or condition block; anything other than a
    /// side-effect-free expression statement is a statement-form error.
    fn expr_block(&mut self, what: &str) -> PResult<Vec<Expr>> {
        let block = self.block()?;
        let mut exprs = Vec::new();
        for s in block.stmts {
            match s.kind {
                StmtKind::Expr(e) if !has_side_effect_root(&e) => exprs.push(e),
                _ => {
                    return Err(Diagnostic::error(
                        self.src,
                        codes::STATEMENT_FORM,
                        s.span,
                        format!("only expression statements are permitted in {what}"),
                    ))
                }
            }
        }
        Ok(exprs)
    }

    fn invariant(&mut self) -> PResult<SpecUnit> {
        let start = self.start();
        self.expect_word("invariant")?;
        let name = self.ident("invariant name")?;
        if self.is_punct("(") {
            let params = self.param_list()?;
            if !params.is_empty() {
                return Err(self.unsupported(self.span_from(start), "parameterized invariant"));
            }
        }
        let exprs = self.expr_block("an invariant")?;
        Ok(SpecUnit::Invariant(InvariantDecl {
            name,
            exprs,
            span: self.span_from(start),
        }))
    }

    fn function_spec(&mut self) -> PResult<SpecUnit> {
        let start = self.start();
        self.expect_word("function")?;
        let func_name = self.ident("function name")?;
        let params = if self.is_punct("(") {
            Some(self.param_list()?)
        } else {
            None
        };
        let wrapped = self.eat_punct("{");
        let mut pre = Vec::new();
        let mut post = Vec::new();
        let mut seen_pre = false;
        let mut seen_post = false;
        loop {
            if self.is_word("precondition") && !seen_pre && !seen_post {
                self.bump();
                pre = self.expr_block("a precondition")?;
                seen_pre = true;
            } else if self.is_word("postcondition") && !seen_post {
                self.bump();
                post = self.expr_block("a postcondition")?;
                seen_post = true;
            } else {
                break;
            }
        }
        if !seen_pre && !seen_post {
            return Err(self.expected("`precondition` or `postcondition`"));
        }
        if wrapped {
            self.expect_punct("}")?;
        }
        Ok(SpecUnit::Function(FunctionSpec {
            func_name,
            params,
            pre,
            post,
            span: self.span_from(start),
        }))
    }

    fn rule(&mut self) -> PResult<SpecUnit> {
        let start = self.start();
        self.expect_word("rule")?;
        let name = self.ident("rule name")?;
        let params = self.param_list()?;
        let body = self.block()?;
        Ok(SpecUnit::Rule(RuleDecl {
            name,
            params,
            body,
            span: self.span_from(start),
        }))
    }
}

fn has_side_effect_root(e: &Expr) -> bool {
    matches!(
        &e.kind,
        ExprKind::Assign { .. }
            | ExprKind::Unary {
                op: UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec | UnOp::Delete,
                ..
            }
    )
}

fn parse_decimal(text: &str) -> Option<BigUint> {
    match text.find(['e', 'E']) {
        Some(i) => {
            let mantissa = BigUint::from_str_radix(&text[..i], 10).ok()?;
            let exp: u32 = text[i + 1..].parse().ok()?;
            if exp > 1000 {
                return None;
            }
            Some(mantissa * BigUint::from(10u32).pow(exp))
        }
        None => BigUint::from_str_radix(text, 10).ok(),
    }
}

pub fn parse_source_unit(src: &SourceFile) -> Result<SourceUnit, Diagnostic> {
    Parser::new(src, false)?.source_unit()
}

pub fn parse_spec_units(src: &SourceFile) -> Result<Vec<SpecUnit>, Diagnostic> {
    Parser::new(src, true)?.spec_units()
}

/// Parse a lone expression in specification mode (used by tests and tools).
pub fn parse_spec_expr(src: &SourceFile) -> Result<Expr, Diagnostic> {
    let mut p = Parser::new(src, true)?;
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.expected("end of input"));
    }
    Ok(e)
}
