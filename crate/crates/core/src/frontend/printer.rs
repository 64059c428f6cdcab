//! Pretty-printer producing text that reparses to the same tree.

use super::ast::*;
use std::fmt::Write;

const INDENT: &str = "    ";

pub fn print_source_unit(unit: &SourceUnit) -> String {
    let mut p = Printer::default();
    for pragma in &unit.pragmas {
        p.line(&format!("pragma {pragma};"));
    }
    for (i, c) in unit.contracts.iter().enumerate() {
        if i > 0 || !unit.pragmas.is_empty() {
            p.out.push('\n');
        }
        p.contract(c);
    }
    p.out
}

pub fn print_spec_units(units: &[SpecUnit]) -> String {
    let mut p = Printer::default();
    for (i, u) in units.iter().enumerate() {
        if i > 0 {
            p.out.push('\n');
        }
        p.spec_unit(u);
    }
    p.out
}

pub fn print_spec_unit(unit: &SpecUnit) -> String {
    print_spec_units(std::slice::from_ref(unit))
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e, 0);
    s
}

pub fn print_type(t: &TypeName) -> String {
    match &t.kind {
        TypeNameKind::Elementary(e) => elementary_str(e),
        TypeNameKind::Mapping(k, v) => format!("mapping({} => {})", print_type(k), print_type(v)),
        TypeNameKind::Array(inner) => format!("{}[]", print_type(inner)),
        TypeNameKind::User(n) => n.clone(),
    }
}

pub fn elementary_str(e: &ElementaryType) -> String {
    match e {
        ElementaryType::Uint(n) => format!("uint{n}"),
        ElementaryType::Int(n) => format!("int{n}"),
        ElementaryType::Bool => "bool".into(),
        ElementaryType::Address { payable: false } => "address".into(),
        ElementaryType::Address { payable: true } => "address payable".into(),
        ElementaryType::FixedBytes(n) => format!("bytes{n}"),
        ElementaryType::String => "string".into(),
        ElementaryType::Bytes => "bytes".into(),
    }
}

fn param_str(p: &Param) -> String {
    let mut s = print_type(&p.ty);
    if let Some(loc) = p.location {
        s.push(' ');
        s.push_str(loc.as_str());
    }
    if let Some(n) = &p.name {
        s.push(' ');
        s.push_str(&n.name);
    }
    s
}

fn params_str(ps: &[Param]) -> String {
    let items: Vec<String> = ps.iter().map(param_str).collect();
    format!("({})", items.join(", "))
}

fn local_decl_str(d: &LocalDecl) -> String {
    let mut s = print_type(&d.ty);
    if let Some(loc) = d.location {
        s.push(' ');
        s.push_str(loc.as_str());
    }
    s.push(' ');
    s.push_str(&d.name.name);
    s
}

fn expr_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Assign { .. } => 0,
        ExprKind::Ternary { .. } => 1,
        ExprKind::Binary { op, .. } => 1 + op.precedence(),
        ExprKind::Unary {
            op: UnOp::PostInc | UnOp::PostDec,
            ..
        } => 30,
        ExprKind::Unary { .. } => 20,
        _ => 30,
    }
}

fn escape_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn expr(out: &mut String, e: &Expr, min: u8) {
    let wrap = expr_prec(e) < min;
    if wrap {
        out.push('(');
    }
    match &e.kind {
        ExprKind::Ident(n) => out.push_str(n),
        ExprKind::Number(n) => {
            let _ = write!(out, "{n}");
        }
        ExprKind::Hex(h) => {
            out.push_str("0x");
            out.push_str(h);
        }
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Str(s) => out.push_str(&escape_str(s)),
        ExprKind::Binary { op, lhs, rhs } => {
            let p = 1 + op.precedence();
            let (lmin, rmin) = if *op == BinOp::Pow { (p + 1, p) } else { (p, p + 1) };
            expr(out, lhs, lmin);
            out.push(' ');
            out.push_str(op.as_str());
            out.push(' ');
            expr(out, rhs, rmin);
        }
        ExprKind::Unary { op, operand } => match op {
            UnOp::PostInc | UnOp::PostDec => {
                expr(out, operand, 30);
                out.push_str(if *op == UnOp::PostInc { "++" } else { "--" });
            }
            _ => {
                let prefix = match op {
                    UnOp::Not => "!",
                    UnOp::Neg => "-",
                    UnOp::PreInc => "++",
                    UnOp::PreDec => "--",
                    UnOp::Delete => "delete ",
                    UnOp::PostInc | UnOp::PostDec => unreachable!(),
                };
                let mut inner = String::new();
                expr(&mut inner, operand, 20);
                out.push_str(prefix);
                let last = prefix.chars().last().unwrap();
                if (last == '-' || last == '+') && inner.starts_with(last) {
                    out.push(' ');
                }
                out.push_str(&inner);
            }
        },
        ExprKind::Assign { op, lhs, rhs } => {
            expr(out, lhs, 1);
            out.push(' ');
            out.push_str(op.as_str());
            out.push(' ');
            expr(out, rhs, 0);
        }
        ExprKind::Ternary { cond, then, els } => {
            expr(out, cond, 2);
            out.push_str(" ? ");
            expr(out, then, 0);
            out.push_str(" : ");
            expr(out, els, 1);
        }
        ExprKind::Index { base, index } => {
            expr(out, base, 30);
            out.push('[');
            expr(out, index, 0);
            out.push(']');
        }
        ExprKind::Member { base, member } => {
            expr(out, base, 30);
            out.push('.');
            out.push_str(&member.name);
        }
        ExprKind::Call { callee, options, args } => {
            expr(out, callee, 30);
            if !options.is_empty() {
                out.push('{');
                for (i, (k, v)) in options.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&k.name);
                    out.push_str(": ");
                    expr(out, v, 0);
                }
                out.push('}');
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(out, a, 0);
            }
            out.push(')');
        }
        ExprKind::New(t) => {
            out.push_str("new ");
            out.push_str(&print_type(t));
        }
        ExprKind::TypeExpr(t) => match &t.kind {
            TypeNameKind::Elementary(ElementaryType::Address { payable: true }) => out.push_str("payable"),
            _ => out.push_str(&print_type(t)),
        },
        ExprKind::Tuple(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                if let Some(x) = item {
                    expr(out, x, 0);
                }
            }
            out.push(')');
        }
        ExprKind::Old(inner) => {
            out.push_str("old(");
            expr(out, inner, 0);
            out.push(')');
        }
    }
    if wrap {
        out.push(')');
    }
}

#[derive(Default)]
struct Printer {
    out: String,
    depth: usize,
}

impl Printer {
    fn line(&mut self, text: &str) {
        for _ in 0..self.depth {
            self.out.push_str(INDENT);
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn contract(&mut self, c: &ContractDef) {
        let mut head = String::new();
        if c.is_abstract {
            head.push_str("abstract ");
        }
        head.push_str("contract ");
        head.push_str(&c.name.name);
        if !c.bases.is_empty() {
            let names: Vec<&str> = c.bases.iter().map(|b| b.name.as_str()).collect();
            head.push_str(" is ");
            head.push_str(&names.join(", "));
        }
        head.push_str(" {");
        self.line(&head);
        self.depth += 1;
        for s in &c.structs {
            self.line(&format!("struct {} {{", s.name.name));
            self.depth += 1;
            for (t, n) in &s.fields {
                self.line(&format!("{} {};", print_type(t), n.name));
            }
            self.depth -= 1;
            self.line("}");
        }
        for e in &c.events {
            let ps: Vec<String> = e.params.iter().map(param_str).collect();
            self.line(&format!("event {}({});", e.name.name, ps.join(", ")));
        }
        for v in &c.state_vars {
            let mut s = print_type(&v.ty);
            if let Some(vis) = v.visibility {
                s.push(' ');
                s.push_str(vis.as_str());
            }
            if v.constant {
                s.push_str(" constant");
            }
            if v.immutable {
                s.push_str(" immutable");
            }
            s.push(' ');
            s.push_str(&v.name.name);
            if let Some(init) = &v.init {
                s.push_str(" = ");
                s.push_str(&print_expr(init));
            }
            s.push(';');
            self.line(&s);
        }
        for m in &c.modifiers {
            let mut s = format!("modifier {}{}", m.name.name, params_str(&m.params));
            if m.is_virtual {
                s.push_str(" virtual");
            }
            if m.is_override {
                s.push_str(" override");
            }
            self.block_with_head(&s, &m.body);
        }
        for f in &c.functions {
            self.function(f);
        }
        self.depth -= 1;
        self.line("}");
    }

    fn function(&mut self, f: &FunctionDef) {
        let mut s = match f.kind {
            FunctionKind::Function => format!("function {}", f.name.name),
            FunctionKind::Constructor => "constructor".to_string(),
            FunctionKind::Receive => "receive".to_string(),
            FunctionKind::Fallback => "fallback".to_string(),
        };
        s.push_str(&params_str(&f.params));
        if let Some(v) = f.visibility {
            s.push(' ');
            s.push_str(v.as_str());
        }
        if let Some(m) = f.mutability {
            s.push(' ');
            s.push_str(m.as_str());
        }
        if f.is_virtual {
            s.push_str(" virtual");
        }
        if f.is_override {
            s.push_str(" override");
        }
        for m in &f.modifiers {
            s.push(' ');
            s.push_str(&m.name.name);
            if let Some(args) = &m.args {
                let a: Vec<String> = args.iter().map(print_expr).collect();
                s.push('(');
                s.push_str(&a.join(", "));
                s.push(')');
            }
        }
        if !f.returns.is_empty() {
            s.push_str(" returns ");
            s.push_str(&params_str(&f.returns));
        }
        match &f.body {
            Some(b) => self.block_with_head(&s, b),
            None => {
                s.push(';');
                self.line(&s);
            }
        }
    }

    fn block_with_head(&mut self, head: &str, b: &Block) {
        self.line(&format!("{head} {{"));
        self.depth += 1;
        for s in &b.stmts {
            self.stmt(s);
        }
        self.depth -= 1;
        self.line("}");
    }

    fn simple_stmt_text(s: &Stmt) -> Option<String> {
        match &s.kind {
            StmtKind::VarDecl { decls, init, tuple } => {
                let mut t = if *tuple {
                    let items: Vec<String> = decls
                        .iter()
                        .map(|d| d.as_ref().map(local_decl_str).unwrap_or_default())
                        .collect();
                    format!("({})", items.join(", "))
                } else {
                    local_decl_str(decls[0].as_ref().expect("plain declaration has a name"))
                };
                if let Some(e) = init {
                    t.push_str(" = ");
                    t.push_str(&print_expr(e));
                }
                t.push(';');
                Some(t)
            }
            StmtKind::Expr(e) => Some(format!("{};", print_expr(e))),
            _ => None,
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        if let Some(t) = Self::simple_stmt_text(s) {
            self.line(&t);
            return;
        }
        match &s.kind {
            StmtKind::Block(b) => self.block_with_head("", b),
            StmtKind::If { cond, then, els } => {
                self.line(&format!("if ({})", print_expr(cond)));
                self.nested(then);
                if let Some(e) = els {
                    self.line("else");
                    self.nested(e);
                }
            }
            StmtKind::While { cond, body } => {
                self.line(&format!("while ({})", print_expr(cond)));
                self.nested(body);
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                let init_s = match init {
                    Some(i) => Self::simple_stmt_text(i).unwrap_or_default(),
                    None => ";".to_string(),
                };
                let cond_s = cond.as_ref().map(print_expr).unwrap_or_default();
                let upd_s = update.as_ref().map(print_expr).unwrap_or_default();
                self.line(&format!("for ({init_s} {cond_s}; {upd_s})"));
                self.nested(body);
            }
            StmtKind::Return(Some(e)) => self.line(&format!("return {};", print_expr(e))),
            StmtKind::Return(None) => self.line("return;"),
            StmtKind::Emit(e) => self.line(&format!("emit {};", print_expr(e))),
            StmtKind::Placeholder => self.line("_;"),
            StmtKind::VarDecl { .. } | StmtKind::Expr(_) => unreachable!(),
        }
    }

    fn nested(&mut self, s: &Stmt) {
        if let StmtKind::Block(b) = &s.kind {
            self.block_with_head("", b);
        } else {
            self.depth += 1;
            self.stmt(s);
            self.depth -= 1;
        }
    }

    fn expr_block(&mut self, head: &str, exprs: &[Expr]) {
        self.line(&format!("{head} {{"));
        self.depth += 1;
        for e in exprs {
            self.line(&format!("{};", print_expr(e)));
        }
        self.depth -= 1;
        self.line("}");
    }

    fn spec_unit(&mut self, u: &SpecUnit) {
        match u {
            SpecUnit::Invariant(i) => self.expr_block(&format!("invariant {}", i.name.name), &i.exprs),
            SpecUnit::Function(f) => {
                let mut head = format!("function {}", f.func_name.name);
                if let Some(ps) = &f.params {
                    head.push_str(&params_str(ps));
                }
                head.push_str(" {");
                self.line(&head);
                self.depth += 1;
                self.expr_block("precondition", &f.pre);
                self.expr_block("postcondition", &f.post);
                self.depth -= 1;
                self.line("}");
            }
            SpecUnit::Rule(r) => {
                let head = format!("rule {}{}", r.name.name, params_str(&r.params));
                self.block_with_head(&head, &r.body);
            }
        }
    }
}
