//! Name and type resolution from syntax trees to the typed IR.
//!
//! A source unit is resolved against one subject contract: its C3
//! linearization decides which implementation every name refers to.

use super::ast::{
    self, BinOp, ContractDef, ElementaryType, Expr, ExprKind, Stmt, StmtKind, TypeName, TypeNameKind, UnOp,
};
use super::diagnostics::{codes, Diagnostic};
use super::span::{SourceFile, Span};
use crate::ir::*;
use crate::types::{encode_bytes, StructInfo, Ty, TyDisplay};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, HashMap};

/// Marker for a reported failure; the diagnostic is already recorded.
#[derive(Debug)]
pub(crate) struct Fail;

type R<T> = Result<T, Fail>;

/// C3 linearization, most derived first. Bases are listed in source order
/// (`is A, B`), where later bases are "more derived".
pub fn linearize(bases: &BTreeMap<String, Vec<String>>, name: &str) -> Result<Vec<String>, String> {
    fn go(
        bases: &BTreeMap<String, Vec<String>>,
        name: &str,
        stack: &mut Vec<String>,
        memo: &mut HashMap<String, Vec<String>>,
    ) -> Result<Vec<String>, String> {
        if let Some(l) = memo.get(name) {
            return Ok(l.clone());
        }
        if stack.iter().any(|s| s == name) {
            return Err(format!("inheritance cycle through `{name}`"));
        }
        let direct = bases.get(name).ok_or_else(|| format!("unknown contract `{name}`"))?;
        stack.push(name.to_string());
        let mut seqs: Vec<Vec<String>> = Vec::new();
        for b in direct.iter().rev() {
            seqs.push(go(bases, b, stack, memo)?);
        }
        seqs.push(direct.iter().rev().cloned().collect());
        stack.pop();
        let mut out = vec![name.to_string()];
        loop {
            seqs.retain(|s| !s.is_empty());
            if seqs.is_empty() {
                break;
            }
            let head = seqs
                .iter()
                .map(|s| s[0].clone())
                .find(|h| !seqs.iter().any(|s| s[1..].contains(h)));
            let Some(head) = head else {
                return Err(format!("linearization of `{name}` is impossible"));
            };
            out.push(head.clone());
            for s in seqs.iter_mut() {
                if s[0] == head {
                    s.remove(0);
                }
            }
        }
        memo.insert(name.to_string(), out.clone());
        Ok(out)
    }
    go(bases, name, &mut Vec::new(), &mut HashMap::new())
}

fn err(src: &SourceFile, code: &str, span: Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(src, code, span, msg)
}

fn elementary_ty(e: &ElementaryType) -> Ty {
    match e {
        ElementaryType::Uint(n) => Ty::Uint(*n),
        ElementaryType::Int(n) => Ty::Int(*n),
        ElementaryType::Bool => Ty::Bool,
        ElementaryType::Address { .. } => Ty::Address,
        ElementaryType::FixedBytes(n) => Ty::FixedBytes(*n),
        ElementaryType::String => Ty::String,
        ElementaryType::Bytes => Ty::Bytes,
    }
}

fn type_of(src: &SourceFile, struct_ids: &HashMap<String, usize>, t: &TypeName) -> Result<Ty, Diagnostic> {
    Ok(match &t.kind {
        TypeNameKind::Elementary(e) => elementary_ty(e),
        TypeNameKind::Mapping(k, v) => {
            let kt = type_of(src, struct_ids, k)?;
            if !kt.is_scalar() {
                return Err(err(
                    src,
                    codes::TYPE_MISMATCH,
                    k.span,
                    "mapping keys must be elementary types",
                ));
            }
            Ty::Mapping(Box::new(kt), Box::new(type_of(src, struct_ids, v)?))
        }
        TypeNameKind::Array(e) => Ty::Array(Box::new(type_of(src, struct_ids, e)?)),
        TypeNameKind::User(n) => match struct_ids.get(n) {
            Some(i) => Ty::Struct(*i),
            None => return Err(err(src, codes::UNDECLARED, t.span, format!("undeclared type `{n}`"))),
        },
    })
}

fn local_kind(ty: &Ty, loc: Option<ast::DataLocation>) -> LocalKind {
    if ty.is_scalar() {
        LocalKind::Value
    } else if matches!(ty, Ty::Mapping(..)) || loc == Some(ast::DataLocation::Storage) {
        LocalKind::Storage
    } else {
        LocalKind::Memory
    }
}

fn convert_vis(v: Option<ast::Visibility>, default: Visibility) -> Visibility {
    match v {
        Some(ast::Visibility::Public) => Visibility::Public,
        Some(ast::Visibility::External) => Visibility::External,
        Some(ast::Visibility::Internal) => Visibility::Internal,
        Some(ast::Visibility::Private) => Visibility::Private,
        None => default,
    }
}

/// Resolve the subject contract of `unit` (the named one, or the last
/// contract in the file) into a typed program.
pub fn resolve(unit: &ast::SourceUnit, src: &SourceFile, subject: Option<&str>) -> Result<Program, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut contracts: BTreeMap<String, &ContractDef> = BTreeMap::new();
    let mut graph = BTreeMap::new();
    for c in &unit.contracts {
        if contracts.insert(c.name.name.clone(), c).is_some() {
            diags.push(err(
                src,
                codes::DUPLICATE,
                c.name.span,
                format!("duplicate contract `{}`", c.name.name),
            ));
        }
        graph.insert(
            c.name.name.clone(),
            c.bases.iter().map(|b| b.name.clone()).collect::<Vec<_>>(),
        );
    }
    for c in &unit.contracts {
        for b in &c.bases {
            if !contracts.contains_key(&b.name) {
                diags.push(err(
                    src,
                    codes::INHERITANCE,
                    b.span,
                    format!("undeclared base contract `{}`", b.name),
                ));
            }
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let subject_def = match subject {
        Some(name) => match contracts.get(name) {
            Some(c) => *c,
            None => {
                return Err(vec![err(
                    src,
                    codes::UNDECLARED,
                    unit.span,
                    format!("unknown contract `{name}`"),
                )]);
            }
        },
        None => match unit.contracts.last() {
            Some(c) => c,
            None => return Err(vec![err(src, codes::SYNTAX, unit.span, "no contract definition found")]),
        },
    };
    let lin = match linearize(&graph, &subject_def.name.name) {
        Ok(l) => l,
        Err(m) => return Err(vec![err(src, codes::INHERITANCE, subject_def.name.span, m)]),
    };
    let mut lin_of = HashMap::new();
    for c in &lin {
        lin_of.insert(c.clone(), linearize(&graph, c).unwrap_or_default());
    }
    let base_first: Vec<&ContractDef> = lin.iter().rev().map(|n| contracts[n]).collect();

    // Structs.
    let mut struct_ids = HashMap::new();
    let mut struct_defs = Vec::new();
    for c in &base_first {
        for s in &c.structs {
            if struct_ids.contains_key(&s.name.name) {
                diags.push(err(
                    src,
                    codes::DUPLICATE,
                    s.name.span,
                    format!("duplicate struct `{}`", s.name.name),
                ));
                continue;
            }
            struct_ids.insert(s.name.name.clone(), struct_defs.len());
            struct_defs.push(s);
        }
    }
    let mut structs = Vec::new();
    for s in &struct_defs {
        let mut fields: Vec<(String, Ty)> = Vec::new();
        for (t, n) in &s.fields {
            if fields.iter().any(|(f, _)| f == &n.name) {
                diags.push(err(
                    src,
                    codes::DUPLICATE,
                    n.span,
                    format!("duplicate field `{}`", n.name),
                ));
            }
            match type_of(src, &struct_ids, t) {
                Ok(ty) => fields.push((n.name.clone(), ty)),
                Err(d) => diags.push(d),
            }
        }
        structs.push(StructInfo {
            name: s.name.name.clone(),
            fields,
        });
    }
    // Recursive structs would have an infinite storage shape.
    for (i, s) in struct_defs.iter().enumerate() {
        let mut seen = vec![false; structs.len()];
        let mut work = vec![i];
        let mut recursive = false;
        while let Some(j) = work.pop() {
            for (_, ty) in &structs[j].fields {
                let mut t = ty;
                loop {
                    match t {
                        Ty::Array(e) => t = e,
                        Ty::Mapping(_, v) => t = v,
                        _ => break,
                    }
                }
                if let Ty::Struct(k) = t {
                    if *k == i {
                        recursive = true;
                    } else if !seen[*k] {
                        seen[*k] = true;
                        work.push(*k);
                    }
                }
            }
        }
        if recursive {
            diags.push(err(
                src,
                codes::UNSUPPORTED,
                s.name.span,
                format!("recursive struct `{}` is not supported", s.name.name),
            ));
        }
    }

    // Events.
    let mut events = BTreeMap::new();
    for c in &base_first {
        for e in &c.events {
            let mut tys = Vec::new();
            for p in &e.params {
                match type_of(src, &struct_ids, &p.ty) {
                    Ok(t) => tys.push(t),
                    Err(d) => diags.push(d),
                }
            }
            events.insert(e.name.name.clone(), tys);
        }
    }

    // State variables.
    let mut state_vars: Vec<StateVar> = Vec::new();
    let mut state_defs = Vec::new();
    for c in &base_first {
        let mut local_names: Vec<&str> = Vec::new();
        for v in &c.state_vars {
            if local_names.contains(&v.name.name.as_str()) {
                diags.push(err(
                    src,
                    codes::DUPLICATE,
                    v.name.span,
                    format!("duplicate state variable `{}`", v.name.name),
                ));
                continue;
            }
            local_names.push(&v.name.name);
            if state_vars.iter().any(|s| s.name == v.name.name) {
                diags.push(err(
                    src,
                    codes::DUPLICATE,
                    v.name.span,
                    format!("state variable `{}` shadows an inherited one", v.name.name),
                ));
                continue;
            }
            let ty = match type_of(src, &struct_ids, &v.ty) {
                Ok(t) => t,
                Err(d) => {
                    diags.push(d);
                    continue;
                }
            };
            if v.constant && v.init.is_none() {
                diags.push(err(
                    src,
                    codes::TYPE_MISMATCH,
                    v.span,
                    format!("constant `{}` needs an initial value", v.name.name),
                ));
            }
            state_vars.push(StateVar {
                name: v.name.name.clone(),
                ty,
                contract: c.name.name.clone(),
                init: None,
                constant: v.constant,
                span: v.span,
            });
            state_defs.push(v);
        }
    }

    // Function skeletons.
    let mut functions: Vec<Function> = Vec::new();
    let mut fdefs: Vec<&ast::FunctionDef> = Vec::new();
    let mut by_contract: HashMap<(String, String), FuncId> = HashMap::new();
    for c in &base_first {
        for f in &c.functions {
            let key = (c.name.name.clone(), f.name.name.clone());
            if by_contract.contains_key(&key) {
                let what = if f.kind == ast::FunctionKind::Function {
                    format!("overloaded function `{}` is not supported", f.name.name)
                } else {
                    format!("duplicate `{}`", f.name.name)
                };
                diags.push(err(src, codes::UNSUPPORTED, f.name.span, what));
                continue;
            }
            let mut locals = Vec::new();
            let mut params = Vec::new();
            let mut returns = Vec::new();
            let mut ok = true;
            for (i, p) in f.params.iter().chain(f.returns.iter()).enumerate() {
                match type_of(src, &struct_ids, &p.ty) {
                    Ok(ty) => {
                        if matches!(ty, Ty::Mapping(..)) {
                            diags.push(err(
                                src,
                                codes::UNSUPPORTED,
                                p.span,
                                "mapping parameters are not supported",
                            ));
                            ok = false;
                        }
                        let kind = local_kind(&ty, p.location);
                        let name = p.name.as_ref().map(|n| n.name.clone()).unwrap_or_default();
                        if !name.is_empty() && locals.iter().any(|l: &LocalInfo| l.name == name) {
                            diags.push(err(
                                src,
                                codes::DUPLICATE,
                                p.span,
                                format!("duplicate parameter `{name}`"),
                            ));
                            ok = false;
                        }
                        if kind == LocalKind::Storage {
                            diags.push(err(
                                src,
                                codes::UNSUPPORTED,
                                p.span,
                                "storage parameters are not supported",
                            ));
                            ok = false;
                        }
                        if i < f.params.len() {
                            params.push(locals.len());
                        } else {
                            returns.push(locals.len());
                        }
                        locals.push(LocalInfo {
                            name,
                            ty,
                            kind,
                            span: p.span,
                        });
                    }
                    Err(d) => {
                        diags.push(d);
                        ok = false;
                    }
                }
            }
            if !ok {
                continue;
            }
            let kind = match f.kind {
                ast::FunctionKind::Function => FnKind::Function,
                ast::FunctionKind::Constructor => FnKind::Constructor,
                ast::FunctionKind::Receive => FnKind::Receive,
                ast::FunctionKind::Fallback => FnKind::Fallback,
            };
            let default_vis = match kind {
                FnKind::Constructor => Visibility::Public,
                FnKind::Receive | FnKind::Fallback => Visibility::External,
                FnKind::Function => {
                    if f.visibility.is_none() {
                        diags.push(err(
                            src,
                            codes::SYNTAX,
                            f.name.span,
                            format!("function `{}` needs a visibility", f.name.name),
                        ));
                    }
                    Visibility::Public
                }
            };
            by_contract.insert(key, functions.len());
            functions.push(Function {
                name: f.name.name.clone(),
                contract: c.name.name.clone(),
                kind,
                visibility: convert_vis(f.visibility, default_vis),
                payable: f.mutability == Some(ast::Mutability::Payable),
                read_only: matches!(f.mutability, Some(ast::Mutability::View | ast::Mutability::Pure)),
                params,
                returns,
                locals,
                body: Vec::new(),
                span: f.span,
            });
            fdefs.push(f);
        }
    }

    // Virtual dispatch and ambiguity.
    let mut internal = BTreeMap::new();
    let mut dispatch = BTreeMap::new();
    let mut names: Vec<&str> = functions
        .iter()
        .filter(|f| f.kind == FnKind::Function)
        .map(|f| f.name.as_str())
        .collect();
    names.sort();
    names.dedup();
    for name in names {
        let definers: Vec<&String> = lin
            .iter()
            .filter(|c| by_contract.contains_key(&((*c).clone(), name.to_string())))
            .collect();
        let top = definers[0];
        let top_lin = &lin_of[top];
        if definers.iter().any(|d| !top_lin.contains(d)) {
            let fid = by_contract[&(top.clone(), name.to_string())];
            let others: Vec<&str> = definers.iter().map(|s| s.as_str()).collect();
            diags.push(err(
                src,
                codes::AMBIGUOUS_OVERRIDE,
                subject_def.name.span,
                format!(
                    "contract `{}` must override `{name}`, which is defined by unrelated bases {}",
                    subject_def.name.name,
                    others.join(", ")
                ),
            ));
            let _ = fid;
            continue;
        }
        let fid = by_contract[&(top.clone(), name.to_string())];
        if fdefs[fid].body.is_none() && !subject_def.is_abstract {
            diags.push(err(
                src,
                codes::INHERITANCE,
                subject_def.name.span,
                format!("function `{name}` has no implementation in `{}`", subject_def.name.name),
            ));
            continue;
        }
        internal.insert(name.to_string(), fid);
        if functions[fid].visibility.is_callable_externally() && fdefs[fid].body.is_some() {
            dispatch.insert(name.to_string(), fid);
        }
    }

    let mut modifiers: HashMap<String, (&ast::ModifierDef, String)> = HashMap::new();
    for c in &base_first {
        for m in &c.modifiers {
            modifiers.insert(m.name.name.clone(), (m, c.name.name.clone()));
        }
    }

    let mut construction = Vec::new();
    for c in &base_first {
        let initializers = state_vars
            .iter()
            .enumerate()
            .filter(|(i, v)| v.contract == c.name.name && !v.constant && state_defs[*i].init.is_some())
            .map(|(i, _)| i)
            .collect();
        construction.push(ConstructorStep {
            contract: c.name.name.clone(),
            initializers,
            constructor: by_contract
                .get(&(c.name.name.clone(), "constructor".to_string()))
                .copied(),
        });
    }

    let mut program = Program {
        source: src.clone(),
        contract: subject_def.name.name.clone(),
        linearization: lin.clone(),
        structs,
        state_vars,
        functions,
        dispatch,
        internal,
        construction,
        events,
    };
    if !diags.is_empty() {
        return Err(diags);
    }

    // Constants first (in declaration order) so later code can inline them.
    for pass_constant in [true, false] {
        for (i, def) in state_defs.iter().enumerate() {
            if program.state_vars[i].constant != pass_constant {
                continue;
            }
            let Some(init) = &def.init else { continue };
            let contract = program.state_vars[i].contract.clone();
            let ty = program.state_vars[i].ty.clone();
            let mut cx = Cx::new(&program, src, Mode::Contract, contract);
            let resolved = cx.expr(init, Some(&ty)).and_then(|e| cx.coerce(e, &ty));
            diags.append(&mut cx.diags);
            if let Ok(e) = resolved {
                if !cx.locals.is_empty() {
                    diags.push(err(
                        src,
                        codes::UNSUPPORTED,
                        init.span,
                        "state variable initializers cannot declare locals",
                    ));
                }
                program.state_vars[i].init = Some(e);
            }
        }
    }

    let mut bodies = Vec::new();
    for (fid, def) in fdefs.iter().enumerate() {
        let Some(body) = &def.body else {
            bodies.push(None);
            continue;
        };
        let f = &program.functions[fid];
        let mut cx = Cx::new(&program, src, Mode::Contract, f.contract.clone());
        cx.locals = f.locals.clone();
        cx.returns = f.returns.clone();
        cx.modifiers = Some(&modifiers);
        cx.base_contracts = lin.clone();
        for id in f.params.iter().chain(f.returns.iter()) {
            let name = cx.locals[*id].name.clone();
            if !name.is_empty() {
                cx.scopes[0].push((name, *id));
            }
        }
        let mut out = Vec::new();
        cx.block(&body.stmts, &mut out);
        let out = cx.wrap_modifiers(def, out);
        diags.append(&mut cx.diags);
        bodies.push(Some((cx.locals, out)));
    }
    for (fid, b) in bodies.into_iter().enumerate() {
        if let Some((locals, body)) = b {
            program.functions[fid].locals = locals;
            program.functions[fid].body = body;
        }
    }
    if diags.is_empty() {
        Ok(program)
    } else {
        Err(diags)
    }
}

/// Resolve one parsed specification unit against a program.
pub fn resolve_spec(program: &Program, unit: &ast::SpecUnit, src: &SourceFile) -> Result<Spec, Vec<Diagnostic>> {
    let result = match unit {
        ast::SpecUnit::Invariant(inv) => {
            let mut cx = Cx::new(program, src, Mode::Predicate, program.contract.clone());
            cx.arith = ArithMode::Math;
            cx.what = "an invariant";
            let exprs = cx.predicates(&inv.exprs);
            match exprs {
                Some(exprs) if cx.diags.is_empty() => Ok(Spec::Invariant(InvariantSpec {
                    name: inv.name.name.clone(),
                    exprs,
                    span: inv.span,
                })),
                _ => Err(cx.diags),
            }
        }
        ast::SpecUnit::Function(fs) => resolve_function_spec(program, fs, src),
        ast::SpecUnit::Rule(rule) => {
            let mut cx = Cx::new(program, src, Mode::Rule, program.contract.clone());
            let mut params = Vec::new();
            for p in &rule.params {
                let ty = match type_of(src, &struct_ids_of(program), &p.ty) {
                    Ok(t) => t,
                    Err(d) => {
                        cx.diags.push(d);
                        continue;
                    }
                };
                let Some(name) = &p.name else {
                    cx.diags
                        .push(err(src, codes::SYNTAX, p.span, "rule parameters need names"));
                    continue;
                };
                if matches!(ty, Ty::Mapping(..)) {
                    cx.diags.push(err(
                        src,
                        codes::UNSUPPORTED,
                        p.span,
                        "mapping parameters are not supported",
                    ));
                    continue;
                }
                let id = cx.declare(&name.name, ty.clone(), local_kind(&ty, p.location), name.span);
                params.push(id);
            }
            let mut body = Vec::new();
            cx.block(&rule.body.stmts, &mut body);
            if cx.diags.is_empty() {
                Ok(Spec::Rule(RuleSpec {
                    name: rule.name.name.clone(),
                    locals: cx.locals,
                    params,
                    implicit: cx.implicit,
                    body,
                    span: rule.span,
                }))
            } else {
                Err(cx.diags)
            }
        }
    };
    result
}

fn struct_ids_of(p: &Program) -> HashMap<String, usize> {
    p.structs.iter().enumerate().map(|(i, s)| (s.name.clone(), i)).collect()
}

fn resolve_function_spec(program: &Program, fs: &ast::FunctionSpec, src: &SourceFile) -> Result<Spec, Vec<Diagnostic>> {
    let name = &fs.func_name.name;
    let Some(fid) = program.function(name) else {
        return Err(vec![err(
            src,
            codes::UNDECLARED,
            fs.func_name.span,
            format!("undeclared function `{name}`"),
        )]);
    };
    let f = &program.functions[fid];
    let mut cx = Cx::new(program, src, Mode::Predicate, f.contract.clone());
    cx.arith = ArithMode::Math;
    cx.locals = f.locals.clone();
    let mut names: Vec<(String, LocalId)> = Vec::new();
    match &fs.params {
        Some(ps) => {
            if ps.len() != f.params.len() {
                cx.diags.push(err(
                    src,
                    codes::BAD_CALL,
                    fs.func_name.span,
                    format!(
                        "`{name}` takes {} parameters but the specification lists {}",
                        f.params.len(),
                        ps.len()
                    ),
                ));
            } else {
                for (p, id) in ps.iter().zip(&f.params) {
                    match type_of(src, &struct_ids_of(program), &p.ty) {
                        Ok(t) if t == f.locals[*id].ty => {}
                        Ok(t) => cx.diags.push(err(
                            src,
                            codes::TYPE_MISMATCH,
                            p.span,
                            format!(
                                "parameter type {} does not match {} in `{name}`",
                                program.ty_name(&t),
                                program.ty_name(&f.locals[*id].ty)
                            ),
                        )),
                        Err(d) => cx.diags.push(d),
                    }
                    if let Some(n) = &p.name {
                        names.push((n.name.clone(), *id));
                    }
                }
            }
        }
        None => {
            for id in &f.params {
                names.push((f.locals[*id].name.clone(), *id));
            }
        }
    }
    cx.scopes[0] = names.clone();
    cx.what = "a precondition";
    let pre = cx.predicates(&fs.pre);
    for id in &f.returns {
        if !f.locals[*id].name.is_empty() {
            cx.scopes[0].push((f.locals[*id].name.clone(), *id));
        }
    }
    cx.what = "a postcondition";
    let post = cx.predicates(&fs.post);
    match (pre, post) {
        (Some(pre), Some(post)) if cx.diags.is_empty() => Ok(Spec::Function(FunctionSpecIr {
            name: name.clone(),
            func: fid,
            pre,
            post,
            span: fs.span,
        })),
        _ => Err(cx.diags),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Mode {
    Contract,
    Predicate,
    Rule,
}

type ModifierTable<'a> = HashMap<String, (&'a ast::ModifierDef, String)>;

pub(crate) struct Cx<'a> {
    p: &'a Program,
    src: &'a SourceFile,
    mode: Mode,
    arith: ArithMode,
    contract: String,
    locals: Vec<LocalInfo>,
    scopes: Vec<Vec<(String, LocalId)>>,
    returns: Vec<LocalId>,
    diags: Vec<Diagnostic>,
    implicit: Vec<(LocalId, Option<StateId>)>,
    modifiers: Option<&'a ModifierTable<'a>>,
    base_contracts: Vec<String>,
    placeholder: Option<Vec<TStmt>>,
    what: &'static str,
}

impl<'a> Cx<'a> {
    fn new(p: &'a Program, src: &'a SourceFile, mode: Mode, contract: String) -> Self {
        Cx {
            p,
            src,
            mode,
            arith: ArithMode::Checked,
            contract,
            locals: Vec::new(),
            scopes: vec![Vec::new()],
            returns: Vec::new(),
            diags: Vec::new(),
            implicit: Vec::new(),
            modifiers: None,
            base_contracts: p.linearization.clone(),
            placeholder: None,
            what: "code",
        }
    }

    fn fail(&mut self, code: &str, span: Span, msg: impl Into<String>) -> Fail {
        self.diags.push(err(self.src, code, span, msg));
        Fail
    }

    fn tyname(&self, t: &Ty) -> String {
        TyDisplay {
            ty: t,
            structs: &self.p.structs,
        }
        .to_string()
    }

    fn ty(&mut self, t: &TypeName) -> R<Ty> {
        let ids = struct_ids_of(self.p);
        type_of(self.src, &ids, t).map_err(|d| {
            self.diags.push(d);
            Fail
        })
    }

    fn declare(&mut self, name: &str, ty: Ty, kind: LocalKind, span: Span) -> LocalId {
        let id = self.locals.len();
        self.locals.push(LocalInfo {
            name: name.to_string(),
            ty,
            kind,
            span,
        });
        self.scopes.last_mut().unwrap().push((name.to_string(), id));
        id
    }

    fn lookup(&self, name: &str) -> Option<LocalId> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.iter().rev().find(|(n, _)| n == name).map(|(_, id)| *id))
    }

    fn predicates(&mut self, exprs: &[Expr]) -> Option<Vec<TExpr>> {
        let mut out = Vec::new();
        let mut ok = true;
        for e in exprs {
            match self.bool_expr(e) {
                Ok(t) => out.push(t),
                Err(Fail) => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn bool_expr(&mut self, e: &Expr) -> R<TExpr> {
        let t = self.expr(e, Some(&Ty::Bool))?;
        if t.ty != Ty::Bool {
            let found = self.tyname(&t.ty);
            let what = if self.mode == Mode::Predicate {
                self.what
            } else {
                "a condition"
            };
            return Err(self.fail(
                codes::NOT_BOOLEAN,
                e.span,
                format!("expression in {what} must be boolean, found {found}"),
            ));
        }
        Ok(t)
    }

    // -----------------------------------------------------------------------
    // Coercions
    // -----------------------------------------------------------------------

    fn implicit_ok(e: &TExpr, to: &Ty) -> bool {
        match (&e.ty, to) {
            (a, b) if a == b => true,
            (Ty::Lit, t @ (Ty::Uint(_) | Ty::Int(_) | Ty::Address | Ty::FixedBytes(_))) => {
                matches!(&e.kind, TExprKind::Int(v) if t.contains(v))
            }
            (Ty::Uint(a), Ty::Uint(b)) => a <= b,
            (Ty::Int(a), Ty::Int(b)) => a <= b,
            (Ty::Uint(a), Ty::Int(b)) => a < b,
            (Ty::String, Ty::Bytes) => true,
            _ => false,
        }
    }

    fn coerce(&mut self, e: TExpr, to: &Ty) -> R<TExpr> {
        if &e.ty == to {
            return Ok(e);
        }
        if Self::implicit_ok(&e, to) {
            if matches!(e.kind, TExprKind::Int(_)) {
                return Ok(TExpr { ty: to.clone(), ..e });
            }
            let span = e.span;
            return Ok(TExpr::new(TExprKind::Convert(Box::new(e)), to.clone(), span));
        }
        let (a, b) = (self.tyname(to), self.tyname(&e.ty));
        Err(self.fail(
            codes::TYPE_MISMATCH,
            e.span,
            format!("type mismatch: expected {a}, found {b}"),
        ))
    }

    /// Common type of two scalar operands, if any.
    fn unify(a: &TExpr, b: &TExpr) -> Option<Ty> {
        if a.ty == b.ty {
            return Some(a.ty.clone());
        }
        if Self::implicit_ok(a, &b.ty) {
            return Some(b.ty.clone());
        }
        if Self::implicit_ok(b, &a.ty) {
            return Some(a.ty.clone());
        }
        None
    }

    fn int_const(v: BigInt, span: Span) -> TExpr {
        TExpr::new(TExprKind::Int(v), Ty::Lit, span)
    }

    // -----------------------------------------------------------------------
    // Expressions
    // -----------------------------------------------------------------------

    fn expr(&mut self, e: &Expr, hint: Option<&Ty>) -> R<TExpr> {
        let span = e.span;
        match &e.kind {
            ExprKind::Number(n) => Ok(Self::int_const(BigInt::from(n.clone()), span)),
            ExprKind::Hex(h) => {
                let v = BigInt::parse_bytes(h.as_bytes(), 16).unwrap_or_default();
                let ty = if h.len() == 40 { Ty::Address } else { Ty::Lit };
                Ok(TExpr::new(TExprKind::Int(v), ty, span))
            }
            ExprKind::Bool(b) => Ok(TExpr::bool_const(*b, span)),
            ExprKind::Str(s) => Ok(TExpr::new(TExprKind::Int(encode_bytes(s.as_bytes())), Ty::String, span)),
            ExprKind::Ident(name) => self.ident(name, span, hint),
            ExprKind::Old(inner) => self.old(inner, span),
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs, span),
            ExprKind::Unary { op, operand } => match op {
                UnOp::Not => {
                    let t = self.bool_expr(operand)?;
                    if let TExprKind::Bool(b) = t.kind {
                        return Ok(TExpr::bool_const(!b, span));
                    }
                    Ok(TExpr::new(TExprKind::Not(Box::new(t)), Ty::Bool, span))
                }
                UnOp::Neg => {
                    let t = self.expr(operand, None)?;
                    match (&t.ty, &t.kind) {
                        (Ty::Lit, TExprKind::Int(v)) => Ok(Self::int_const(-v.clone(), span)),
                        (Ty::Int(_), _) => {
                            let ty = t.ty.clone();
                            Ok(TExpr::new(TExprKind::Neg(self.arith, Box::new(t)), ty, span))
                        }
                        (Ty::Uint(_), _) if self.arith == ArithMode::Math => Ok(TExpr::new(
                            TExprKind::Neg(ArithMode::Math, Box::new(t)),
                            Ty::Int(256),
                            span,
                        )),
                        _ => {
                            let n = self.tyname(&t.ty);
                            Err(self.fail(codes::TYPE_MISMATCH, span, format!("unary `-` is not defined for {n}")))
                        }
                    }
                }
                _ => Err(self.fail(
                    codes::UNSUPPORTED,
                    span,
                    "assignment inside an expression is not supported",
                )),
            },
            ExprKind::Assign { .. } => Err(self.fail(
                codes::UNSUPPORTED,
                span,
                "assignment inside an expression is not supported",
            )),
            ExprKind::Ternary { cond, then, els } => {
                let c = self.bool_expr(cond)?;
                let a = self.expr(then, hint)?;
                let b = self.expr(els, hint)?;
                if !a.ty.is_scalar() || !b.ty.is_scalar() {
                    return Err(self.fail(
                        codes::UNSUPPORTED,
                        span,
                        "conditional expressions must produce scalar values",
                    ));
                }
                let Some(ty) = Self::unify(&a, &b).or_else(|| {
                    (self.arith == ArithMode::Math && a.ty.is_integer() && b.ty.is_integer()).then_some(Ty::Int(256))
                }) else {
                    let (x, y) = (self.tyname(&a.ty), self.tyname(&b.ty));
                    return Err(self.fail(
                        codes::TYPE_MISMATCH,
                        span,
                        format!("branches have incompatible types {x} and {y}"),
                    ));
                };
                let (a, b) = if ty == Ty::Int(256) && self.arith == ArithMode::Math {
                    (a, b)
                } else {
                    (self.coerce(a, &ty)?, self.coerce(b, &ty)?)
                };
                Ok(TExpr::new(
                    TExprKind::Ternary(Box::new(c), Box::new(a), Box::new(b)),
                    ty,
                    span,
                ))
            }
            ExprKind::Index { base, index } => {
                let b = self.expr(base, None)?;
                match b.ty.clone() {
                    Ty::Mapping(k, v) => {
                        let i = self.expr(index, Some(&k))?;
                        let i = self.coerce(i, &k)?;
                        Ok(TExpr::new(TExprKind::Index(Box::new(b), Box::new(i)), *v, span))
                    }
                    Ty::Array(el) => {
                        let i = self.expr(index, Some(&Ty::uint256()))?;
                        let i = self.coerce(i, &Ty::uint256())?;
                        Ok(TExpr::new(TExprKind::Index(Box::new(b), Box::new(i)), *el, span))
                    }
                    other => {
                        let n = self.tyname(&other);
                        Err(self.fail(codes::TYPE_MISMATCH, span, format!("cannot index a value of type {n}")))
                    }
                }
            }
            ExprKind::Member { base, member } => self.member(base, member, span),
            ExprKind::Call { callee, options, args } => self.call(callee, options, args, span, hint),
            ExprKind::Tuple(items) => {
                let mut out = Vec::new();
                let mut tys = Vec::new();
                for it in items {
                    match it {
                        Some(x) => {
                            let t = self.expr(x, None)?;
                            tys.push(t.ty.clone());
                            out.push(Some(t));
                        }
                        None => {
                            tys.push(Ty::Void);
                            out.push(None);
                        }
                    }
                }
                Ok(TExpr::new(TExprKind::Tuple(out), Ty::Tuple(tys), span))
            }
            ExprKind::TypeExpr(_) | ExprKind::New(_) => {
                Err(self.fail(codes::TYPE_MISMATCH, span, "type name used as a value"))
            }
        }
    }

    fn ident(&mut self, name: &str, span: Span, hint: Option<&Ty>) -> R<TExpr> {
        if name.starts_with('$') && self.mode != Mode::Rule {
            return Err(self.fail(
                codes::SYMBOLIC_OUTSIDE_RULE,
                span,
                format!("symbolic variable `{name}` is only permitted in rules"),
            ));
        }
        if let Some(id) = self.lookup(name) {
            let ty = self.locals[id].ty.clone();
            return Ok(TExpr::new(TExprKind::Local(id), ty, span));
        }
        if let Some(sid) = self.p.state_id(name) {
            let v = &self.p.state_vars[sid];
            if v.constant {
                return match &v.init {
                    Some(init) => Ok(TExpr { span, ..init.clone() }),
                    None => Err(self.fail(
                        codes::UNDECLARED,
                        span,
                        format!("constant `{name}` is used before its definition"),
                    )),
                };
            }
            return Ok(TExpr::new(TExprKind::State(sid), v.ty.clone(), span));
        }
        if name == "this" {
            return Ok(TExpr::new(TExprKind::Env(EnvVar::This), Ty::Address, span));
        }
        if let Some(stripped) = name.strip_prefix('$') {
            // Implicit symbolic variable, tied to a same-named scalar state
            // variable when there is one.
            let alias = self
                .p
                .state_id(stripped)
                .filter(|s| self.p.state_vars[*s].ty.is_scalar());
            let ty = match (alias, hint) {
                (Some(s), _) => self.p.state_vars[s].ty.clone(),
                (None, Some(h)) if h.is_scalar() && *h != Ty::Lit => h.clone(),
                _ => Ty::uint256(),
            };
            let id = self.locals.len();
            self.locals.push(LocalInfo {
                name: name.to_string(),
                ty: ty.clone(),
                kind: LocalKind::Value,
                span,
            });
            self.scopes[0].push((name.to_string(), id));
            self.implicit.push((id, alias));
            return Ok(TExpr::new(TExprKind::Local(id), ty, span));
        }
        Err(self.fail(codes::UNDECLARED, span, format!("undeclared identifier `{name}`")))
    }

    fn is_shadowed(&self, name: &str) -> bool {
        self.lookup(name).is_some() || self.p.state_id(name).is_some()
    }

    fn old(&mut self, inner: &Expr, span: Span) -> R<TExpr> {
        if self.mode != Mode::Predicate || self.what == "an invariant" {
            return Err(self.fail(
                codes::TYPE_MISMATCH,
                span,
                "`old(...)` is only permitted in function preconditions and postconditions",
            ));
        }
        let t = self.expr(inner, None)?;
        fn rooted_in_state(e: &TExpr) -> bool {
            match &e.kind {
                TExprKind::State(_) => true,
                TExprKind::Index(b, _) | TExprKind::Field(b, _) | TExprKind::Length(b) => rooted_in_state(b),
                _ => false,
            }
        }
        if !rooted_in_state(&t) {
            return Err(self.fail(codes::TYPE_MISMATCH, span, "`old(...)` must wrap a state variable"));
        }
        if t.any(&|x| matches!(x.kind, TExprKind::Old(_))) {
            return Err(self.fail(codes::TYPE_MISMATCH, span, "nested `old(...)`"));
        }
        let ty = t.ty.clone();
        Ok(TExpr::new(TExprKind::Old(Box::new(t)), ty, span))
    }

    fn binary(&mut self, op: BinOp, lhs: &Expr, rhs: &Expr, span: Span) -> R<TExpr> {
        match op {
            BinOp::And | BinOp::Or | BinOp::Amp => {
                let a = self.expr(lhs, Some(&Ty::Bool))?;
                let b = self.expr(rhs, Some(&Ty::Bool))?;
                if a.ty != Ty::Bool || b.ty != Ty::Bool {
                    if op == BinOp::Amp {
                        return Err(self.fail(
                            codes::UNSUPPORTED,
                            span,
                            "bitwise `&` is not supported; `&` is read as logical and",
                        ));
                    }
                    let bad = if a.ty != Ty::Bool { &a } else { &b };
                    let n = self.tyname(&bad.ty);
                    return Err(self.fail(
                        codes::NOT_BOOLEAN,
                        bad.span,
                        format!("operand of `{}` must be boolean, found {n}", op.as_str()),
                    ));
                }
                let kind = if op == BinOp::Or {
                    TExprKind::Or(Box::new(a), Box::new(b))
                } else {
                    TExprKind::And(Box::new(a), Box::new(b))
                };
                Ok(TExpr::new(kind, Ty::Bool, span))
            }
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                let a = self.expr(lhs, None)?;
                let hint = a.ty.clone();
                let b = self.expr(rhs, Some(&hint))?;
                let cmp = match op {
                    BinOp::Eq => CmpOp::Eq,
                    BinOp::Ne => CmpOp::Ne,
                    BinOp::Lt => CmpOp::Lt,
                    BinOp::Le => CmpOp::Le,
                    BinOp::Gt => CmpOp::Gt,
                    _ => CmpOp::Ge,
                };
                if !a.ty.is_scalar() || !b.ty.is_scalar() {
                    return Err(self.fail(codes::TYPE_MISMATCH, span, "only scalar values can be compared"));
                }
                let ordered = !matches!(cmp, CmpOp::Eq | CmpOp::Ne);
                let ordered_ok =
                    |t: &Ty| matches!(t, Ty::Uint(_) | Ty::Int(_) | Ty::Lit | Ty::Address | Ty::FixedBytes(_));
                if ordered && (!ordered_ok(&a.ty) || !ordered_ok(&b.ty)) {
                    return Err(self.fail(
                        codes::TYPE_MISMATCH,
                        span,
                        format!("`{}` needs numeric operands", op.as_str()),
                    ));
                }
                if self.arith == ArithMode::Math && a.ty.is_integer() && b.ty.is_integer() {
                    return Ok(TExpr::new(
                        TExprKind::Cmp(cmp, Box::new(a), Box::new(b)),
                        Ty::Bool,
                        span,
                    ));
                }
                let Some(ty) = Self::unify(&a, &b).or_else(|| {
                    // Strings compare by their encodings.
                    matches!((&a.ty, &b.ty), (Ty::String | Ty::Bytes, Ty::String | Ty::Bytes)).then_some(Ty::Bytes)
                }) else {
                    let (x, y) = (self.tyname(&a.ty), self.tyname(&b.ty));
                    return Err(self.fail(codes::TYPE_MISMATCH, span, format!("cannot compare {x} with {y}")));
                };
                let (a, b) = if ty == Ty::Bytes && a.ty != b.ty {
                    (a, b)
                } else {
                    (self.coerce(a, &ty)?, self.coerce(b, &ty)?)
                };
                Ok(TExpr::new(
                    TExprKind::Cmp(cmp, Box::new(a), Box::new(b)),
                    Ty::Bool,
                    span,
                ))
            }
            _ => {
                let aop = match op {
                    BinOp::Add => ArithOp::Add,
                    BinOp::Sub => ArithOp::Sub,
                    BinOp::Mul => ArithOp::Mul,
                    BinOp::Div => ArithOp::Div,
                    BinOp::Mod => ArithOp::Mod,
                    _ => ArithOp::Pow,
                };
                let a = self.expr(lhs, None)?;
                let hint = a.ty.clone();
                let b = self.expr(rhs, Some(&hint))?;
                for x in [&a, &b] {
                    if !x.ty.is_integer() {
                        let n = self.tyname(&x.ty);
                        return Err(self.fail(
                            codes::TYPE_MISMATCH,
                            x.span,
                            format!("operator `{}` needs integer operands, found {n}", op.as_str()),
                        ));
                    }
                }
                if let (TExprKind::Int(x), TExprKind::Int(y), Ty::Lit, Ty::Lit) = (&a.kind, &b.kind, &a.ty, &b.ty) {
                    let v = match fold_arith(aop, x, y) {
                        Some(v) => v,
                        None => return Err(self.fail(codes::TYPE_MISMATCH, span, "invalid constant arithmetic")),
                    };
                    return Ok(Self::int_const(v, span));
                }
                if aop == ArithOp::Pow {
                    // The exponent keeps its own type; the result has the base type.
                    let ty = if a.ty == Ty::Lit { b.ty.clone() } else { a.ty.clone() };
                    let a = if a.ty == Ty::Lit && self.arith == ArithMode::Checked {
                        self.coerce(a, &ty)?
                    } else {
                        a
                    };
                    if let TExprKind::Int(v) = &b.kind {
                        if v.is_negative() {
                            return Err(self.fail(codes::TYPE_MISMATCH, b.span, "negative exponent"));
                        }
                    }
                    return Ok(TExpr::new(
                        TExprKind::Arith(aop, self.arith, Box::new(a), Box::new(b)),
                        ty,
                        span,
                    ));
                }
                if self.arith == ArithMode::Math {
                    let ty = Self::unify(&a, &b).filter(|t| *t != Ty::Lit).unwrap_or(Ty::Int(256));
                    return Ok(TExpr::new(
                        TExprKind::Arith(aop, ArithMode::Math, Box::new(a), Box::new(b)),
                        ty,
                        span,
                    ));
                }
                let Some(ty) = Self::unify(&a, &b) else {
                    let (x, y) = (self.tyname(&a.ty), self.tyname(&b.ty));
                    return Err(self.fail(
                        codes::TYPE_MISMATCH,
                        span,
                        format!("operator `{}` is not defined between {x} and {y}", op.as_str()),
                    ));
                };
                let a = self.coerce(a, &ty)?;
                let b = self.coerce(b, &ty)?;
                Ok(TExpr::new(
                    TExprKind::Arith(aop, ArithMode::Checked, Box::new(a), Box::new(b)),
                    ty,
                    span,
                ))
            }
        }
    }

    fn member(&mut self, base: &Expr, member: &ast::Ident, span: Span) -> R<TExpr> {
        if let ExprKind::Ident(b) = &base.kind {
            if !self.is_shadowed(b) {
                let env = match (b.as_str(), member.name.as_str()) {
                    ("msg", "sender") => Some(EnvVar::Sender),
                    ("msg", "value") => Some(EnvVar::Value),
                    ("block", "timestamp") => Some(EnvVar::Timestamp),
                    ("block", "number") => Some(EnvVar::BlockNumber),
                    ("tx", "origin") => Some(EnvVar::Origin),
                    ("msg" | "block" | "tx", m) => {
                        return Err(self.fail(codes::UNSUPPORTED, span, format!("`{b}.{m}` is not supported")));
                    }
                    _ => None,
                };
                if let Some(v) = env {
                    return Ok(TExpr::new(TExprKind::Env(v), v.ty(), span));
                }
            }
        }
        let b = self.expr(base, None)?;
        match (&b.ty, member.name.as_str()) {
            (Ty::Array(_), "length") => Ok(TExpr::new(TExprKind::Length(Box::new(b)), Ty::uint256(), span)),
            (Ty::Struct(sid), m) => {
                let info = &self.p.structs[*sid];
                match info.fields.iter().position(|(n, _)| n == m) {
                    Some(i) => {
                        let ty = info.fields[i].1.clone();
                        Ok(TExpr::new(TExprKind::Field(Box::new(b), i), ty, span))
                    }
                    None => {
                        let sname = info.name.clone();
                        Err(self.fail(
                            codes::UNDECLARED,
                            member.span,
                            format!("struct `{sname}` has no field `{m}`"),
                        ))
                    }
                }
            }
            (Ty::Address, "balance") => Err(self.fail(codes::UNSUPPORTED, span, "balances are not modeled")),
            (t, m) => {
                let n = self.tyname(t);
                Err(self.fail(codes::UNDECLARED, member.span, format!("no member `{m}` on type {n}")))
            }
        }
    }

    fn check_arity(&mut self, what: &str, expected: usize, got: usize, span: Span) -> R<()> {
        if expected != got {
            return Err(self.fail(
                codes::BAD_CALL,
                span,
                format!(
                    "`{what}` expects {expected} argument{}, got {got}",
                    if expected == 1 { "" } else { "s" }
                ),
            ));
        }
        Ok(())
    }

    fn call_function(&mut self, fid: FuncId, args: &[Expr], span: Span) -> R<TExpr> {
        if self.mode == Mode::Predicate {
            let what = self.what;
            return Err(self.fail(
                codes::CALL_IN_SPEC,
                span,
                format!("function calls are not permitted in {what}"),
            ));
        }
        let f = &self.p.functions[fid];
        let name = f.name.clone();
        let ptys = f.param_types();
        let rty = f.return_type();
        let payable_ok = f.kind == FnKind::Function;
        if !payable_ok {
            return Err(self.fail(codes::BAD_CALL, span, format!("`{name}` cannot be called directly")));
        }
        self.check_arity(&name, ptys.len(), args.len(), span)?;
        let mut targs = Vec::new();
        for (a, t) in args.iter().zip(&ptys) {
            let e = self.expr(a, Some(t))?;
            targs.push(self.coerce(e, t)?);
        }
        Ok(TExpr::new(TExprKind::Call { func: fid, args: targs }, rty, span))
    }

    fn scalar_arg(&mut self, a: &Expr) -> R<TExpr> {
        let t = self.expr(a, None)?;
        if !t.ty.is_scalar() {
            return Err(self.fail(
                codes::UNSUPPORTED,
                a.span,
                "only scalar values can be hashed or encoded",
            ));
        }
        if t.ty == Ty::Lit {
            return self.coerce(t, &Ty::uint256());
        }
        Ok(t)
    }

    fn call(
        &mut self,
        callee: &Expr,
        options: &[(ast::Ident, Expr)],
        args: &[Expr],
        span: Span,
        hint: Option<&Ty>,
    ) -> R<TExpr> {
        let is_ext_call = matches!(&callee.kind, ExprKind::Member { member, .. } if member.name == "call");
        if !options.is_empty() && !is_ext_call {
            return Err(self.fail(codes::UNSUPPORTED, span, "call options are only supported on `.call`"));
        }
        match &callee.kind {
            ExprKind::Ident(name) if self.lookup(name).is_none() => {
                match name.as_str() {
                    "keccak256" | "sha3" => {
                        let mut inner = Vec::new();
                        if args.len() == 1 {
                            if let ExprKind::Call {
                                callee: c2, args: a2, ..
                            } = &args[0].kind
                            {
                                if let ExprKind::Member { base, member } = &c2.kind {
                                    if matches!(&base.kind, ExprKind::Ident(b) if b == "abi")
                                        && matches!(member.name.as_str(), "encode" | "encodePacked")
                                    {
                                        for a in a2 {
                                            inner.push(self.scalar_arg(a)?);
                                        }
                                        return Ok(TExpr::new(TExprKind::Sha3(inner), Ty::FixedBytes(32), span));
                                    }
                                }
                            }
                        }
                        if args.is_empty() {
                            return Err(self.fail(codes::BAD_CALL, span, format!("`{name}` expects an argument")));
                        }
                        for a in args {
                            inner.push(self.scalar_arg(a)?);
                        }
                        return Ok(TExpr::new(TExprKind::Sha3(inner), Ty::FixedBytes(32), span));
                    }
                    "require" | "assert" | "revert" | "assume" if self.p.function(name).is_none() => {
                        return Err(self.fail(codes::BAD_CALL, span, format!("`{name}` cannot be used as a value")));
                    }
                    "sha256" | "ecrecover" | "gasleft" | "blockhash" | "addmod" | "mulmod" | "selfdestruct" => {
                        return Err(self.fail(codes::UNSUPPORTED, span, format!("`{name}` is not supported")));
                    }
                    _ => {}
                }
                if self.p.state_id(name).is_some() {
                    return Err(self.fail(codes::BAD_CALL, callee.span, format!("`{name}` is not a function")));
                }
                if let Some(fid) = self.p.internal.get(name).copied() {
                    return self.call_function(fid, args, span);
                }
                if self.p.events.contains_key(name) {
                    return Err(self.fail(codes::BAD_CALL, span, format!("event `{name}` can only be emitted")));
                }
                if self.p.structs.iter().any(|s| &s.name == name) {
                    return Err(self.fail(codes::UNSUPPORTED, span, "struct constructors are not supported"));
                }
                Err(self.fail(
                    codes::UNDECLARED,
                    callee.span,
                    format!("undeclared identifier `{name}`"),
                ))
            }
            ExprKind::Ident(name) => {
                Err(self.fail(codes::BAD_CALL, callee.span, format!("`{name}` is not a function")))
            }
            ExprKind::Member { base, member } => {
                if let ExprKind::Ident(b) = &base.kind {
                    if !self.is_shadowed(b) {
                        if b == "super" {
                            let pos = self
                                .base_contracts
                                .iter()
                                .position(|c| *c == self.contract)
                                .unwrap_or(0);
                            let found = self.base_contracts[pos + 1..].iter().find_map(|c| {
                                self.p.functions.iter().position(|f| {
                                    &f.contract == c && f.name == member.name && f.kind == FnKind::Function
                                })
                            });
                            return match found {
                                Some(fid) => self.call_function(fid, args, span),
                                None => Err(self.fail(
                                    codes::UNDECLARED,
                                    member.span,
                                    format!("no base implementation of `{}` for `super`", member.name),
                                )),
                            };
                        }
                        if self.p.linearization.contains(b) {
                            let found = self
                                .p
                                .functions
                                .iter()
                                .position(|f| &f.contract == b && f.name == member.name);
                            return match found {
                                Some(fid) => self.call_function(fid, args, span),
                                None => Err(self.fail(
                                    codes::UNDECLARED,
                                    member.span,
                                    format!("contract `{b}` has no function `{}`", member.name),
                                )),
                            };
                        }
                        if b == "abi" {
                            return match member.name.as_str() {
                                "decode" => self.abi_decode(args, span),
                                m => Err(self.fail(
                                    codes::UNSUPPORTED,
                                    span,
                                    format!("`abi.{m}` is only supported inside keccak256"),
                                )),
                            };
                        }
                    }
                }
                match member.name.as_str() {
                    "push" | "pop" => Err(self.fail(
                        codes::BAD_CALL,
                        span,
                        format!("`{}` cannot be used as a value", member.name),
                    )),
                    "call" | "send" | "transfer" => {
                        if self.mode == Mode::Predicate {
                            let what = self.what;
                            return Err(self.fail(
                                codes::CALL_IN_SPEC,
                                span,
                                format!("external calls are not permitted in {what}"),
                            ));
                        }
                        let target = self.expr(base, None)?;
                        let target = self.coerce(target, &Ty::Address)?;
                        let (kind, value, data, ty) = match member.name.as_str() {
                            "call" => {
                                let mut value = None;
                                for (k, v) in options {
                                    if k.name != "value" {
                                        return Err(self.fail(
                                            codes::UNSUPPORTED,
                                            k.span,
                                            format!("call option `{}` is not supported", k.name),
                                        ));
                                    }
                                    let t = self.expr(v, Some(&Ty::uint256()))?;
                                    value = Some(Box::new(self.coerce(t, &Ty::uint256())?));
                                }
                                self.check_arity("call", 1, args.len(), span)?;
                                let d = self.expr(&args[0], Some(&Ty::Bytes))?;
                                let d = self.coerce(d, &Ty::Bytes)?;
                                (
                                    ExtKind::Call,
                                    value,
                                    Some(Box::new(d)),
                                    Ty::Tuple(vec![Ty::Bool, Ty::Bytes]),
                                )
                            }
                            m => {
                                self.check_arity(m, 1, args.len(), span)?;
                                let v = self.expr(&args[0], Some(&Ty::uint256()))?;
                                let v = self.coerce(v, &Ty::uint256())?;
                                if m == "send" {
                                    (ExtKind::Send, Some(Box::new(v)), None, Ty::Bool)
                                } else {
                                    (ExtKind::Transfer, Some(Box::new(v)), None, Ty::Void)
                                }
                            }
                        };
                        Ok(TExpr::new(
                            TExprKind::ExternalCall {
                                kind,
                                target: Box::new(target),
                                value,
                                data,
                            },
                            ty,
                            span,
                        ))
                    }
                    "delegatecall" | "staticcall" => {
                        Err(self.fail(codes::UNSUPPORTED, span, format!("`{}` is not supported", member.name)))
                    }
                    _ => Err(self.fail(codes::UNSUPPORTED, span, "calls to other contracts are not supported")),
                }
            }
            ExprKind::TypeExpr(t) => {
                let to = self.ty(t)?;
                self.check_arity(&self.tyname(&to), 1, args.len(), span)?;
                let e = self.expr(&args[0], Some(&to))?;
                self.convert(e, to, span)
            }
            ExprKind::New(t) => {
                let ty = self.ty(t)?;
                if !matches!(ty, Ty::Array(_)) {
                    return Err(self.fail(codes::UNSUPPORTED, span, "`new` is only supported for dynamic arrays"));
                }
                self.check_arity("new", 1, args.len(), span)?;
                let n = self.expr(&args[0], Some(&Ty::uint256()))?;
                let n = self.coerce(n, &Ty::uint256())?;
                Ok(TExpr::new(TExprKind::NewArray(Box::new(n)), ty, span))
            }
            _ => {
                let _ = hint;
                Err(self.fail(codes::BAD_CALL, callee.span, "expression is not callable"))
            }
        }
    }

    fn abi_decode(&mut self, args: &[Expr], span: Span) -> R<TExpr> {
        self.check_arity("abi.decode", 2, args.len(), span)?;
        let data = self.expr(&args[0], Some(&Ty::Bytes))?;
        let data = self.coerce(data, &Ty::Bytes)?;
        let ExprKind::TypeExpr(t) = &args[1].kind else {
            return Err(self.fail(
                codes::UNSUPPORTED,
                args[1].span,
                "`abi.decode` supports a single scalar target type",
            ));
        };
        let ty = self.ty(t)?;
        if !ty.is_scalar() {
            return Err(self.fail(
                codes::UNSUPPORTED,
                args[1].span,
                "`abi.decode` supports a single scalar target type",
            ));
        }
        Ok(TExpr::new(TExprKind::AbiDecode(Box::new(data)), ty, span))
    }

    fn convert(&mut self, e: TExpr, to: Ty, span: Span) -> R<TExpr> {
        let intlike = |t: &Ty| matches!(t, Ty::Uint(_) | Ty::Int(_) | Ty::Lit | Ty::Address | Ty::FixedBytes(_));
        let ok = match (&e.ty, &to) {
            (a, b) if a == b => true,
            (a, b) if intlike(a) && intlike(b) => true,
            (Ty::String | Ty::Bytes, Ty::String | Ty::Bytes) => true,
            _ => false,
        };
        if !ok {
            let (a, b) = (self.tyname(&e.ty), self.tyname(&to));
            return Err(self.fail(codes::TYPE_MISMATCH, span, format!("cannot convert {a} to {b}")));
        }
        if let (Ty::Lit, TExprKind::Int(v)) = (&e.ty, &e.kind) {
            if !to.contains(v) {
                return Err(self.fail(
                    codes::TYPE_MISMATCH,
                    span,
                    format!("literal {v} does not fit in {}", self.tyname(&to)),
                ));
            }
            return Ok(TExpr::new(TExprKind::Int(v.clone()), to, span));
        }
        if e.ty == to {
            return Ok(TExpr { span, ..e });
        }
        Ok(TExpr::new(TExprKind::Convert(Box::new(e)), to, span))
    }

    // -----------------------------------------------------------------------
    // Statements
    // -----------------------------------------------------------------------

    fn block(&mut self, stmts: &[Stmt], out: &mut Vec<TStmt>) {
        self.scopes.push(Vec::new());
        for s in stmts {
            let _ = self.stmt(s, out);
        }
        self.scopes.pop();
    }

    fn nested(&mut self, s: &Stmt) -> Vec<TStmt> {
        let mut v = Vec::new();
        self.scopes.push(Vec::new());
        let _ = self.stmt(s, &mut v);
        self.scopes.pop();
        v
    }

    fn is_storage_ref(&self, e: &TExpr) -> bool {
        match &e.kind {
            TExprKind::State(_) => true,
            TExprKind::Local(id) => self.locals[*id].kind == LocalKind::Storage,
            TExprKind::Index(b, _) | TExprKind::Field(b, _) => self.is_storage_ref(b),
            _ => false,
        }
    }

    fn is_lvalue(e: &TExpr) -> bool {
        match &e.kind {
            TExprKind::Local(_) | TExprKind::State(_) => true,
            TExprKind::Index(b, _) | TExprKind::Field(b, _) => Self::is_lvalue(b),
            _ => false,
        }
    }

    fn lvalue(&mut self, e: &Expr) -> R<TExpr> {
        let t = self.expr(e, None)?;
        if !Self::is_lvalue(&t) {
            return Err(self.fail(codes::TYPE_MISMATCH, e.span, "expression is not assignable"));
        }
        if let TExprKind::Local(id) = &t.kind {
            if self.mode == Mode::Rule && self.implicit.iter().any(|(l, _)| l == id) {
                // Implicit symbols are fixed; assignment would break the alias.
                return Err(self.fail(
                    codes::TYPE_MISMATCH,
                    e.span,
                    "implicit symbolic variables cannot be assigned",
                ));
            }
        }
        if matches!(t.ty, Ty::Mapping(..)) {
            return Err(self.fail(codes::TYPE_MISMATCH, e.span, "mappings cannot be assigned as a whole"));
        }
        Ok(t)
    }

    fn check_storage_init(&mut self, local_kind: LocalKind, init: &TExpr) -> R<()> {
        if local_kind == LocalKind::Storage && !self.is_storage_ref(init) {
            return Err(self.fail(
                codes::TYPE_MISMATCH,
                init.span,
                "storage pointer must refer to contract storage",
            ));
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt, out: &mut Vec<TStmt>) -> R<()> {
        match &s.kind {
            StmtKind::VarDecl { decls, init, tuple } => {
                if !tuple {
                    let d = decls[0].as_ref().expect("plain declaration has a name");
                    let ty = self.ty(&d.ty)?;
                    let kind = local_kind(&ty, d.location);
                    if matches!(ty, Ty::Mapping(..)) && init.is_none() {
                        return Err(self.fail(codes::TYPE_MISMATCH, d.span, "mapping locals must refer to storage"));
                    }
                    let tinit = match init {
                        Some(e) => {
                            let t = self.expr(e, Some(&ty))?;
                            let t = self.coerce(t, &ty)?;
                            self.check_storage_init(kind, &t)?;
                            Some(t)
                        }
                        None => {
                            if kind == LocalKind::Storage {
                                return Err(self.fail(
                                    codes::TYPE_MISMATCH,
                                    d.span,
                                    "storage pointers must be initialized",
                                ));
                            }
                            None
                        }
                    };
                    if self.scopes.last().unwrap().iter().any(|(n, _)| *n == d.name.name) {
                        return Err(self.fail(
                            codes::DUPLICATE,
                            d.name.span,
                            format!("duplicate declaration of `{}`", d.name.name),
                        ));
                    }
                    let id = self.declare(&d.name.name, ty, kind, d.span);
                    out.push(TStmt::Decl { local: id, init: tinit });
                    return Ok(());
                }
                let init = init.as_ref().expect("tuple declaration has an initializer");
                let t = self.expr(init, None)?;
                let Ty::Tuple(tys) = t.ty.clone() else {
                    return Err(self.fail(codes::TYPE_MISMATCH, init.span, "expected a tuple value"));
                };
                if tys.len() != decls.len() {
                    return Err(self.fail(
                        codes::TYPE_MISMATCH,
                        s.span,
                        format!("tuple has {} components but {} are declared", tys.len(), decls.len()),
                    ));
                }
                let mut ids = Vec::new();
                for (d, cty) in decls.iter().zip(&tys) {
                    match d {
                        Some(d) => {
                            let ty = self.ty(&d.ty)?;
                            let probe = TExpr::new(TExprKind::Bool(false), cty.clone(), d.span);
                            if !Self::implicit_ok(&probe, &ty) {
                                let (a, b) = (self.tyname(&ty), self.tyname(cty));
                                return Err(self.fail(
                                    codes::TYPE_MISMATCH,
                                    d.span,
                                    format!("type mismatch: expected {a}, found {b}"),
                                ));
                            }
                            let kind = local_kind(&ty, d.location);
                            ids.push(Some(self.declare(&d.name.name, ty, kind, d.span)));
                        }
                        None => ids.push(None),
                    }
                }
                out.push(TStmt::TupleDecl { locals: ids, init: t });
                Ok(())
            }
            StmtKind::Expr(e) => self.expr_stmt(e, out),
            StmtKind::If { cond, then, els } => {
                let c = self.bool_expr(cond)?;
                let t = self.nested(then);
                let e = els.as_ref().map(|e| self.nested(e)).unwrap_or_default();
                out.push(TStmt::If {
                    cond: c,
                    then: t,
                    els: e,
                });
                Ok(())
            }
            StmtKind::While { cond, body } => {
                let c = self.bool_expr(cond)?;
                let b = self.nested(body);
                out.push(TStmt::Loop {
                    cond: c,
                    body: b,
                    span: s.span,
                });
                Ok(())
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                self.scopes.push(Vec::new());
                let r = (|| {
                    if let Some(i) = init {
                        self.stmt(i, out)?;
                    }
                    let c = match cond {
                        Some(c) => self.bool_expr(c)?,
                        None => TExpr::bool_const(true, s.span),
                    };
                    let mut b = self.nested(body);
                    if let Some(u) = update {
                        self.expr_stmt(u, &mut b)?;
                    }
                    out.push(TStmt::Loop {
                        cond: c,
                        body: b,
                        span: s.span,
                    });
                    Ok(())
                })();
                self.scopes.pop();
                r
            }
            StmtKind::Block(b) => {
                self.block(&b.stmts, out);
                Ok(())
            }
            StmtKind::Return(v) => {
                if self.mode != Mode::Contract {
                    return Err(self.fail(codes::UNSUPPORTED, s.span, "`return` is not permitted in rules"));
                }
                let rtys: Vec<Ty> = self.returns.iter().map(|r| self.locals[*r].ty.clone()).collect();
                let values = match v {
                    None => Vec::new(),
                    Some(e) => {
                        if rtys.is_empty() {
                            return Err(self.fail(codes::TYPE_MISMATCH, e.span, "function does not return values"));
                        }
                        if rtys.len() == 1 {
                            let t = self.expr(e, Some(&rtys[0]))?;
                            vec![self.coerce(t, &rtys[0])?]
                        } else if let ExprKind::Tuple(items) = &e.kind {
                            if items.len() != rtys.len() || items.iter().any(|i| i.is_none()) {
                                return Err(self.fail(codes::TYPE_MISMATCH, e.span, "wrong number of return values"));
                            }
                            let mut vals = Vec::new();
                            for (it, ty) in items.iter().zip(&rtys) {
                                let t = self.expr(it.as_ref().unwrap(), Some(ty))?;
                                vals.push(self.coerce(t, ty)?);
                            }
                            vals
                        } else {
                            let t = self.expr(e, None)?;
                            if t.ty != Ty::Tuple(rtys.clone()) {
                                return Err(self.fail(
                                    codes::TYPE_MISMATCH,
                                    e.span,
                                    "return value does not match the declared types",
                                ));
                            }
                            vec![t]
                        }
                    }
                };
                out.push(TStmt::Return { values, span: s.span });
                Ok(())
            }
            StmtKind::Emit(e) => {
                let ExprKind::Call { callee, args, .. } = &e.kind else {
                    unreachable!("parser checks emit")
                };
                let ExprKind::Ident(name) = &callee.kind else {
                    return Err(self.fail(
                        codes::UNSUPPORTED,
                        callee.span,
                        "qualified event names are not supported",
                    ));
                };
                let Some(ptys) = self.p.events.get(name).cloned() else {
                    return Err(self.fail(codes::UNDECLARED, callee.span, format!("undeclared event `{name}`")));
                };
                self.check_arity(name, ptys.len(), args.len(), e.span)?;
                for (a, t) in args.iter().zip(&ptys) {
                    let x = self.expr(a, Some(t))?;
                    self.coerce(x, t)?;
                }
                Ok(())
            }
            StmtKind::Placeholder => match &self.placeholder {
                Some(body) => {
                    out.push(TStmt::Region(body.clone()));
                    Ok(())
                }
                None => Err(self.fail(codes::SYNTAX, s.span, "`_` is only permitted in modifiers")),
            },
        }
    }

    fn expr_stmt(&mut self, e: &Expr, out: &mut Vec<TStmt>) -> R<()> {
        match &e.kind {
            ExprKind::Assign { op, lhs, rhs } => {
                if let ExprKind::Tuple(items) = &lhs.kind {
                    if *op != ast::AssignOp::Assign {
                        return Err(self.fail(codes::TYPE_MISMATCH, e.span, "compound assignment to a tuple"));
                    }
                    let r = self.expr(rhs, None)?;
                    let Ty::Tuple(tys) = r.ty.clone() else {
                        return Err(self.fail(codes::TYPE_MISMATCH, rhs.span, "expected a tuple value"));
                    };
                    if tys.len() != items.len() {
                        return Err(self.fail(codes::TYPE_MISMATCH, e.span, "tuple sizes differ"));
                    }
                    let mut ls = Vec::new();
                    for (it, ty) in items.iter().zip(&tys) {
                        match it {
                            Some(x) => {
                                let l = self.lvalue(x)?;
                                let probe = TExpr::new(TExprKind::Bool(false), ty.clone(), x.span);
                                if !Self::implicit_ok(&probe, &l.ty) || !l.ty.is_scalar() {
                                    return Err(self.fail(
                                        codes::TYPE_MISMATCH,
                                        x.span,
                                        "tuple component type mismatch",
                                    ));
                                }
                                ls.push(Some(l));
                            }
                            None => ls.push(None),
                        }
                    }
                    out.push(TStmt::TupleAssign { lhs: ls, rhs: r });
                    return Ok(());
                }
                let l = self.lvalue(lhs)?;
                let aop = match op {
                    ast::AssignOp::Assign => None,
                    ast::AssignOp::Add => Some(ArithOp::Add),
                    ast::AssignOp::Sub => Some(ArithOp::Sub),
                    ast::AssignOp::Mul => Some(ArithOp::Mul),
                    ast::AssignOp::Div => Some(ArithOp::Div),
                    ast::AssignOp::Mod => Some(ArithOp::Mod),
                };
                if aop.is_some() && !l.ty.is_integer() {
                    return Err(self.fail(
                        codes::TYPE_MISMATCH,
                        e.span,
                        "compound assignment needs an integer target",
                    ));
                }
                let r = self.expr(rhs, Some(&l.ty))?;
                let r = self.coerce(r, &l.ty)?;
                if let TExprKind::Local(id) = &l.kind {
                    if self.locals[*id].kind == LocalKind::Storage {
                        self.check_storage_init(LocalKind::Storage, &r)?;
                    }
                }
                out.push(TStmt::Assign {
                    lhs: l,
                    op: aop,
                    rhs: r,
                    span: e.span,
                });
                Ok(())
            }
            ExprKind::Unary { op, operand }
                if matches!(op, UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec) =>
            {
                let l = self.lvalue(operand)?;
                if !l.ty.is_integer() {
                    return Err(self.fail(codes::TYPE_MISMATCH, e.span, "increment needs an integer target"));
                }
                let aop = if matches!(op, UnOp::PreInc | UnOp::PostInc) {
                    ArithOp::Add
                } else {
                    ArithOp::Sub
                };
                let one = TExpr::new(TExprKind::Int(BigInt::one()), l.ty.clone(), e.span);
                out.push(TStmt::Assign {
                    lhs: l,
                    op: Some(aop),
                    rhs: one,
                    span: e.span,
                });
                Ok(())
            }
            ExprKind::Unary {
                op: UnOp::Delete,
                operand,
            } => {
                let l = self.lvalue(operand)?;
                out.push(TStmt::Delete { target: l });
                Ok(())
            }
            ExprKind::Call { callee, args, options } if options.is_empty() => {
                if let ExprKind::Ident(name) = &callee.kind {
                    if self.lookup(name).is_none() && self.p.function(name).is_none() {
                        match (name.as_str(), self.mode) {
                            ("require", Mode::Rule) => {
                                return Err(self.fail(
                                    codes::BAD_CALL,
                                    e.span,
                                    "use `assume` instead of `require` in rules",
                                ));
                            }
                            ("require", _) | ("assert", Mode::Contract) => {
                                if args.is_empty() || args.len() > 2 {
                                    return Err(self.fail(
                                        codes::BAD_CALL,
                                        e.span,
                                        format!("`{name}` expects a condition and an optional message"),
                                    ));
                                }
                                if name == "assert" && args.len() != 1 {
                                    return Err(self.fail(codes::BAD_CALL, e.span, "`assert` expects one argument"));
                                }
                                let c = self.bool_expr(&args[0])?;
                                if let Some(m) = args.get(1) {
                                    self.expr(m, None)?;
                                }
                                out.push(TStmt::Require { cond: c, span: e.span });
                                return Ok(());
                            }
                            ("revert", Mode::Contract) => {
                                if args.len() > 1 {
                                    return Err(self.fail(
                                        codes::BAD_CALL,
                                        e.span,
                                        "`revert` expects an optional message",
                                    ));
                                }
                                if let Some(m) = args.first() {
                                    self.expr(m, None)?;
                                }
                                out.push(TStmt::Revert { span: e.span });
                                return Ok(());
                            }
                            ("assume" | "assert", Mode::Rule) => {
                                self.check_arity(name, 1, args.len(), e.span)?;
                                let saved = self.arith;
                                self.arith = ArithMode::Math;
                                let c = self.bool_expr(&args[0]);
                                self.arith = saved;
                                let c = c?;
                                if name == "assume" {
                                    out.push(TStmt::Assume { cond: c });
                                } else {
                                    out.push(TStmt::Assert { cond: c, span: e.span });
                                }
                                return Ok(());
                            }
                            _ => {}
                        }
                    }
                }
                if let ExprKind::Member { base, member } = &callee.kind {
                    if matches!(member.name.as_str(), "push" | "pop") {
                        let arr = self.expr(base, None)?;
                        let Ty::Array(el) = arr.ty.clone() else {
                            let n = self.tyname(&arr.ty);
                            return Err(self.fail(
                                codes::UNDECLARED,
                                member.span,
                                format!("no member `{}` on type {n}", member.name),
                            ));
                        };
                        if !self.is_storage_ref(&arr) || !Self::is_lvalue(&arr) {
                            return Err(self.fail(
                                codes::TYPE_MISMATCH,
                                e.span,
                                format!("`{}` needs a storage array", member.name),
                            ));
                        }
                        if member.name == "pop" {
                            self.check_arity("pop", 0, args.len(), e.span)?;
                            out.push(TStmt::Pop {
                                array: arr,
                                span: e.span,
                            });
                        } else {
                            let value = match args.len() {
                                0 => None,
                                1 => {
                                    let v = self.expr(&args[0], Some(&el))?;
                                    Some(self.coerce(v, &el)?)
                                }
                                n => {
                                    return Err(self.fail(
                                        codes::BAD_CALL,
                                        e.span,
                                        format!("`push` expects at most one argument, got {n}"),
                                    ))
                                }
                            };
                            out.push(TStmt::Push {
                                array: arr,
                                value,
                                span: e.span,
                            });
                        }
                        return Ok(());
                    }
                }
                let t = self.expr(e, None)?;
                out.push(TStmt::Expr(t));
                Ok(())
            }
            _ => {
                let t = self.expr(e, None)?;
                out.push(TStmt::Expr(t));
                Ok(())
            }
        }
    }

    /// Inline the modifiers of `def` around its resolved body.
    fn wrap_modifiers(&mut self, def: &ast::FunctionDef, body: Vec<TStmt>) -> Vec<TStmt> {
        let mut current = body;
        for inv in def.modifiers.iter().rev() {
            let name = &inv.name.name;
            if self.p.linearization.contains(name) {
                self.fail(
                    codes::UNSUPPORTED,
                    inv.span,
                    "base constructor arguments are not supported",
                );
                continue;
            }
            let Some((mdef, mcontract)) = self.modifiers.and_then(|m| m.get(name)).map(|(d, c)| (*d, c.clone())) else {
                self.fail(
                    codes::UNDECLARED,
                    inv.name.span,
                    format!("undeclared modifier `{name}`"),
                );
                continue;
            };
            let args = inv.args.clone().unwrap_or_default();
            if self.check_arity(name, mdef.params.len(), args.len(), inv.span).is_err() {
                continue;
            }
            let mut prologue = Vec::new();
            let mut targs = Vec::new();
            let mut ok = true;
            for (a, p) in args.iter().zip(&mdef.params) {
                let Ok(ty) = self.ty(&p.ty) else {
                    ok = false;
                    continue;
                };
                match self.expr(a, Some(&ty)).and_then(|t| self.coerce(t, &ty)) {
                    Ok(t) => targs.push((t, ty, p)),
                    Err(Fail) => ok = false,
                }
            }
            if !ok {
                continue;
            }
            let saved_scopes = std::mem::replace(&mut self.scopes, vec![Vec::new()]);
            let saved_contract = std::mem::replace(&mut self.contract, mcontract);
            for (t, ty, p) in targs {
                let kind = local_kind(&ty, p.location);
                let pname = p.name.as_ref().map(|n| n.name.clone()).unwrap_or_default();
                let id = self.declare(&pname, ty, kind, p.span);
                prologue.push(TStmt::Decl {
                    local: id,
                    init: Some(t),
                });
            }
            let saved_placeholder = self.placeholder.replace(current);
            let mut mbody = Vec::new();
            self.block(&mdef.body.stmts, &mut mbody);
            self.placeholder = saved_placeholder;
            self.scopes = saved_scopes;
            self.contract = saved_contract;
            prologue.extend(mbody);
            current = prologue;
        }
        current
    }
}

fn fold_arith(op: ArithOp, a: &BigInt, b: &BigInt) -> Option<BigInt> {
    Some(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => {
            if b.is_zero() {
                return None;
            }
            let (q, _) = a.abs().div_rem(&b.abs());
            if a.is_negative() != b.is_negative() {
                -q
            } else {
                q
            }
        }
        ArithOp::Mod => {
            if b.is_zero() {
                return None;
            }
            let r = a.abs() % b.abs();
            if a.is_negative() {
                -r
            } else {
                r
            }
        }
        ArithOp::Pow => {
            let e = b.to_u32()?;
            if e > 4096 {
                return None;
            }
            num_traits::pow(a.clone(), e as usize)
        }
    })
}
