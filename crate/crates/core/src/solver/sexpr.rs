//! S-expressions: printing terms as SMT-LIB and reading solver output.

use crate::term::{Sort, Term, TermNode};
use num_bigint::BigInt;
use num_traits::Signed;
use std::fmt::Write;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            SExpr::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(l) => Some(l),
            SExpr::Atom(_) => None,
        }
    }
}

impl std::fmt::Display for SExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SExpr::Atom(a) => write!(f, "{a}"),
            SExpr::List(items) => {
                write!(f, "(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parse every top-level s-expression in `text`. Quoted symbols lose their
/// bars; string literals keep their quotes.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut stack: Vec<Vec<SExpr>> = vec![Vec::new()];
    while i < chars.len() {
        let c = chars[i];
        match c {
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                stack.push(Vec::new());
                i += 1;
            }
            ')' => {
                if stack.len() < 2 {
                    return Err("unbalanced `)`".into());
                }
                let items = stack.pop().unwrap();
                stack.last_mut().unwrap().push(SExpr::List(items));
                i += 1;
            }
            '|' => {
                let start = i + 1;
                i += 1;
                while i < chars.len() && chars[i] != '|' {
                    i += 1;
                }
                if i >= chars.len() {
                    return Err("unterminated quoted symbol".into());
                }
                let s: String = chars[start..i].iter().collect();
                stack.last_mut().unwrap().push(SExpr::Atom(s));
                i += 1;
            }
            '"' => {
                let start = i;
                i += 1;
                loop {
                    if i >= chars.len() {
                        return Err("unterminated string".into());
                    }
                    if chars[i] == '"' {
                        if i + 1 < chars.len() && chars[i + 1] == '"' {
                            i += 2;
                            continue;
                        }
                        break;
                    }
                    i += 1;
                }
                let s: String = chars[start..=i].iter().collect();
                stack.last_mut().unwrap().push(SExpr::Atom(s));
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !matches!(chars[i], '(' | ')' | '|' | '"' | ';') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                stack.last_mut().unwrap().push(SExpr::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().unwrap())
}

const RESERVED: &[&str] = &[
    "let", "forall", "exists", "match", "par", "as", "_", "!", "NUMERAL", "DECIMAL", "STRING", "true", "false",
];

/// Print a symbol, quoting it when it is not a simple SMT-LIB symbol.
pub fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.chars().next().unwrap().is_ascii_digit()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c))
        && !RESERVED.contains(&name);
    if simple {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

pub fn int_literal(v: &BigInt) -> String {
    if v.is_negative() {
        format!("(- {})", -v)
    } else {
        v.to_string()
    }
}

pub fn sort_to_smt(s: &Sort) -> String {
    s.to_string()
}

/// Print a term as a tree. Shared subterms are repeated; the encoder uses
/// [`term_to_smt_with`] to name them instead.
pub fn term_to_smt(t: &Term) -> String {
    let mut out = String::new();
    write_term(t, &mut out, &|_| None);
    out
}

/// Print with a hook that may replace any subterm by a name.
pub fn term_to_smt_with(t: &Term, named: &dyn Fn(&Term) -> Option<String>) -> String {
    let mut out = String::new();
    write_term(t, &mut out, named);
    out
}

fn write_term(t: &Term, out: &mut String, named: &dyn Fn(&Term) -> Option<String>) {
    if let Some(n) = named(t) {
        out.push_str(&n);
        return;
    }
    let app = |out: &mut String, head: &str, args: &[&Term]| {
        out.push('(');
        out.push_str(head);
        for a in args {
            out.push(' ');
            write_term(a, out, named);
        }
        out.push(')');
    };
    match t.node() {
        TermNode::Int(v) => out.push_str(&int_literal(v)),
        TermNode::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        TermNode::Var(n, _) => out.push_str(&symbol(n)),
        TermNode::Add(a, b) => app(out, "+", &[a, b]),
        TermNode::Sub(a, b) => app(out, "-", &[a, b]),
        TermNode::Mul(a, b) => app(out, "*", &[a, b]),
        TermNode::Neg(a) => app(out, "-", &[a]),
        TermNode::Div(a, b) => {
            // Truncating division in terms of SMT-LIB's Euclidean `div`.
            let (sa, sb) = (sub(a, named), sub(b, named));
            if b.as_int().is_some_and(|v| v.is_positive()) {
                let _ = write!(out, "(ite (>= {sa} 0) (div {sa} {sb}) (- (div (- {sa}) {sb})))");
            } else {
                let _ = write!(
                    out,
                    "(ite (>= {sa} 0) (ite (>= {sb} 0) (div {sa} {sb}) (- (div {sa} (- {sb})))) (ite (>= {sb} 0) (- (div (- {sa}) {sb})) (div (- {sa}) (- {sb}))))"
                );
            }
        }
        TermNode::Rem(a, b) => {
            let (sa, sb) = (sub(a, named), sub(b, named));
            let _ = write!(out, "(ite (>= {sa} 0) (mod {sa} {sb}) (- (mod (- {sa}) {sb})))");
        }
        TermNode::Mod(a, b) => app(out, "mod", &[a, b]),
        TermNode::Ite(c, a, b) => app(out, "ite", &[c, a, b]),
        TermNode::Eq(a, b) => app(out, "=", &[a, b]),
        TermNode::Lt(a, b) => app(out, "<", &[a, b]),
        TermNode::Le(a, b) => app(out, "<=", &[a, b]),
        TermNode::And(v) => app(out, "and", &v.iter().collect::<Vec<_>>()),
        TermNode::Or(v) => app(out, "or", &v.iter().collect::<Vec<_>>()),
        TermNode::Not(a) => app(out, "not", &[a]),
        TermNode::Select(a, i) => app(out, "select", &[a, i]),
        TermNode::Store(a, i, v) => app(out, "store", &[a, i, v]),
        TermNode::ConstArray(s, v) => {
            let head = format!("(as const {})", sort_to_smt(s));
            app(out, &head, &[v])
        }
        TermNode::App(f, args) => {
            if args.is_empty() {
                out.push_str(&symbol(f));
            } else {
                app(out, &symbol(f), &args.iter().collect::<Vec<_>>())
            }
        }
    }
}

fn sub(t: &Term, named: &dyn Fn(&Term) -> Option<String>) -> String {
    let mut s = String::new();
    write_term(t, &mut s, named);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_lists_and_quoted_symbols() {
        let v = parse_all("(a (|x y| 1) \"s\") b").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].list().unwrap()[1].list().unwrap()[0], SExpr::Atom("x y".into()));
        assert_eq!(v[1], SExpr::Atom("b".into()));
        assert!(parse_all("(a").is_err());
    }

    #[test]
    fn symbols_are_quoted_when_needed() {
        assert_eq!(symbol("x!0"), "x!0");
        assert_eq!(symbol("msg.sender!1"), "msg.sender!1");
        assert_eq!(symbol("0x"), "|0x|");
        assert_eq!(symbol("let"), "|let|");
    }

    #[test]
    fn negative_literals() {
        assert_eq!(term_to_smt(&Term::int(-3)), "(- 3)");
    }
}
