use super::span::{SourceFile, Span};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// Error codes emitted by the compiler. The code is the first field of the
/// rendered diagnostic line.
pub mod codes {
    pub const LEXICAL: &str = "E0001";
    pub const SYNTAX: &str = "E0002";
    pub const UNSUPPORTED: &str = "E0003";
    pub const STATEMENT_FORM: &str = "E0004";
    pub const UNDECLARED: &str = "E0101";
    pub const AMBIGUOUS_OVERRIDE: &str = "E0102";
    pub const TYPE_MISMATCH: &str = "E0103";
    pub const DUPLICATE: &str = "E0104";
    pub const INHERITANCE: &str = "E0105";
    pub const BAD_CALL: &str = "E0106";
    pub const SYMBOLIC_OUTSIDE_RULE: &str = "E0201";
    pub const NOT_BOOLEAN: &str = "E0202";
    pub const CALL_IN_SPEC: &str = "E0203";
    pub const KIND_MISMATCH: &str = "E0204";
    pub const TARGET_NOT_COVERED: &str = "E0205";
}

/// A located compiler message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub span: Span,
    pub file: String,
    pub line: u32,
    pub col: u32,
}

impl Diagnostic {
    pub fn error(source: &SourceFile, code: &str, span: Span, message: impl Into<String>) -> Self {
        let (line, col) = source.line_col(span.start);
        Diagnostic {
            severity: Severity::Error,
            code: code.to_string(),
            message: message.into(),
            span,
            file: source.name().to_string(),
            line,
            col,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}:{}:{}: {}",
            self.code, self.file, self.line, self.col, self.message
        )
    }
}

/// Render diagnostics one per line as `CODE file:line:col: message`, ordered
/// by location. The output is what the revise prompt receives verbatim.
pub fn render_diagnostics(diags: &[Diagnostic]) -> String {
    let mut sorted: Vec<&Diagnostic> = diags.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.file, a.span.start, a.span.end, &a.code, &a.message).cmp(&(
            &b.file,
            b.span.start,
            b.span.end,
            &b.code,
            &b.message,
        ))
    });
    let mut out = String::new();
    for d in sorted {
        // Messages never span lines in the rendered form.
        let message = d.message.replace('\n', " ");
        out.push_str(&format!("{} {}:{}:{}: {}\n", d.code, d.file, d.line, d.col, message));
    }
    out
}
