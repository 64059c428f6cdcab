use super::diagnostics::{codes, Diagnostic};
use super::span::{SourceFile, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    /// Identifiers and keywords alike; keywords are contextual and recognised
    /// by the parser. `$`-prefixed symbolic names are words too.
    Word(String),
    /// Decimal literal digits with separators removed, possibly with an
    /// exponent (`1e18`).
    Number(String),
    /// Hex literal digits without the `0x` prefix.
    Hex(String),
    Str(String),
    Punct(&'static str),
    Eof,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Word(w) => format!("`{w}`"),
            TokenKind::Number(n) => format!("number `{n}`"),
            TokenKind::Hex(h) => format!("hex literal `0x{h}`"),
            TokenKind::Str(_) => "string literal".to_string(),
            TokenKind::Punct(p) => format!("`{p}`"),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

// Longest first so that maximal munch works with a linear scan.
const PUNCTS: &[&str] = &[
    "**=", "<<=", ">>=", "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "|=", "&=", "^=", "++",
    "--", "=>", "**", "<<", ">>", "{", "}", "(", ")", "[", "]", ";", ",", ".", "?", ":", "=", "<", ">", "+", "-", "*",
    "/", "%", "!", "&", "|", "^", "~",
];

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Tokenize a whole file. Comments and whitespace are dropped; the token list
/// always ends with a single `Eof`.
pub fn tokenize(source: &SourceFile) -> Result<Vec<Token>, Diagnostic> {
    let text = source.text();
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = text[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if text[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if text[i..].starts_with("/*") {
            let start = i;
            match text[i + 2..].find("*/") {
                Some(end) => i = i + 2 + end + 2,
                None => {
                    return Err(Diagnostic::error(
                        source,
                        codes::LEXICAL,
                        Span::new(start, text.len()),
                        "unterminated block comment",
                    ))
                }
            }
            continue;
        }
        let start = i;
        if is_ident_start(c) {
            while i < bytes.len() && is_ident_continue(bytes[i] as char) {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Word(text[start..i].to_string()),
                span: Span::new(start, i),
            });
            // Version constraints such as `^0.8.0` are not expression tokens;
            // the directive body is kept as one raw token.
            if &text[start..i] == "pragma" {
                let body_start = i;
                while i < bytes.len() && bytes[i] != b';' {
                    i += 1;
                }
                let raw = text[body_start..i].trim();
                if !raw.is_empty() {
                    let lead = text[body_start..i].len() - text[body_start..i].trim_start().len();
                    let s = body_start + lead;
                    tokens.push(Token {
                        kind: TokenKind::Str(raw.to_string()),
                        span: Span::new(s, s + raw.len()),
                    });
                }
            }
            continue;
        }
        if c.is_ascii_digit() {
            if text[i..].starts_with("0x") || text[i..].starts_with("0X") {
                i += 2;
                let digits_start = i;
                while i < bytes.len() && (bytes[i].is_ascii_hexdigit() || bytes[i] == b'_') {
                    i += 1;
                }
                let digits: String = text[digits_start..i].chars().filter(|c| *c != '_').collect();
                if digits.is_empty() {
                    return Err(Diagnostic::error(
                        source,
                        codes::LEXICAL,
                        Span::new(start, i),
                        "hex literal without digits",
                    ));
                }
                tokens.push(Token {
                    kind: TokenKind::Hex(digits),
                    span: Span::new(start, i),
                });
            } else {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'_') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let save = i;
                    i += 1;
                    let exp_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == exp_start {
                        i = save;
                    }
                }
                if i < bytes.len() && bytes[i] == b'.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    return Err(Diagnostic::error(
                        source,
                        codes::UNSUPPORTED,
                        Span::new(start, i + 1),
                        "fractional literals are not supported",
                    ));
                }
                let digits: String = text[start..i].chars().filter(|c| *c != '_').collect();
                tokens.push(Token {
                    kind: TokenKind::Number(digits),
                    span: Span::new(start, i),
                });
            }
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = c;
            i += 1;
            let mut value = String::new();
            loop {
                let Some(ch) = text[i..].chars().next() else {
                    return Err(Diagnostic::error(
                        source,
                        codes::LEXICAL,
                        Span::new(start, text.len()),
                        "unterminated string literal",
                    ));
                };
                if ch == '\n' {
                    return Err(Diagnostic::error(
                        source,
                        codes::LEXICAL,
                        Span::new(start, i),
                        "unterminated string literal",
                    ));
                }
                i += ch.len_utf8();
                if ch == quote {
                    break;
                }
                if ch == '\\' {
                    let Some(esc) = text[i..].chars().next() else { continue };
                    i += esc.len_utf8();
                    value.push(match esc {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        '0' => '\0',
                        other => other,
                    });
                } else {
                    value.push(ch);
                }
            }
            tokens.push(Token {
                kind: TokenKind::Str(value),
                span: Span::new(start, i),
            });
            continue;
        }
        match PUNCTS.iter().find(|p| text[i..].starts_with(**p)) {
            Some(p) => {
                i += p.len();
                tokens.push(Token {
                    kind: TokenKind::Punct(p),
                    span: Span::new(start, i),
                });
            }
            None => {
                return Err(Diagnostic::error(
                    source,
                    codes::LEXICAL,
                    Span::new(start, start + c.len_utf8()),
                    format!("unexpected character `{c}`"),
                ))
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: Span::point(text.len()),
    });
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(&SourceFile::new("t", src))
            .unwrap()
            .into_iter()
            .map(|t| t.kind)
            .collect()
    }

    #[test]
    fn words_numbers_and_puncts() {
        assert_eq!(
            kinds("x += 1_000; $a>=0x1F // c\n"),
            vec![
                TokenKind::Word("x".into()),
                TokenKind::Punct("+="),
                TokenKind::Number("1000".into()),
                TokenKind::Punct(";"),
                TokenKind::Word("$a".into()),
                TokenKind::Punct(">="),
                TokenKind::Hex("1F".into()),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn string_and_block_comment() {
        assert_eq!(
            kinds("/* a */ \"hi\\\"\""),
            vec![TokenKind::Str("hi\"".into()), TokenKind::Eof]
        );
    }

    #[test]
    fn lexical_errors_carry_spans() {
        let err = tokenize(&SourceFile::new("t", "a # b")).unwrap_err();
        assert_eq!(err.code, codes::LEXICAL);
        assert_eq!(err.span, Span::new(2, 3));
        let err = tokenize(&SourceFile::new("t", "\"abc")).unwrap_err();
        assert_eq!(err.code, codes::LEXICAL);
    }
}
