use super::{Diagnostic, DiagnosticKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Semi,
    Colon,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Caret,
    Plus,
    Minus,
    Star,
    Slash,
    Arrow,
    PlusMinus,
    Eq,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Caret => "`^`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::PlusMinus => "`+-`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
}

/// Splits the source into tokens. `#` and `//` start line comments.
/// Identifiers may contain inner `-` when followed by a letter, so property
/// names like `weakly-mixing` form a single token.
pub fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let err = |line, col, message: String| Diagnostic {
        kind: DiagnosticKind::Lexical,
        line,
        col,
        message,
        expected: Vec::new(),
    };
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                let v =
                    text.parse::<u64>().map_err(|_| err(tl, tc, format!("integer literal `{text}` is too large")))?;
                out.push(Token { tok: Tok::Int(v), line: tl, col: tc });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() {
                    let d = chars[i];
                    let joiner = d == '-' && i > start && chars.get(i + 1).is_some_and(|n| n.is_ascii_alphabetic());
                    if d.is_ascii_alphanumeric() || d == '_' || joiner {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                out.push(Token { tok: Tok::Ident(text), line: tl, col: tc });
                continue;
            }
            _ => {}
        }
        let (tok, n) = match c {
            ';' => (Tok::Semi, 1),
            ':' => (Tok::Colon, 1),
            '{' => (Tok::LBrace, 1),
            '}' => (Tok::RBrace, 1),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ',' => (Tok::Comma, 1),
            '^' => (Tok::Caret, 1),
            '*' => (Tok::Star, 1),
            '/' => (Tok::Slash, 1),
            '=' => (Tok::Eq, 1),
            '±' => (Tok::PlusMinus, 1),
            '+' if chars.get(i + 1) == Some(&'-') => (Tok::PlusMinus, 2),
            '+' => (Tok::Plus, 1),
            '-' if chars.get(i + 1) == Some(&'>') => (Tok::Arrow, 2),
            '-' => (Tok::Minus, 1),
            other => return Err(err(tl, tc, format!("unexpected character `{}`", other.escape_default()))),
        };
        i += n;
        col += n as u32;
        out.push(Token { tok, line: tl, col: tc });
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}
