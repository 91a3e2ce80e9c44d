//! Tokenizer shared by every text format of the toolchain.

use std::fmt;

use num_bigint::BigInt;

use crate::num::{parse_rational, Rational};

#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

// Positions never take part in AST equality.
impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}
impl Eq for Span {}
impl PartialOrd for Span {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Span {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}
impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    /// Decimal literal with a point or exponent; exact value.
    Dec(Rational, String),
    Str(String),
    /// Memory side tag `<1>` / `<2>` written directly after an atom.
    Side(u8),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Assign,
    Sample,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    Not,
    Implies,
    Arrow,
    DotDot,
    DotDotEq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::Int(n) => return write!(f, "number `{n}`"),
            Tok::Dec(_, s) => return write!(f, "number `{s}`"),
            Tok::Str(s) => return write!(f, "string {s:?}"),
            Tok::Side(k) => return write!(f, "side tag `<{k}>`"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Assign => "<-",
            Tok::Sample => "<$",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::And => "&&",
            Tok::Or => "||",
            Tok::Not => "!",
            Tok::Implies => "=>",
            Tok::Arrow => "->",
            Tok::DotDot => "..",
            Tok::DotDotEq => "..=",
            Tok::Eof => return write!(f, "end of input"),
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {span}: {message}")]
pub struct SyntaxError {
    pub span: Span,
    pub message: String,
}

impl SyntaxError {
    pub fn new(span: Span, message: impl Into<String>) -> Self {
        Self { span, message: message.into() }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out: Vec<Token> = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    macro_rules! bump {
        ($n:expr) => {{
            for _ in 0..$n {
                if chars[i] == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            bump!(1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump!(1);
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let push = |out: &mut Vec<Token>, tok: Tok| out.push(Token { tok, span });
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!(1);
            }
            push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            let mut decimal = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!(1);
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                decimal = true;
                bump!(1);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!(1);
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    decimal = true;
                    bump!(j - i);
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump!(1);
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            if decimal {
                let q = parse_rational(&text).ok_or_else(|| SyntaxError::new(span, format!("bad number `{text}`")))?;
                push(&mut out, Tok::Dec(q, text));
            } else {
                push(&mut out, Tok::Int(text.parse().expect("digits")));
            }
            continue;
        }
        if c == '"' {
            bump!(1);
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(SyntaxError::new(span, "unterminated string")),
                    Some('"') => {
                        bump!(1);
                        break;
                    }
                    Some('\\') => {
                        let e = chars.get(i + 1).copied();
                        match e {
                            Some('n') => s.push('\n'),
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            _ => return Err(SyntaxError::new(Span { line, col }, "bad escape")),
                        }
                        bump!(2);
                    }
                    Some(&ch) => {
                        s.push(ch);
                        bump!(1);
                    }
                }
            }
            push(&mut out, Tok::Str(s));
            continue;
        }
        // `<1>` directly after an atom is a side tag
        if c == '<'
            && matches!(next, Some('1') | Some('2'))
            && chars.get(i + 2) == Some(&'>')
            && i > 0
            && !chars[i - 1].is_whitespace()
            && matches!(out.last().map(|t| &t.tok), Some(Tok::Ident(_)) | Some(Tok::RParen) | Some(Tok::RBracket))
        {
            let k = if next == Some('1') { 1 } else { 2 };
            bump!(3);
            push(&mut out, Tok::Side(k));
            continue;
        }
        let (tok, len) = match (c, next) {
            ('<', Some('-')) => (Tok::Assign, 2),
            ('<', Some('$')) => (Tok::Sample, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('=', Some('>')) => (Tok::Implies, 2),
            ('=', Some('=')) => (Tok::Eq, 2),
            ('!', Some('=')) => (Tok::Ne, 2),
            ('&', Some('&')) => (Tok::And, 2),
            ('|', Some('|')) => (Tok::Or, 2),
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('.', Some('.')) => {
                if chars.get(i + 2) == Some(&'=') {
                    (Tok::DotDotEq, 3)
                } else {
                    (Tok::DotDot, 2)
                }
            }
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('=', _) => (Tok::Eq, 1),
            ('!', _) => (Tok::Not, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            (',', _) => (Tok::Comma, 1),
            (';', _) => (Tok::Semi, 1),
            (':', _) => (Tok::Colon, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('%', _) => (Tok::Percent, 1),
            _ => return Err(SyntaxError::new(span, format!("unexpected character {c:?}"))),
        };
        bump!(len);
        push(&mut out, tok);
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, col } });
    Ok(out)
}

/// Cursor over a token vector with the usual helpers.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

/// Deepest bracket, block or prefix-operator nesting the parsers accept.
pub const MAX_NESTING: usize = 96;

impl Cursor {
    pub fn new(src: &str) -> Result<Self, SyntaxError> {
        Ok(Self { toks: tokenize(src)?, pos: 0, depth: 0 })
    }

    pub fn from_tokens(toks: Vec<Token>) -> Self {
        Self { toks, pos: 0, depth: 0 }
    }

    /// Runs `f` one nesting level deeper, failing past [`MAX_NESTING`].
    pub fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, SyntaxError>) -> Result<T, SyntaxError> {
        if self.depth >= MAX_NESTING {
            return Err(self.error("nesting too deep"));
        }
        self.depth += 1;
        let r = f(self);
        self.depth -= 1;
        r
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    pub fn at_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    pub fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn eat_ident(&mut self, word: &str) -> bool {
        if self.at_ident(word) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, t: &Tok) -> Result<Span, SyntaxError> {
        if self.at(t) {
            Ok(self.next().span)
        } else {
            Err(self.error(format!("expected {t}, found {}", self.peek())))
        }
    }

    pub fn expect_keyword(&mut self, word: &str) -> Result<Span, SyntaxError> {
        if self.at_ident(word) {
            Ok(self.next().span)
        } else {
            Err(self.error(format!("expected `{word}`, found {}", self.peek())))
        }
    }

    pub fn ident(&mut self) -> Result<(String, Span), SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.next().span)),
            other => Err(self.error(format!("expected identifier, found {other}"))),
        }
    }

    pub fn string(&mut self) -> Result<(String, Span), SyntaxError> {
        match self.peek().clone() {
            Tok::Str(s) => Ok((s, self.next().span)),
            other => Err(self.error(format!("expected string, found {other}"))),
        }
    }

    pub fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError::new(self.span(), message)
    }

    pub fn at_eof(&self) -> bool {
        self.at(&Tok::Eof)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn side_tags_only_when_attached() {
        assert_eq!(
            toks("x<1>=y<2>"),
            vec![Tok::Ident("x".into()), Tok::Side(1), Tok::Eq, Tok::Ident("y".into()), Tok::Side(2), Tok::Eof]
        );
        assert_eq!(toks("x < 1")[1], Tok::Lt);
        assert_eq!(toks("f(x)<2>")[4], Tok::Side(2));
    }

    #[test]
    fn numbers_are_exact() {
        match &toks("0.1 2e-3 7")[..] {
            [Tok::Dec(a, _), Tok::Dec(b, _), Tok::Int(c), Tok::Eof] => {
                assert_eq!(*a, crate::num::rational::ratio(1, 10));
                assert_eq!(*b, crate::num::rational::ratio(1, 500));
                assert_eq!(*c, BigInt::from(7));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn positions_and_comments() {
        let t = tokenize("# c\n  x <- 1").unwrap();
        assert_eq!((t[0].span.line, t[0].span.col), (2, 3));
        assert_eq!(t[1].tok, Tok::Assign);
        assert!(tokenize("x @ y").is_err());
        assert!(tokenize("\"abc").is_err());
    }
}
