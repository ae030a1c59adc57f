use std::fmt;

use crate::diagnostic::Span;
use crate::frontend::FrontendError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    /// `integer` is set when the literal has neither a fraction nor an exponent.
    Number { value: f64, integer: bool },
    Str(String),
    Colon,
    Semi,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Eq,
    Tilde,
    Plus,
    Minus,
    Star,
    StarStar,
    Slash,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Number { value, .. } => write!(f, "number `{value}`"),
            TokenKind::Str(s) => write!(f, "string \"{s}\""),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::Semi => f.write_str("`;`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::Eq => f.write_str("`=`"),
            TokenKind::Tilde => f.write_str("`~`"),
            TokenKind::Plus => f.write_str("`+`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::StarStar => f.write_str("`**`"),
            TokenKind::Slash => f.write_str("`/`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.text[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
    }
}

/// Splits source text into tokens. `#` starts a comment running to the end
/// of the line; comments and whitespace produce no tokens.
pub fn tokenize(text: &str) -> Result<Vec<Token>, FrontendError> {
    let mut cur = Cursor { text, pos: 0, line: 1, col: 1 };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            cur.eat_while(|c| c != '\n');
            continue;
        }
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            cur.eat_while(|c| c.is_ascii_alphanumeric() || c == '_');
            TokenKind::Ident(text[start..cur.pos].to_string())
        } else if c.is_ascii_digit() {
            lex_number(&mut cur, start, line, col)?
        } else if c == '"' {
            cur.bump();
            cur.eat_while(|c| c != '"' && c != '\n');
            if cur.peek() != Some('"') {
                return Err(FrontendError::Lex {
                    span: Span::new(start, cur.pos, line, col),
                    message: "unterminated string literal".into(),
                });
            }
            cur.bump();
            TokenKind::Str(text[start + 1..cur.pos - 1].to_string())
        } else {
            cur.bump();
            match c {
                ':' => TokenKind::Colon,
                ';' => TokenKind::Semi,
                ',' => TokenKind::Comma,
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                '{' => TokenKind::LBrace,
                '}' => TokenKind::RBrace,
                '=' => TokenKind::Eq,
                '~' => TokenKind::Tilde,
                '+' => TokenKind::Plus,
                '-' => TokenKind::Minus,
                '/' => TokenKind::Slash,
                '*' if cur.peek() == Some('*') => {
                    cur.bump();
                    TokenKind::StarStar
                }
                '*' => TokenKind::Star,
                other => {
                    return Err(FrontendError::Lex {
                        span: Span::new(start, cur.pos, line, col),
                        message: format!("illegal character `{other}`"),
                    })
                }
            }
        };
        tokens.push(Token { kind, span: Span::new(start, cur.pos, line, col) });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>, start: usize, line: u32, col: u32) -> Result<TokenKind, FrontendError> {
    let mut integer = true;
    cur.eat_while(|c| c.is_ascii_digit());
    if cur.peek() == Some('.') && cur.peek_second().is_some_and(|c| c.is_ascii_digit()) {
        integer = false;
        cur.bump();
        cur.eat_while(|c| c.is_ascii_digit());
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let has_digits = match cur.peek_second() {
            Some(d) if d.is_ascii_digit() => true,
            Some('+' | '-') => {
                let rest = &cur.text[cur.pos + 2..];
                rest.chars().next().is_some_and(|c| c.is_ascii_digit())
            }
            _ => false,
        };
        if has_digits {
            integer = false;
            cur.bump();
            if matches!(cur.peek(), Some('+' | '-')) {
                cur.bump();
            }
            cur.eat_while(|c| c.is_ascii_digit());
        }
    }
    let lexeme = &cur.text[start..cur.pos];
    let value = lexeme.parse::<f64>().map_err(|_| FrontendError::Lex {
        span: Span::new(start, cur.pos, line, col),
        message: format!("malformed number `{lexeme}`"),
    })?;
    Ok(TokenKind::Number { value, integer })
}
