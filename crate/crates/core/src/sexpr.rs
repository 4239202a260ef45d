//! Minimal s-expression reader with source positions.
//!
//! Identifiers are folded to lowercase while reading. Comments start with `;`
//! and run to the end of the line. Nesting depth is bounded so that hostile
//! input cannot exhaust the stack during parsing or drop.

use std::fmt;

/// Maximum list nesting accepted by [`parse`].
pub const MAX_DEPTH: usize = 256;

/// 1-based line/column of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexpr {
    Atom(String, Span),
    List(Vec<Sexpr>, Span),
}

impl Sexpr {
    pub fn span(&self) -> Span {
        match self {
            Sexpr::Atom(_, s) | Sexpr::List(_, s) => *s,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(a, _) => Some(a),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Atom(..) => None,
        }
    }

    /// Head keyword of a list, e.g. `and` for `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(Sexpr::as_atom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct SyntaxError {
    pub span: Span,
    pub message: String,
}

impl SyntaxError {
    fn new(span: Span, message: impl Into<String>) -> Self {
        SyntaxError { span, message: message.into() }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

enum Token {
    Open(Span),
    Close(Span),
    Atom(String, Span),
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { chars: text.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Span {
        Span { line: self.line, col: self.col }
    }

    fn next_token(&mut self) -> Option<Token> {
        loop {
            let c = *self.chars.peek()?;
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
        let span = self.pos();
        match self.bump()? {
            '(' => Some(Token::Open(span)),
            ')' => Some(Token::Close(span)),
            first => {
                let mut s = String::new();
                s.extend(first.to_lowercase());
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.extend(c.to_lowercase());
                    self.bump();
                }
                Some(Token::Atom(s, span))
            }
        }
    }
}

/// Parse exactly one top-level s-expression from `text`.
pub fn parse(text: &str) -> Result<Sexpr, SyntaxError> {
    let mut lexer = Lexer::new(text);
    // Open lists under construction; the stack replaces recursion.
    let mut stack: Vec<(Vec<Sexpr>, Span)> = Vec::new();
    let mut result: Option<Sexpr> = None;

    while let Some(tok) = lexer.next_token() {
        if result.is_some() {
            let span = match &tok {
                Token::Open(s) | Token::Close(s) | Token::Atom(_, s) => *s,
            };
            return Err(SyntaxError::new(span, "unexpected content after top-level expression"));
        }
        let finished = match tok {
            Token::Open(span) => {
                if stack.len() >= MAX_DEPTH {
                    return Err(SyntaxError::new(span, "nesting too deep"));
                }
                stack.push((Vec::new(), span));
                None
            }
            Token::Close(span) => match stack.pop() {
                Some((items, open)) => Some(Sexpr::List(items, open)),
                None => return Err(SyntaxError::new(span, "unbalanced ')'")),
            },
            Token::Atom(a, span) => Some(Sexpr::Atom(a, span)),
        };
        if let Some(expr) = finished {
            match stack.last_mut() {
                Some((items, _)) => items.push(expr),
                None => result = Some(expr),
            }
        }
    }
    if let Some((_, open)) = stack.last() {
        return Err(SyntaxError::new(*open, "unclosed '('"));
    }
    result.ok_or_else(|| SyntaxError::new(lexer.pos(), "empty input"))
}
