//! Minimal s-expression reader with source positions.

use super::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SExpr {
    Atom(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Atom(..) => None,
        }
    }

    /// Case-insensitive comparison against a keyword.
    pub fn is_keyword(&self, kw: &str) -> bool {
        self.as_atom().is_some_and(|s| s.eq_ignore_ascii_case(kw))
    }

    /// The head symbol of a list, lowercased.
    pub fn head_keyword(&self) -> Option<String> {
        self.as_list()
            .and_then(|items| items.first())
            .and_then(SExpr::as_atom)
            .map(str::to_ascii_lowercase)
    }
}

enum Token {
    Open(Pos),
    Close(Pos),
    Sym(String, Pos),
}

fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();
    let mut current: Option<(String, Pos)> = None;

    let flush = |current: &mut Option<(String, Pos)>, tokens: &mut Vec<Token>| {
        if let Some((s, p)) = current.take() {
            tokens.push(Token::Sym(s, p));
        }
    };

    while let Some(c) = chars.next() {
        let pos = Pos { line, col };
        match c {
            ';' => {
                flush(&mut current, &mut tokens);
                while let Some(&n) = chars.peek() {
                    if n == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                flush(&mut current, &mut tokens);
                tokens.push(Token::Open(pos));
            }
            ')' => {
                flush(&mut current, &mut tokens);
                tokens.push(Token::Close(pos));
            }
            c if c.is_whitespace() => flush(&mut current, &mut tokens),
            c => match &mut current {
                Some((s, _)) => s.push(c),
                None => current = Some((c.to_string(), pos)),
            },
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

/// Parses exactly one top-level expression.
pub fn parse(text: &str) -> Result<SExpr, PddlError> {
    let tokens = tokenize(text);
    let mut stack: Vec<(Vec<SExpr>, Pos)> = Vec::new();
    let mut result: Option<SExpr> = None;

    for tok in tokens {
        if result.is_some() {
            let pos = match &tok {
                Token::Open(p) | Token::Close(p) | Token::Sym(_, p) => *p,
            };
            return Err(PddlError::syntax(pos, "unexpected content after top-level expression"));
        }
        match tok {
            Token::Open(p) => stack.push((Vec::new(), p)),
            Token::Close(p) => {
                let (items, open) = stack
                    .pop()
                    .ok_or_else(|| PddlError::syntax(p, "unbalanced ')'"))?;
                let list = SExpr::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => result = Some(list),
                }
            }
            Token::Sym(s, p) => match stack.last_mut() {
                Some((parent, _)) => parent.push(SExpr::Atom(s, p)),
                None => return Err(PddlError::syntax(p, format!("symbol '{s}' outside of any list"))),
            },
        }
    }
    if let Some((_, open)) = stack.last() {
        return Err(PddlError::syntax(*open, "unclosed '('"));
    }
    result.ok_or_else(|| PddlError::syntax(Pos { line: 1, col: 1 }, "empty input"))
}
