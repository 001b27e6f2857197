//! Tokenizer and bracket-aware reader shared by the term syntax and theory files.
//!
//! Three bracket kinds are recognised: `( )` for applications and theory
//! forms, `{ }` for wavefronts and `[ ]` for waveholes. `;` starts a comment
//! that runs to the end of the line.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bracket {
    Paren,
    Brace,
    Square,
}

impl Bracket {
    fn open(self) -> char {
        match self {
            Bracket::Paren => '(',
            Bracket::Brace => '{',
            Bracket::Square => '[',
        }
    }

    fn close(self) -> char {
        match self {
            Bracket::Paren => ')',
            Bracket::Brace => '}',
            Bracket::Square => ']',
        }
    }
}

/// Byte offset and line/column of a token, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String, Span),
    List(Bracket, Vec<Sexp>, Span),
}

impl Sexp {
    pub fn span(&self) -> Span {
        match self {
            Sexp::Atom(_, s) | Sexp::List(_, _, s) => *s,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a, _) => Some(a),
            Sexp::List(..) => None,
        }
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Atom(a, _) => f.write_str(a),
            Sexp::List(b, items, _) => {
                write!(f, "{}", b.open())?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, "{}", b.close())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReadError {
    #[error("{0}: unbalanced brackets: unexpected '{1}'")]
    Unexpected(Span, char),
    #[error("{0}: unbalanced brackets: '{1}' is never closed")]
    Unclosed(Span, char),
    #[error("{0}: mismatched brackets: expected '{1}', found '{2}'")]
    Mismatched(Span, char, char),
    #[error("empty input")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Open(Bracket),
    Close(Bracket),
    Atom(String),
}

fn tokenize(text: &str) -> Vec<(Tok, Span)> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.char_indices().peekable();
    while let Some((off, c)) = chars.next() {
        let span = Span {
            offset: off,
            line,
            column: col,
        };
        let bracket = match c {
            '(' | ')' => Some(Bracket::Paren),
            '{' | '}' => Some(Bracket::Brace),
            '[' | ']' => Some(Bracket::Square),
            _ => None,
        };
        if c == '\n' {
            line += 1;
            col = 1;
            continue;
        }
        col += 1;
        if let Some(b) = bracket {
            if c == b.open() {
                out.push((Tok::Open(b), span));
            } else {
                out.push((Tok::Close(b), span));
            }
        } else if c == ';' {
            while let Some(&(_, n)) = chars.peek() {
                if n == '\n' {
                    break;
                }
                chars.next();
            }
        } else if !c.is_whitespace() {
            let mut atom = String::from(c);
            while let Some(&(_, n)) = chars.peek() {
                if n.is_whitespace() || "(){}[];".contains(n) {
                    break;
                }
                atom.push(n);
                col += 1;
                chars.next();
            }
            out.push((Tok::Atom(atom), span));
        }
    }
    out
}

/// Reads every top-level expression in `text`.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, ReadError> {
    let toks = tokenize(text);
    let mut stack: Vec<(Bracket, Vec<Sexp>, Span)> = Vec::new();
    let mut top = Vec::new();
    for (tok, span) in toks {
        match tok {
            Tok::Atom(a) => {
                let e = Sexp::Atom(a, span);
                match stack.last_mut() {
                    Some((_, items, _)) => items.push(e),
                    None => top.push(e),
                }
            }
            Tok::Open(b) => stack.push((b, Vec::new(), span)),
            Tok::Close(b) => {
                let Some((ob, items, ospan)) = stack.pop() else {
                    return Err(ReadError::Unexpected(span, b.close()));
                };
                if ob != b {
                    return Err(ReadError::Mismatched(span, ob.close(), b.close()));
                }
                let e = Sexp::List(b, items, ospan);
                match stack.last_mut() {
                    Some((_, items, _)) => items.push(e),
                    None => top.push(e),
                }
            }
        }
    }
    if let Some((b, _, span)) = stack.pop() {
        return Err(ReadError::Unclosed(span, b.open()));
    }
    Ok(top)
}

/// Reads exactly one expression.
pub fn read_one(text: &str) -> Result<Sexp, ReadError> {
    let mut all = read_all(text)?;
    match all.len() {
        0 => Err(ReadError::Empty),
        1 => Ok(all.pop().unwrap()),
        _ => {
            let extra = &all[1];
            let span = extra.span();
            let c = match extra {
                Sexp::Atom(a, _) => a.chars().next().unwrap_or(' '),
                Sexp::List(b, _, _) => b.open(),
            };
            Err(ReadError::Unexpected(span, c))
        }
    }
}
