//! A small S-expression reader with source positions.
//!
//! Used both for SMT-LIB2 input files and for solver responses.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Line/column position (both 1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
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
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct ReadError {
    pub pos: Pos,
    pub msg: &'static str,
}

/// Reads every top-level S-expression in `text`.
pub fn read_all(text: &str) -> Result<Vec<SExpr>, ReadError> {
    let mut reader = Reader::new(text);
    let mut out = Vec::new();
    while let Some(e) = reader.next_expr()? {
        out.push(e);
    }
    Ok(out)
}

/// Incremental reader; `next_expr` returns `None` at end of input.
pub struct Reader<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Reader<'a> {
    pub fn new(text: &'a str) -> Self {
        Reader {
            chars: text.chars().peekable(),
            pos: Pos { line: 1, col: 1 },
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.col = 1;
        } else {
            self.pos.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    pub fn next_expr(&mut self) -> Result<Option<SExpr>, ReadError> {
        self.skip_trivia();
        let start = self.pos;
        match self.chars.peek() {
            None => Ok(None),
            Some(')') => Err(ReadError {
                pos: start,
                msg: "unexpected `)`",
            }),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        None => {
                            return Err(ReadError {
                                pos: start,
                                msg: "unclosed `(`",
                            })
                        }
                        Some(')') => {
                            self.bump();
                            return Ok(Some(SExpr::List(items, start)));
                        }
                        Some(_) => {
                            // cannot be None: input is non-empty here
                            if let Some(e) = self.next_expr()? {
                                items.push(e);
                            }
                        }
                    }
                }
            }
            Some('|') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => {
                            return Err(ReadError {
                                pos: start,
                                msg: "unterminated quoted symbol",
                            })
                        }
                        Some('|') => break,
                        Some(c) => s.push(c),
                    }
                }
                Ok(Some(SExpr::Atom(s, start)))
            }
            Some('"') => {
                self.bump();
                let mut s = String::from("\"");
                loop {
                    match self.bump() {
                        None => {
                            return Err(ReadError {
                                pos: start,
                                msg: "unterminated string literal",
                            })
                        }
                        Some('"') => {
                            if self.chars.peek() == Some(&'"') {
                                self.bump();
                                s.push('"');
                            } else {
                                break;
                            }
                        }
                        Some(c) => s.push(c),
                    }
                }
                s.push('"');
                Ok(Some(SExpr::Atom(s, start)))
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' || c == '|' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Some(SExpr::Atom(s, start)))
            }
        }
    }
}
