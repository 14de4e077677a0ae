//! Positioned s-expression reader for PDDL text.

use std::fmt;

use super::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub enum Sexpr {
    Atom(String, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Atom(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom(s, _) => Some(s),
            Sexpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List(items, _) => Some(items),
            Sexpr::Atom(..) => None,
        }
    }

    /// Head keyword of a list, lowercased by the reader.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(Sexpr::as_atom)
    }

    pub fn describe(&self) -> String {
        match self {
            Sexpr::Atom(s, _) => format!("`{s}`"),
            Sexpr::List(items, _) => match items.first().and_then(Sexpr::as_atom) {
                Some(h) => format!("list `({h} ...)`"),
                None => "list".to_string(),
            },
        }
    }
}

/// Reads exactly one top-level expression; trailing content is an error.
pub fn read(text: &str) -> Result<Sexpr, PddlError> {
    let mut reader = Reader { chars: text.chars().collect(), i: 0, line: 1, col: 1 };
    reader.skip_ws();
    if reader.peek().is_none() {
        return Err(reader.syntax("`(`", "end of input"));
    }
    let e = reader.expr()?;
    reader.skip_ws();
    if let Some(c) = reader.peek() {
        return Err(reader.syntax("end of input", &format!("`{c}`")));
    }
    Ok(e)
}

struct Reader {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
}

impl Reader {
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn syntax(&self, expected: &str, found: &str) -> PddlError {
        PddlError::Syntax { pos: self.pos(), expected: expected.to_string(), found: found.to_string() }
    }

    fn expr(&mut self) -> Result<Sexpr, PddlError> {
        let start = self.pos();
        match self.peek() {
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        Some(')') => {
                            self.bump();
                            return Ok(Sexpr::List(items, start));
                        }
                        None => return Err(self.syntax("`)`", "end of input")),
                        _ => items.push(self.expr()?),
                    }
                }
            }
            Some(')') => Err(self.syntax("expression", "`)`")),
            None => Err(self.syntax("expression", "end of input")),
            Some(_) => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c.to_ascii_lowercase());
                    self.bump();
                }
                Ok(Sexpr::Atom(s, start))
            }
        }
    }
}
