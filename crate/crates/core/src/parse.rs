//! Concrete syntax for terms and contexts.
//!
//! ```text
//! term    ::= lambda | app
//! lambda  ::= ('\' | 'λ') ident+ '.' term
//! app     ::= atom+ lambda?
//! atom    ::= ident | '(' term ')' | '[' digits? ']'
//! ident   ::= [a-zA-Z_][a-zA-Z0-9_']*
//! ```
//!
//! Holes (`[i]`, `[]`) are only accepted by [`parse_context`]. Unnumbered
//! holes take their left-to-right position among all holes.

use thiserror::Error;

use crate::context::Context;
use crate::term::Term;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("holes are not allowed in terms (offset {pos})")]
    HoleInTerm { pos: usize },
    #[error("term is not closed; free variables: {0}")]
    Unbound(String),
}

pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text, false);
    let c = p.parse_all()?;
    Ok(c.fill(&[]).expect("hole-free context"))
}

/// Parses a term and requires it to be closed.
pub fn parse_closed_term(text: &str) -> Result<Term, ParseError> {
    let t = parse_term(text)?;
    if t.is_closed() {
        Ok(t)
    } else {
        let fv: Vec<String> = t.free_vars().iter().map(|n| n.to_string()).collect();
        Err(ParseError::Unbound(fv.join(", ")))
    }
}

pub fn parse_context(text: &str) -> Result<Context, ParseError> {
    let mut p = Parser::new(text, true);
    let c = p.parse_all()?;
    // `[]` holes are parsed as index 0 and numbered by position here.
    let holes = c.holes();
    if holes.contains(&0) {
        Ok(number_anonymous(&c, &mut 0))
    } else {
        Ok(c)
    }
}

fn number_anonymous(c: &Context, seen: &mut usize) -> Context {
    match c {
        Context::Hole(i) => {
            *seen += 1;
            Context::Hole(if *i == 0 { *seen } else { *i })
        }
        Context::Var(x) => Context::Var(x.clone()),
        Context::Abs(x, b) => Context::lam(x.clone(), number_anonymous(b, seen)),
        Context::App(f, a) => {
            let f = number_anonymous(f, seen);
            Context::app(f, number_anonymous(a, seen))
        }
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    holes_allowed: bool,
}

impl Parser {
    fn new(text: &str, holes_allowed: bool) -> Parser {
        Parser {
            chars: text.chars().collect(),
            pos: 0,
            holes_allowed,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn parse_all(&mut self) -> Result<Context, ParseError> {
        let c = self.parse_expr()?;
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Ok(c)
    }

    fn parse_expr(&mut self) -> Result<Context, ParseError> {
        match self.peek() {
            Some('\\') | Some('λ') => self.parse_lambda(),
            _ => self.parse_app(),
        }
    }

    fn parse_lambda(&mut self) -> Result<Context, ParseError> {
        self.pos += 1;
        let mut binders = Vec::new();
        while let Some(c) = self.peek() {
            if c == '.' {
                break;
            }
            binders.push(self.parse_ident()?);
        }
        if binders.is_empty() {
            return self.err("expected a binder after λ");
        }
        self.expect('.')?;
        let body = self.parse_expr()?;
        Ok(binders
            .into_iter()
            .rev()
            .fold(body, |acc, x| Context::lam(x, acc)))
    }

    fn parse_app(&mut self) -> Result<Context, ParseError> {
        let mut acc = match self.parse_atom()? {
            Some(a) => a,
            None => return self.err("expected a term"),
        };
        loop {
            match self.peek() {
                Some('\\') | Some('λ') => {
                    let lam = self.parse_lambda()?;
                    return Ok(Context::app(acc, lam));
                }
                _ => match self.parse_atom()? {
                    Some(a) => acc = Context::app(acc, a),
                    None => return Ok(acc),
                },
            }
        }
    }

    fn parse_atom(&mut self) -> Result<Option<Context>, ParseError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.parse_expr()?;
                self.expect(')')?;
                Ok(Some(e))
            }
            Some('[') => {
                let start = self.pos;
                if !self.holes_allowed {
                    return Err(ParseError::HoleInTerm { pos: start });
                }
                self.pos += 1;
                self.skip_ws();
                let mut digits = String::new();
                while let Some(c) = self.chars.get(self.pos).copied() {
                    if c.is_ascii_digit() {
                        digits.push(c);
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.expect(']')?;
                if digits.is_empty() {
                    Ok(Some(Context::Hole(0)))
                } else {
                    let i: usize = digits.parse().map_err(|_| ParseError::Syntax {
                        pos: start,
                        msg: "bad hole index".into(),
                    })?;
                    if i == 0 {
                        self.pos = start;
                        return self.err("hole indices start at 1");
                    }
                    Ok(Some(Context::Hole(i)))
                }
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => Ok(Some(Context::var(self.parse_ident()?))),
            _ => Ok(None),
        }
    }

    fn parse_ident(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let mut s = String::new();
        match self.chars.get(self.pos) {
            Some(&c) if c.is_ascii_alphabetic() || c == '_' => {
                s.push(c);
                self.pos += 1;
            }
            _ => return self.err("expected an identifier"),
        }
        while let Some(&c) = self.chars.get(self.pos) {
            if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(s)
    }
}
