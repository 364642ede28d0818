//! Multi-hole contexts.
//!
//! Filling a hole does not rename binders: a context binder captures free
//! variables of the filler, so `λx.[·]` filled with `x` is `λx.x`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::term::{fresh_binder, Kind, Name, Term};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Context {
    /// Hole with a 1-based index.
    Hole(usize),
    Var(Name),
    Abs(Name, Box<Context>),
    App(Box<Context>, Box<Context>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FillError {
    #[error("context has {expected} holes but {got} fillers were given")]
    ArityMismatch { expected: usize, got: usize },
    #[error("hole indices must be exactly 1..={count}, found {found:?}")]
    BadHoleIndices { count: usize, found: Vec<usize> },
    #[error("expected a single-hole context, found {0} holes")]
    NotSingleHole(usize),
}

impl Context {
    pub fn hole(i: usize) -> Context {
        Context::Hole(i)
    }

    pub fn var(name: impl Into<Name>) -> Context {
        Context::Var(name.into())
    }

    pub fn lam(name: impl Into<Name>, body: Context) -> Context {
        Context::Abs(name.into(), Box::new(body))
    }

    pub fn app(fun: Context, arg: Context) -> Context {
        Context::App(Box::new(fun), Box::new(arg))
    }

    /// Reads a term as a hole-free context, choosing binder names the same way
    /// the printer does.
    pub fn from_term(t: &Term) -> Context {
        let free = t.free_vars();
        let mut scope = Vec::new();
        from_term_in(t, &free, &mut scope)
    }

    /// Hole indices in left-to-right order.
    pub fn holes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_holes(&mut out);
        out
    }

    fn collect_holes(&self, out: &mut Vec<usize>) {
        match self {
            Context::Hole(i) => out.push(*i),
            Context::Var(_) => {}
            Context::Abs(_, b) => b.collect_holes(out),
            Context::App(f, a) => {
                f.collect_holes(out);
                a.collect_holes(out);
            }
        }
    }

    pub fn hole_count(&self) -> usize {
        self.holes().len()
    }

    /// Node count with each hole counting as one node.
    pub fn size(&self) -> usize {
        match self {
            Context::Hole(_) | Context::Var(_) => 1,
            Context::Abs(_, b) => 1 + b.size(),
            Context::App(f, a) => 1 + f.size() + a.size(),
        }
    }

    /// Free variables of the context itself (variables not under a matching binder).
    pub fn free_vars(&self) -> BTreeSet<Name> {
        fn go(c: &Context, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
            match c {
                Context::Hole(_) => {}
                Context::Var(x) => {
                    if !bound.contains(x) {
                        out.insert(x.clone());
                    }
                }
                Context::Abs(x, b) => {
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                Context::App(f, a) => {
                    go(f, bound, out);
                    go(a, bound, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// Renumbers holes 1..n from left to right.
    pub fn renumbered(&self) -> Context {
        fn go(c: &Context, next: &mut usize) -> Context {
            match c {
                Context::Hole(_) => {
                    *next += 1;
                    Context::Hole(*next)
                }
                Context::Var(x) => Context::Var(x.clone()),
                Context::Abs(x, b) => Context::lam(x.clone(), go(b, next)),
                Context::App(f, a) => {
                    let f = go(f, next);
                    Context::app(f, go(a, next))
                }
            }
        }
        go(self, &mut 0)
    }

    /// Positional fill `C[M1, ..., Mn]`: hole `i` receives `fillers[i - 1]`.
    pub fn fill(&self, fillers: &[Term]) -> Result<Term, FillError> {
        let holes = self.holes();
        if holes.len() != fillers.len() {
            return Err(FillError::ArityMismatch {
                expected: holes.len(),
                got: fillers.len(),
            });
        }
        let mut sorted = holes.clone();
        sorted.sort_unstable();
        if sorted.iter().enumerate().any(|(k, &i)| i != k + 1) {
            return Err(FillError::BadHoleIndices {
                count: holes.len(),
                found: holes,
            });
        }
        Ok(self.plug(&|i| fillers[i - 1].clone()))
    }

    /// Uniform fill `C⟦M⟧`: every hole receives `filler`.
    pub fn fill_uniform(&self, filler: &Term) -> Term {
        self.plug(&|_| filler.clone())
    }

    /// Fills a context known to have exactly one hole.
    pub fn fill_single(&self, filler: &Term) -> Result<Term, FillError> {
        match self.hole_count() {
            1 => Ok(self.fill_uniform(filler)),
            n => Err(FillError::NotSingleHole(n)),
        }
    }

    fn plug(&self, filler: &dyn Fn(usize) -> Term) -> Term {
        match self {
            Context::Hole(i) => filler(*i),
            Context::Var(x) => Term::var(x.clone()),
            Context::Abs(x, b) => Term::lam(x.clone(), b.plug(filler)),
            Context::App(f, a) => Term::app(f.plug(filler), a.plug(filler)),
        }
    }
}

fn from_term_in(t: &Term, free: &BTreeSet<Name>, scope: &mut Vec<Name>) -> Context {
    match t.kind() {
        Kind::Bound(i) => {
            let i = *i as usize;
            Context::Var(scope[scope.len() - 1 - i].clone())
        }
        Kind::Free(n) => Context::Var(n.clone()),
        Kind::Abs(hint, body) => {
            let name = fresh_binder(hint, free, scope);
            scope.push(name.clone());
            let body = from_term_in(body, free, scope);
            scope.pop();
            Context::Abs(name, Box::new(body))
        }
        Kind::App(f, a) => Context::app(from_term_in(f, free, scope), from_term_in(a, free, scope)),
    }
}

impl serde::Serialize for Context {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Context {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Context, D::Error> {
        let text = String::deserialize(d)?;
        crate::parse::parse_context(&text).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(c: &Context, arg_pos: bool, fun_pos: bool, out: &mut String) {
            match c {
                Context::Hole(i) => out.push_str(&format!("[{i}]")),
                Context::Var(x) => out.push_str(x),
                Context::Abs(x, b) => {
                    let paren = arg_pos || fun_pos;
                    if paren {
                        out.push('(');
                    }
                    out.push('λ');
                    out.push_str(x);
                    out.push('.');
                    go(b, false, false, out);
                    if paren {
                        out.push(')');
                    }
                }
                Context::App(fun, arg) => {
                    if arg_pos {
                        out.push('(');
                    }
                    go(fun, false, true, out);
                    out.push(' ');
                    go(arg, true, false, out);
                    if arg_pos {
                        out.push(')');
                    }
                }
            }
        }
        let mut out = String::new();
        go(self, false, false, &mut out);
        f.write_str(&out)
    }
}
