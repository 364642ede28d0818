//! Locally nameless λ-terms.
//!
//! Bound variables are de Bruijn indices, free variables are names. Binder
//! names survive only as printing hints and take no part in equality or
//! hashing, so `==` on [`Term`] is α-equivalence.

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// Variable names. Cheap to clone and shareable across threads.
pub type Name = Arc<str>;

/// An immutable, structurally shared λ-term.
#[derive(Clone)]
pub struct Term(Arc<Node>);

struct Node {
    kind: Kind,
    size: u64,
    /// One more than the largest dangling de Bruijn index; 0 when locally closed.
    loose: u32,
    has_free: bool,
}

/// The shape of a term node.
#[derive(Clone, Debug)]
pub enum Kind {
    /// De Bruijn index counting enclosing binders from the inside out.
    Bound(u32),
    Free(Name),
    /// Abstraction; the name is a hint for printing only.
    Abs(Name, Term),
    App(Term, Term),
}

impl Term {
    fn from_kind(kind: Kind) -> Term {
        let (size, loose, has_free) = match &kind {
            Kind::Bound(i) => (1, i + 1, false),
            Kind::Free(_) => (1, 0, true),
            Kind::Abs(_, body) => (
                body.size().saturating_add(1),
                body.0.loose.saturating_sub(1),
                body.0.has_free,
            ),
            Kind::App(f, a) => (
                f.size().saturating_add(a.size()).saturating_add(1),
                f.0.loose.max(a.0.loose),
                f.0.has_free || a.0.has_free,
            ),
        };
        Term(Arc::new(Node {
            kind,
            size,
            loose,
            has_free,
        }))
    }

    /// A free variable.
    pub fn var(name: impl Into<Name>) -> Term {
        Term::from_kind(Kind::Free(name.into()))
    }

    /// A raw de Bruijn index. Only meaningful underneath enough binders.
    pub fn bound(index: u32) -> Term {
        Term::from_kind(Kind::Bound(index))
    }

    /// `λname. body`, binding every free occurrence of `name` in `body`.
    pub fn lam(name: impl Into<Name>, body: Term) -> Term {
        let name = name.into();
        let body = abstract_name(&body, &name, 0);
        Term::from_kind(Kind::Abs(name, body))
    }

    /// An abstraction whose body already uses index 0 for its binder.
    pub fn abs_indexed(hint: impl Into<Name>, body: Term) -> Term {
        Term::from_kind(Kind::Abs(hint.into(), body))
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        Term::from_kind(Kind::App(fun, arg))
    }

    /// `head a1 ... an`, left-associated.
    pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    /// Node count: variables, abstractions and applications each count one.
    pub fn size(&self) -> u64 {
        self.0.size
    }

    pub fn is_locally_closed(&self) -> bool {
        self.0.loose == 0
    }

    pub fn has_free_vars(&self) -> bool {
        self.0.has_free
    }

    /// No free names and no dangling indices.
    pub fn is_closed(&self) -> bool {
        self.0.loose == 0 && !self.0.has_free
    }

    pub fn is_abs(&self) -> bool {
        matches!(self.kind(), Kind::Abs(..))
    }

    /// Values are closed abstractions.
    pub fn is_value(&self) -> bool {
        self.is_abs() && self.is_closed()
    }

    pub fn as_app(&self) -> Option<(&Term, &Term)> {
        match self.kind() {
            Kind::App(f, a) => Some((f, a)),
            _ => None,
        }
    }

    pub fn as_abs(&self) -> Option<(&Name, &Term)> {
        match self.kind() {
            Kind::Abs(n, b) => Some((n, b)),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            if !t.0.has_free {
                continue;
            }
            match t.kind() {
                Kind::Free(n) => {
                    out.insert(n.clone());
                }
                Kind::Bound(_) => {}
                Kind::Abs(_, b) => stack.push(b),
                Kind::App(f, a) => {
                    stack.push(f);
                    stack.push(a);
                }
            }
        }
        out
    }

    /// Splits `h a1 ... an` into `h` and `[a1, ..., an]`.
    pub fn spine(&self) -> (Term, Vec<Term>) {
        let mut args = Vec::new();
        let mut head = self;
        while let Kind::App(f, a) = head.kind() {
            args.push(a.clone());
            head = f;
        }
        args.reverse();
        (head.clone(), args)
    }

    /// Capture-avoiding substitution `self[arg/var]` of a free variable.
    pub fn substitute(&self, var: &str, arg: &Term) -> Term {
        assert!(
            arg.is_locally_closed(),
            "substituted term must not contain dangling indices"
        );
        subst_free(self, var, arg)
    }

    /// Opens an abstraction body with `arg`: `(λ.body)` applied gives `body[arg/0]`.
    pub fn instantiate(body: &Term, arg: &Term) -> Term {
        instantiate_at(body, 0, arg)
    }

    /// β-contracts `(λx.P) N` when `self` is an abstraction.
    pub fn apply_abs(&self, arg: &Term) -> Option<Term> {
        self.as_abs().map(|(_, body)| Term::instantiate(body, arg))
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Printed form, or a size placeholder when the term is larger than `limit` nodes.
    pub fn display_bounded(&self, limit: u64) -> String {
        if self.size() <= limit {
            self.to_string()
        } else {
            format!("<term of {} nodes>", self.size())
        }
    }
}

/// α-equivalence. Identical to `a == b`.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    a == b
}

fn abstract_name(t: &Term, name: &str, depth: u32) -> Term {
    if !t.0.has_free {
        return t.clone();
    }
    match t.kind() {
        Kind::Free(n) if &**n == name => Term::bound(depth),
        Kind::Free(_) | Kind::Bound(_) => t.clone(),
        Kind::Abs(h, b) => Term::abs_indexed(h.clone(), abstract_name(b, name, depth + 1)),
        Kind::App(f, a) => Term::app(abstract_name(f, name, depth), abstract_name(a, name, depth)),
    }
}

fn subst_free(t: &Term, name: &str, arg: &Term) -> Term {
    if !t.0.has_free {
        return t.clone();
    }
    match t.kind() {
        Kind::Free(n) if &**n == name => arg.clone(),
        Kind::Free(_) | Kind::Bound(_) => t.clone(),
        Kind::Abs(h, b) => Term::abs_indexed(h.clone(), subst_free(b, name, arg)),
        Kind::App(f, a) => Term::app(subst_free(f, name, arg), subst_free(a, name, arg)),
    }
}

fn instantiate_at(t: &Term, depth: u32, arg: &Term) -> Term {
    if t.0.loose <= depth {
        return t.clone();
    }
    match t.kind() {
        Kind::Bound(i) if *i == depth => arg.clone(),
        Kind::Bound(i) => Term::bound(i - 1),
        Kind::Free(_) => t.clone(),
        Kind::Abs(h, b) => Term::abs_indexed(h.clone(), instantiate_at(b, depth + 1, arg)),
        Kind::App(f, a) => Term::app(instantiate_at(f, depth, arg), instantiate_at(a, depth, arg)),
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        let mut stack = vec![(self, other)];
        while let Some((a, b)) = stack.pop() {
            if a.ptr_eq(b) {
                continue;
            }
            if a.0.size != b.0.size || a.0.loose != b.0.loose || a.0.has_free != b.0.has_free {
                return false;
            }
            match (a.kind(), b.kind()) {
                (Kind::Bound(i), Kind::Bound(j)) if i == j => {}
                (Kind::Free(x), Kind::Free(y)) if x == y => {}
                (Kind::Abs(_, p), Kind::Abs(_, q)) => stack.push((p, q)),
                (Kind::App(f, a), Kind::App(g, b)) => {
                    stack.push((a, b));
                    stack.push((f, g));
                }
                _ => return false,
            }
        }
        true
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t.kind() {
                Kind::Bound(i) => {
                    0u8.hash(state);
                    i.hash(state);
                }
                Kind::Free(n) => {
                    1u8.hash(state);
                    n.hash(state);
                }
                Kind::Abs(_, b) => {
                    2u8.hash(state);
                    stack.push(b);
                }
                Kind::App(f, a) => {
                    3u8.hash(state);
                    stack.push(a);
                    stack.push(f);
                }
            }
        }
    }
}

impl Drop for Node {
    fn drop(&mut self) {
        // Long application spines from diverging evaluations would otherwise
        // overflow the stack through recursive Arc drops.
        let mut pending: Vec<Term> = Vec::new();
        take_children(&mut self.kind, &mut pending);
        while let Some(t) = pending.pop() {
            if let Ok(mut node) = Arc::try_unwrap(t.0) {
                take_children(&mut node.kind, &mut pending);
            }
        }
    }
}

fn take_children(kind: &mut Kind, out: &mut Vec<Term>) {
    match std::mem::replace(kind, Kind::Bound(0)) {
        Kind::Abs(_, b) => out.push(b),
        Kind::App(f, a) => {
            out.push(f);
            out.push(a);
        }
        Kind::Bound(_) | Kind::Free(_) => {}
    }
}

impl serde::Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Term {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Term, D::Error> {
        let text = String::deserialize(d)?;
        crate::parse::parse_term(&text).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Term({self})")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let free = self.free_vars();
        let mut scope = Vec::new();
        let mut out = String::new();
        print_term(self, &free, &mut scope, &mut out, Position::Top);
        f.write_str(&out)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Position {
    Top,
    Fun,
    Arg,
}

/// Picks a printable binder name: the hint unless it clashes with a free
/// variable or an enclosing binder, in which case a numeric suffix is added.
pub(crate) fn fresh_binder(hint: &str, free: &BTreeSet<Name>, scope: &[Name]) -> Name {
    let base: &str = hint.trim_end_matches(|c: char| c.is_ascii_digit());
    let base = if base.is_empty() { "x" } else { base };
    let taken = |n: &str| free.iter().any(|f| &**f == n) || scope.iter().any(|s| &**s == n);
    if !taken(hint) {
        return hint.into();
    }
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|c| !taken(c))
        .map(Name::from)
        .unwrap()
}

fn print_term(
    t: &Term,
    free: &BTreeSet<Name>,
    scope: &mut Vec<Name>,
    out: &mut String,
    pos: Position,
) {
    match t.kind() {
        Kind::Bound(i) => {
            let i = *i as usize;
            if i < scope.len() {
                out.push_str(&scope[scope.len() - 1 - i]);
            } else {
                out.push_str(&format!("#{}", i - scope.len()));
            }
        }
        Kind::Free(n) => out.push_str(n),
        Kind::Abs(hint, body) => {
            let paren = pos != Position::Top;
            if paren {
                out.push('(');
            }
            let name = fresh_binder(hint, free, scope);
            out.push('λ');
            out.push_str(&name);
            out.push('.');
            scope.push(name);
            print_term(body, free, scope, out, Position::Top);
            scope.pop();
            if paren {
                out.push(')');
            }
        }
        Kind::App(fun, arg) => {
            let paren = pos == Position::Arg;
            if paren {
                out.push('(');
            }
            print_term(fun, free, scope, out, Position::Fun);
            out.push(' ');
            print_term(arg, free, scope, out, Position::Arg);
            if paren {
                out.push(')');
            }
        }
    }
}

/// Frequently used closed terms.
pub mod named {
    use super::Term;

    /// `λx.x`
    pub fn identity() -> Term {
        Term::lam("x", Term::var("x"))
    }

    /// `(λx.x x)(λx.x x)`
    pub fn omega() -> Term {
        let delta = Term::lam("x", Term::app(Term::var("x"), Term::var("x")));
        Term::app(delta.clone(), delta)
    }

    /// `λx.λy.x`
    pub fn k() -> Term {
        Term::lam("x", Term::lam("y", Term::var("x")))
    }
}
