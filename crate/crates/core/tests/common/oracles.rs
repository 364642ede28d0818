//! Independent oracles for the integration tests: a named-term interpreter
//! that follows the reduction rules literally, and brute-force closure
//! membership by context enumeration.

#![allow(dead_code)]

use std::collections::BTreeSet;

use clb_core::closures::{member_closed_closure, member_eccn, member_eccv, member_open_closure, RelationView};
use clb_core::enumerate::{closed_terms_up_to, ContextEnumerator};
use clb_core::relation::FiniteRelation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use clb_core::term::Kind;
use clb_core::{Context, Strategy as Eval, Term};

/// Named λ-terms with textbook capture-avoiding substitution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum N {
    Var(String),
    Lam(String, Box<N>),
    App(Box<N>, Box<N>),
}

pub fn var(x: &str) -> N {
    N::Var(x.into())
}

pub fn lam(x: &str, b: N) -> N {
    N::Lam(x.into(), Box::new(b))
}

pub fn app(f: N, a: N) -> N {
    N::App(Box::new(f), Box::new(a))
}

impl N {
    pub fn free(&self) -> BTreeSet<String> {
        match self {
            N::Var(x) => [x.clone()].into(),
            N::Lam(x, b) => {
                let mut s = b.free();
                s.remove(x);
                s
            }
            N::App(f, a) => {
                let mut s = f.free();
                s.extend(a.free());
                s
            }
        }
    }

    fn names(&self, out: &mut BTreeSet<String>) {
        match self {
            N::Var(x) => {
                out.insert(x.clone());
            }
            N::Lam(x, b) => {
                out.insert(x.clone());
                b.names(out);
            }
            N::App(f, a) => {
                f.names(out);
                a.names(out);
            }
        }
    }

    /// `self[s/x]`, renaming binders that would capture free names of `s`.
    pub fn subst(&self, x: &str, s: &N) -> N {
        match self {
            N::Var(y) if y == x => s.clone(),
            N::Var(_) => self.clone(),
            N::App(f, a) => app(f.subst(x, s), a.subst(x, s)),
            N::Lam(y, _) if y == x => self.clone(),
            N::Lam(y, b) => {
                let fs = s.free();
                if fs.contains(y) && b.free().contains(x) {
                    let mut avoid = fs;
                    b.names(&mut avoid);
                    avoid.insert(x.to_string());
                    let fresh = (0..).map(|i| format!("{y}_{i}")).find(|c| !avoid.contains(c)).unwrap();
                    let renamed = b.subst(y, &N::Var(fresh.clone()));
                    N::Lam(fresh, Box::new(renamed.subst(x, s)))
                } else {
                    N::Lam(y.clone(), Box::new(b.subst(x, s)))
                }
            }
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self, N::Lam(..))
    }

    /// One step of the printed reduction rules.
    pub fn step(&self, s: Eval) -> Option<N> {
        let N::App(f, a) = self else { return None };
        match s {
            Eval::Cbn => match &**f {
                N::Lam(x, b) => Some(b.subst(x, a)),
                _ => Some(app(f.step(s)?, (**a).clone())),
            },
            Eval::Cbv => {
                if !a.is_value() {
                    return Some(app((**f).clone(), a.step(s)?));
                }
                if !f.is_value() {
                    return Some(app(f.step(s)?, (**a).clone()));
                }
                let N::Lam(x, b) = &**f else { unreachable!() };
                Some(b.subst(x, a))
            }
        }
    }

    /// de Bruijn rendering used to compare modulo α without the crate.
    pub fn debruijn(&self) -> String {
        fn go(t: &N, scope: &mut Vec<String>, out: &mut String) {
            match t {
                N::Var(x) => match scope.iter().rev().position(|y| y == x) {
                    Some(i) => out.push_str(&format!("#{i}")),
                    None => out.push_str(&format!("${x}")),
                },
                N::Lam(x, b) => {
                    out.push_str("L(");
                    scope.push(x.clone());
                    go(b, scope, out);
                    scope.pop();
                    out.push(')');
                }
                N::App(f, a) => {
                    out.push_str("A(");
                    go(f, scope, out);
                    out.push(',');
                    go(a, scope, out);
                    out.push(')');
                }
            }
        }
        let mut out = String::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn to_term(&self) -> Term {
        match self {
            N::Var(x) => Term::var(x.as_str()),
            N::Lam(x, b) => Term::lam(x.as_str(), b.to_term()),
            N::App(f, a) => Term::app(f.to_term(), a.to_term()),
        }
    }

    pub fn size(&self) -> u64 {
        match self {
            N::Var(_) => 1,
            N::Lam(_, b) => 1 + b.size(),
            N::App(f, a) => 1 + f.size() + a.size(),
        }
    }

    /// Textual form in the crate's concrete syntax, fully parenthesized.
    pub fn source(&self) -> String {
        match self {
            N::Var(x) => x.clone(),
            N::Lam(x, b) => format!("(\\{x}. {})", b.source()),
            N::App(f, a) => format!("({} {})", f.source(), a.source()),
        }
    }
}

/// `(m, n) ∈ r°` by enumerating every context of at most `bound` nodes
/// (variables from `pool`) and every assignment of pairs of `r` to holes.
pub fn brute_open_closure(r: &FiniteRelation, m: &Term, n: &Term, bound: usize, pool: &[&str]) -> bool {
    let base: Vec<(Term, Term)> = r.pairs().cloned().collect();
    let mut e = ContextEnumerator::new(pool.iter().map(|p| (*p).into()).collect());
    for size in 1..=bound {
        for holes in 0..=size {
            if holes > 0 && base.is_empty() {
                continue;
            }
            for c in e.of_size(size, holes) {
                if fills_to(&c, &base, m, n) {
                    return true;
                }
            }
        }
    }
    false
}

fn fills_to(c: &Context, base: &[(Term, Term)], m: &Term, n: &Term) -> bool {
    let k = c.hole_count();
    let mut choice = vec![0usize; k];
    loop {
        let left: Vec<Term> = choice.iter().map(|&i| base[i].0.clone()).collect();
        let right: Vec<Term> = choice.iter().map(|&i| base[i].1.clone()).collect();
        if c.fill(&left).ok().as_ref() == Some(m) && c.fill(&right).ok().as_ref() == Some(n) {
            return true;
        }
        let mut i = k;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < base.len() {
                break;
            }
            choice[i] = 0;
        }
    }
}

pub fn brute_closed_closure(r: &FiniteRelation, m: &Term, n: &Term, bound: usize) -> bool {
    m.is_closed() && n.is_closed() && brute_open_closure(r, m, n, bound, &[])
}

/// Right-nested argument spine `(head, [a1, ..., ak])`.
fn unspine(t: &Term) -> (Term, Vec<Term>) {
    t.spine()
}

/// `(m, n) ∈ ⟨r2⟩_{r1★}` by trying every number of stripped arguments,
/// with argument pairs decided by the brute-force closure.
pub fn brute_eccn(r2: &FiniteRelation, r1: &FiniteRelation, m: &Term, n: &Term, bound: usize) -> bool {
    if !(m.is_closed() && n.is_closed()) {
        return false;
    }
    let (hm, am) = unspine(m);
    let (hn, an) = unspine(n);
    for k in 0..=am.len().min(an.len()) {
        let head_m = Term::apps(hm.clone(), am[..am.len() - k].iter().cloned());
        let head_n = Term::apps(hn.clone(), an[..an.len() - k].iter().cloned());
        if !r2.contains(&head_m, &head_n) {
            continue;
        }
        let args_ok = am[am.len() - k..]
            .iter()
            .zip(&an[an.len() - k..])
            .all(|(x, y)| brute_closed_closure(r1, x, y, bound));
        if args_ok {
            return true;
        }
    }
    false
}

/// Call-by-value closure by exhaustive derivation search over the three
/// rules, with `R1★` decided by brute force.
pub fn brute_eccv(r2: &FiniteRelation, r1: &FiniteRelation, m: &Term, n: &Term, bound: usize) -> bool {
    if !(m.is_closed() && n.is_closed()) {
        return false;
    }
    if r2.contains(m, n) {
        return true;
    }
    let (Some((f, x)), Some((g, y))) = (m.as_app(), n.as_app()) else {
        return false;
    };
    let rule2 = brute_closed_closure(r1, f, g, bound) && brute_eccv(r2, r1, x, y, bound);
    let rule3 = x.is_value() && y.is_value() && brute_closed_closure(r1, x, y, bound) && brute_eccv(r2, r1, f, g, bound);
    rule2 || rule3
}

pub fn i() -> Term {
    clb_core::term::named::identity()
}

pub fn omega() -> Term {
    clb_core::term::named::omega()
}

pub fn t(s: &str) -> Term {
    clb_core::parse_term(s).unwrap()
}

pub fn rel(pairs: &[(Term, Term)]) -> FiniteRelation {
    FiniteRelation::from_pairs(pairs.iter().cloned()).unwrap()
}

/// Which closure a sampled query asks about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Closure {
    Open,
    Closed,
    EccN,
    EccV,
}

/// A membership question `(m, n) ∈ closure(r1, r2)`. `r2` is only used by
/// the evaluation-contextual closures.
#[derive(Clone, Debug)]
pub struct ClosureQuery {
    pub closure: Closure,
    pub r1: FiniteRelation,
    pub r2: FiniteRelation,
    pub m: Term,
    pub n: Term,
}

/// Every context in a brute-force decomposition has at most this many nodes.
pub const BRUTE_BOUND: usize = 5;

impl ClosureQuery {
    /// The brute-force answer. Exact because the smaller side has at most
    /// [`BRUTE_BOUND`] nodes, so no decomposition needs a larger context.
    pub fn expected(&self) -> bool {
        let b = BRUTE_BOUND;
        match self.closure {
            Closure::Open => brute_open_closure(&self.r1, &self.m, &self.n, b, &["a"]),
            Closure::Closed => brute_closed_closure(&self.r1, &self.m, &self.n, b),
            Closure::EccN => brute_eccn(&self.r2, &self.r1, &self.m, &self.n, b),
            Closure::EccV => brute_eccv(&self.r2, &self.r1, &self.m, &self.n, b),
        }
    }

    /// The crate's structural decision procedure.
    pub fn actual(&self) -> bool {
        let r2 = RelationView::finite(&self.r2);
        match self.closure {
            Closure::Open => member_open_closure(&self.r1, &self.m, &self.n),
            Closure::Closed => member_closed_closure(&self.r1, &self.m, &self.n),
            Closure::EccN => member_eccn(&r2, &self.r1, &self.m, &self.n),
            Closure::EccV => {
                let star = RelationView::closed_closure(RelationView::finite(&self.r1));
                member_eccv(&r2, &star, &self.m, &self.n)
            }
        }
    }
}

struct QueryGen {
    rng: ChaCha8Rng,
    terms: Vec<Term>,
    closed: Vec<Context>,
    open: Vec<Context>,
}

impl QueryGen {
    fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.rng.gen_range(0..xs.len())]
    }

    fn term(&mut self) -> Term {
        if self.rng.gen_bool(0.1) {
            omega()
        } else {
            let ts = std::mem::take(&mut self.terms);
            let t = self.pick(&ts).clone();
            self.terms = ts;
            t
        }
    }

    fn relation(&mut self, max: usize) -> FiniteRelation {
        let k = self.rng.gen_range(0..=max);
        let pairs: Vec<(Term, Term)> = (0..k).map(|_| (self.term(), self.term())).collect();
        rel(&pairs)
    }

    /// A pair built as `(C[M̃], C[Ñ])`, or an unrelated pair.
    fn closure_pair(&mut self, r: &FiniteRelation, open: bool) -> (Term, Term) {
        let base: Vec<(Term, Term)> = r.pairs().cloned().collect();
        let cs = if open { std::mem::take(&mut self.open) } else { std::mem::take(&mut self.closed) };
        let usable: Vec<&Context> = cs.iter().filter(|c| !base.is_empty() || c.hole_count() == 0).collect();
        let c = (*self.pick(&usable)).clone();
        if open {
            self.open = cs;
        } else {
            self.closed = cs;
        }
        let choice: Vec<usize> = (0..c.hole_count()).map(|_| self.rng.gen_range(0..base.len())).collect();
        let left: Vec<Term> = choice.iter().map(|&i| base[i].0.clone()).collect();
        let mut right: Vec<Term> = choice.iter().map(|&i| base[i].1.clone()).collect();
        let m = c.fill(&left).unwrap();
        match self.rng.gen_range(0..4) {
            0 => (m, self.term()),
            1 if !right.is_empty() => {
                let j = self.rng.gen_range(0..right.len());
                right[j] = self.term();
                (m, c.fill(&right).unwrap())
            }
            _ => (m, c.fill(&right).unwrap()),
        }
    }

    fn query(&mut self) -> ClosureQuery {
        let closure = match self.rng.gen_range(0..4) {
            0 => Closure::Open,
            1 => Closure::Closed,
            2 => Closure::EccN,
            _ => Closure::EccV,
        };
        let r1 = if self.rng.gen_bool(0.25) { FiniteRelation::new() } else { self.relation(2) };
        let mut r2 = self.relation(2);
        if r2.is_empty() {
            let _ = r2.insert(self.term(), self.term());
        }
        let (m, n) = match closure {
            Closure::Open => self.closure_pair(&r1, true),
            Closure::Closed => self.closure_pair(&r1, false),
            Closure::EccN => {
                let heads: Vec<(Term, Term)> = r2.pairs().cloned().collect();
                let (mut m, mut n) = self.pick(&heads).clone();
                for _ in 0..self.rng.gen_range(0..=2) {
                    let (x, y) = self.closure_pair(&r1, false);
                    m = Term::app(m, x);
                    n = Term::app(n, y);
                }
                (m, n)
            }
            Closure::EccV => {
                let heads: Vec<(Term, Term)> = r2.pairs().cloned().collect();
                let (mut m, mut n) = self.pick(&heads).clone();
                for _ in 0..self.rng.gen_range(0..=2) {
                    let (x, y) = self.closure_pair(&r1, false);
                    if self.rng.gen_bool(0.5) {
                        m = Term::app(x, m);
                        n = Term::app(y, n);
                    } else {
                        m = Term::app(m, x);
                        n = Term::app(n, y);
                    }
                }
                (m, n)
            }
        };
        ClosureQuery { closure, r1, r2, m, n }
    }
}

/// Seeded closure-membership queries whose smaller side has at most
/// [`BRUTE_BOUND`] nodes. Every fifth query has `r1 = ∅` and asks about
/// `R★`, so `∅★ = Id` is always exercised.
pub fn closure_queries(seed: u64, count: usize) -> Vec<ClosureQuery> {
    let mut g = QueryGen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        terms: closed_terms_up_to(4),
        closed: ContextEnumerator::new(Vec::new()).up_to(4, 2),
        open: ContextEnumerator::new(vec!["a".into()]).up_to(4, 2),
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut q = g.query();
        if out.len() % 5 == 4 {
            q.closure = Closure::Closed;
            q.r1 = FiniteRelation::new();
            if g.rng.gen_bool(0.5) {
                q.n = q.m.clone();
            }
        }
        if q.m.size().min(q.n.size()) as usize <= BRUTE_BOUND {
            out.push(q);
        }
    }
    out
}

/// Seeded finite relations over closed terms of at most `max_size` nodes.
/// Pairs mix unrelated terms, reflexive pairs and a term with one of its
/// reducts, and some relations include the identity, so that both verdicts
/// occur.
pub fn relation_corpus(seed: u64, count: usize, max_size: u64, strategy: Eval) -> Vec<FiniteRelation> {
    use clb_core::oracle::{GenConfig, TermGenerator};
    use clb_core::semantics::reduction_chain;
    let mut g = TermGenerator::new(GenConfig {
        seed,
        max_size,
        ..GenConfig::default()
    });
    (0..count)
        .map(|_| {
            let pairs = g.rng().gen_range(1..=3);
            let mut r = FiniteRelation::new();
            for _ in 0..pairs {
                let m = g.term_of_size(max_size);
                let n = match g.rng().gen_range(0..3) {
                    0 => g.term_of_size(max_size),
                    1 => m.clone(),
                    _ => {
                        let chain = reduction_chain(&m, strategy, 3).expect("generated terms are closed");
                        let k = g.rng().gen_range(0..chain.len());
                        chain[k].clone()
                    }
                };
                let _ = r.insert(m, n);
            }
            let identity = g.rng().gen_bool(0.3);
            r.with_identity(identity)
        })
        .collect()
}

/// Named form of a crate term; bound variables become `v{depth}`.
pub fn from_term(t: &Term) -> N {
    fn go(t: &Term, depth: u32) -> N {
        match t.kind() {
            Kind::Bound(i) => N::Var(format!("v{}", depth - 1 - i)),
            Kind::Free(x) => N::Var(x.to_string()),
            Kind::Abs(_, b) => N::Lam(format!("v{depth}"), Box::new(go(b, depth + 1))),
            Kind::App(f, a) => N::App(Box::new(go(f, depth)), Box::new(go(a, depth))),
        }
    }
    go(t, 0)
}

/// Steps to a value under the named interpreter, if within `fuel`.
pub fn named_steps(m: &N, s: Eval, fuel: u64) -> Option<u64> {
    let mut cur = m.clone();
    for k in 0..=fuel {
        match cur.step(s) {
            None => return Some(k),
            Some(next) if k < fuel => cur = next,
            Some(_) => return None,
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BruteEquiv {
    Equivalent,
    /// First strictly separating context; converging side is left when true.
    Distinguished(Context, bool, u64),
    Inconclusive,
}

/// Contextual equivalence by enumerating closed single-hole contexts and
/// running the named interpreter, without cycle detection or caching.
pub fn brute_ctx_equiv(m: &Term, n: &Term, s: Eval, bound: usize, fuel: u64, factor: u64) -> BruteEquiv {
    let mut weak = false;
    for c in ContextEnumerator::new(Vec::new()).up_to(bound, 1) {
        if c.hole_count() != 1 {
            continue;
        }
        let (cm, cn) = (c.fill_single(m).unwrap(), c.fill_single(n).unwrap());
        if !cm.is_closed() {
            continue;
        }
        let (nm, nn) = (from_term(&cm), from_term(&cn));
        let (a, b) = (named_steps(&nm, s, fuel), named_steps(&nn, s, fuel));
        let (left, steps, other) = match (a, b) {
            (Some(k), None) => (true, k, nn),
            (None, Some(k)) => (false, k, nm),
            _ => continue,
        };
        if named_steps(&other, s, fuel * factor).is_some() {
            weak = true;
        } else {
            return BruteEquiv::Distinguished(c, left, steps);
        }
    }
    if weak {
        BruteEquiv::Inconclusive
    } else {
        BruteEquiv::Equivalent
    }
}
