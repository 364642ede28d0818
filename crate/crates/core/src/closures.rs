//! Relation closures as symbolic views with decidable membership.
//!
//! Closures are decided by structural decomposition: a pair is in `R°` when it
//! is a base pair or both sides have the same outermost constructor and the
//! components are pairwise in `R°`. Base pairs are only matched against
//! locally closed subterms, so context binders never capture inside a base
//! pair.

use std::fmt;
use std::sync::Arc;

use indexmap::IndexSet;

use crate::enumerate::ContextEnumerator;
use crate::relation::{CoupledRelation, FiniteRelation};
use crate::semantics::{distinct_chain, Strategy};
use crate::term::{Kind, Term};

/// A possibly infinite relation on terms given by a membership procedure.
#[derive(Clone, Debug)]
pub enum RelationView {
    Empty,
    /// α-equal pairs of closed terms.
    Identity,
    Finite(Arc<FiniteRelation>),
    /// `R°`: open contextual closure.
    OpenClosure(Arc<RelationView>),
    /// `R★`: `R°` restricted to closed terms.
    ClosedClosure(Arc<RelationView>),
    /// Call-by-name evaluation-contextual closure: heads in `head`, any number
    /// of trailing arguments pairwise in `args`.
    EccN {
        head: Arc<RelationView>,
        args: Arc<RelationView>,
    },
    /// Call-by-value evaluation-contextual closure (three inductive rules).
    EccV {
        head: Arc<RelationView>,
        args: Arc<RelationView>,
    },
    /// `{(E M, F N) | E head F, M args N}`: one layer of argument extension.
    Extend {
        head: Arc<RelationView>,
        args: Arc<RelationView>,
    },
    /// Pairs of values only.
    ValueRestrict(Arc<RelationView>),
    /// `⟹ base ⟸`: both sides reduce (within fuel) to a base pair.
    Reduction {
        base: Arc<RelationView>,
        strategy: Strategy,
        fuel: u64,
    },
    /// `{(P[X/x], Q[Y/x]) | (λx.P, λx.Q) ∈ abs, X args Y}`. Membership
    /// assumes `args` contains `(X, X)` for every `X` in its domain.
    Instances {
        abs: Arc<Vec<(Term, Term)>>,
        args: Arc<RelationView>,
    },
    Union(Vec<RelationView>),
}

impl RelationView {
    pub fn finite(r: &FiniteRelation) -> RelationView {
        RelationView::Finite(Arc::new(r.clone()))
    }

    pub fn open_closure(base: RelationView) -> RelationView {
        RelationView::OpenClosure(Arc::new(base))
    }

    pub fn closed_closure(base: RelationView) -> RelationView {
        RelationView::ClosedClosure(Arc::new(base))
    }

    pub fn eccn(head: RelationView, args: RelationView) -> RelationView {
        RelationView::EccN {
            head: Arc::new(head),
            args: Arc::new(args),
        }
    }

    pub fn eccv(head: RelationView, args: RelationView) -> RelationView {
        RelationView::EccV {
            head: Arc::new(head),
            args: Arc::new(args),
        }
    }

    pub fn extend(head: RelationView, args: RelationView) -> RelationView {
        RelationView::Extend {
            head: Arc::new(head),
            args: Arc::new(args),
        }
    }

    pub fn value_restrict(base: RelationView) -> RelationView {
        RelationView::ValueRestrict(Arc::new(base))
    }

    /// Nested reductions under one strategy collapse: reduction is
    /// deterministic, so `k` steps after `j` steps is `j + k` steps.
    pub fn reduction(base: RelationView, strategy: Strategy, fuel: u64) -> RelationView {
        if let RelationView::Reduction {
            base: inner,
            strategy: s,
            fuel: f,
        } = &base
        {
            if *s == strategy {
                return RelationView::Reduction {
                    base: inner.clone(),
                    strategy,
                    fuel: fuel.saturating_add(*f),
                };
            }
        }
        RelationView::Reduction {
            base: Arc::new(base),
            strategy,
            fuel,
        }
    }

    pub fn union(views: impl IntoIterator<Item = RelationView>) -> RelationView {
        RelationView::Union(views.into_iter().collect())
    }

    pub fn contains(&self, m: &Term, n: &Term) -> bool {
        match self {
            RelationView::Empty => false,
            RelationView::Identity => m.is_closed() && m == n,
            RelationView::Finite(r) => r.contains(m, n),
            RelationView::OpenClosure(base) => open_closure(base, m, n),
            RelationView::ClosedClosure(base) => {
                m.is_closed() && n.is_closed() && open_closure(base, m, n)
            }
            RelationView::EccN { head, args } => {
                m.is_closed() && n.is_closed() && eccn(head, args, m, n)
            }
            RelationView::EccV { head, args } => {
                m.is_closed() && n.is_closed() && eccv(head, args, m, n)
            }
            RelationView::Extend { head, args } => match (m.as_app(), n.as_app()) {
                (Some((e, x)), Some((f, y))) => head.contains(e, f) && args.contains(x, y),
                _ => false,
            },
            RelationView::ValueRestrict(base) => {
                m.is_value() && n.is_value() && base.contains(m, n)
            }
            RelationView::Reduction {
                base,
                strategy,
                fuel,
            } => reduction_member(base, *strategy, *fuel, m, n),
            RelationView::Instances { abs, args } => instances_member(abs, args, m, n),
            RelationView::Union(vs) => vs.iter().any(|v| v.contains(m, n)),
        }
    }

    /// Converse relation as a view over swapped queries.
    pub fn holds(&self, m: &Term, n: &Term, flipped: bool) -> bool {
        if flipped {
            self.contains(n, m)
        } else {
            self.contains(m, n)
        }
    }
}

impl fmt::Display for RelationView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationView::Empty => write!(f, "∅"),
            RelationView::Identity => write!(f, "Id"),
            RelationView::Finite(r) => write!(f, "finite[{}{}]", r.len(), if r.includes_identity() { "+Id" } else { "" }),
            RelationView::OpenClosure(b) => write!(f, "({b})°"),
            RelationView::ClosedClosure(b) => write!(f, "({b})★"),
            RelationView::EccN { head, args } => write!(f, "eccn({head}; {args})"),
            RelationView::EccV { head, args } => write!(f, "eccv({head}; {args})"),
            RelationView::Extend { head, args } => write!(f, "ext({head}; {args})"),
            RelationView::ValueRestrict(b) => write!(f, "vr({b})"),
            RelationView::Reduction { base, fuel, .. } => write!(f, "red[{fuel}]({base})"),
            RelationView::Instances { abs, args } => write!(f, "inst[{}]({args})", abs.len()),
            RelationView::Union(vs) => {
                write!(f, "(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ∪ ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A pair of views `(S1, S2)`.
#[derive(Clone, Debug)]
pub struct CoupledView {
    pub first: RelationView,
    pub second: RelationView,
}

impl CoupledView {
    pub fn new(first: RelationView, second: RelationView) -> CoupledView {
        CoupledView { first, second }
    }

    pub fn from_relation(r: &CoupledRelation) -> CoupledView {
        CoupledView::new(RelationView::finite(&r.r1), RelationView::finite(&r.r2))
    }
}

impl fmt::Display for CoupledView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first, self.second)
    }
}

fn open_closure(base: &RelationView, m: &Term, n: &Term) -> bool {
    let mut work = vec![(m.clone(), n.clone())];
    while let Some((a, b)) = work.pop() {
        if a.is_locally_closed() && b.is_locally_closed() && base.contains(&a, &b) {
            continue;
        }
        match (a.kind(), b.kind()) {
            (Kind::Bound(i), Kind::Bound(j)) if i == j => {}
            (Kind::Free(x), Kind::Free(y)) if x == y => {}
            (Kind::Abs(_, p), Kind::Abs(_, q)) => work.push((p.clone(), q.clone())),
            (Kind::App(f, x), Kind::App(g, y)) => {
                work.push((x.clone(), y.clone()));
                work.push((f.clone(), g.clone()));
            }
            _ => return false,
        }
    }
    true
}

fn eccn(head: &RelationView, args: &RelationView, m: &Term, n: &Term) -> bool {
    let (mut cm, mut cn) = (m.clone(), n.clone());
    loop {
        if head.contains(&cm, &cn) {
            return true;
        }
        let next = match (cm.as_app(), cn.as_app()) {
            (Some((f, a)), Some((g, b))) => {
                if !args.contains(a, b) {
                    return false;
                }
                (f.clone(), g.clone())
            }
            _ => return false,
        };
        (cm, cn) = next;
    }
}

fn eccv(head: &RelationView, args: &RelationView, m: &Term, n: &Term) -> bool {
    if head.contains(m, n) {
        return true;
    }
    let ((f, x), (g, y)) = match (m.as_app(), n.as_app()) {
        (Some(l), Some(r)) => (l, r),
        _ => return false,
    };
    // X V / Y W with V, W related values.
    if x.is_value() && y.is_value() && args.contains(x, y) && eccv(head, args, f, g) {
        return true;
    }
    // M X / N Y with M, N related.
    args.contains(f, g) && eccv(head, args, x, y)
}

fn reduction_member(base: &RelationView, s: Strategy, fuel: u64, m: &Term, n: &Term) -> bool {
    if base.contains(m, n) {
        return true;
    }
    if !(m.is_closed() && n.is_closed()) {
        return false;
    }
    let cm = distinct_chain(m, s, fuel);
    let cn = distinct_chain(n, s, fuel);
    cm.terms
        .iter()
        .any(|a| cn.terms.iter().any(|b| base.contains(a, b)))
}

/// Matches `pattern` (an abstraction body, bound variable at index `depth`)
/// against `t`, recording the instance of the bound variable.
fn match_instance(pattern: &Term, t: &Term, depth: u32, binding: &mut Option<Term>) -> bool {
    if pattern.is_locally_closed() || !mentions(pattern, depth) {
        return pattern == t;
    }
    match (pattern.kind(), t.kind()) {
        (Kind::Bound(i), _) if *i == depth => {
            if !t.is_closed() {
                return false;
            }
            match binding {
                Some(b) => b == t,
                None => {
                    *binding = Some(t.clone());
                    true
                }
            }
        }
        (Kind::Abs(_, p), Kind::Abs(_, q)) => match_instance(p, q, depth + 1, binding),
        (Kind::App(f, a), Kind::App(g, b)) => {
            match_instance(f, g, depth, binding) && match_instance(a, b, depth, binding)
        }
        _ => false,
    }
}

/// Whether index `depth` (the matched binder) can occur in `t`.
fn mentions(t: &Term, depth: u32) -> bool {
    !t.is_locally_closed() && {
        // Indices above `depth` belong to binders inside the pattern, so a
        // dangling index at least `depth + 1` deep means the binder occurs.
        let mut stack = vec![(t.clone(), depth)];
        while let Some((u, d)) = stack.pop() {
            match u.kind() {
                Kind::Bound(i) if *i == d => return true,
                Kind::Bound(_) | Kind::Free(_) => {}
                Kind::Abs(_, b) => stack.push((b.clone(), d + 1)),
                Kind::App(f, a) => {
                    stack.push((f.clone(), d));
                    stack.push((a.clone(), d));
                }
            }
        }
        false
    }
}

fn instances_member(abs: &[(Term, Term)], args: &RelationView, m: &Term, n: &Term) -> bool {
    abs.iter().any(|(l, r)| {
        let (Some((_, p)), Some((_, q))) = (l.as_abs(), r.as_abs()) else {
            return false;
        };
        let mut x = None;
        let mut y = None;
        if !(match_instance(p, m, 0, &mut x) && match_instance(q, n, 0, &mut y)) {
            return false;
        }
        match (x, y) {
            (Some(x), Some(y)) => args.contains(&x, &y),
            (Some(x), None) => args.contains(&x, &x),
            (None, Some(y)) => args.contains(&y, &y),
            (None, None) => {
                let i = crate::term::named::identity();
                args.contains(&i, &i)
            }
        }
    })
}

/// `(m, n) ∈ r°`.
pub fn member_open_closure(r: &FiniteRelation, m: &Term, n: &Term) -> bool {
    RelationView::open_closure(RelationView::finite(r)).contains(m, n)
}

/// `(m, n) ∈ r★`.
pub fn member_closed_closure(r: &FiniteRelation, m: &Term, n: &Term) -> bool {
    RelationView::closed_closure(RelationView::finite(r)).contains(m, n)
}

/// `(m, n) ∈ ⟨r2⟩_{r1★}` (call-by-name).
pub fn member_eccn(r2: &RelationView, r1: &FiniteRelation, m: &Term, n: &Term) -> bool {
    m.is_closed()
        && n.is_closed()
        && eccn(r2, &RelationView::closed_closure(RelationView::finite(r1)), m, n)
}

/// `(m, n)` in the call-by-value evaluation-contextual closure of `r2` under `r1star`.
pub fn member_eccv(r2: &RelationView, r1star: &RelationView, m: &Term, n: &Term) -> bool {
    m.is_closed() && n.is_closed() && eccv(r2, r1star, m, n)
}

/// `R^C = (R1★, ⟨R2⟩_{R1★} ∪ R1★)`.
pub fn ctx_closure_cbn(r: &CoupledRelation) -> CoupledView {
    ctx_closure_view(&CoupledView::from_relation(r), Strategy::Cbn)
}

/// `R^V`: as [`ctx_closure_cbn`] with the call-by-value closure.
pub fn ctx_closure_cbv(r: &CoupledRelation) -> CoupledView {
    ctx_closure_view(&CoupledView::from_relation(r), Strategy::Cbv)
}

pub fn ctx_closure_view(r: &CoupledView, s: Strategy) -> CoupledView {
    let star = RelationView::closed_closure(r.first.clone());
    let ecc = match s {
        Strategy::Cbn => RelationView::eccn(r.second.clone(), star.clone()),
        Strategy::Cbv => RelationView::eccv(r.second.clone(), star.clone()),
    };
    CoupledView::new(star.clone(), RelationView::union([ecc, star]))
}

/// All pairs `(C[M̃], C[Ñ])` for closed contexts `C` of at most `bound`
/// nodes (holes count one node each) with holes filled by pairs of `r1`.
/// Hole-free contexts contribute the identity pairs. Call-by-value keeps
/// only pairs of values.
pub fn enumerate_closure_pairs(r1: &FiniteRelation, bound: usize, s: Strategy) -> Vec<(Term, Term)> {
    let all = closure_pairs(r1.pairs().cloned(), bound);
    match s {
        Strategy::Cbn => all,
        Strategy::Cbv => all
            .into_iter()
            .filter(|(m, n)| m.is_value() && n.is_value())
            .collect(),
    }
}

/// Unrestricted closure pairs over an explicit list of base pairs.
pub fn closure_pairs(base: impl IntoIterator<Item = (Term, Term)>, bound: usize) -> Vec<(Term, Term)> {
    let base: Vec<(Term, Term)> = base.into_iter().collect::<IndexSet<_>>().into_iter().collect();
    let max_holes = if base.is_empty() { 0 } else { bound };
    let mut contexts = ContextEnumerator::new(Vec::new());
    let mut out: IndexSet<(Term, Term)> = IndexSet::new();
    for size in 1..=bound {
        for holes in 0..=max_holes {
            for c in contexts.of_size(size, holes) {
                let mut choice = vec![0usize; holes];
                loop {
                    let left: Vec<Term> = choice.iter().map(|&i| base[i].0.clone()).collect();
                    let right: Vec<Term> = choice.iter().map(|&i| base[i].1.clone()).collect();
                    let m = c.fill(&left).expect("hole count matches");
                    let n = c.fill(&right).expect("hole count matches");
                    out.insert((m, n));
                    if !advance(&mut choice, base.len()) {
                        break;
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Odometer increment; false once every combination was produced.
fn advance(choice: &mut [usize], radix: usize) -> bool {
    for slot in choice.iter_mut().rev() {
        *slot += 1;
        if *slot < radix {
            return true;
        }
        *slot = 0;
    }
    false
}
