//! Exhaustive enumeration of small terms and contexts, ordered by size.

use std::collections::HashMap;
use std::sync::Arc;

use crate::context::Context;
use crate::semantics::Strategy;
use crate::term::{Name, Term};

/// Binder name used at a given binding depth.
pub fn binder_hint(depth: u32) -> Name {
    match depth {
        0 => "x".into(),
        1 => "y".into(),
        2 => "z".into(),
        3 => "w".into(),
        d => format!("v{d}").into(),
    }
}

/// Memoized enumerator of locally nameless terms by exact size.
#[derive(Default)]
pub struct TermEnumerator {
    memo: HashMap<(u64, u32), Arc<Vec<Term>>>,
}

impl TermEnumerator {
    pub fn new() -> TermEnumerator {
        TermEnumerator::default()
    }

    /// All terms of exactly `size` nodes whose dangling indices are below
    /// `depth` and which have no free names.
    pub fn of_size(&mut self, size: u64, depth: u32) -> Arc<Vec<Term>> {
        if let Some(v) = self.memo.get(&(size, depth)) {
            return v.clone();
        }
        let mut out = Vec::new();
        if size == 1 {
            out.extend((0..depth).map(Term::bound));
        } else if size >= 2 {
            for body in self.of_size(size - 1, depth + 1).iter() {
                out.push(Term::abs_indexed(binder_hint(depth), body.clone()));
            }
            for left in 1..size - 1 {
                let fs = self.of_size(left, depth);
                let args = self.of_size(size - 1 - left, depth);
                for f in fs.iter() {
                    for a in args.iter() {
                        out.push(Term::app(f.clone(), a.clone()));
                    }
                }
            }
        }
        let out = Arc::new(out);
        self.memo.insert((size, depth), out.clone());
        out
    }

    pub fn closed_up_to(&mut self, bound: u64) -> Vec<Term> {
        (1..=bound)
            .flat_map(|n| self.of_size(n, 0).iter().cloned().collect::<Vec<_>>())
            .collect()
    }
}

/// Closed terms of exactly `size` nodes.
pub fn closed_terms_of_size(size: u64) -> Vec<Term> {
    TermEnumerator::new().of_size(size, 0).to_vec()
}

/// Closed terms of at most `bound` nodes, smallest first.
pub fn closed_terms_up_to(bound: u64) -> Vec<Term> {
    TermEnumerator::new().closed_up_to(bound)
}

/// Closed abstractions (the values) of at most `bound` nodes.
pub fn closed_values_up_to(bound: u64) -> Vec<Term> {
    closed_terms_up_to(bound)
        .into_iter()
        .filter(Term::is_value)
        .collect()
}

/// Enumerates contexts with a fixed number of holes. Variables are drawn
/// from the enclosing binders and from an optional pool of free names.
pub struct ContextEnumerator {
    pool: Vec<Name>,
    memo: HashMap<(usize, u32, usize), Arc<Vec<Context>>>,
}

impl ContextEnumerator {
    pub fn new(pool: Vec<Name>) -> ContextEnumerator {
        ContextEnumerator {
            pool,
            memo: HashMap::new(),
        }
    }

    /// Contexts of exactly `size` nodes with exactly `holes` holes, all
    /// numbered 0 (see [`Context::renumbered`]).
    fn raw(&mut self, size: usize, depth: u32, holes: usize) -> Arc<Vec<Context>> {
        if let Some(v) = self.memo.get(&(size, depth, holes)) {
            return v.clone();
        }
        let mut out = Vec::new();
        if size == 1 {
            match holes {
                0 => {
                    out.extend((0..depth).map(|d| Context::Var(binder_hint(d))));
                    out.extend(self.pool.iter().cloned().map(Context::Var));
                }
                1 => out.push(Context::Hole(0)),
                _ => {}
            }
        } else if size >= 2 && holes < size {
            for body in self.raw(size - 1, depth + 1, holes).iter() {
                out.push(Context::lam(binder_hint(depth), body.clone()));
            }
            for left in 1..size - 1 {
                for lh in 0..=holes {
                    let fs = self.raw(left, depth, lh);
                    if fs.is_empty() {
                        continue;
                    }
                    let args = self.raw(size - 1 - left, depth, holes - lh);
                    for f in fs.iter() {
                        for a in args.iter() {
                            out.push(Context::app(f.clone(), a.clone()));
                        }
                    }
                }
            }
        }
        let out = Arc::new(out);
        self.memo.insert((size, depth, holes), out.clone());
        out
    }

    /// Contexts of exactly `size` nodes and `holes` holes, numbered 1..n
    /// from left to right.
    pub fn of_size(&mut self, size: usize, holes: usize) -> Vec<Context> {
        self.raw(size, 0, holes).iter().map(Context::renumbered).collect()
    }

    /// Contexts of at most `bound` nodes with at most `max_holes` holes,
    /// ordered by size and then by hole count.
    pub fn up_to(&mut self, bound: usize, max_holes: usize) -> Vec<Context> {
        let mut out = Vec::new();
        for size in 1..=bound {
            for holes in 0..=max_holes {
                out.extend(self.of_size(size, holes));
            }
        }
        out
    }
}

/// Closed single-hole contexts of at most `bound` nodes in size order.
pub fn closed_single_hole_contexts(bound: usize) -> Vec<Context> {
    let mut e = ContextEnumerator::new(Vec::new());
    (1..=bound).flat_map(|n| e.of_size(n, 1)).collect()
}

/// Evaluation contexts of at most `bound` nodes following the strategy's
/// grammar: `E ::= [·] | E M` (call-by-name) or `E ::= [·] | M E | E V`
/// (call-by-value), with `M` closed and `V` a closed abstraction.
pub fn evaluation_contexts(strategy: Strategy, bound: usize) -> Vec<Context> {
    let mut terms = TermEnumerator::new();
    let mut by_size: Vec<Vec<Context>> = vec![Vec::new(); bound + 1];
    if bound >= 1 {
        by_size[1].push(Context::Hole(1));
    }
    for size in 2..=bound {
        let mut here = Vec::new();
        for (inner, shorter) in by_size.iter().enumerate().take(size - 1).skip(1) {
            let other = (size - 1 - inner) as u64;
            let fillers = terms.of_size(other, 0);
            for e in shorter {
                for m in fillers.iter() {
                    match strategy {
                        Strategy::Cbn => here.push(Context::app(e.clone(), Context::from_term(m))),
                        Strategy::Cbv => {
                            here.push(Context::app(Context::from_term(m), e.clone()));
                            if m.is_value() {
                                here.push(Context::app(e.clone(), Context::from_term(m)));
                            }
                        }
                    }
                }
            }
        }
        by_size[size] = here;
    }
    by_size.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_term_counts_by_size() {
        assert_eq!(closed_terms_of_size(1).len(), 0);
        assert_eq!(closed_terms_of_size(2).len(), 1);
        assert_eq!(closed_terms_of_size(3).len(), 2);
        assert_eq!(closed_terms_of_size(4).len(), 4);
        assert!(closed_terms_up_to(5).iter().all(Term::is_closed));
    }

    #[test]
    fn single_hole_contexts_start_with_the_hole() {
        let cs = closed_single_hole_contexts(4);
        assert_eq!(cs[0], Context::Hole(1));
        assert!(cs.iter().all(|c| c.hole_count() == 1 && c.free_vars().is_empty()));
        assert!(cs.contains(&Context::lam("x", Context::lam("y", Context::Hole(1)))));
        assert!(cs.contains(&Context::app(Context::Hole(1), Context::lam("x", Context::var("x")))));
    }

    #[test]
    fn evaluation_context_grammar() {
        let cbn = evaluation_contexts(Strategy::Cbn, 4);
        assert_eq!(cbn[0], Context::Hole(1));
        assert!(cbn.iter().all(|c| c.hole_count() == 1));
        let cbv = evaluation_contexts(Strategy::Cbv, 4);
        assert!(cbv.len() > cbn.len());
    }

    #[test]
    fn contexts_with_free_pool() {
        let mut e = ContextEnumerator::new(vec!["a".into()]);
        let one = e.of_size(1, 0);
        assert_eq!(one, vec![Context::var("a")]);
        let two_holes = e.of_size(3, 2);
        assert_eq!(two_holes, vec![Context::app(Context::Hole(1), Context::Hole(2))]);
    }
}
