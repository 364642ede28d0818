//! Shared test support: independent oracles and proptest strategies.

#![allow(dead_code)]

pub mod oracles;

use clb_core::Term;
use proptest::prelude::*;

pub use oracles::*;

const NAMES: [&str; 4] = ["x", "y", "z", "w"];

/// Arbitrary named terms over a small name pool, possibly open.
pub fn arb_named(depth: u32) -> impl Strategy<Value = N> {
    let leaf = prop::sample::select(&NAMES[..]).prop_map(var);
    leaf.prop_recursive(depth, 48, 2, |inner| {
        prop_oneof![
            (prop::sample::select(&NAMES[..]), inner.clone()).prop_map(|(x, b)| lam(x, b)),
            (inner.clone(), inner).prop_map(|(f, a)| app(f, a)),
        ]
    })
}

/// Closed named terms: open results are closed off with leading binders.
pub fn arb_closed_named(depth: u32) -> impl Strategy<Value = N> {
    arb_named(depth).prop_map(|t| {
        let free: Vec<String> = t.free().into_iter().collect();
        free.into_iter().rev().fold(t, |acc, x| N::Lam(x, Box::new(acc)))
    })
}

pub fn arb_closed_term(depth: u32) -> impl Strategy<Value = Term> {
    arb_closed_named(depth).prop_map(|n| n.to_term())
}

