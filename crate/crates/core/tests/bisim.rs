mod common;

use clb_core::bisim::{
    check_applicative_bisim, check_clb, check_clb_upto, check_logical_bisim, check_logical_direct,
    check_progression, CheckConfig, ClauseId, Divergence, VerdictKind, Witness,
};
use clb_core::closures::CoupledView;
use clb_core::enumerate::closed_values_up_to;
use clb_core::semantics::{probe, Fate};
use clb_core::upto::{progression_witness, UpToTechnique};
use clb_core::{CoupledRelation, FiniteRelation, Strategy, Term};
use common::*;
use proptest::prelude::*;

fn cfg(s: Strategy) -> CheckConfig {
    CheckConfig::new(s)
}

fn coupled(r1: &[(Term, Term)], r2: &[(Term, Term)]) -> CoupledRelation {
    CoupledRelation::new(rel(r1), rel(r2))
}

fn lazy_id() -> Term {
    t("\\x.(\\y.y) x")
}

#[test]
fn identity_omega_is_refuted_on_the_abstraction_clause() {
    let r = coupled(&[(i(), omega())], &[(i(), omega()), (omega(), omega())]);
    let c = cfg(Strategy::Cbn);
    let rep = check_clb(&r, &c);
    assert_eq!(rep.coupled, Some(true));
    let w = rep.verdict.witness().unwrap();
    match w {
        Witness::NoValue { value, partner, divergence } => {
            assert_eq!(value, &i());
            assert_eq!(partner, &omega());
            assert_eq!(divergence, &Divergence::Cycle { entry: 0, period: 1 });
        }
        other => panic!("unexpected witness {other:?}"),
    }
    let failing: Vec<_> = rep.clauses.iter().filter(|c| !c.verdict.holds()).collect();
    assert!(failing.iter().all(|c| c.clause == ClauseId::Abstraction));
    assert!(w.replay(&CoupledView::from_relation(&r), &c));
}

#[test]
fn paired_variant_passes_clauses_but_is_not_coupled() {
    let r = coupled(&[(i(), omega())], &[(omega(), omega())]);
    let rep = check_clb(&r, &cfg(Strategy::Cbn));
    assert_eq!(rep.coupled, Some(false));
    assert!(rep.progression_clauses_hold());
    assert_eq!(rep.clauses[0].clause, ClauseId::Coupledness);
    assert!(matches!(rep.verdict.witness(), Some(Witness::NotCoupled { .. })));
}

#[test]
fn vacuous_and_divergent_relations_hold() {
    let empty = coupled(&[], &[]);
    assert!(check_clb(&empty, &cfg(Strategy::Cbn)).verdict.holds());
    let r = coupled(&[], &[(omega(), omega())]);
    let mut c = cfg(Strategy::Cbn);
    c.fuel = 10;
    c.closure_bound = 5;
    assert!(check_progression(&r, &CoupledView::from_relation(&r), &c).verdict.holds());
    assert!(check_clb(&r, &c).verdict.holds());
}

#[test]
fn cbv_embedding_fails_on_abstraction_pairing() {
    let r2 = rel(&[(lazy_id(), i())]).with_identity(true);
    let r = CoupledRelation::new(FiniteRelation::identity(), r2);
    let c = cfg(Strategy::Cbv);
    let rep = check_clb(&r, &c);
    assert!(rep.coupled.unwrap());
    let w = rep.verdict.witness().unwrap();
    assert!(matches!(w, Witness::AbsPairing { .. }), "{w:?}");
    assert!(w.replay(&CoupledView::from_relation(&r), &c));
}

#[test]
fn upto_examples() {
    let ctx = UpToTechnique::CtxC;
    let r = coupled(&[], &[(Term::app(i(), i()), i())]);
    assert!(check_clb_upto(&r, &ctx, &cfg(Strategy::Cbn)).verdict.holds());
    let r = coupled(&[], &[(omega(), omega())]);
    assert!(check_clb_upto(&r, &UpToTechnique::Pev, &cfg(Strategy::Cbn)).verdict.holds());

    let mut env = cfg(Strategy::Cbv);
    env.up_to_environment = true;
    let t = UpToTechnique::compose(UpToTechnique::reduction(Strategy::Cbv), UpToTechnique::CtxV);
    let r = coupled(&[], &[(lazy_id(), i())]);
    assert!(check_clb_upto(&r, &t, &env).verdict.holds());
    // Without the environment variant the abstraction pair must be in R1.
    assert!(!check_clb_upto(&r, &t, &cfg(Strategy::Cbv)).verdict.holds());
}

#[test]
fn applicative_examples() {
    let c = cfg(Strategy::Cbn);
    assert!(check_applicative_bisim(&FiniteRelation::identity(), &c).verdict.holds());
    let rep = check_applicative_bisim(&rel(&[(i(), omega())]), &c);
    assert!(matches!(rep.verdict.witness(), Some(Witness::NoValue { .. })));
}

/// Closes `seed` under the applicative clauses: for every pair whose sides
/// converge to abstractions, adds the instantiated bodies for every closed
/// value argument up to `bound`. Pairs covered by the identity are skipped.
fn saturate_applicative(seed: &[(Term, Term)], s: Strategy, bound: usize) -> FiniteRelation {
    let args = closed_values_up_to(bound as u64);
    let mut out: Vec<(Term, Term)> = Vec::new();
    let mut todo: Vec<(Term, Term)> = seed.to_vec();
    while let Some((m, n)) = todo.pop() {
        if m == n || out.contains(&(m.clone(), n.clone())) {
            continue;
        }
        out.push((m.clone(), n.clone()));
        let (Ok(Fate::Converged { value: v, .. }), Ok(Fate::Converged { value: w, .. })) =
            (probe(&m, s, 1000), probe(&n, s, 1000))
        else {
            continue;
        };
        for a in &args {
            todo.push((v.apply_abs(a).unwrap(), w.apply_abs(a).unwrap()));
        }
        assert!(out.len() < 200, "saturation does not terminate");
    }
    rel(&out).with_identity(true)
}

#[test]
fn lazy_identity_is_an_applicative_bisimulation_at_small_bound() {
    for bound in [3, 4] {
        let mut c = cfg(Strategy::Cbv);
        c.closure_bound = bound;
        let r = saturate_applicative(&[(lazy_id(), i())], Strategy::Cbv, bound);
        let expected = 1 + closed_values_up_to(bound as u64).len();
        assert_eq!(r.len(), expected);
        assert!(check_applicative_bisim(&r, &c).verdict.holds(), "bound {bound}");
        // Dropping a body pair breaks it.
        let last = r.pairs().last().unwrap().clone();
        let smaller = r.filter(|m, n| (m, n) != (&last.0, &last.1));
        assert!(!check_applicative_bisim(&smaller, &c).verdict.holds());
    }
}

#[test]
fn logical_examples() {
    for s in [Strategy::Cbn, Strategy::Cbv] {
        let c = cfg(s);
        assert!(check_logical_bisim(&rel(&[(omega(), omega())]), &c).verdict.holds());
        assert_eq!(check_logical_bisim(&rel(&[(i(), omega())]), &c).verdict.kind(), VerdictKind::Refuted);
        assert!(check_logical_bisim(&FiniteRelation::new(), &c).verdict.holds());
    }
}

#[test]
fn logical_routes_agree_on_a_seeded_corpus() {
    for s in [Strategy::Cbn, Strategy::Cbv] {
        let c = cfg(s);
        let corpus = relation_corpus(3, 40, 6, s);
        let mut holds = 0;
        for r in &corpus {
            let direct = check_logical_direct(r, &c);
            let via = check_clb(&CoupledRelation::diagonal(r.clone()), &c);
            assert_eq!(direct.verdict.kind(), via.verdict.kind(), "{}", r.to_file_string());
            holds += direct.verdict.holds() as usize;
        }
        assert!(holds > 0 && holds < corpus.len(), "{s}: {holds} hold");
    }
}

fn strategy() -> impl proptest::strategy::Strategy<Value = Strategy> {
    prop_oneof![Just(Strategy::Cbn), Just(Strategy::Cbv)]
}

fn small_cfg(s: Strategy) -> CheckConfig {
    let mut c = CheckConfig::new(s);
    c.fuel = 200;
    c.closure_bound = 4;
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logical_routes_agree(seed in any::<u64>(), s in strategy()) {
        let c = small_cfg(s);
        for r in relation_corpus(seed, 3, 6, s) {
            let rep = check_logical_bisim(&r, &c);
            prop_assert!(rep.cross_check.unwrap().agrees, "{}", r.to_file_string());
        }
    }

    #[test]
    fn refutations_replay(seed in any::<u64>(), s in strategy()) {
        let c = small_cfg(s);
        for r2 in relation_corpus(seed, 3, 6, s) {
            let r1 = r2.filter(|m, n| m.size() <= n.size());
            let r = CoupledRelation::new(r1, r2);
            let rep = check_clb(&r, &c);
            if let Some(w) = rep.verdict.witness() {
                prop_assert!(w.replay(&CoupledView::from_relation(&r), &c), "{:?}", w);
            }
        }
    }

    #[test]
    fn shrinking_the_first_component_keeps_a_bisimulation(seed in any::<u64>()) {
        // Call-by-name only: the call-by-value abstraction-pairing clause
        // reads the first component.
        let s = Strategy::Cbn;
        let c = small_cfg(s);
        for r2 in relation_corpus(seed, 4, 6, s) {
            let r = CoupledRelation::new(r2.clone(), r2.clone());
            if !check_clb(&r, &c).verdict.holds() {
                continue;
            }
            let pairs: Vec<(Term, Term)> = r2.pairs().cloned().collect();
            for (a, b) in &pairs {
                let r1 = r2.filter(|m, n| (m, n) != (a, b));
                let sub = CoupledRelation::new(r1.with_identity(false), r2.clone());
                prop_assert!(check_clb(&sub, &c).verdict.holds(), "{}", sub.to_file_string());
            }
        }
    }

    #[test]
    fn progressions_combine_by_left_intersection_and_right_union(seed in any::<u64>(), s in strategy()) {
        let c = small_cfg(s);
        let corpus = relation_corpus(seed, 4, 5, s);
        let found: Vec<_> = corpus
            .iter()
            .filter_map(|r2| {
                let r1 = r2.filter(|m, n| m.is_value() && n.is_value()).with_identity(false);
                progression_witness(&CoupledRelation::new(r1, r2.clone()), &c)
            })
            .collect();
        for a in &found {
            for b in &found {
                let r = CoupledRelation::new(a.r.r1.intersection(&b.r.r1), a.r.r2.union(&b.r.r2));
                let s_view = CoupledView::new(
                    clb_core::closures::RelationView::union([a.s.first.clone(), b.s.first.clone()]),
                    clb_core::closures::RelationView::union([a.s.second.clone(), b.s.second.clone()]),
                );
                prop_assert!(check_progression(&r, &s_view, &c).verdict.holds());
            }
        }
    }
}
