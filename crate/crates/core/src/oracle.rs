//! Bounded contextual-equivalence oracle, the context-lemma transform, and
//! seeded generators for terms and relations.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bisim::Divergence;
use crate::context::{Context, FillError};
use crate::enumerate::{binder_hint, closed_single_hole_contexts, evaluation_contexts};
use crate::relation::{CoupledRelation, FiniteRelation};
use crate::semantics::{probe_closed, Fate, Strategy};
use crate::term::{named, Name, Term};
use crate::SCHEMA_VERSION;

/// Fuel knobs for the oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub fuel: u64,
    pub verification_factor: u64,
}

impl Default for OracleConfig {
    fn default() -> OracleConfig {
        OracleConfig {
            fuel: 1000,
            verification_factor: 10,
        }
    }
}

impl OracleConfig {
    pub fn verification_fuel(&self) -> u64 {
        self.fuel.saturating_mul(self.verification_factor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EquivVerdict {
    EquivalentUpToBound {
        contexts_tried: usize,
    },
    /// `context` filled with the `converging_side` term converges in
    /// `steps` steps; the other fill does not.
    Distinguished {
        context: Context,
        converging_side: Side,
        steps: u64,
        divergence: Divergence,
        contexts_tried: usize,
    },
    Inconclusive {
        reason: String,
        contexts_tried: usize,
    },
}

impl EquivVerdict {
    pub fn is_distinguished(&self) -> bool {
        matches!(self, EquivVerdict::Distinguished { .. })
    }

    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivVerdict::EquivalentUpToBound { .. })
    }

    pub fn context(&self) -> Option<&Context> {
        match self {
            EquivVerdict::Distinguished { context, .. } => Some(context),
            _ => None,
        }
    }

    /// Re-evaluates a `Distinguished` verdict: one fill converges within
    /// fuel and the other is stuck at verification fuel.
    pub fn replay(&self, m: &Term, n: &Term, s: Strategy, cfg: &OracleConfig) -> bool {
        let EquivVerdict::Distinguished {
            context,
            converging_side,
            ..
        } = self
        else {
            return false;
        };
        let (Ok(cm), Ok(cn)) = (context.fill_single(m), context.fill_single(n)) else {
            return false;
        };
        let (conv, other) = match converging_side {
            Side::Left => (cm, cn),
            Side::Right => (cn, cm),
        };
        probe_closed(&conv, s, cfg.fuel).converged() && probe_closed(&other, s, cfg.verification_fuel()).stuck()
    }
}

/// Outcome cache keyed by filled term.
struct Outcomes {
    strategy: Strategy,
    fuel: u64,
    verification_fuel: u64,
    at_fuel: HashMap<Term, Fate>,
    at_verification: HashMap<Term, Fate>,
}

impl Outcomes {
    fn new(s: Strategy, cfg: &OracleConfig) -> Outcomes {
        Outcomes {
            strategy: s,
            fuel: cfg.fuel,
            verification_fuel: cfg.verification_fuel(),
            at_fuel: HashMap::new(),
            at_verification: HashMap::new(),
        }
    }

    fn fate(&mut self, t: &Term) -> Fate {
        let (s, fuel) = (self.strategy, self.fuel);
        self.at_fuel
            .entry(t.clone())
            .or_insert_with(|| probe_closed(t, s, fuel))
            .clone()
    }

    fn verified(&mut self, t: &Term) -> Fate {
        let (s, fuel) = (self.strategy, self.verification_fuel);
        if let Some(Fate::Cycle { .. }) = self.at_fuel.get(t) {
            return self.at_fuel[t].clone();
        }
        self.at_verification
            .entry(t.clone())
            .or_insert_with(|| probe_closed(t, s, fuel))
            .clone()
    }
}

fn search(m: &Term, n: &Term, s: Strategy, contexts: Vec<Context>, cfg: &OracleConfig) -> EquivVerdict {
    let mut cache = Outcomes::new(s, cfg);
    let mut late = None;
    let total = contexts.len();
    for (tried, c) in contexts.into_iter().enumerate() {
        let cm = c.fill_single(m).expect("single-hole context");
        let cn = c.fill_single(n).expect("single-hole context");
        let (fm, fnn) = (cache.fate(&cm), cache.fate(&cn));
        let (side, steps, other) = match (&fm, &fnn) {
            (Fate::Converged { steps, .. }, f) if !f.converged() => (Side::Left, *steps, cn),
            (f, Fate::Converged { steps, .. }) if !f.converged() => (Side::Right, *steps, cm),
            _ => continue,
        };
        match cache.verified(&other) {
            Fate::Converged { .. } => {
                late.get_or_insert(c);
            }
            stuck => {
                let divergence = match stuck {
                    Fate::Cycle { entry, period } => Divergence::Cycle { entry, period },
                    _ => Divergence::VerificationFuel {
                        fuel: cfg.verification_fuel(),
                    },
                };
                return EquivVerdict::Distinguished {
                    context: c,
                    converging_side: side,
                    steps,
                    divergence,
                    contexts_tried: tried + 1,
                };
            }
        }
    }
    match late {
        None => EquivVerdict::EquivalentUpToBound { contexts_tried: total },
        Some(c) => EquivVerdict::Inconclusive {
            reason: format!("context {c} separates the terms within fuel, but both fills converge at verification fuel"),
            contexts_tried: total,
        },
    }
}

/// Bounded contextual equivalence over closed single-hole contexts of at
/// most `ctx_bound` nodes.
pub fn ctx_equiv(m: &Term, n: &Term, s: Strategy, ctx_bound: usize, cfg: &OracleConfig) -> EquivVerdict {
    search(m, n, s, closed_single_hole_contexts(ctx_bound), cfg)
}

/// Bounded evaluation-contextual equivalence.
pub fn evctx_equiv(m: &Term, n: &Term, s: Strategy, ctx_bound: usize, cfg: &OracleConfig) -> EquivVerdict {
    search(m, n, s, evaluation_contexts(s, ctx_bound), cfg)
}

fn context_names(c: &Context, out: &mut BTreeSet<Name>) {
    match c {
        Context::Hole(_) => {}
        Context::Var(x) => {
            out.insert(x.clone());
        }
        Context::Abs(x, b) => {
            out.insert(x.clone());
            context_names(b, out);
        }
        Context::App(f, a) => {
            context_names(f, out);
            context_names(a, out);
        }
    }
}

fn replace_hole(c: &Context, with: &Context) -> Context {
    match c {
        Context::Hole(_) => with.clone(),
        Context::Var(_) => c.clone(),
        Context::Abs(x, b) => Context::Abs(x.clone(), Box::new(replace_hole(b, with))),
        Context::App(f, a) => Context::app(replace_hole(f, with), replace_hole(a, with)),
    }
}

/// `(λx.C[x])[·]` with `x` fresh for `C`.
pub fn to_evaluation_context(c: &Context) -> Result<Context, FillError> {
    let holes = c.hole_count();
    if holes != 1 {
        return Err(FillError::NotSingleHole(holes));
    }
    let mut names = BTreeSet::new();
    context_names(c, &mut names);
    let x: Name = (0..)
        .map(binder_hint)
        .find(|n| !names.contains(n))
        .expect("fresh name");
    let body = replace_hole(c, &Context::Var(x.clone()));
    Ok(Context::app(Context::Abs(x, Box::new(body)), Context::Hole(1)))
}

/// Seeded term generator settings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub max_size: u64,
    /// Variables are drawn from this many names; names not bound at the
    /// point of use make the term open, and open terms are rejected.
    pub var_pool: u32,
    pub abs_weight: u32,
    pub app_weight: u32,
    pub var_weight: u32,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            seed: 0,
            max_size: 8,
            var_pool: 3,
            abs_weight: 2,
            app_weight: 3,
            var_weight: 2,
        }
    }
}

/// Attempts before falling back to `λx.x`.
const MAX_ATTEMPTS: usize = 1000;

/// Seeded generator of closed terms.
pub struct TermGenerator {
    cfg: GenConfig,
    rng: ChaCha8Rng,
}

impl TermGenerator {
    pub fn new(cfg: GenConfig) -> TermGenerator {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        TermGenerator { cfg, rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A closed term of at most `max_size` nodes, or `λx.x` when none is
    /// found (always for sizes below 2).
    pub fn term(&mut self) -> Term {
        self.term_of_size(self.cfg.max_size)
    }

    pub fn term_of_size(&mut self, max_size: u64) -> Term {
        if max_size >= 2 {
            for _ in 0..MAX_ATTEMPTS {
                if let Some(t) = self.attempt(max_size, 0) {
                    if t.is_closed() {
                        return t;
                    }
                }
            }
        }
        named::identity()
    }

    /// A closed abstraction of at most `max_size` nodes.
    pub fn value_of_size(&mut self, max_size: u64) -> Term {
        for _ in 0..MAX_ATTEMPTS {
            let t = self.term_of_size(max_size);
            if t.is_value() {
                return t;
            }
        }
        named::identity()
    }

    fn attempt(&mut self, budget: u64, depth: u32) -> Option<Term> {
        let w = [
            if budget >= 2 { self.cfg.abs_weight } else { 0 },
            if budget >= 3 { self.cfg.app_weight } else { 0 },
            self.cfg.var_weight,
        ];
        let total: u32 = w.iter().sum();
        if total == 0 {
            return None;
        }
        let mut pick = self.rng.gen_range(0..total);
        let kind = w.iter().position(|&x| {
            if pick < x {
                true
            } else {
                pick -= x;
                false
            }
        })?;
        match kind {
            0 => {
                let body = self.attempt(budget - 1, depth + 1)?;
                Some(Term::abs_indexed(binder_hint(depth), body))
            }
            1 => {
                let left = self.rng.gen_range(1..=budget - 2);
                let f = self.attempt(left, depth)?;
                let a = self.attempt(budget - 1 - f.size(), depth)?;
                Some(Term::app(f, a))
            }
            _ => {
                let pool = self.cfg.var_pool.max(1);
                let i = self.rng.gen_range(0..pool);
                if i < depth {
                    Some(Term::bound(i))
                } else {
                    Some(Term::var(format!("free{i}")))
                }
            }
        }
    }

    /// A finite relation of `pairs` random pairs.
    pub fn relation(&mut self, pairs: usize, max_size: u64) -> FiniteRelation {
        (0..pairs)
            .map(|_| (self.term_of_size(max_size), self.term_of_size(max_size)))
            .collect()
    }

    /// A coupled relation: `R1` is a random subset of `R2`.
    pub fn coupled_relation(&mut self, pairs: usize, max_size: u64) -> CoupledRelation {
        let r2 = self.relation(pairs, max_size);
        let keep: Vec<bool> = (0..r2.len()).map(|_| self.rng.gen_bool(0.5)).collect();
        let r1: FiniteRelation = r2
            .pairs()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(p, _)| p.clone())
            .collect();
        CoupledRelation::new(r1, r2)
    }
}

/// One closed term from `cfg`.
pub fn generate_term(cfg: &GenConfig) -> Term {
    TermGenerator::new(cfg.clone()).term()
}

/// `count` terms from one seeded stream.
pub fn generate_corpus(cfg: &GenConfig, count: usize) -> Vec<Term> {
    let mut g = TermGenerator::new(cfg.clone());
    (0..count).map(|_| g.term()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub generator: GenConfig,
    pub ctx_bound: usize,
    pub oracle: OracleConfig,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteCase {
    pub term: Term,
    pub value: Term,
    pub verdict: EquivVerdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub config: SuiteConfig,
    /// Terms drawn from the generator.
    pub generated: usize,
    /// Drawn terms that were values already or did not converge.
    pub excluded: usize,
    pub checked: usize,
    pub distinguished: usize,
    pub inconclusive: usize,
    /// Distinguished and inconclusive cases.
    pub failures: Vec<SuiteCase>,
}

/// Generates converging call-by-value terms `M ⇓ V` (non-values only) and
/// checks that the oracle never distinguishes `M` from `V`.
pub fn convergence_value_equiv_suite(count: usize, cfg: &SuiteConfig) -> SuiteReport {
    let s = Strategy::Cbv;
    let mut g = TermGenerator::new(cfg.generator.clone());
    let mut report = SuiteReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        generated: 0,
        excluded: 0,
        checked: 0,
        distinguished: 0,
        inconclusive: 0,
        failures: Vec::new(),
    };
    let max_draws = count.saturating_mul(1000).max(1000);
    while report.checked < count && report.generated < max_draws {
        let m = g.term();
        report.generated += 1;
        let value = match probe_closed(&m, s, cfg.oracle.fuel) {
            Fate::Converged { value, .. } if !m.is_value() => value,
            _ => {
                report.excluded += 1;
                continue;
            }
        };
        report.checked += 1;
        let verdict = ctx_equiv(&m, &value, s, cfg.ctx_bound, &cfg.oracle);
        match verdict {
            EquivVerdict::EquivalentUpToBound { .. } => continue,
            EquivVerdict::Distinguished { .. } => report.distinguished += 1,
            EquivVerdict::Inconclusive { .. } => report.inconclusive += 1,
        }
        report.failures.push(SuiteCase { term: m, value, verdict });
    }
    report
}
