//! Up-to techniques as transformers on coupled views, and empirical
//! validators for the axioms that make them sound.
//!
//! Equality and inclusion of views are tested by membership on a
//! deterministic probe set of term pairs.

use std::fmt;
use std::sync::Arc;

use indexmap::IndexSet;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bisim::{
    check_clb_upto, check_obligations, quantifier_pairs, CheckConfig, CheckKind, ClauseReport, Obligations, Report,
    Verdict, VerdictKind, Witness,
};
use crate::closures::{closure_pairs, ctx_closure_view, CoupledView, RelationView};
use crate::enumerate::closed_terms_up_to;
use crate::oracle::{GenConfig, TermGenerator};
use crate::relation::{CoupledRelation, FiniteRelation};
use crate::semantics::{probe_closed, step_closed, Fate, Strategy};
use crate::term::Term;

/// Default fuel of the up-to-reduction technique.
pub const DEFAULT_REDUCTION_FUEL: u64 = 100;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "technique", rename_all = "snake_case")]
pub enum UpToTechnique {
    /// Up to evaluation context: `(R1, R2 ∪ {(E M, F N) | E R2 F, M R1★ N})`.
    Pev,
    /// Up to context, call-by-name.
    CtxC,
    /// Up to context, call-by-value.
    CtxV,
    /// Up to reduction: `(R1, ⟹ R2 ⟸)`.
    Reduction { strategy: Strategy, fuel: u64 },
    /// `outer ∘ inner`: `inner` is applied first.
    Compose {
        outer: Box<UpToTechnique>,
        inner: Box<UpToTechnique>,
    },
    /// `bound`-fold iteration; the evaluation-context technique iterates to
    /// the evaluation-contextual closure in closed form.
    Nu { base: Box<UpToTechnique>, bound: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UpToError {
    #[error("technique {technique} is undefined on this relation: {reason}")]
    Undefined { technique: String, reason: String },
    #[error("bad technique expression at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

impl UpToTechnique {
    pub fn compose(outer: UpToTechnique, inner: UpToTechnique) -> UpToTechnique {
        UpToTechnique::Compose {
            outer: Box::new(outer),
            inner: Box::new(inner),
        }
    }

    pub fn nu(base: UpToTechnique, bound: usize) -> UpToTechnique {
        UpToTechnique::Nu {
            base: Box::new(base),
            bound,
        }
    }

    pub fn reduction(strategy: Strategy) -> UpToTechnique {
        UpToTechnique::Reduction {
            strategy,
            fuel: DEFAULT_REDUCTION_FUEL,
        }
    }

    /// The context-closure technique for a strategy.
    pub fn ctx(strategy: Strategy) -> UpToTechnique {
        match strategy {
            Strategy::Cbn => UpToTechnique::CtxC,
            Strategy::Cbv => UpToTechnique::CtxV,
        }
    }

    /// Applies the technique to a relation. All techniques are total on
    /// coupled relations and undefined elsewhere.
    pub fn apply(&self, r: &CoupledRelation) -> Result<CoupledView, UpToError> {
        if !r.is_coupled() {
            return Err(UpToError::Undefined {
                technique: self.to_string(),
                reason: "the first component is not included in the second".into(),
            });
        }
        Ok(self.apply_view(&CoupledView::from_relation(r)))
    }

    pub fn apply_view(&self, v: &CoupledView) -> CoupledView {
        match self {
            UpToTechnique::Pev => pev(v),
            UpToTechnique::CtxC => ctx_closure_view(v, Strategy::Cbn),
            UpToTechnique::CtxV => ctx_closure_view(v, Strategy::Cbv),
            UpToTechnique::Reduction { strategy, fuel } => CoupledView::new(
                v.first.clone(),
                RelationView::reduction(v.second.clone(), *strategy, *fuel),
            ),
            UpToTechnique::Compose { outer, inner } => outer.apply_view(&inner.apply_view(v)),
            UpToTechnique::Nu { base, bound } => match **base {
                UpToTechnique::Pev => CoupledView::new(
                    v.first.clone(),
                    RelationView::eccn(v.second.clone(), RelationView::closed_closure(v.first.clone())),
                ),
                _ => iterate_view(base, v, *bound),
            },
        }
    }
}

fn pev(v: &CoupledView) -> CoupledView {
    let star = RelationView::closed_closure(v.first.clone());
    CoupledView::new(
        v.first.clone(),
        RelationView::union([v.second.clone(), RelationView::extend(v.second.clone(), star)]),
    )
}

/// `t^k(r)`.
pub fn iterate(t: &UpToTechnique, r: &CoupledRelation, k: usize) -> Result<CoupledView, UpToError> {
    if k == 0 {
        return Ok(CoupledView::from_relation(r));
    }
    let first = t.apply(r)?;
    Ok(iterate_view(t, &first, k - 1))
}

pub fn iterate_view(t: &UpToTechnique, v: &CoupledView, k: usize) -> CoupledView {
    let mut cur = v.clone();
    for _ in 0..k {
        cur = t.apply_view(&cur);
    }
    cur
}

impl fmt::Display for UpToTechnique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UpToTechnique::Pev => write!(f, "pev"),
            UpToTechnique::CtxC => write!(f, "ctxc"),
            UpToTechnique::CtxV => write!(f, "ctxv"),
            UpToTechnique::Reduction { fuel, .. } => write!(f, "red:{fuel}"),
            UpToTechnique::Compose { outer, inner } => write!(f, "{outer}.{inner}"),
            UpToTechnique::Nu { base, bound } => match **base {
                UpToTechnique::Compose { .. } => write!(f, "nu({bound}):({base})"),
                _ => write!(f, "nu({bound}):{base}"),
            },
        }
    }
}

/// Parses a technique expression.
///
/// ```text
/// expr ::= atom ('.' expr)?          a.b is a ∘ b: b acts first
/// atom ::= pev | ctx | ctxc | ctxv | red (':' fuel)? | nu(k):atom | '(' expr ')'
/// ```
///
/// `ctx` and `red` take the given strategy.
pub fn parse_technique(src: &str, strategy: Strategy) -> Result<UpToTechnique, UpToError> {
    let mut p = TechParser {
        src: src.as_bytes(),
        pos: 0,
        strategy,
    };
    let t = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(t)
}

struct TechParser<'a> {
    src: &'a [u8],
    pos: usize,
    strategy: Strategy,
}

impl TechParser<'_> {
    fn error(&self, msg: &str) -> UpToError {
        UpToError::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn number(&mut self) -> Result<u64, UpToError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap_or("")
            .parse()
            .map_err(|_| self.error("expected a number"))
    }

    fn expr(&mut self) -> Result<UpToTechnique, UpToError> {
        let head = self.atom()?;
        if self.eat(b'.') {
            let rest = self.expr()?;
            return Ok(UpToTechnique::compose(head, rest));
        }
        Ok(head)
    }

    fn atom(&mut self) -> Result<UpToTechnique, UpToError> {
        if self.eat(b'(') {
            let e = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(e);
        }
        let start = self.pos;
        match self.word() {
            "pev" => Ok(UpToTechnique::Pev),
            "ctx" => Ok(UpToTechnique::ctx(self.strategy)),
            "ctxc" => Ok(UpToTechnique::CtxC),
            "ctxv" => Ok(UpToTechnique::CtxV),
            "red" => {
                let fuel = if self.eat(b':') {
                    self.number()?
                } else {
                    DEFAULT_REDUCTION_FUEL
                };
                Ok(UpToTechnique::Reduction {
                    strategy: self.strategy,
                    fuel,
                })
            }
            "nu" => {
                if !self.eat(b'(') {
                    return Err(self.error("expected '(' after nu"));
                }
                let bound = self.number()? as usize;
                if !self.eat(b')') || !self.eat(b':') {
                    return Err(self.error("expected '):' in nu(k):t"));
                }
                let base = self.atom()?;
                Ok(UpToTechnique::nu(base, bound))
            }
            "" => Err(self.error("expected a technique")),
            w => {
                let msg = format!("unknown technique '{w}'");
                self.pos = start;
                Err(self.error(&msg))
            }
        }
    }
}

/// Size knobs for probe sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// All pairs of closed terms up to this size are probes.
    pub term_size: u64,
    /// Probes extend relation pairs by up to this many arguments.
    pub extension_depth: usize,
    /// Context-closure pairs of the relation up to this many nodes.
    pub closure_bound: usize,
    /// Closure bound for the argument quantifier of progression checks.
    pub quantifier_bound: usize,
}

impl Default for ProbeConfig {
    fn default() -> ProbeConfig {
        ProbeConfig {
            term_size: 4,
            extension_depth: 2,
            closure_bound: 4,
            quantifier_bound: 4,
        }
    }
}

/// The deterministic probe set for a relation: small term pairs, the
/// relation's pairs with their reducts and argument extensions, and small
/// context-closure pairs.
pub fn probe_pairs(r: &CoupledRelation, pc: &ProbeConfig, strategy: Strategy) -> Vec<(Term, Term)> {
    let small = closed_terms_up_to(pc.term_size);
    let mut out: IndexSet<(Term, Term)> = IndexSet::new();
    for a in &small {
        for b in &small {
            out.insert((a.clone(), b.clone()));
        }
    }
    let base: Vec<(Term, Term)> = r.r1.pairs().chain(r.r2.pairs()).cloned().collect();
    let mut args: Vec<(Term, Term)> = closed_terms_up_to(3).into_iter().map(|t| (t.clone(), t)).collect();
    args.extend(r.r1.pairs().cloned());
    let mut layer: Vec<(Term, Term)> = base.clone();
    for (m, n) in &base {
        let m1 = step_closed(m, strategy);
        let n1 = step_closed(n, strategy);
        if let Some(m1) = &m1 {
            out.insert((m1.clone(), n.clone()));
        }
        if let Some(n1) = &n1 {
            out.insert((m.clone(), n1.clone()));
        }
        if let (Some(m1), Some(n1)) = (m1, n1) {
            out.insert((m1, n1));
        }
    }
    out.extend(base.iter().cloned());
    for _ in 0..pc.extension_depth {
        let mut next = Vec::new();
        for (m, n) in &layer {
            for (x, y) in &args {
                next.push((Term::app(m.clone(), x.clone()), Term::app(n.clone(), y.clone())));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out.extend(closure_pairs(base, pc.closure_bound));
    out.into_iter().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "axiom", content = "n", rename_all = "snake_case")]
pub enum Axiom {
    Extensive,
    Monotone,
    Compatible,
    RespectfullyCompatible,
    /// `P^n = P^m` for all `n, m ≥ N`, tested as `P^N = P^(N+1)`.
    FinitelyConvergent(usize),
    Commute,
    MonotoneCommuteInclusion,
    /// The iterated evaluation-context technique equals the
    /// evaluation-contextual closure.
    NuEqualsEcc,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::Extensive => write!(f, "extensive"),
            Axiom::Monotone => write!(f, "monotone"),
            Axiom::Compatible => write!(f, "compatible"),
            Axiom::RespectfullyCompatible => write!(f, "respectfully-compatible"),
            Axiom::FinitelyConvergent(n) => write!(f, "finitely-convergent({n})"),
            Axiom::Commute => write!(f, "commute"),
            Axiom::MonotoneCommuteInclusion => write!(f, "monotone-commute-inclusion"),
            Axiom::NuEqualsEcc => write!(f, "nu-equals-ecc"),
        }
    }
}

impl Axiom {
    pub fn is_binary(&self) -> bool {
        matches!(self, Axiom::Commute | Axiom::MonotoneCommuteInclusion)
    }

    pub fn parse(s: &str) -> Option<Axiom> {
        Some(match s {
            "extensive" => Axiom::Extensive,
            "monotone" => Axiom::Monotone,
            "compatible" => Axiom::Compatible,
            "respectfully-compatible" | "respectful" => Axiom::RespectfullyCompatible,
            "commute" => Axiom::Commute,
            "monotone-commute-inclusion" => Axiom::MonotoneCommuteInclusion,
            "nu-equals-ecc" => Axiom::NuEqualsEcc,
            _ => {
                let n = s.strip_prefix("finitely-convergent")?;
                let n = n.strip_prefix('(').and_then(|n| n.strip_suffix(')')).unwrap_or(n);
                Axiom::FinitelyConvergent(if n.is_empty() { 1 } else { n.parse().ok()? })
            }
        })
    }
}

/// A relation with a target it is known to progress to.
#[derive(Clone, Debug)]
pub struct ProgressionWitness {
    pub r: CoupledRelation,
    pub s: CoupledView,
}

/// Builds `S ⊇ R` with `R ⤳ S` by adding matched reducts: for each pair,
/// the one-step reducts paired with the other side, and for abstraction
/// pairs the value of the partner together with all body instances.
/// Pairs whose abstraction side is not matched by a converging partner are
/// dropped from `R`. The result is confirmed with the progression checker.
pub fn progression_witness(r: &CoupledRelation, cfg: &CheckConfig) -> Option<ProgressionWitness> {
    let vf = cfg.verification_fuel();
    let converges = |t: &Term| matches!(probe_closed(t, cfg.strategy, vf), Fate::Converged { .. });
    let keep = |m: &Term, n: &Term| (!m.is_value() || converges(n)) && (!n.is_value() || converges(m));
    let r2 = r.r2.filter(keep);
    let r1 = r.r1.filter(|m, n| r2.contains(m, n));
    let r = CoupledRelation::new(r1, r2);

    let mut extra = FiniteRelation::new();
    let mut abs: Vec<(Term, Term)> = Vec::new();
    for (m, n) in r.r2.pairs() {
        if let Some(m1) = step_closed(m, cfg.strategy) {
            extra.insert(m1, n.clone()).ok()?;
        }
        if let Some(n1) = step_closed(n, cfg.strategy) {
            extra.insert(m.clone(), n1).ok()?;
        }
        if m.is_value() {
            abs.push((m.clone(), probe_closed(n, cfg.strategy, vf).value()?.clone()));
        }
        if n.is_value() {
            abs.push((probe_closed(m, cfg.strategy, vf).value()?.clone(), n.clone()));
        }
    }
    for (m, n) in &abs {
        extra.insert(m.clone(), n.clone()).ok()?;
    }
    let mut s1 = r.r1.clone();
    if cfg.strategy == Strategy::Cbv {
        for (m, n) in &abs {
            s1.insert(m.clone(), n.clone()).ok()?;
        }
    }
    let star = RelationView::closed_closure(RelationView::finite(&r.r1));
    let args = match cfg.strategy {
        Strategy::Cbn => star,
        Strategy::Cbv => RelationView::value_restrict(star),
    };
    let s2 = RelationView::union([
        RelationView::finite(&r.r2.union(&extra)),
        RelationView::Instances {
            abs: Arc::new(abs),
            args: Arc::new(args),
        },
    ]);
    let s = CoupledView::new(RelationView::finite(&s1), s2);
    let report = crate::bisim::check_progression(&r, &s, cfg);
    report.verdict.holds().then_some(ProgressionWitness { r, s })
}

/// Inputs for axiom validation.
#[derive(Clone, Debug, Default)]
pub struct Samples {
    pub relations: Vec<CoupledRelation>,
    pub witnesses: Vec<ProgressionWitness>,
}

impl Samples {
    /// `relations` random coupled relations and `witnesses` progression
    /// witnesses built from further random relations, all from one seed.
    pub fn generate(seed: u64, relations: usize, witnesses: usize, cfg: &CheckConfig) -> Samples {
        let mut g = TermGenerator::new(GenConfig {
            seed,
            max_size: 6,
            ..GenConfig::default()
        });
        let mut out = Samples::default();
        for _ in 0..relations {
            let pairs = g.rng().gen_range(1..=3);
            out.relations.push(g.coupled_relation(pairs, 6));
        }
        let mut attempts = 0;
        while out.witnesses.len() < witnesses && attempts < witnesses * 50 {
            attempts += 1;
            let pairs = g.rng().gen_range(1..=3);
            let r = g.coupled_relation(pairs, 6);
            if let Some(w) = progression_witness(&r, cfg) {
                if !w.r.r2.is_empty() {
                    out.witnesses.push(w);
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomConfig {
    pub check: CheckConfig,
    pub probes: ProbeConfig,
}

impl AxiomConfig {
    pub fn new(strategy: Strategy) -> AxiomConfig {
        let mut check = CheckConfig::new(strategy);
        check.fuel = 200;
        check.closure_bound = ProbeConfig::default().quantifier_bound;
        AxiomConfig {
            check,
            probes: ProbeConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomVerdict {
    Holds,
    Violated,
    /// Progression clauses could not be decided within fuel.
    Inconclusive,
    /// The precondition of the axiom never held on the samples.
    Vacuous,
}

/// A failing instance, located by sample index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomCounterexample {
    pub sample: usize,
    /// The sample relation in relation-file syntax.
    pub relation: String,
    pub left: Term,
    pub right: Term,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomCheckOutcome {
    pub axiom: Axiom,
    pub technique: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub other: Option<String>,
    pub samples: String,
    /// Probe pairs or clause instances examined.
    pub instances: usize,
    pub verdict: AxiomVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<AxiomCounterexample>,
}

impl AxiomCheckOutcome {
    pub fn holds(&self) -> bool {
        self.verdict == AxiomVerdict::Holds
    }

    /// Re-runs the axiom on the offending sample alone and confirms the
    /// same counterexample.
    pub fn replay(&self, t: &UpToTechnique, other: Option<&UpToTechnique>, samples: &Samples, cfg: &AxiomConfig) -> bool {
        let Some(cx) = &self.counterexample else {
            return false;
        };
        let single = Samples {
            relations: samples.relations.get(cx.sample).cloned().into_iter().collect(),
            witnesses: samples.witnesses.get(cx.sample).cloned().into_iter().collect(),
        };
        let again = check_axiom(self.axiom, t, other, &single, cfg);
        match again.counterexample {
            Some(c) => c.left == cx.left && c.right == cx.right && c.relation == cx.relation,
            None => false,
        }
    }
}

struct Tally {
    instances: usize,
    inconclusive: bool,
    precondition_met: bool,
    counterexample: Option<AxiomCounterexample>,
}

impl Tally {
    fn new() -> Tally {
        Tally {
            instances: 0,
            inconclusive: false,
            precondition_met: false,
            counterexample: None,
        }
    }

    fn verdict(&self) -> AxiomVerdict {
        if self.counterexample.is_some() {
            AxiomVerdict::Violated
        } else if !self.precondition_met {
            AxiomVerdict::Vacuous
        } else if self.inconclusive {
            AxiomVerdict::Inconclusive
        } else {
            AxiomVerdict::Holds
        }
    }
}

fn counterexample(i: usize, r: &CoupledRelation, pair: &(Term, Term), detail: String) -> AxiomCounterexample {
    AxiomCounterexample {
        sample: i,
        relation: r.to_file_string(),
        left: pair.0.clone(),
        right: pair.1.clone(),
        detail,
        witness: None,
    }
}

/// First probe in `a` but not in `b`, per component.
fn inclusion_gap(a: &CoupledView, b: &CoupledView, probes: &[(Term, Term)]) -> Option<((Term, Term), &'static str)> {
    for p in probes {
        if a.first.contains(&p.0, &p.1) && !b.first.contains(&p.0, &p.1) {
            return Some((p.clone(), "first component"));
        }
        if a.second.contains(&p.0, &p.1) && !b.second.contains(&p.0, &p.1) {
            return Some((p.clone(), "second component"));
        }
    }
    None
}

fn equality_gap(a: &CoupledView, b: &CoupledView, probes: &[(Term, Term)]) -> Option<((Term, Term), &'static str)> {
    inclusion_gap(a, b, probes).or_else(|| inclusion_gap(b, a, probes))
}

/// Validates an axiom for `t` (and `other` for binary axioms) on samples.
pub fn check_axiom(
    axiom: Axiom,
    t: &UpToTechnique,
    other: Option<&UpToTechnique>,
    samples: &Samples,
    cfg: &AxiomConfig,
) -> AxiomCheckOutcome {
    let strategy = cfg.check.strategy;
    let mut tally = Tally::new();
    let mut described = format!("{} relations", samples.relations.len());
    match axiom {
        Axiom::Extensive => {
            for (i, r) in samples.relations.iter().enumerate() {
                let Ok(v) = t.apply(r) else { continue };
                tally.precondition_met = true;
                let own = CoupledView::from_relation(r);
                let mut probes: Vec<(Term, Term)> = r.r1.pairs().chain(r.r2.pairs()).cloned().collect();
                probes.extend(probe_pairs(r, &cfg.probes, strategy));
                tally.instances += probes.len();
                if let Some((p, which)) = inclusion_gap(&own, &v, &probes) {
                    tally.counterexample = Some(counterexample(i, r, &p, format!("in the relation but not in its image ({which})")));
                    break;
                }
            }
        }
        Axiom::Monotone => {
            let n = samples.relations.len();
            for (i, r) in samples.relations.iter().enumerate() {
                let bigger = r.union(&samples.relations[(i + 1) % n]);
                let (Ok(a), Ok(b)) = (t.apply(r), t.apply(&bigger)) else { continue };
                tally.precondition_met = true;
                let probes = probe_pairs(&bigger, &cfg.probes, strategy);
                tally.instances += probes.len();
                if let Some((p, which)) = inclusion_gap(&a, &b, &probes) {
                    tally.counterexample = Some(counterexample(i, r, &p, format!("image not included in the image of a larger relation ({which})")));
                    break;
                }
            }
        }
        Axiom::Compatible | Axiom::RespectfullyCompatible => {
            described = format!("{} progression witnesses", samples.witnesses.len());
            for (i, w) in samples.witnesses.iter().enumerate() {
                let Ok(pr) = t.apply(&w.r) else { continue };
                tally.precondition_met = true;
                let ps = t.apply_view(&w.s);
                let probes = probe_pairs(&w.r, &cfg.probes, strategy);
                let report = check_view_progression(&w.r, &pr, &ps, &probes, cfg);
                tally.instances += report.pairs_checked;
                match report.verdict {
                    Verdict::HoldsUpToBound => {}
                    Verdict::Inconclusive { .. } => tally.inconclusive = true,
                    Verdict::Refuted { witness } => {
                        let clause = report.clauses.iter().find(|c| c.verdict.kind() == VerdictKind::Refuted);
                        let pair = clause.map(|c| (c.left.clone(), c.right.clone()))
                            .expect("a refuted verdict comes from a clause");
                        let mut cx = counterexample(i, &w.r, &pair, "image does not progress to the image of the target".into());
                        cx.witness = Some(*witness);
                        tally.counterexample = Some(cx);
                        break;
                    }
                }
            }
        }
        Axiom::FinitelyConvergent(n) => {
            for (i, r) in samples.relations.iter().enumerate() {
                let (Ok(a), Ok(b)) = (iterate(t, r, n), iterate(t, r, n + 1)) else { continue };
                tally.precondition_met = true;
                let probes = probe_pairs(r, &cfg.probes, strategy);
                tally.instances += probes.len();
                if let Some((p, which)) = equality_gap(&a, &b, &probes) {
                    tally.counterexample = Some(counterexample(i, r, &p, format!("iterates {n} and {} differ ({which})", n + 1)));
                    break;
                }
            }
        }
        Axiom::Commute => {
            let q = other.cloned().unwrap_or_else(|| t.clone());
            for (i, r) in samples.relations.iter().enumerate() {
                let (Ok(a), Ok(b)) = (
                    UpToTechnique::compose(q.clone(), t.clone()).apply(r),
                    UpToTechnique::compose(t.clone(), q.clone()).apply(r),
                ) else {
                    continue;
                };
                tally.precondition_met = true;
                let probes = probe_pairs(r, &cfg.probes, strategy);
                tally.instances += probes.len();
                if let Some((p, which)) = equality_gap(&a, &b, &probes) {
                    tally.counterexample = Some(counterexample(i, r, &p, format!("compositions differ ({which})")));
                    break;
                }
            }
        }
        Axiom::MonotoneCommuteInclusion => {
            let q = other.cloned().unwrap_or_else(|| t.clone());
            let qp = UpToTechnique::compose(q.clone(), t.clone());
            let pq = UpToTechnique::compose(t.clone(), q.clone());
            'samples: for (i, r) in samples.relations.iter().enumerate() {
                let (Ok(a), Ok(b)) = (qp.apply(r), pq.apply(r)) else { continue };
                let probes = probe_pairs(r, &cfg.probes, strategy);
                if inclusion_gap(&a, &b, &probes).is_some() {
                    continue;
                }
                tally.precondition_met = true;
                let base = CoupledView::from_relation(r);
                for k in 1..=3 {
                    let lhs = iterate_view(&qp, &base, k);
                    let rhs = iterate_view(t, &iterate_view(&q, &base, k), k);
                    tally.instances += probes.len();
                    if let Some((p, which)) = inclusion_gap(&lhs, &rhs, &probes) {
                        tally.counterexample = Some(counterexample(i, r, &p, format!("inclusion fails at k = {k} ({which})")));
                        break 'samples;
                    }
                }
            }
        }
        Axiom::NuEqualsEcc => {
            for (i, r) in samples.relations.iter().enumerate() {
                let Ok(closed_form) = UpToTechnique::nu(t.clone(), 0).apply(r) else { continue };
                tally.precondition_met = true;
                let probes = probe_pairs(r, &cfg.probes, strategy);
                // Enough layers to peel every argument of every probe.
                let depth = probes
                    .iter()
                    .map(|(m, n)| m.spine().1.len().max(n.spine().1.len()))
                    .max()
                    .unwrap_or(0);
                let Ok(iterated) = iterate(t, r, depth) else { continue };
                tally.instances += probes.len();
                if let Some((p, which)) = equality_gap(&closed_form, &iterated, &probes) {
                    tally.counterexample = Some(counterexample(i, r, &p, format!("closed form and {depth}-fold iterate differ ({which})")));
                    break;
                }
            }
        }
    }
    AxiomCheckOutcome {
        axiom,
        technique: t.to_string(),
        other: other.map(|o| o.to_string()),
        samples: described,
        instances: tally.instances,
        verdict: tally.verdict(),
        counterexample: tally.counterexample,
    }
}

/// `left ⤳ target` restricted to the probes in `left`'s second component,
/// with arguments from the closure of `r`'s first component.
fn check_view_progression(
    r: &CoupledRelation,
    left: &CoupledView,
    target: &CoupledView,
    probes: &[(Term, Term)],
    cfg: &AxiomConfig,
) -> Report {
    let mut check = cfg.check.clone();
    check.closure_bound = cfg.probes.quantifier_bound;
    let pairs: Vec<(Term, Term)> = probes
        .iter()
        .filter(|(m, n)| left.second.contains(m, n))
        .cloned()
        .collect();
    let ob = Obligations {
        quantifier: quantifier_pairs(r.r1.pairs().cloned(), &check),
        pairs,
        identity: Vec::new(),
    };
    let (clauses, verdict) = check_obligations(&ob, target, &check);
    Report {
        schema_version: crate::SCHEMA_VERSION,
        check: CheckKind::Progression,
        config: check,
        technique: None,
        coupled: None,
        verdict,
        pairs_checked: ob.pairs.len(),
        identity_sample: 0,
        quantifier_pairs: ob.quantifier.len(),
        clauses,
        cross_check: None,
    }
}

/// Checks the computable consequence of soundness: after `r ⤳ t(r)` holds,
/// each iterate `t^k(r)` progresses to `t^(k+1)(r)` on probes, for `k` up
/// to `bound`. When the up-to check itself fails, its report is returned.
pub fn soundness_harness(t: &UpToTechnique, r: &CoupledRelation, bound: usize, cfg: &AxiomConfig) -> Report {
    let gate = check_clb_upto(r, t, &cfg.check);
    if !gate.verdict.holds() {
        return gate;
    }
    let probes = probe_pairs(r, &cfg.probes, cfg.check.strategy);
    let mut clauses: Vec<ClauseReport> = Vec::new();
    let mut verdicts = Vec::new();
    let mut pairs_checked = 0;
    let mut quantifier = 0;
    let mut cur = CoupledView::from_relation(r);
    for _ in 0..=bound {
        let next = t.apply_view(&cur);
        let rep = check_view_progression(r, &cur, &next, &probes, cfg);
        pairs_checked += rep.pairs_checked;
        quantifier = rep.quantifier_pairs;
        clauses.extend(rep.clauses.into_iter().filter(|c| !c.verdict.holds()));
        verdicts.push(rep.verdict);
        cur = next;
    }
    Report {
        schema_version: crate::SCHEMA_VERSION,
        check: CheckKind::ClbUpTo,
        config: cfg.check.clone(),
        technique: Some(format!("{t} (iterates 0..={bound})")),
        coupled: Some(r.is_coupled()),
        verdict: Verdict::combine(&verdicts),
        pairs_checked,
        identity_sample: 0,
        quantifier_pairs: quantifier,
        clauses,
        cross_check: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::named::{identity, omega};

    fn rel(pairs: &[(Term, Term)]) -> FiniteRelation {
        FiniteRelation::from_pairs(pairs.iter().cloned()).unwrap()
    }

    fn omega_rel() -> CoupledRelation {
        CoupledRelation::new(FiniteRelation::new(), rel(&[(omega(), omega())]))
    }

    #[test]
    fn pev_extends_by_one_argument() {
        let v = UpToTechnique::Pev.apply(&omega_rel()).unwrap();
        let oi = Term::app(omega(), identity());
        assert!(v.second.contains(&oi, &oi));
        let oii = Term::app(oi.clone(), identity());
        assert!(!v.second.contains(&oii, &oii));
        let v2 = iterate(&UpToTechnique::Pev, &omega_rel(), 2).unwrap();
        assert!(v2.second.contains(&oii, &oii));
    }

    #[test]
    fn reduction_view() {
        let r = CoupledRelation::new(FiniteRelation::new(), rel(&[(identity(), identity())]));
        let v = UpToTechnique::reduction(Strategy::Cbn).apply(&r).unwrap();
        assert!(v.second.contains(&Term::app(identity(), identity()), &identity()));
    }

    #[test]
    fn undefined_on_non_coupled() {
        let r = CoupledRelation::new(rel(&[(identity(), omega())]), FiniteRelation::new());
        assert!(matches!(UpToTechnique::Pev.apply(&r), Err(UpToError::Undefined { .. })));
    }

    #[test]
    fn technique_syntax_round_trips() {
        for src in ["pev", "ctxc", "ctxv", "red:7", "red:100.ctxv", "nu(3):pev", "nu(2):(red:5.ctxc)"] {
            let t = parse_technique(src, Strategy::Cbv).unwrap();
            assert_eq!(t.to_string(), src);
            assert_eq!(parse_technique(&t.to_string(), Strategy::Cbv).unwrap(), t);
        }
        assert_eq!(parse_technique("ctx", Strategy::Cbn).unwrap(), UpToTechnique::CtxC);
        assert_eq!(
            parse_technique("red.ctx", Strategy::Cbv).unwrap(),
            UpToTechnique::compose(UpToTechnique::reduction(Strategy::Cbv), UpToTechnique::CtxV)
        );
        assert!(parse_technique("foo", Strategy::Cbn).is_err());
        assert!(parse_technique("pev.", Strategy::Cbn).is_err());
    }

    #[test]
    fn axiom_names_parse() {
        for a in [
            Axiom::Extensive,
            Axiom::Monotone,
            Axiom::Compatible,
            Axiom::RespectfullyCompatible,
            Axiom::FinitelyConvergent(2),
            Axiom::Commute,
            Axiom::MonotoneCommuteInclusion,
            Axiom::NuEqualsEcc,
        ] {
            assert_eq!(Axiom::parse(&a.to_string()), Some(a));
        }
    }

    #[test]
    fn witness_for_omega_relation() {
        let cfg = CheckConfig::new(Strategy::Cbn);
        let w = progression_witness(&omega_rel(), &cfg).unwrap();
        assert!(w.s.second.contains(&omega(), &omega()));
    }
}
