//! Bounded checkers for progressions, coupled logical bisimulations,
//! applicative bisimulations and logical bisimulations.
//!
//! Every check is three-valued. `HoldsUpToBound` means no clause failed with
//! the quantifier over `R1★` truncated at `closure_bound` and divergence
//! approximated by verification fuel. `Refuted` carries a witness that
//! [`Witness::replay`] re-executes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::closures::{closure_pairs, CoupledView, RelationView};
use crate::enumerate::{closed_terms_up_to, closed_values_up_to};
use crate::relation::{CoupledRelation, FiniteRelation};
use crate::semantics::{distinct_chain, evaluate, probe_closed, step_closed, ChainEnd, EvalOutcome, Fate, Strategy};
use crate::term::Term;
use crate::upto::UpToTechnique;
use crate::SCHEMA_VERSION;

/// Approximation knobs shared by all checkers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub strategy: Strategy,
    /// Step budget for reduction chains.
    pub fuel: u64,
    /// Size bound (context nodes) for the enumerated quantifier pairs.
    pub closure_bound: usize,
    /// Divergence claims are made at `fuel * verification_factor` steps.
    pub verification_factor: u64,
    /// Call-by-value only: drop the requirement that the abstraction pair
    /// is in the first component.
    #[serde(default)]
    pub up_to_environment: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
}

impl CheckConfig {
    pub fn new(strategy: Strategy) -> CheckConfig {
        CheckConfig {
            strategy,
            fuel: 1000,
            closure_bound: 6,
            verification_factor: 10,
            up_to_environment: false,
        }
    }

    pub fn verification_fuel(&self) -> u64 {
        self.fuel.saturating_mul(self.verification_factor)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.fuel == 0 {
            return Err(ConfigError::NotPositive("fuel"));
        }
        if self.closure_bound == 0 {
            return Err(ConfigError::NotPositive("closure bound"));
        }
        if self.verification_factor == 0 {
            return Err(ConfigError::NotPositive("verification factor"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClauseId {
    #[serde(rename = "1")]
    Step,
    #[serde(rename = "2")]
    Abstraction,
    #[serde(rename = "converse-1")]
    ConverseStep,
    #[serde(rename = "converse-2")]
    ConverseAbstraction,
    #[serde(rename = "coupledness")]
    Coupledness,
    #[serde(rename = "cbv-abs-pairing")]
    CbvAbsPairing,
    #[serde(rename = "converse-cbv-abs-pairing")]
    ConverseCbvAbsPairing,
}

impl ClauseId {
    fn step(flipped: bool) -> ClauseId {
        if flipped {
            ClauseId::ConverseStep
        } else {
            ClauseId::Step
        }
    }

    fn abstraction(flipped: bool) -> ClauseId {
        if flipped {
            ClauseId::ConverseAbstraction
        } else {
            ClauseId::Abstraction
        }
    }

    fn pairing(flipped: bool) -> ClauseId {
        if flipped {
            ClauseId::ConverseCbvAbsPairing
        } else {
            ClauseId::CbvAbsPairing
        }
    }
}

/// Evidence that a term does not converge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "evidence", rename_all = "snake_case")]
pub enum Divergence {
    /// Exact: the reduction sequence revisits a term.
    Cycle { entry: u64, period: u64 },
    /// Approximate: no value within the verification fuel.
    VerificationFuel { fuel: u64 },
}

/// Concrete data behind a refutation. Terms flagged `flipped` come from a
/// converse clause; relation queries are then made with the pair swapped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// `active ⟶ reduct`, but no term on the complete chain of `partner`
    /// is related to `reduct`.
    NoPartner {
        active: Term,
        reduct: Term,
        partner: Term,
        chain_length: usize,
        chain_end: ChainEnd,
        flipped: bool,
    },
    /// `value` is an abstraction but `partner` does not converge.
    NoValue {
        value: Term,
        partner: Term,
        divergence: Divergence,
    },
    /// The abstraction pair is missing from the first component.
    AbsPairing {
        value: Term,
        partner: Term,
        partner_value: Term,
        flipped: bool,
    },
    /// Instantiated bodies `(left, right)` are not related. `x` and `y` are
    /// the arguments for the left- and right-hand side of the original pair.
    BodyMismatch {
        value: Term,
        partner_value: Term,
        x: Term,
        y: Term,
        left: Term,
        right: Term,
        flipped: bool,
    },
    /// `(left, right)` is in the first component but not the second.
    NotCoupled { left: Term, right: Term },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    HoldsUpToBound,
    Refuted { witness: Box<Witness> },
    Inconclusive { reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    HoldsUpToBound,
    Refuted,
    Inconclusive,
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::HoldsUpToBound => VerdictKind::HoldsUpToBound,
            Verdict::Refuted { .. } => VerdictKind::Refuted,
            Verdict::Inconclusive { .. } => VerdictKind::Inconclusive,
        }
    }

    pub fn holds(&self) -> bool {
        matches!(self, Verdict::HoldsUpToBound)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Refuted { witness } => Some(witness),
            _ => None,
        }
    }

    fn refuted(w: Witness) -> Verdict {
        Verdict::Refuted { witness: Box::new(w) }
    }

    /// First refutation wins, then the first inconclusive clause.
    pub fn combine<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> Verdict {
        let mut inconclusive = None;
        for v in verdicts {
            match v {
                Verdict::Refuted { .. } => return v.clone(),
                Verdict::Inconclusive { .. } if inconclusive.is_none() => inconclusive = Some(v.clone()),
                _ => {}
            }
        }
        inconclusive.unwrap_or(Verdict::HoldsUpToBound)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseReport {
    pub left: Term,
    pub right: Term,
    pub clause: ClauseId,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Progression,
    Clb,
    ClbUpTo,
    Applicative,
    Logical,
}

/// Result of the second, independent route of a logical-bisimulation check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub route: String,
    pub verdict: VerdictKind,
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub check: CheckKind,
    pub config: CheckConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub technique: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupled: Option<bool>,
    pub verdict: Verdict,
    /// Explicitly listed pairs whose clauses were checked.
    pub pairs_checked: usize,
    /// Identity pairs `(T, T)` checked for relations that include the identity.
    pub identity_sample: usize,
    /// Number of `(X, Y)` instantiations used for abstraction clauses.
    pub quantifier_pairs: usize,
    /// Clause reports for listed pairs; identity pairs appear only when
    /// they do not hold.
    pub clauses: Vec<ClauseReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<CrossCheck>,
}

impl Report {
    /// Reports for one clause kind.
    pub fn clauses_of(&self, id: ClauseId) -> impl Iterator<Item = &ClauseReport> {
        self.clauses.iter().filter(move |c| c.clause == id)
    }

    /// Whether every progression clause (everything but coupledness) holds.
    pub fn progression_clauses_hold(&self) -> bool {
        self.clauses
            .iter()
            .filter(|c| c.clause != ClauseId::Coupledness)
            .all(|c| c.verdict.holds())
    }
}

/// Left-hand pairs and quantifier instances for a progression check.
#[derive(Clone, Debug, Default)]
pub struct Obligations {
    /// Pairs reported individually.
    pub pairs: Vec<(Term, Term)>,
    /// Identity pairs, reported only on failure.
    pub identity: Vec<(Term, Term)>,
    /// `(X, Y)` instances for abstraction clauses, already value-restricted
    /// when the strategy is call-by-value.
    pub quantifier: Vec<(Term, Term)>,
}

impl Obligations {
    /// Obligations of `r2` with arguments from `r1★`.
    pub fn for_relation(r1: &FiniteRelation, r2: &FiniteRelation, cfg: &CheckConfig) -> Obligations {
        Obligations {
            pairs: r2.pairs().cloned().collect(),
            identity: identity_sample(r2, cfg.closure_bound),
            quantifier: quantifier_pairs(r1.pairs().cloned(), cfg),
        }
    }
}

/// `(T, T)` for closed `T` up to the bound when `r` includes the identity.
pub fn identity_sample(r: &FiniteRelation, bound: usize) -> Vec<(Term, Term)> {
    if !r.includes_identity() {
        return Vec::new();
    }
    closed_terms_up_to(bound as u64)
        .into_iter()
        .map(|t| (t.clone(), t))
        .filter(|p| !r.pairs().any(|q| q == p))
        .collect()
}

/// Closure pairs over `base` up to the closure bound, value-restricted in
/// call-by-value.
pub fn quantifier_pairs(base: impl IntoIterator<Item = (Term, Term)>, cfg: &CheckConfig) -> Vec<(Term, Term)> {
    let pairs = closure_pairs(base, cfg.closure_bound);
    match cfg.strategy {
        Strategy::Cbn => pairs,
        Strategy::Cbv => pairs
            .into_iter()
            .filter(|(x, y)| x.is_value() && y.is_value())
            .collect(),
    }
}

/// Checks the progression clauses of every obligation against `s`.
pub fn check_obligations(ob: &Obligations, s: &CoupledView, cfg: &CheckConfig) -> (Vec<ClauseReport>, Verdict) {
    let mut reports = Vec::new();
    let mut verdicts = Vec::new();
    for (m, n) in &ob.pairs {
        for flipped in [false, true] {
            let rep = check_direction(m, n, flipped, &ob.quantifier, s, cfg);
            verdicts.push(rep.verdict.clone());
            reports.push(rep);
        }
    }
    for (m, n) in &ob.identity {
        for flipped in [false, true] {
            let rep = check_direction(m, n, flipped, &ob.quantifier, s, cfg);
            if !rep.verdict.holds() {
                verdicts.push(rep.verdict.clone());
                reports.push(rep);
            }
        }
    }
    let verdict = Verdict::combine(&verdicts);
    (reports, verdict)
}

fn instantiate_abs(abs: &Term, arg: &Term) -> Term {
    abs.apply_abs(arg).expect("abstraction")
}

/// One direction of the clauses for `(m, n)`: the forward clauses when
/// `flipped` is false, the converse clauses (driven by `n`) otherwise.
fn check_direction(
    m: &Term,
    n: &Term,
    flipped: bool,
    quantifier: &[(Term, Term)],
    s: &CoupledView,
    cfg: &CheckConfig,
) -> ClauseReport {
    let (active, partner) = if flipped { (n, m) } else { (m, n) };
    let report = |clause, verdict| ClauseReport {
        left: m.clone(),
        right: n.clone(),
        clause,
        verdict,
    };

    if let Some(reduct) = step_closed(active, cfg.strategy) {
        let chain = distinct_chain(partner, cfg.strategy, cfg.fuel);
        if chain.terms.iter().any(|p| s.second.holds(&reduct, p, flipped)) {
            return report(ClauseId::step(flipped), Verdict::HoldsUpToBound);
        }
        let verdict = if chain.complete() {
            Verdict::refuted(Witness::NoPartner {
                active: active.clone(),
                reduct,
                partner: partner.clone(),
                chain_length: chain.terms.len(),
                chain_end: chain.end,
                flipped,
            })
        } else {
            Verdict::Inconclusive {
                reason: format!(
                    "no related reduct among the first {} terms of the partner's reduction",
                    chain.terms.len()
                ),
            }
        };
        return report(ClauseId::step(flipped), verdict);
    }

    // `active` is a value.
    let partner_value = match probe_closed(partner, cfg.strategy, cfg.verification_fuel()) {
        Fate::Converged { value, .. } => value,
        fate => {
            return report(
                ClauseId::abstraction(flipped),
                Verdict::refuted(Witness::NoValue {
                    value: active.clone(),
                    partner: partner.clone(),
                    divergence: divergence_of(&fate, cfg.verification_fuel()),
                }),
            )
        }
    };
    if cfg.strategy == Strategy::Cbv
        && !cfg.up_to_environment
        && !s.first.holds(active, &partner_value, flipped)
    {
        return report(
            ClauseId::pairing(flipped),
            Verdict::refuted(Witness::AbsPairing {
                value: active.clone(),
                partner: partner.clone(),
                partner_value,
                flipped,
            }),
        );
    }
    for (x, y) in quantifier {
        let (ax, px) = if flipped { (y, x) } else { (x, y) };
        let a_body = instantiate_abs(active, ax);
        let p_body = instantiate_abs(&partner_value, px);
        if !s.second.holds(&a_body, &p_body, flipped) {
            let (left, right) = if flipped { (p_body, a_body) } else { (a_body, p_body) };
            return report(
                ClauseId::abstraction(flipped),
                Verdict::refuted(Witness::BodyMismatch {
                    value: active.clone(),
                    partner_value,
                    x: x.clone(),
                    y: y.clone(),
                    left,
                    right,
                    flipped,
                }),
            );
        }
    }
    report(ClauseId::abstraction(flipped), Verdict::HoldsUpToBound)
}

fn divergence_of(fate: &Fate, fuel: u64) -> Divergence {
    match fate {
        Fate::Cycle { entry, period } => Divergence::Cycle {
            entry: *entry,
            period: *period,
        },
        _ => Divergence::VerificationFuel { fuel },
    }
}

impl Witness {
    /// Re-executes the facts the witness claims. `s` must be the target
    /// views the refuted check used.
    pub fn replay(&self, s: &CoupledView, cfg: &CheckConfig) -> bool {
        match self {
            Witness::NoPartner {
                active,
                reduct,
                partner,
                flipped,
                ..
            } => {
                if crate::semantics::step(active, cfg.strategy).ok().flatten().as_ref() != Some(reduct) {
                    return false;
                }
                let chain = distinct_chain(partner, cfg.strategy, cfg.fuel);
                chain.complete() && !chain.terms.iter().any(|p| s.second.holds(reduct, p, *flipped))
            }
            Witness::NoValue {
                value,
                partner,
                divergence,
            } => {
                value.is_value()
                    && match divergence {
                        Divergence::Cycle { entry, period } => {
                            // Reduce to the recurring term and come back to it.
                            let at = nth_reduct(partner, cfg.strategy, *entry);
                            let again = at.as_ref().and_then(|t| nth_reduct(t, cfg.strategy, *period));
                            *period > 0 && at.is_some() && at == again
                        }
                        Divergence::VerificationFuel { fuel } => matches!(
                            evaluate(partner, cfg.strategy, *fuel),
                            Ok(EvalOutcome::FuelExhausted { .. })
                        ),
                    }
            }
            Witness::AbsPairing {
                value,
                partner,
                partner_value,
                flipped,
            } => {
                let converges = matches!(
                    evaluate(partner, cfg.strategy, cfg.verification_fuel()),
                    Ok(EvalOutcome::Converged { ref value, .. }) if value == partner_value
                );
                converges && value.is_value() && !s.first.holds(value, partner_value, *flipped)
            }
            Witness::BodyMismatch {
                value,
                partner_value,
                x,
                y,
                left,
                right,
                flipped,
            } => {
                let (ax, px) = if *flipped { (y, x) } else { (x, y) };
                let (Some(a), Some(p)) = (value.apply_abs(ax), partner_value.apply_abs(px)) else {
                    return false;
                };
                let (l, r) = if *flipped { (p, a) } else { (a, p) };
                &l == left && &r == right && !s.second.contains(left, right)
            }
            Witness::NotCoupled { left, right } => {
                s.first.contains(left, right) && !s.second.contains(left, right)
            }
        }
    }
}

fn nth_reduct(m: &Term, s: Strategy, n: u64) -> Option<Term> {
    let mut cur = m.clone();
    for _ in 0..n {
        cur = step_closed(&cur, s)?;
    }
    Some(cur)
}

fn new_report(kind: CheckKind, cfg: &CheckConfig) -> Report {
    Report {
        schema_version: SCHEMA_VERSION,
        check: kind,
        config: cfg.clone(),
        technique: None,
        coupled: None,
        verdict: Verdict::HoldsUpToBound,
        pairs_checked: 0,
        identity_sample: 0,
        quantifier_pairs: 0,
        clauses: Vec::new(),
        cross_check: None,
    }
}

/// `r ⤳ s`: the clauses for every pair of `r2`, with arguments from `r1★`.
pub fn check_progression(r: &CoupledRelation, s: &CoupledView, cfg: &CheckConfig) -> Report {
    let ob = Obligations::for_relation(&r.r1, &r.r2, cfg);
    let (clauses, verdict) = check_obligations(&ob, s, cfg);
    Report {
        pairs_checked: ob.pairs.len(),
        identity_sample: ob.identity.len(),
        quantifier_pairs: ob.quantifier.len(),
        clauses,
        verdict,
        ..new_report(CheckKind::Progression, cfg)
    }
}

/// A pair of `r1` missing from `r2`, if any.
pub fn coupledness_witness(r: &CoupledRelation, bound: usize) -> Option<Witness> {
    if let Some((m, n)) = r.r1.pairs().find(|(m, n)| !r.r2.contains(m, n)) {
        return Some(Witness::NotCoupled {
            left: m.clone(),
            right: n.clone(),
        });
    }
    if r.r1.includes_identity() && !r.r2.includes_identity() {
        let t = closed_terms_up_to(bound.max(2) as u64)
            .into_iter()
            .find(|t| !r.r2.contains(t, t))
            .unwrap_or_else(crate::term::named::identity);
        return Some(Witness::NotCoupled { left: t.clone(), right: t });
    }
    None
}

fn with_coupledness(mut report: Report, r: &CoupledRelation, cfg: &CheckConfig) -> Report {
    report.coupled = Some(r.is_coupled());
    if let Some(w) = coupledness_witness(r, cfg.closure_bound) {
        let (left, right) = match &w {
            Witness::NotCoupled { left, right } => (left.clone(), right.clone()),
            _ => unreachable!(),
        };
        let verdict = Verdict::refuted(w);
        report.clauses.insert(
            0,
            ClauseReport {
                left,
                right,
                clause: ClauseId::Coupledness,
                verdict: verdict.clone(),
            },
        );
        report.verdict = verdict;
    }
    report
}

/// Checks `r ⤳ r`. A non-coupled relation is refuted on coupledness, but its
/// progression clauses are still checked and reported.
pub fn check_clb(r: &CoupledRelation, cfg: &CheckConfig) -> Report {
    let report = check_progression(r, &CoupledView::from_relation(r), cfg);
    let report = Report {
        check: CheckKind::Clb,
        ..report
    };
    with_coupledness(report, r, cfg)
}

/// Checks `r ⤳ t(r)`.
pub fn check_clb_upto(r: &CoupledRelation, technique: &UpToTechnique, cfg: &CheckConfig) -> Report {
    let base = new_report(CheckKind::ClbUpTo, cfg);
    let mut report = match technique.apply(r) {
        Ok(s) => Report {
            check: CheckKind::ClbUpTo,
            ..check_progression(r, &s, cfg)
        },
        Err(_) => base,
    };
    report.technique = Some(technique.to_string());
    with_coupledness(report, r, cfg)
}

/// Applicative bisimulation: converging abstractions must accept every
/// closed argument (call-by-name) or closed value (call-by-value) up to the
/// closure bound, with the instantiated bodies related by `r` itself.
pub fn check_applicative_bisim(r: &FiniteRelation, cfg: &CheckConfig) -> Report {
    let args = match cfg.strategy {
        Strategy::Cbn => closed_terms_up_to(cfg.closure_bound as u64),
        Strategy::Cbv => closed_values_up_to(cfg.closure_bound as u64),
    };
    let view = RelationView::finite(r);
    let pairs: Vec<(Term, Term)> = r.pairs().cloned().collect();
    let identity = identity_sample(r, cfg.closure_bound);
    let mut clauses = Vec::new();
    let mut verdicts = Vec::new();
    for (listed, (m, n)) in pairs.iter().map(|p| (true, p)).chain(identity.iter().map(|p| (false, p))) {
        for flipped in [false, true] {
            let verdict = applicative_direction(m, n, flipped, &args, &view, cfg);
            if listed || !verdict.holds() {
                verdicts.push(verdict.clone());
                clauses.push(ClauseReport {
                    left: m.clone(),
                    right: n.clone(),
                    clause: ClauseId::abstraction(flipped),
                    verdict,
                });
            }
        }
    }
    Report {
        pairs_checked: pairs.len(),
        identity_sample: identity.len(),
        quantifier_pairs: args.len(),
        verdict: Verdict::combine(&verdicts),
        clauses,
        ..new_report(CheckKind::Applicative, cfg)
    }
}

fn applicative_direction(
    m: &Term,
    n: &Term,
    flipped: bool,
    args: &[Term],
    r: &RelationView,
    cfg: &CheckConfig,
) -> Verdict {
    let (active, partner) = if flipped { (n, m) } else { (m, n) };
    let vf = cfg.verification_fuel();
    let value = match probe_closed(active, cfg.strategy, vf) {
        Fate::Converged { value, .. } => value,
        // No obligation for a diverging side.
        _ => return Verdict::HoldsUpToBound,
    };
    let partner_value = match probe_closed(partner, cfg.strategy, vf) {
        Fate::Converged { value, .. } => value,
        fate => {
            return Verdict::refuted(Witness::NoValue {
                value,
                partner: partner.clone(),
                divergence: divergence_of(&fate, vf),
            })
        }
    };
    for w in args {
        let a = instantiate_abs(&value, w);
        let p = instantiate_abs(&partner_value, w);
        if !r.holds(&a, &p, flipped) {
            let (left, right) = if flipped { (p, a) } else { (a, p) };
            return Verdict::refuted(Witness::BodyMismatch {
                value,
                partner_value,
                x: w.clone(),
                y: w.clone(),
                left,
                right,
                flipped,
            });
        }
    }
    Verdict::HoldsUpToBound
}

/// Logical bisimulation, checked directly from its clauses and, separately,
/// as the coupled logical bisimulation `(r, r)`. The report carries the
/// direct verdict; `cross_check` records whether the two routes agree.
pub fn check_logical_bisim(r: &FiniteRelation, cfg: &CheckConfig) -> Report {
    let direct = check_logical_direct(r, cfg);
    let via_clb = check_clb(&CoupledRelation::diagonal(r.clone()), cfg);
    let route = via_clb.verdict.kind();
    Report {
        cross_check: Some(CrossCheck {
            route: "clb".into(),
            verdict: route,
            agrees: route == direct.verdict.kind(),
        }),
        ..direct
    }
}

/// The logical-bisimulation clauses, without going through views.
pub fn check_logical_direct(r: &FiniteRelation, cfg: &CheckConfig) -> Report {
    let pairs: Vec<(Term, Term)> = r.pairs().cloned().collect();
    let identity = identity_sample(r, cfg.closure_bound);
    let quantifier = quantifier_pairs(pairs.iter().cloned(), cfg);
    let related = |a: &Term, b: &Term, flipped: bool| {
        if flipped {
            r.contains(b, a)
        } else {
            r.contains(a, b)
        }
    };
    let mut clauses = Vec::new();
    let mut verdicts = Vec::new();
    for (listed, (m, n)) in pairs.iter().map(|p| (true, p)).chain(identity.iter().map(|p| (false, p))) {
        for flipped in [false, true] {
            let (active, partner) = if flipped { (n, m) } else { (m, n) };
            let (clause, verdict) = match step_closed(active, cfg.strategy) {
                Some(reduct) => {
                    let partner_chain = distinct_chain(partner, cfg.strategy, cfg.fuel);
                    let verdict = if partner_chain.terms.iter().any(|p| related(&reduct, p, flipped)) {
                        Verdict::HoldsUpToBound
                    } else if partner_chain.complete() {
                        Verdict::refuted(Witness::NoPartner {
                            active: active.clone(),
                            reduct,
                            partner: partner.clone(),
                            chain_length: partner_chain.terms.len(),
                            chain_end: partner_chain.end,
                            flipped,
                        })
                    } else {
                        Verdict::Inconclusive {
                            reason: "partner reduction truncated by fuel".into(),
                        }
                    };
                    (ClauseId::step(flipped), verdict)
                }
                None => {
                    let vf = cfg.verification_fuel();
                    let verdict = match probe_closed(partner, cfg.strategy, vf) {
                        Fate::Converged { value: pv, .. } => quantifier
                            .iter()
                            .find_map(|(x, y)| {
                                let (ax, px) = if flipped { (y, x) } else { (x, y) };
                                let a = instantiate_abs(active, ax);
                                let p = instantiate_abs(&pv, px);
                                (!related(&a, &p, flipped)).then(|| {
                                    let (left, right) = if flipped { (p, a) } else { (a, p) };
                                    Verdict::refuted(Witness::BodyMismatch {
                                        value: active.clone(),
                                        partner_value: pv.clone(),
                                        x: x.clone(),
                                        y: y.clone(),
                                        left,
                                        right,
                                        flipped,
                                    })
                                })
                            })
                            .unwrap_or(Verdict::HoldsUpToBound),
                        fate => Verdict::refuted(Witness::NoValue {
                            value: active.clone(),
                            partner: partner.clone(),
                            divergence: divergence_of(&fate, vf),
                        }),
                    };
                    (ClauseId::abstraction(flipped), verdict)
                }
            };
            if listed || !verdict.holds() {
                verdicts.push(verdict.clone());
                clauses.push(ClauseReport {
                    left: m.clone(),
                    right: n.clone(),
                    clause,
                    verdict,
                });
            }
        }
    }
    Report {
        pairs_checked: pairs.len(),
        identity_sample: identity.len(),
        quantifier_pairs: quantifier.len(),
        verdict: Verdict::combine(&verdicts),
        clauses,
        ..new_report(CheckKind::Logical, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_term;
    use crate::term::named::{identity, omega};

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn rel(pairs: &[(Term, Term)]) -> FiniteRelation {
        FiniteRelation::from_pairs(pairs.iter().cloned()).unwrap()
    }

    fn cfg(s: Strategy) -> CheckConfig {
        CheckConfig::new(s)
    }

    #[test]
    fn identity_omega_counterexample() {
        let r = CoupledRelation::new(
            rel(&[(identity(), omega())]),
            rel(&[(identity(), omega()), (omega(), omega())]),
        );
        assert!(r.is_coupled());
        let rep = check_clb(&r, &cfg(Strategy::Cbn));
        let w = rep.verdict.witness().expect("refuted");
        assert!(matches!(w, Witness::NoValue { divergence: Divergence::Cycle { .. }, .. }));
        assert!(rep.clauses_of(ClauseId::Abstraction).any(|c| !c.verdict.holds()));
        assert!(w.replay(&CoupledView::from_relation(&r), &cfg(Strategy::Cbn)));
    }

    #[test]
    fn paired_but_not_coupled() {
        let r = CoupledRelation::new(rel(&[(identity(), omega())]), rel(&[(omega(), omega())]));
        let rep = check_clb(&r, &cfg(Strategy::Cbn));
        assert_eq!(rep.coupled, Some(false));
        assert!(rep.progression_clauses_hold());
        assert!(matches!(rep.verdict.witness(), Some(Witness::NotCoupled { .. })));
    }

    #[test]
    fn trivial_progressions_hold() {
        let empty = CoupledRelation::new(FiniteRelation::new(), FiniteRelation::new());
        assert!(check_clb(&empty, &cfg(Strategy::Cbn)).verdict.holds());
        let r = CoupledRelation::new(FiniteRelation::new(), rel(&[(omega(), omega())]));
        let mut c = cfg(Strategy::Cbn);
        c.fuel = 10;
        c.closure_bound = 5;
        assert!(check_progression(&r, &CoupledView::from_relation(&r), &c).verdict.holds());
    }

    #[test]
    fn cbv_abs_pairing_failure() {
        let a = t("\\x.(\\y.y) x");
        let r2 = rel(&[(a.clone(), identity())]).with_identity(true);
        let r = CoupledRelation::new(FiniteRelation::identity(), r2);
        let rep = check_clb(&r, &cfg(Strategy::Cbv));
        assert!(matches!(rep.verdict.witness(), Some(Witness::AbsPairing { .. })));
        assert!(rep.clauses_of(ClauseId::CbvAbsPairing).next().is_some());
    }

    #[test]
    fn applicative_examples() {
        let c = cfg(Strategy::Cbn);
        assert!(check_applicative_bisim(&FiniteRelation::identity(), &c).verdict.holds());
        let rep = check_applicative_bisim(&rel(&[(identity(), omega())]), &c);
        assert_eq!(rep.verdict.kind(), VerdictKind::Refuted);
    }

    #[test]
    fn logical_examples_agree_across_routes() {
        for s in [Strategy::Cbn, Strategy::Cbv] {
            for r in [
                rel(&[(omega(), omega())]),
                rel(&[(identity(), omega())]),
                FiniteRelation::new(),
            ] {
                let rep = check_logical_bisim(&r, &cfg(s));
                assert!(rep.cross_check.as_ref().unwrap().agrees);
            }
            assert!(check_logical_bisim(&rel(&[(omega(), omega())]), &cfg(s)).verdict.holds());
            assert!(!check_logical_bisim(&rel(&[(identity(), omega())]), &cfg(s)).verdict.holds());
        }
    }
}
