//! Call-by-name and call-by-value reduction on closed terms.
//!
//! [`step`] follows the reduction rules literally. [`evaluate`] and [`probe`]
//! run the same reduction on an abstract machine (a Krivine-style argument
//! stack for call-by-name, a frame stack for call-by-value) and count one
//! step per β-contraction, so step counts agree with iterating [`step`].
//!
//! Call-by-value reduces the argument before the function: for `M N`, a
//! non-value `N` steps first, then a non-value `M`, then β.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Cbn,
    Cbv,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Cbn => "cbn",
            Strategy::Cbv => "cbv",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Strategy, String> {
        match s {
            "cbn" => Ok(Strategy::Cbn),
            "cbv" => Ok(Strategy::Cbv),
            other => Err(format!("unknown strategy `{other}` (expected cbn or cbv)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("cannot reduce open term {0}")]
    OpenTerm(String),
}

fn require_closed(m: &Term) -> Result<(), EvalError> {
    if m.is_closed() {
        Ok(())
    } else {
        Err(EvalError::OpenTerm(m.display_bounded(200)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum EvalOutcome {
    Converged { value: Term, steps: u64 },
    FuelExhausted { last: Term, steps: u64 },
}

impl EvalOutcome {
    pub fn converged(&self) -> bool {
        matches!(self, EvalOutcome::Converged { .. })
    }

    pub fn value(&self) -> Option<&Term> {
        match self {
            EvalOutcome::Converged { value, .. } => Some(value),
            EvalOutcome::FuelExhausted { .. } => None,
        }
    }

    pub fn steps(&self) -> u64 {
        match self {
            EvalOutcome::Converged { steps, .. } | EvalOutcome::FuelExhausted { steps, .. } => *steps,
        }
    }
}

/// One small step, or `None` when `m` is a value.
pub fn step(m: &Term, s: Strategy) -> Result<Option<Term>, EvalError> {
    require_closed(m)?;
    Ok(step_closed(m, s))
}

pub(crate) fn step_closed(m: &Term, s: Strategy) -> Option<Term> {
    match s {
        Strategy::Cbn => step_cbn(m),
        Strategy::Cbv => step_cbv(m),
    }
}

fn step_cbn(m: &Term) -> Option<Term> {
    let (head, args) = m.spine();
    let mut args = args.into_iter();
    let first = args.next()?;
    let reduct = head.apply_abs(&first).expect("closed head is an abstraction");
    Some(Term::apps(reduct, args))
}

enum Frame {
    /// Reducing the argument of `f [·]`.
    Arg(Term),
    /// Reducing the function of `[·] v`.
    Fun(Term),
}

fn plug_frames(mut t: Term, frames: &[Frame]) -> Term {
    for frame in frames.iter().rev() {
        t = match frame {
            Frame::Arg(f) => Term::app(f.clone(), t),
            Frame::Fun(v) => Term::app(t, v.clone()),
        };
    }
    t
}

fn step_cbv(m: &Term) -> Option<Term> {
    let mut frames = Vec::new();
    let mut cur = m.clone();
    loop {
        let (f, a) = match cur.as_app() {
            Some((f, a)) => (f.clone(), a.clone()),
            None => return None,
        };
        if !a.is_value() {
            frames.push(Frame::Arg(f));
            cur = a;
        } else if !f.is_value() {
            frames.push(Frame::Fun(a));
            cur = f;
        } else {
            let reduct = f.apply_abs(&a).expect("value is an abstraction");
            return Some(plug_frames(reduct, &frames));
        }
    }
}

/// Iterates [`step`] at most `fuel` times.
pub fn evaluate(m: &Term, s: Strategy, fuel: u64) -> Result<EvalOutcome, EvalError> {
    require_closed(m)?;
    let mut machine = Machine::new(m.clone(), s);
    Ok(match machine.run(fuel, false) {
        Stop::Value => EvalOutcome::Converged {
            value: machine.focus.clone(),
            steps: machine.steps,
        },
        Stop::Fuel | Stop::Cycle { .. } => EvalOutcome::FuelExhausted {
            last: machine.current_term(),
            steps: machine.steps,
        },
    })
}

/// `m = m0 ⟶ m1 ⟶ …`, stopping at a value or after `fuel` steps.
pub fn reduction_chain(m: &Term, s: Strategy, fuel: u64) -> Result<Vec<Term>, EvalError> {
    require_closed(m)?;
    let mut out = vec![m.clone()];
    let mut cur = m.clone();
    for _ in 0..fuel {
        match step_closed(&cur, s) {
            Some(next) => {
                out.push(next.clone());
                cur = next;
            }
            None => break,
        }
    }
    Ok(out)
}

/// Evaluation result with exact divergence when the reduction sequence
/// revisits a term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "fate", rename_all = "snake_case")]
pub enum Fate {
    Converged { value: Term, steps: u64 },
    /// The term reached after `entry` steps recurs every `period` steps.
    Cycle { entry: u64, period: u64 },
    OutOfFuel { steps: u64 },
}

impl Fate {
    pub fn converged(&self) -> bool {
        matches!(self, Fate::Converged { .. })
    }

    pub fn value(&self) -> Option<&Term> {
        match self {
            Fate::Converged { value, .. } => Some(value),
            _ => None,
        }
    }

    /// Not converged: either a proven cycle or fuel exhaustion.
    pub fn stuck(&self) -> bool {
        !self.converged()
    }
}

/// Evaluates with cycle detection. A `Cycle` is a proof of divergence.
pub fn probe(m: &Term, s: Strategy, fuel: u64) -> Result<Fate, EvalError> {
    require_closed(m)?;
    Ok(probe_closed(m, s, fuel))
}

pub(crate) fn probe_closed(m: &Term, s: Strategy, fuel: u64) -> Fate {
    let mut machine = Machine::new(m.clone(), s);
    match machine.run(fuel, true) {
        Stop::Value => Fate::Converged {
            value: machine.focus.clone(),
            steps: machine.steps,
        },
        Stop::Cycle { entry, period } => Fate::Cycle { entry, period },
        Stop::Fuel => Fate::OutOfFuel {
            steps: machine.steps,
        },
    }
}

/// How a deduplicated reduction chain ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainEnd {
    /// The last term is a value.
    Value,
    /// The next step revisits an earlier term.
    Cycle,
    /// Fuel ran out, or a term exceeded the size cap.
    Truncated,
}

/// The distinct terms reachable from `m`, in reduction order.
#[derive(Clone, Debug)]
pub struct Chain {
    pub terms: Vec<Term>,
    pub end: ChainEnd,
}

impl Chain {
    /// Whether every reduct of the start term is listed.
    pub fn complete(&self) -> bool {
        self.end != ChainEnd::Truncated
    }
}

/// Terms larger than this are not materialized in chains.
pub const CHAIN_SIZE_CAP: u64 = 1 << 16;

/// The reduction chain of `m` without repetitions, with cycle detection.
pub fn distinct_chain(m: &Term, s: Strategy, fuel: u64) -> Chain {
    let mut terms = vec![m.clone()];
    let mut seen = std::collections::HashSet::new();
    seen.insert(m.clone());
    let mut cur = m.clone();
    for _ in 0..fuel {
        match step_closed(&cur, s) {
            None => return Chain { terms, end: ChainEnd::Value },
            Some(next) => {
                if next.size() > CHAIN_SIZE_CAP {
                    return Chain { terms, end: ChainEnd::Truncated };
                }
                if !seen.insert(next.clone()) {
                    return Chain { terms, end: ChainEnd::Cycle };
                }
                terms.push(next.clone());
                cur = next;
            }
        }
    }
    let end = if cur.is_value() { ChainEnd::Value } else { ChainEnd::Truncated };
    Chain { terms, end }
}

enum Stop {
    Value,
    Fuel,
    Cycle { entry: u64, period: u64 },
}

/// Machine state at the point just before a contraction.
#[derive(Clone, PartialEq)]
struct Snapshot {
    redex_fun: Term,
    redex_arg: Term,
    context: Vec<SnapFrame>,
}

#[derive(Clone, PartialEq)]
enum SnapFrame {
    Arg(Term),
    Fun(Term),
}

struct Machine {
    strategy: Strategy,
    focus: Term,
    /// Call-by-name: pending arguments, innermost last.
    stack: Vec<Term>,
    /// Call-by-value: evaluation frames, innermost last.
    frames: Vec<Frame>,
    steps: u64,
}

impl Machine {
    fn new(m: Term, strategy: Strategy) -> Machine {
        Machine {
            strategy,
            focus: m,
            stack: Vec::new(),
            frames: Vec::new(),
            steps: 0,
        }
    }

    fn current_term(&self) -> Term {
        match self.strategy {
            Strategy::Cbn => Term::apps(self.focus.clone(), self.stack.iter().rev().cloned()),
            Strategy::Cbv => plug_frames(self.focus.clone(), &self.frames),
        }
    }

    /// Moves to the next redex. Returns its function and argument, or `None`
    /// when the whole term is a value (left in `focus`).
    fn descend(&mut self) -> Option<(Term, Term)> {
        match self.strategy {
            Strategy::Cbn => {
                while let Some((f, a)) = self.focus.as_app().map(|(f, a)| (f.clone(), a.clone())) {
                    self.stack.push(a);
                    self.focus = f;
                }
                let arg = self.stack.pop()?;
                Some((self.focus.clone(), arg))
            }
            Strategy::Cbv => loop {
                if let Some((f, a)) = self.focus.as_app().map(|(f, a)| (f.clone(), a.clone())) {
                    if !a.is_value() {
                        self.frames.push(Frame::Arg(f));
                        self.focus = a;
                    } else if !f.is_value() {
                        self.frames.push(Frame::Fun(a));
                        self.focus = f;
                    } else {
                        return Some((f, a));
                    }
                } else {
                    // A value: return it to the innermost frame.
                    match self.frames.pop() {
                        None => return None,
                        Some(Frame::Arg(f)) => {
                            if f.is_value() {
                                return Some((f, self.focus.clone()));
                            }
                            let v = std::mem::replace(&mut self.focus, f);
                            self.frames.push(Frame::Fun(v));
                        }
                        Some(Frame::Fun(v)) => return Some((self.focus.clone(), v)),
                    }
                }
            },
        }
    }

    fn snapshot(&self, fun: &Term, arg: &Term) -> Snapshot {
        let context = match self.strategy {
            Strategy::Cbn => self.stack.iter().cloned().map(SnapFrame::Arg).collect(),
            Strategy::Cbv => self
                .frames
                .iter()
                .map(|fr| match fr {
                    Frame::Arg(t) => SnapFrame::Arg(t.clone()),
                    Frame::Fun(t) => SnapFrame::Fun(t.clone()),
                })
                .collect(),
        };
        Snapshot {
            redex_fun: fun.clone(),
            redex_arg: arg.clone(),
            context,
        }
    }

    fn run(&mut self, fuel: u64, detect_cycles: bool) -> Stop {
        // Brent's algorithm over pre-contraction snapshots.
        let mut saved: Option<(Snapshot, u64)> = None;
        let mut power = 1u64;
        let mut lam = 0u64;
        loop {
            let (fun, arg) = match self.descend() {
                None => return Stop::Value,
                Some(r) => r,
            };
            if detect_cycles {
                let snap = self.snapshot(&fun, &arg);
                match &saved {
                    Some((s, at)) if *s == snap => {
                        return Stop::Cycle {
                            entry: *at,
                            period: self.steps - at,
                        }
                    }
                    _ => {}
                }
                lam += 1;
                if saved.is_none() || lam == power {
                    saved = Some((snap, self.steps));
                    power = power.saturating_mul(2);
                    lam = 0;
                }
            }
            if self.steps >= fuel {
                // Put the redex back so the current term is reconstructible.
                match self.strategy {
                    Strategy::Cbn => {
                        self.stack.push(arg);
                        self.focus = fun;
                    }
                    Strategy::Cbv => {
                        self.focus = Term::app(fun, arg);
                    }
                }
                return Stop::Fuel;
            }
            self.focus = fun.apply_abs(&arg).expect("redex head is an abstraction");
            self.steps += 1;
        }
    }
}
