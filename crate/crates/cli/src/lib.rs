//! Batch front end: parses inputs, dispatches to `clb-core`, and renders a
//! JSON report plus a short human-readable summary.

use std::fs;
use std::path::{Path, PathBuf};

use clb_core::bisim::{
    check_applicative_bisim, check_clb, check_clb_upto, check_logical_bisim, CheckConfig, Report, VerdictKind,
};
use clb_core::oracle::{ctx_equiv, evctx_equiv, generate_corpus, EquivVerdict, GenConfig, OracleConfig};
use clb_core::relation::{parse_relation_file, RelationFile};
use clb_core::semantics::{evaluate, probe, reduction_chain, Fate};
use clb_core::upto::{
    check_axiom, parse_technique, soundness_harness, Axiom, AxiomCheckOutcome, AxiomConfig, AxiomVerdict, Samples,
    UpToTechnique,
};
use clb_core::{parse_closed_term, EvalOutcome, Strategy, Term, SCHEMA_VERSION};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    Eval,
    Trace,
    Equiv,
    CheckClb,
    CheckAb,
    CheckLb,
    CheckUpto,
    ValidateAxioms,
    GenCorpus,
}

/// Everything that determines a run. Echoed into every report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSpec {
    pub verb: Verb,
    pub strategy: Strategy,
    /// Inline terms or file paths, depending on the verb.
    pub inputs: Vec<String>,
    pub fuel: u64,
    pub ctx_bound: usize,
    pub closure_bound: usize,
    pub verify_factor: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub technique: Option<String>,
    pub up_to_environment: bool,
    pub ev_only: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axiom: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harness: Option<usize>,
    pub count: usize,
    pub max_size: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunSpec {
    pub fn new(verb: Verb, strategy: Strategy, inputs: Vec<String>) -> RunSpec {
        RunSpec {
            verb,
            strategy,
            inputs,
            fuel: 1000,
            ctx_bound: 6,
            closure_bound: 6,
            verify_factor: 10,
            seed: 0,
            technique: None,
            up_to_environment: false,
            ev_only: false,
            axiom: None,
            harness: None,
            count: 100,
            max_size: 8,
            output: None,
        }
    }

    pub fn check_config(&self) -> CheckConfig {
        CheckConfig {
            strategy: self.strategy,
            fuel: self.fuel,
            closure_bound: self.closure_bound,
            verification_factor: self.verify_factor,
            up_to_environment: self.up_to_environment,
        }
    }

    fn oracle_config(&self) -> OracleConfig {
        OracleConfig {
            fuel: self.fuel,
            verification_factor: self.verify_factor,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{verb} expects {expected} input(s), got {got}")]
    Arity { verb: &'static str, expected: &'static str, got: usize },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{input}: {source}")]
    Term { input: String, source: clb_core::ParseError },
    #[error("{path}: {source}")]
    Relation { path: String, source: clb_core::RelationError },
    #[error(transparent)]
    Technique(#[from] clb_core::upto::UpToError),
    #[error(transparent)]
    Config(#[from] clb_core::bisim::ConfigError),
    #[error("unknown axiom '{0}'")]
    Axiom(String),
    #[error("{0}")]
    Usage(String),
}

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Refuted,
    Inconclusive,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Holds => 0,
            Status::Refuted => 1,
            Status::Inconclusive => 2,
        }
    }

    fn of(kind: VerdictKind) -> Status {
        match kind {
            VerdictKind::HoldsUpToBound => Status::Holds,
            VerdictKind::Refuted => Status::Refuted,
            VerdictKind::Inconclusive => Status::Inconclusive,
        }
    }
}

/// Exit code for usage and parse errors.
pub const USAGE_EXIT: i32 = 3;

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Output {
    Eval(EvalResult),
    Trace(TraceResult),
    Equiv(EquivResult),
    Check(Box<Report>),
    Axioms(Vec<AxiomCheckOutcome>),
    Corpus(CorpusResult),
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalResult {
    pub term: Term,
    #[serde(flatten)]
    pub outcome: EvalOutcome,
    /// Cycle evidence when the term did not converge.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fate: Option<Fate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceResult {
    pub steps: Vec<Term>,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivResult {
    pub left: Term,
    pub right: Term,
    pub evaluation_contexts_only: bool,
    #[serde(flatten)]
    pub verdict: EquivVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorpusResult {
    pub terms: Vec<Term>,
    pub converged: usize,
    pub converged_fraction: f64,
}

/// A finished run.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub run: RunSpec,
    pub status: Status,
    pub exit_code: i32,
    pub result: Output,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// A few lines for humans.
    pub fn summary(&self) -> String {
        let verdict = match self.status {
            Status::Holds => "holds",
            Status::Refuted => "refuted",
            Status::Inconclusive => "inconclusive",
        };
        match &self.result {
            Output::Eval(e) => match &e.outcome {
                EvalOutcome::Converged { value, steps } => format!("converged in {steps} steps: {value}\n"),
                EvalOutcome::FuelExhausted { steps, .. } => match &e.fate {
                    Some(Fate::Cycle { entry, period }) => {
                        format!("diverges: cycle of period {period} entered after {entry} steps\n")
                    }
                    _ => format!("no value within {steps} steps\n"),
                },
            },
            Output::Trace(t) => {
                let mut out = String::new();
                for (i, s) in t.steps.iter().enumerate() {
                    out.push_str(&format!("{i:>4}  {}\n", s.display_bounded(400)));
                }
                out
            }
            Output::Equiv(e) => match &e.verdict {
                EquivVerdict::EquivalentUpToBound { contexts_tried } => {
                    format!("equivalent up to bound ({contexts_tried} contexts)\n")
                }
                EquivVerdict::Distinguished {
                    context,
                    converging_side,
                    steps,
                    ..
                } => format!(
                    "distinguished by {context}: the {} side converges in {steps} steps, the other does not\n",
                    match converging_side {
                        clb_core::oracle::Side::Left => "left",
                        clb_core::oracle::Side::Right => "right",
                    }
                ),
                EquivVerdict::Inconclusive { reason, .. } => format!("inconclusive: {reason}\n"),
            },
            Output::Check(r) => {
                let mut out = format!(
                    "{verdict}: {} listed pairs, {} identity pairs, {} argument pairs\n",
                    r.pairs_checked, r.identity_sample, r.quantifier_pairs
                );
                for c in r.clauses.iter().filter(|c| !c.verdict.holds()) {
                    let clause = serde_json::to_value(c.clause).expect("clause ids serialize");
                    out.push_str(&format!(
                        "  clause {} on ({}, {}): {}\n",
                        clause.as_str().unwrap_or("?"),
                        c.left.display_bounded(200),
                        c.right.display_bounded(200),
                        serde_json::to_string(&c.verdict).expect("verdicts serialize")
                    ));
                }
                if let Some(x) = &r.cross_check {
                    out.push_str(&format!("  cross-check via {}: agrees = {}\n", x.route, x.agrees));
                }
                out
            }
            Output::Axioms(list) => list
                .iter()
                .map(|o| format!("{} {}: {:?} ({})\n", o.technique, o.axiom, o.verdict, o.samples))
                .collect(),
            Output::Corpus(c) => {
                let mut out: String = c.terms.iter().map(|t| format!("{t}\n")).collect();
                out.push_str(&format!(
                    "# {} of {} converge ({:.3})\n",
                    c.converged,
                    c.terms.len(),
                    c.converged_fraction
                ));
                out
            }
        }
    }
}

/// Reads an inline term, or the contents of a file when `input` names one.
fn read_term(input: &str) -> Result<Term, CliError> {
    let text = if Path::new(input).is_file() {
        fs::read_to_string(input).map_err(|source| CliError::Io {
            path: input.into(),
            source,
        })?
    } else {
        input.to_string()
    };
    parse_closed_term(text.trim()).map_err(|source| CliError::Term {
        input: input.into(),
        source,
    })
}

fn read_relation(path: &str) -> Result<RelationFile, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    parse_relation_file(&text).map_err(|source| CliError::Relation {
        path: path.into(),
        source,
    })
}

fn inputs<'a>(spec: &'a RunSpec, verb: &'static str, expected: &'static str, n: usize) -> Result<&'a [String], CliError> {
    if spec.inputs.len() != n {
        return Err(CliError::Arity {
            verb,
            expected,
            got: spec.inputs.len(),
        });
    }
    Ok(&spec.inputs)
}

/// Executes a run.
pub fn run(spec: &RunSpec) -> Result<RunReport, CliError> {
    let cfg = spec.check_config();
    cfg.validate()?;
    let s = spec.strategy;
    let (status, result) = match spec.verb {
        Verb::Eval => {
            let term = read_term(&inputs(spec, "eval", "one", 1)?[0])?;
            let outcome = evaluate(&term, s, spec.fuel).expect("closed term");
            let fate = (!outcome.converged()).then(|| probe(&term, s, spec.fuel).expect("closed term"));
            let status = if outcome.converged() {
                Status::Holds
            } else {
                Status::Inconclusive
            };
            (status, Output::Eval(EvalResult { term, outcome, fate }))
        }
        Verb::Trace => {
            let term = read_term(&inputs(spec, "trace", "one", 1)?[0])?;
            let steps = reduction_chain(&term, s, spec.fuel).expect("closed term");
            let converged = steps.last().is_some_and(Term::is_value);
            let status = if converged { Status::Holds } else { Status::Inconclusive };
            (status, Output::Trace(TraceResult { steps, converged }))
        }
        Verb::Equiv => {
            let ins = inputs(spec, "equiv", "two", 2)?;
            let (m, n) = (read_term(&ins[0])?, read_term(&ins[1])?);
            let ocfg = spec.oracle_config();
            let verdict = if spec.ev_only {
                evctx_equiv(&m, &n, s, spec.ctx_bound, &ocfg)
            } else {
                ctx_equiv(&m, &n, s, spec.ctx_bound, &ocfg)
            };
            let status = match verdict {
                EquivVerdict::EquivalentUpToBound { .. } => Status::Holds,
                EquivVerdict::Distinguished { .. } => Status::Refuted,
                EquivVerdict::Inconclusive { .. } => Status::Inconclusive,
            };
            let result = EquivResult {
                left: m,
                right: n,
                evaluation_contexts_only: spec.ev_only,
                verdict,
            };
            (status, Output::Equiv(result))
        }
        Verb::CheckClb => {
            let r = read_relation(&inputs(spec, "check-clb", "one relation file", 1)?[0])?.into_coupled();
            report_status(check_clb(&r, &cfg))
        }
        Verb::CheckAb | Verb::CheckLb => {
            let path = &inputs(spec, "check-ab/check-lb", "one relation file", 1)?[0];
            let r = read_relation(path)?.into_single().map_err(|source| CliError::Relation {
                path: path.clone(),
                source,
            })?;
            if spec.verb == Verb::CheckAb {
                report_status(check_applicative_bisim(&r, &cfg))
            } else {
                report_status(check_logical_bisim(&r, &cfg))
            }
        }
        Verb::CheckUpto => {
            let r = read_relation(&inputs(spec, "check-upto", "one relation file", 1)?[0])?.into_coupled();
            let t = technique(spec)?;
            match spec.harness {
                Some(k) => {
                    let acfg = AxiomConfig {
                        check: cfg.clone(),
                        probes: Default::default(),
                    };
                    report_status(soundness_harness(&t, &r, k, &acfg))
                }
                None => report_status(check_clb_upto(&r, &t, &cfg)),
            }
        }
        Verb::ValidateAxioms => {
            let t = technique(spec)?;
            let axioms = match spec.axiom.as_deref() {
                None | Some("all") => vec![
                    Axiom::Extensive,
                    Axiom::Monotone,
                    Axiom::RespectfullyCompatible,
                    Axiom::FinitelyConvergent(1),
                ],
                Some(names) => names
                    .split(',')
                    .map(|n| Axiom::parse(n.trim()).ok_or_else(|| CliError::Axiom(n.into())))
                    .collect::<Result<_, _>>()?,
            };
            let mut acfg = AxiomConfig::new(s);
            acfg.check.fuel = spec.fuel.min(acfg.check.fuel);
            acfg.check.verification_factor = spec.verify_factor;
            let mut samples = Samples::generate(spec.seed, spec.count, spec.count.div_ceil(2).min(20), &acfg.check);
            for path in &spec.inputs {
                samples.relations.push(read_relation(path)?.into_coupled());
            }
            let outcomes: Vec<AxiomCheckOutcome> =
                axioms.iter().map(|&a| check_axiom(a, &t, None, &samples, &acfg)).collect();
            let status = if outcomes.iter().any(|o| o.verdict == AxiomVerdict::Violated) {
                Status::Refuted
            } else if outcomes.iter().all(AxiomCheckOutcome::holds) {
                Status::Holds
            } else {
                Status::Inconclusive
            };
            (status, Output::Axioms(outcomes))
        }
        Verb::GenCorpus => {
            if !spec.inputs.is_empty() {
                return Err(CliError::Arity {
                    verb: "gen-corpus",
                    expected: "no",
                    got: spec.inputs.len(),
                });
            }
            let gcfg = GenConfig {
                seed: spec.seed,
                max_size: spec.max_size,
                ..GenConfig::default()
            };
            let terms = generate_corpus(&gcfg, spec.count);
            let converged = terms
                .iter()
                .filter(|t| evaluate(t, s, spec.fuel).expect("closed term").converged())
                .count();
            let converged_fraction = if terms.is_empty() {
                0.0
            } else {
                converged as f64 / terms.len() as f64
            };
            (
                Status::Holds,
                Output::Corpus(CorpusResult {
                    terms,
                    converged,
                    converged_fraction,
                }),
            )
        }
    };
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        run: spec.clone(),
        status,
        exit_code: status.code(),
        result,
    })
}

fn technique(spec: &RunSpec) -> Result<UpToTechnique, CliError> {
    let src = spec
        .technique
        .as_deref()
        .ok_or_else(|| CliError::Usage("--technique is required".into()))?;
    Ok(parse_technique(src, spec.strategy)?)
}

fn report_status(r: Report) -> (Status, Output) {
    (Status::of(r.verdict.kind()), Output::Check(Box::new(r)))
}
