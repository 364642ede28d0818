//! A workbench for coupled logical bisimulation on the pure λ-calculus.
//!
//! The crate covers terms and contexts, call-by-name and call-by-value
//! small-step semantics, decidable views of relation closures, bounded
//! checkers for progressions and bisimulations, up-to techniques with
//! empirical axiom validators, and a brute-force contextual-equivalence
//! oracle.

pub mod bisim;
pub mod closures;
pub mod context;
pub mod enumerate;
pub mod oracle;
pub mod parse;
pub mod relation;
pub mod semantics;
pub mod term;
pub mod upto;

pub use context::{Context, FillError};
pub use parse::{parse_closed_term, parse_context, parse_term, ParseError};
pub use relation::{CoupledRelation, FiniteRelation, RelationError};
pub use semantics::{EvalOutcome, Strategy};
pub use term::{alpha_eq, Term};

/// Version tag written into every JSON report.
pub const SCHEMA_VERSION: u32 = 1;
