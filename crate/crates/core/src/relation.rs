//! Finite relations on terms, coupled relations, and the relation file format.
//!
//! File format: one pair per line as `term -- term`, `#` starts a comment,
//! `@id` adds the identity relation on closed terms. A coupled relation uses
//! two sections headed `[R1]` and `[R2]`; a file with no section headers (or
//! a single `[R]` header) describes one relation.

use std::fmt::Write as _;

use indexmap::IndexSet;
use thiserror::Error;

use crate::parse::{parse_term, ParseError};
use crate::term::Term;

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("line {line}: expected `term -- term`")]
    MissingSeparator { line: usize },
    #[error("line {line}: unknown section `{name}`")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: pairs must appear inside [R1] or [R2] in a coupled file")]
    OutsideSection { line: usize },
    #[error("pair ({0}, {1}) is not a pair of closed terms")]
    NotClosed(String, String),
    #[error("expected a {expected} relation file")]
    WrongShape { expected: &'static str },
}

/// A finite set of term pairs, optionally extended with the identity on
/// closed terms. Pairs keep insertion order so reports are reproducible.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FiniteRelation {
    pairs: IndexSet<(Term, Term)>,
    closed: bool,
    identity: bool,
}

impl FiniteRelation {
    /// An empty relation restricted to closed terms.
    pub fn new() -> FiniteRelation {
        FiniteRelation {
            pairs: IndexSet::new(),
            closed: true,
            identity: false,
        }
    }

    /// An empty relation that also accepts open terms.
    pub fn new_open() -> FiniteRelation {
        FiniteRelation {
            closed: false,
            ..FiniteRelation::new()
        }
    }

    /// The identity on closed terms, `∅★`.
    pub fn identity() -> FiniteRelation {
        FiniteRelation {
            identity: true,
            ..FiniteRelation::new()
        }
    }

    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (Term, Term)>,
    ) -> Result<FiniteRelation, RelationError> {
        let mut r = FiniteRelation::new();
        for (m, n) in pairs {
            r.insert(m, n)?;
        }
        Ok(r)
    }

    pub fn insert(&mut self, m: Term, n: Term) -> Result<bool, RelationError> {
        if self.closed && !(m.is_closed() && n.is_closed()) {
            return Err(RelationError::NotClosed(m.to_string(), n.to_string()));
        }
        Ok(self.pairs.insert((m, n)))
    }

    pub fn with_identity(mut self, identity: bool) -> FiniteRelation {
        self.identity = identity;
        self
    }

    pub fn includes_identity(&self) -> bool {
        self.identity
    }

    pub fn is_closed_only(&self) -> bool {
        self.closed
    }

    /// Membership modulo α-equivalence.
    pub fn contains(&self, m: &Term, n: &Term) -> bool {
        if self.identity && m == n && m.is_closed() {
            return true;
        }
        // Avoid cloning for the lookup by probing with a borrowed tuple.
        self.pairs.contains(&(m.clone(), n.clone()))
    }

    /// Explicitly listed pairs (identity pairs are implicit).
    pub fn pairs(&self) -> impl Iterator<Item = &(Term, Term)> {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty() && !self.identity
    }

    pub fn is_subset(&self, other: &FiniteRelation) -> bool {
        (!self.identity || other.identity) && self.pairs.iter().all(|(m, n)| other.contains(m, n))
    }

    pub fn union(&self, other: &FiniteRelation) -> FiniteRelation {
        let mut pairs = self.pairs.clone();
        pairs.extend(other.pairs.iter().cloned());
        FiniteRelation {
            pairs,
            closed: self.closed && other.closed,
            identity: self.identity || other.identity,
        }
    }

    pub fn intersection(&self, other: &FiniteRelation) -> FiniteRelation {
        let mut pairs: IndexSet<(Term, Term)> = self
            .pairs
            .iter()
            .filter(|(m, n)| other.contains(m, n))
            .cloned()
            .collect();
        if self.identity {
            pairs.extend(other.pairs.iter().filter(|(m, n)| m == n).cloned());
        }
        FiniteRelation {
            pairs,
            closed: self.closed || other.closed,
            identity: self.identity && other.identity,
        }
    }

    /// `R^op`.
    pub fn converse(&self) -> FiniteRelation {
        FiniteRelation {
            pairs: self.pairs.iter().map(|(m, n)| (n.clone(), m.clone())).collect(),
            ..self.clone()
        }
    }

    /// Keeps the pairs selected by `keep`, preserving identity.
    pub fn filter(&self, keep: impl Fn(&Term, &Term) -> bool) -> FiniteRelation {
        FiniteRelation {
            pairs: self.pairs.iter().filter(|(m, n)| keep(m, n)).cloned().collect(),
            ..self.clone()
        }
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        if self.identity {
            out.push_str("@id\n");
        }
        for (m, n) in &self.pairs {
            let _ = writeln!(out, "{m} -- {n}");
        }
        out
    }
}

impl FromIterator<(Term, Term)> for FiniteRelation {
    /// Collects closed pairs; panics on open terms.
    fn from_iter<I: IntoIterator<Item = (Term, Term)>>(iter: I) -> FiniteRelation {
        FiniteRelation::from_pairs(iter).expect("closed pairs")
    }
}

/// A paired relation `(R1, R2)`; coupled when `R1 ⊆ R2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupledRelation {
    pub r1: FiniteRelation,
    pub r2: FiniteRelation,
    coupled: bool,
}

impl CoupledRelation {
    pub fn new(r1: FiniteRelation, r2: FiniteRelation) -> CoupledRelation {
        let coupled = r1.is_subset(&r2);
        CoupledRelation { r1, r2, coupled }
    }

    /// `(R, R)`.
    pub fn diagonal(r: FiniteRelation) -> CoupledRelation {
        CoupledRelation::new(r.clone(), r)
    }

    pub fn is_coupled(&self) -> bool {
        self.coupled
    }

    /// Pointwise inclusion.
    pub fn is_subset(&self, other: &CoupledRelation) -> bool {
        self.r1.is_subset(&other.r1) && self.r2.is_subset(&other.r2)
    }

    pub fn union(&self, other: &CoupledRelation) -> CoupledRelation {
        CoupledRelation::new(self.r1.union(&other.r1), self.r2.union(&other.r2))
    }

    pub fn to_file_string(&self) -> String {
        format!(
            "[R1]\n{}[R2]\n{}",
            self.r1.to_file_string(),
            self.r2.to_file_string()
        )
    }
}

/// Parsed contents of a relation file.
#[derive(Clone, Debug)]
pub enum RelationFile {
    Single(FiniteRelation),
    Coupled(CoupledRelation),
}

impl RelationFile {
    pub fn into_single(self) -> Result<FiniteRelation, RelationError> {
        match self {
            RelationFile::Single(r) => Ok(r),
            RelationFile::Coupled(_) => Err(RelationError::WrongShape { expected: "single" }),
        }
    }

    /// A single relation `R` is read as the coupled relation `(∅, R)`.
    pub fn into_coupled(self) -> CoupledRelation {
        match self {
            RelationFile::Single(r) => CoupledRelation::new(FiniteRelation::new(), r),
            RelationFile::Coupled(c) => c,
        }
    }
}

pub fn parse_relation_file(text: &str) -> Result<RelationFile, RelationError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Single,
        R1,
        R2,
    }
    let mut section = Section::None;
    let mut coupled = false;
    let mut single = FiniteRelation::new();
    let mut r1 = FiniteRelation::new();
    let mut r2 = FiniteRelation::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            let name = line[1..line.len() - 1].trim();
            section = match name {
                "R1" => Section::R1,
                "R2" => Section::R2,
                "R" => Section::Single,
                _ => {
                    return Err(RelationError::UnknownSection {
                        line: line_no,
                        name: name.to_string(),
                    })
                }
            };
            if matches!(section, Section::R1 | Section::R2) {
                coupled = true;
            }
            continue;
        }
        let target = match section {
            Section::R1 => &mut r1,
            Section::R2 => &mut r2,
            Section::None | Section::Single => &mut single,
        };
        if line == "@id" {
            target.identity = true;
            continue;
        }
        let (lhs, rhs) = line
            .split_once("--")
            .ok_or(RelationError::MissingSeparator { line: line_no })?;
        let m = parse_term(lhs).map_err(|source| RelationError::Parse { line: line_no, source })?;
        let n = parse_term(rhs).map_err(|source| RelationError::Parse { line: line_no, source })?;
        target.insert(m, n)?;
    }

    if coupled {
        if !single.is_empty() {
            return Err(RelationError::OutsideSection { line: 1 });
        }
        Ok(RelationFile::Coupled(CoupledRelation::new(r1, r2)))
    } else {
        Ok(RelationFile::Single(single))
    }
}
