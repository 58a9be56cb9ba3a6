//! Sequence data model: alphabets, state sequences, cohorts, and the wide /
//! spell tabular formats.
//!
//! Time positions are 1-based wherever they cross the API boundary (error
//! messages, spell `start` columns) and 0-based inside slices.

mod alphabet;
mod ingest;
mod spells;

use std::collections::HashSet;

use thiserror::Error;

pub use alphabet::Alphabet;
pub use ingest::{parse_wide, parse_wide_str, write_wide, WideOptions};
pub use spells::{parse_spells, spells_to_wide, wide_to_spells, write_spells, SpellRecord};

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("alphabet must contain at least one state")]
    EmptyAlphabet,
    #[error("state identifiers must be non-empty")]
    EmptyState,
    #[error("duplicate state identifier {0:?} in alphabet")]
    DuplicateState(String),
    #[error("state {0:?} is not part of the alphabet")]
    UnknownAlphabetState(String),
    #[error("invalid alphabet JSON: {0}")]
    AlphabetJson(String),
    #[error("unknown state {token:?} at row {row}, column {column:?}")]
    UnknownState {
        row: usize,
        column: String,
        token: String,
    },
    #[error("duplicate subject id {0:?}")]
    DuplicateSubject(String),
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("sequence set must contain at least one sequence")]
    EmptySet,
    #[error("sequence {0:?} is empty")]
    EmptySequence(String),
    #[error("sequence {subject:?} has length {found}, expected {expected} (equal lengths required)")]
    UnequalLength {
        subject: String,
        found: usize,
        expected: usize,
    },
    #[error("sequence {subject:?} holds state index {index} outside alphabet of size {size}")]
    InvalidIndex {
        subject: String,
        index: usize,
        size: usize,
    },
    #[error("subject {subject:?}: gap in spells at time {time}")]
    SpellGap { subject: String, time: usize },
    #[error("subject {subject:?}: overlapping spells at time {time}")]
    SpellOverlap { subject: String, time: usize },
    #[error("subject {subject:?}: spell duration must be >= 1")]
    ZeroDuration { subject: String },
    #[error("subject {subject:?} covers {found} time units, expected {expected}")]
    SpellLength {
        subject: String,
        found: usize,
        expected: usize,
    },
    #[error("spell file line {line}: {message}")]
    SpellField { line: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One subject's ordered states, stored as alphabet indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSequence {
    subject_id: String,
    states: Vec<usize>,
}

impl StateSequence {
    pub fn new(subject_id: impl Into<String>, states: Vec<usize>) -> Result<Self, SequenceError> {
        let subject_id = subject_id.into();
        if states.is_empty() {
            return Err(SequenceError::EmptySequence(subject_id));
        }
        Ok(Self { subject_id, states })
    }

    /// Builds a sequence from state identifiers.
    pub fn from_tokens<S: AsRef<str>>(
        subject_id: impl Into<String>,
        tokens: &[S],
        alphabet: &Alphabet,
    ) -> Result<Self, SequenceError> {
        let subject_id = subject_id.into();
        let states = tokens
            .iter()
            .enumerate()
            .map(|(j, t)| {
                alphabet
                    .index_of(t.as_ref())
                    .ok_or_else(|| SequenceError::UnknownState {
                        row: 1,
                        column: format!("{}", j + 1),
                        token: t.as_ref().to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(subject_id, states)
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Maximal runs of identical states as `(state, duration)` pairs.
    pub fn spells(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &s in &self.states {
            match out.last_mut() {
                Some((last, d)) if *last == s => *d += 1,
                _ => out.push((s, 1)),
            }
        }
        out
    }

    /// Distinct successive states: the spell states with durations dropped.
    pub fn dss(&self) -> Vec<usize> {
        self.spells().into_iter().map(|(s, _)| s).collect()
    }
}

/// A cohort of equal-length sequences over one alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSet {
    alphabet: Alphabet,
    sequences: Vec<StateSequence>,
    granularity: String,
}

impl SequenceSet {
    pub fn new(
        alphabet: Alphabet,
        sequences: Vec<StateSequence>,
        granularity: impl Into<String>,
    ) -> Result<Self, SequenceError> {
        let first = sequences.first().ok_or(SequenceError::EmptySet)?;
        let expected = first.len();
        let mut seen = HashSet::with_capacity(sequences.len());
        for seq in &sequences {
            if !seen.insert(seq.subject_id.as_str()) {
                return Err(SequenceError::DuplicateSubject(seq.subject_id.clone()));
            }
            if seq.len() != expected {
                return Err(SequenceError::UnequalLength {
                    subject: seq.subject_id.clone(),
                    found: seq.len(),
                    expected,
                });
            }
            if let Some(&bad) = seq.states.iter().find(|&&s| s >= alphabet.len()) {
                return Err(SequenceError::InvalidIndex {
                    subject: seq.subject_id.clone(),
                    index: bad,
                    size: alphabet.len(),
                });
            }
        }
        Ok(Self {
            alphabet,
            sequences,
            granularity: granularity.into(),
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn sequences(&self) -> &[StateSequence] {
        &self.sequences
    }

    /// Number of sequences `n`.
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Common sequence length `T`.
    pub fn length(&self) -> usize {
        self.sequences[0].len()
    }

    pub fn granularity(&self) -> &str {
        &self.granularity
    }

    pub fn subject_ids(&self) -> impl Iterator<Item = &str> {
        self.sequences.iter().map(|s| s.subject_id())
    }

    /// The sub-cohort made of the given positions, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, SequenceError> {
        let seqs = indices.iter().map(|&i| self.sequences[i].clone()).collect();
        Self::new(self.alphabet.clone(), seqs, self.granularity.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::new(["A", "B"]).unwrap()
    }

    #[test]
    fn rejects_unequal_lengths() {
        let s1 = StateSequence::new("p1", vec![0, 1]).unwrap();
        let s2 = StateSequence::new("p2", vec![0]).unwrap();
        let err = SequenceSet::new(ab(), vec![s1, s2], "week").unwrap_err();
        assert!(matches!(err, SequenceError::UnequalLength { expected: 2, found: 1, .. }));
    }

    #[test]
    fn rejects_out_of_range_index() {
        let s1 = StateSequence::new("p1", vec![0, 2]).unwrap();
        assert!(matches!(
            SequenceSet::new(ab(), vec![s1], "week"),
            Err(SequenceError::InvalidIndex { index: 2, .. })
        ));
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(StateSequence::new("p", vec![]), Err(SequenceError::EmptySequence(_))));
        assert!(matches!(SequenceSet::new(ab(), vec![], "week"), Err(SequenceError::EmptySet)));
    }

    #[test]
    fn spells_and_dss() {
        let s = StateSequence::new("p", vec![0, 0, 1, 0, 0, 0]).unwrap();
        assert_eq!(s.spells(), vec![(0, 2), (1, 1), (0, 3)]);
        assert_eq!(s.dss(), vec![0, 1, 0]);
    }
}
