//! Cohort-level summaries: transition matrix, per-position state
//! distribution, modal sequence, sequence frequencies, representativeness
//! scores, and per-cluster profile tables.

mod profile;

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::dissimilarity::DissimilarityMatrix;
use crate::sequence::{SequenceSet, StateSequence};

pub use profile::{cluster_profile, CovariateTable, ProfileReport, ProfileVariable};

#[derive(Debug, Error)]
pub enum DescriptiveError {
    #[error("sequences need at least 2 positions for transitions")]
    TooShort,
    #[error("radius fraction must lie in (0, 1], got {0}")]
    BadRadius(f64),
    #[error("matrix has {matrix} rows but the set has {set} sequences")]
    SizeMismatch { matrix: usize, set: usize },
    #[error("subject {0:?} has no covariate row")]
    UnmatchedSubject(String),
    #[error("covariate table: {0}")]
    Covariates(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Pooled first-order transition counts and row-normalized probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionMatrix {
    pub states: Vec<String>,
    /// `counts[i][j]`: transitions from state `i` to state `j`.
    pub counts: Vec<Vec<u64>>,
    /// Rows of states never seen before the last position are all zero.
    pub probs: Vec<Vec<f64>>,
    pub unobserved_rows: Vec<usize>,
}

impl TransitionMatrix {
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.probs[from][to]
    }

    /// Square CSV with `from\to` header.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["from\\to".to_string()];
        header.extend(self.states.iter().cloned());
        w.write_record(&header)?;
        for (i, row) in self.probs.iter().enumerate() {
            let mut rec = vec![self.states[i].clone()];
            rec.extend(row.iter().map(|p| p.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn transition_matrix(set: &SequenceSet) -> Result<TransitionMatrix, DescriptiveError> {
    if set.length() < 2 {
        return Err(DescriptiveError::TooShort);
    }
    let a = set.alphabet().len();
    let mut counts = vec![vec![0u64; a]; a];
    for seq in set.sequences() {
        for w in seq.states().windows(2) {
            counts[w[0]][w[1]] += 1;
        }
    }
    let mut unobserved_rows = Vec::new();
    let probs = counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                unobserved_rows.push(i);
                vec![0.0; a]
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(TransitionMatrix {
        states: set.alphabet().states().to_vec(),
        counts,
        probs,
        unobserved_rows,
    })
}

/// Share of each state at every position.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateDistribution {
    pub states: Vec<String>,
    /// `per_position[t][s]`
    pub per_position: Vec<Vec<f64>>,
}

impl StateDistribution {
    pub fn len(&self) -> usize {
        self.per_position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_position.is_empty()
    }

    /// `position,<state>...` with 1-based positions.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["position".to_string()];
        header.extend(self.states.iter().cloned());
        w.write_record(&header)?;
        for (t, row) in self.per_position.iter().enumerate() {
            let mut rec = vec![(t + 1).to_string()];
            rec.extend(row.iter().map(|p| p.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn state_distribution(set: &SequenceSet) -> StateDistribution {
    let a = set.alphabet().len();
    let n = set.len() as f64;
    let per_position = (0..set.length())
        .map(|t| {
            let mut counts = vec![0usize; a];
            for seq in set.sequences() {
                counts[seq.states()[t]] += 1;
            }
            counts.into_iter().map(|c| c as f64 / n).collect()
        })
        .collect();
    StateDistribution {
        states: set.alphabet().states().to_vec(),
        per_position,
    }
}

/// Most frequent state at each position; ties go to the state declared
/// first in the alphabet.
pub fn modal_sequence(set: &SequenceSet) -> StateSequence {
    let dist = state_distribution(set);
    let states = dist.per_position.iter().map(|row| argmax_first(row)).collect();
    StateSequence::new("modal", states).expect("set sequences are non-empty")
}

fn argmax_first(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyEntry {
    pub states: Vec<usize>,
    pub count: usize,
    pub share: f64,
    /// Position of the first sequence with this pattern.
    pub first_index: usize,
}

/// Distinct sequences by descending count; equal counts keep first
/// appearance order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyTable {
    pub total: usize,
    pub distinct: usize,
    pub entries: Vec<FrequencyEntry>,
}

pub fn frequency_table(set: &SequenceSet, top: usize) -> FrequencyTable {
    let mut index: HashMap<&[usize], usize> = HashMap::new();
    let mut entries: Vec<FrequencyEntry> = Vec::new();
    for (i, seq) in set.sequences().iter().enumerate() {
        match index.get(seq.states()) {
            Some(&e) => entries[e].count += 1,
            None => {
                index.insert(seq.states(), entries.len());
                entries.push(FrequencyEntry {
                    states: seq.states().to_vec(),
                    count: 1,
                    share: 0.0,
                    first_index: i,
                });
            }
        }
    }
    let total = set.len();
    for e in &mut entries {
        e.share = e.count as f64 / total as f64;
    }
    // stable: ties keep first appearance
    entries.sort_by_key(|e| std::cmp::Reverse(e.count));
    let distinct = entries.len();
    entries.truncate(top.max(1));
    FrequencyTable { total, distinct, entries }
}

/// Neighbourhood-density representativeness: the share of sequences
/// (itself included) lying within `radius_fraction * max(D)` of each
/// sequence. The highest-scoring sequence is the density medoid. An all-zero
/// matrix gives every sequence a score of 1.
pub fn representativeness(
    set: &SequenceSet,
    d: &DissimilarityMatrix,
    radius_fraction: f64,
) -> Result<Vec<f64>, DescriptiveError> {
    if !(radius_fraction > 0.0 && radius_fraction <= 1.0) {
        return Err(DescriptiveError::BadRadius(radius_fraction));
    }
    let n = d.n();
    if n != set.len() {
        return Err(DescriptiveError::SizeMismatch { matrix: n, set: set.len() });
    }
    let radius = radius_fraction * d.max();
    Ok((0..n)
        .map(|i| (0..n).filter(|&j| d.get(i, j) <= radius).count() as f64 / n as f64)
        .collect())
}

/// Summary bundle written by the `describe` command.
#[derive(Debug, Clone, Serialize)]
pub struct DescribeReport {
    pub n: usize,
    pub length: usize,
    pub granularity: String,
    pub transition_matrix: Option<TransitionMatrix>,
    pub state_distribution: StateDistribution,
    pub modal_sequence: Vec<String>,
    pub frequency: FrequencyTable,
}

pub fn describe(set: &SequenceSet, top: usize) -> DescribeReport {
    let alphabet = set.alphabet();
    DescribeReport {
        n: set.len(),
        length: set.length(),
        granularity: set.granularity().to_string(),
        transition_matrix: transition_matrix(set).ok(),
        state_distribution: state_distribution(set),
        modal_sequence: modal_sequence(set).states().iter().map(|&s| alphabet.state(s).to_string()).collect(),
        frequency: frequency_table(set, top),
    }
}
