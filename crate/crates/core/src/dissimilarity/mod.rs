//! Pairwise dissimilarities between state sequences.
//!
//! Kernels: optimal matching (OM), longest-common-subsequence distance,
//! Hamming and dynamic Hamming (DHD). With indel 1 and a constant
//! substitution cost of 2, OM and the LCS distance coincide.
//!
//! Substitution costs can be constant, user supplied, or estimated from the
//! cohort's pooled transition rates. DHD uses position-specific costs, see
//! [`dhd_costs`]. Hand-tuned costs can break the triangle inequality;
//! [`SubstitutionCostMatrix::triangle_violations`] and
//! [`DissimilarityMatrix::triangle_audit`] report how often.

mod costs;
mod kernels;
mod matrix;

use thiserror::Error;

pub use costs::{dhd_costs, transition_rate_costs, CostSource, SubstitutionCostMatrix, TimeVaryingCosts};
pub use kernels::{dhd_distance, hamming_distance, lcs_distance, lcs_length, om_distance};
pub use matrix::{pairwise_matrix, DissimilarityMatrix, Metric, TriangleAudit};

#[derive(Debug, Error)]
pub enum DissimilarityError {
    #[error("invalid substitution costs: {0}")]
    InvalidCosts(String),
    #[error("sequences need at least {needed} positions, found {found}")]
    TooShort { needed: usize, found: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("cost matrix has {costs} states but the alphabet has {alphabet}")]
    AlphabetMismatch { costs: usize, alphabet: usize },
    #[error("distance matrix format: {0}")]
    Format(String),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
