//! State-sequence analysis of longitudinal categorical pathways.
//!
//! Encode a cohort as equal-length state sequences, summarize it
//! ([`descriptives`], [`indicators`]), compare sequences pairwise
//! ([`dissimilarity`]), group them with Ward clustering ([`clustering`]),
//! relate the groups to time-to-event outcomes ([`survival`]), and render
//! the usual sequence plots as SVG ([`plots`]). [`synth`] generates seeded
//! Markov cohorts for experiments without real data.

pub mod cli;
pub mod clustering;
pub mod descriptives;
pub mod dissimilarity;
pub mod indicators;
pub mod plots;
pub mod rng;
pub mod sequence;
pub mod survival;
pub mod synth;

pub use sequence::{Alphabet, SequenceError, SequenceSet, StateSequence};
