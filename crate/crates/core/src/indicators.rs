//! Per-sequence longitudinal indicators.
//!
//! * Entropy: Shannon entropy of the state-occupation proportions, natural
//!   log. Zero for a constant sequence, `ln(a)` when all `a` states are
//!   equally represented.
//! * Turbulence: `log2(phi * (s2_max + 1) / (s2 + 1))` where `phi` counts the
//!   distinct subsequences of the distinct-successive-state sequence (empty
//!   subsequence included), `s2` is the population variance of the spell
//!   durations and `s2_max = (m - 1) * (1 - mean)^2` for `m` spells. A single
//!   spell gives exactly 1.
//!
//! A third "complexity" index is sometimes quoted alongside these two; it is
//! not provided here.

use std::io::Write;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::sequence::{SequenceSet, StateSequence};

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorRow {
    pub subject_id: String,
    pub entropy: f64,
    pub normalized_entropy: f64,
    pub turbulence: f64,
    pub n_transitions: usize,
    pub n_distinct_states: usize,
    pub time_in_state: Vec<usize>,
}

/// Shannon entropy (nats) of the state proportions of `seq`.
///
/// `alphabet_size` only matters through the proportions of observed states;
/// it is accepted so callers can size the state-count buffer.
pub fn entropy(seq: &StateSequence, alphabet_size: usize) -> f64 {
    let counts = time_in_state(seq, alphabet_size);
    entropy_from_counts(&counts)
}

fn entropy_from_counts(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum();
    // -0.0 for a single state; normalize the sign.
    h.max(0.0)
}

fn time_in_state(seq: &StateSequence, alphabet_size: usize) -> Vec<usize> {
    let size = alphabet_size.max(seq.states().iter().max().map_or(0, |m| m + 1));
    let mut counts = vec![0usize; size];
    for &s in seq.states() {
        counts[s] += 1;
    }
    counts
}

/// Number of distinct subsequences of `dss`, including the empty one.
///
/// Last-occurrence recurrence: `f(i) = 2 f(i-1) - f(last(x_i) - 1)`.
pub fn count_distinct_subsequences(dss: &[usize]) -> BigUint {
    let width = dss.iter().max().map_or(0, |m| m + 1);
    let mut last: Vec<Option<usize>> = vec![None; width];
    // counts[i] = distinct subsequences of the first i elements.
    let mut counts: Vec<BigUint> = Vec::with_capacity(dss.len() + 1);
    counts.push(BigUint::one());
    for (i, &s) in dss.iter().enumerate() {
        let mut next = &counts[i] << 1u32;
        if let Some(j) = last[s] {
            next -= &counts[j];
        }
        counts.push(next);
        last[s] = Some(i);
    }
    counts.pop().unwrap_or_else(BigUint::zero)
}

fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.log2() + shift as f64
}

/// Elzinga turbulence of `seq`.
pub fn turbulence(seq: &StateSequence) -> f64 {
    let spells = seq.spells();
    let dss: Vec<usize> = spells.iter().map(|&(s, _)| s).collect();
    let phi = count_distinct_subsequences(&dss);
    let (var, var_max) = duration_variances(spells.iter().map(|&(_, d)| d));
    log2_big(&phi) + ((var_max + 1.0) / (var + 1.0)).log2()
}

/// Population variance of spell durations and its maximum for the same
/// spell count and total duration.
fn duration_variances(durations: impl Iterator<Item = usize>) -> (f64, f64) {
    let d: Vec<f64> = durations.map(|x| x as f64).collect();
    let m = d.len() as f64;
    if d.len() <= 1 {
        return (0.0, 0.0);
    }
    let mean = d.iter().sum::<f64>() / m;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
    let var_max = (m - 1.0) * (1.0 - mean).powi(2);
    (var, var_max)
}

pub fn indicator_row(seq: &StateSequence, alphabet_size: usize) -> IndicatorRow {
    let counts = time_in_state(seq, alphabet_size);
    let entropy = entropy_from_counts(&counts);
    let normalized_entropy = if alphabet_size > 1 {
        entropy / (alphabet_size as f64).ln()
    } else {
        0.0
    };
    IndicatorRow {
        subject_id: seq.subject_id().to_string(),
        entropy,
        normalized_entropy,
        turbulence: turbulence(seq),
        n_transitions: seq.spells().len() - 1,
        n_distinct_states: counts.iter().filter(|&&c| c > 0).count(),
        time_in_state: counts,
    }
}

/// One row per sequence, in input order.
pub fn indicator_table(set: &SequenceSet) -> Vec<IndicatorRow> {
    let a = set.alphabet().len();
    set.sequences().par_iter().map(|s| indicator_row(s, a)).collect()
}

/// `true` where `value >= mean(values)`.
pub fn above_mean(values: &[f64]) -> Vec<bool> {
    if values.is_empty() {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|&v| v >= mean).collect()
}

/// `id,entropy,normalized_entropy,turbulence,n_transitions,n_distinct_states,time_in_<state>...`
pub fn write_indicator_csv<W: Write>(rows: &[IndicatorRow], state_names: &[String], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = [
        "id",
        "entropy",
        "normalized_entropy",
        "turbulence",
        "n_transitions",
        "n_distinct_states",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(state_names.iter().map(|s| format!("time_in_{s}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.subject_id.clone(),
            r.entropy.to_string(),
            r.normalized_entropy.to_string(),
            r.turbulence.to_string(),
            r.n_transitions.to_string(),
            r.n_distinct_states.to_string(),
        ];
        rec.extend(r.time_in_state.iter().map(|c| c.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
