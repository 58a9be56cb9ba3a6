use crate::sequence::StateSequence;

use super::{DissimilarityError, SubstitutionCostMatrix, TimeVaryingCosts};

/// Optimal-matching distance: minimum total cost of indels and
/// substitutions turning `x` into `y`.
///
/// Two rolling rows over the shorter sequence; no traceback.
pub fn om_distance(x: &StateSequence, y: &StateSequence, costs: &SubstitutionCostMatrix) -> f64 {
    om_states(x.states(), y.states(), costs)
}

pub(crate) fn om_states(x: &[usize], y: &[usize], costs: &SubstitutionCostMatrix) -> f64 {
    // The metric is symmetric, so run along the shorter side.
    let (long, short) = if x.len() >= y.len() { (x, y) } else { (y, x) };
    let indel = costs.indel();
    let mut prev: Vec<f64> = (0..=short.len()).map(|j| j as f64 * indel).collect();
    let mut cur = vec![0.0; short.len() + 1];
    for (i, &a) in long.iter().enumerate() {
        cur[0] = (i + 1) as f64 * indel;
        for (j, &b) in short.iter().enumerate() {
            let sub = prev[j] + costs.cost(a, b);
            let del = prev[j + 1] + indel;
            let ins = cur[j] + indel;
            cur[j + 1] = min2(min2(sub, del), ins);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Minimum by comparison. Costs are finite and non-negative, so this agrees
/// with `f64::min` and lowers to a single vector instruction.
#[inline(always)]
fn min2(a: f64, b: f64) -> f64 {
    if b < a {
        b
    } else {
        a
    }
}

/// `L` independent alignments of `x` against equal-length `ys` (each no
/// longer than `x`), interleaved so the insertion chain of one lane does not
/// stall the others. Each lane performs exactly the operations of
/// [`om_states`], so results are bit-identical to it.
pub(crate) fn om_states_lanes<const L: usize>(x: &[usize], ys: [&[usize]; L], costs: &SubstitutionCostMatrix) -> [f64; L] {
    let m = ys[0].len();
    debug_assert!(ys.iter().all(|y| y.len() == m) && x.len() >= m);
    let indel = costs.indel();
    let a = costs.size();
    // profile[s * m + j][l] = cost(s, ys[l][j])
    let profile: Vec<[f64; L]> = (0..a)
        .flat_map(|s| {
            let row = costs.row(s);
            (0..m).map(move |j| std::array::from_fn(|l| row[ys[l][j]]))
        })
        .collect();
    let mut prev: Vec<[f64; L]> = (0..=m).map(|j| [j as f64 * indel; L]).collect();
    let mut cur = vec![[0.0; L]; m + 1];
    for (i, &s) in x.iter().enumerate() {
        cur[0] = [(i + 1) as f64 * indel; L];
        let sub_costs = &profile[s * m..(s + 1) * m];
        for j in 0..m {
            let (p_diag, p_up, left, sc) = (&prev[j], &prev[j + 1], cur[j], &sub_costs[j]);
            let mut next = [0.0; L];
            for l in 0..L {
                next[l] = min2(min2(p_diag[l] + sc[l], p_up[l] + indel), left[l] + indel);
            }
            cur[j + 1] = next;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Length of a longest common subsequence.
pub fn lcs_length(x: &StateSequence, y: &StateSequence) -> usize {
    let (xs, ys) = (x.states(), y.states());
    if ys.len() <= 64 {
        LcsProfile::new(ys).lcs_with(xs)
    } else if xs.len() <= 64 {
        LcsProfile::new(xs).lcs_with(ys)
    } else {
        lcs_dp(xs, ys)
    }
}

/// Classic quadratic recurrence with one rolling row.
pub(crate) fn lcs_dp(x: &[usize], y: &[usize]) -> usize {
    let mut row = vec![0usize; y.len() + 1];
    for &a in x {
        let mut diag = 0;
        for (j, &b) in y.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if a == b { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[y.len()]
}

/// Match masks of a sequence of length <= 64 for the bit-parallel LCS
/// recurrence (Allison-Dix / Hyyro).
#[derive(Debug, Clone)]
pub(crate) struct LcsProfile {
    masks: Vec<u64>,
    len: usize,
}

impl LcsProfile {
    pub(crate) fn new(y: &[usize]) -> Self {
        assert!(y.len() <= 64);
        let width = y.iter().max().map_or(0, |m| m + 1);
        let mut masks = vec![0u64; width];
        for (j, &s) in y.iter().enumerate() {
            masks[s] |= 1 << j;
        }
        Self { masks, len: y.len() }
    }

    pub(crate) fn lcs_with(&self, x: &[usize]) -> usize {
        if self.len == 0 {
            return 0;
        }
        let live = if self.len == 64 { u64::MAX } else { (1u64 << self.len) - 1 };
        let mut v = u64::MAX;
        for &s in x {
            let m = self.masks.get(s).copied().unwrap_or(0);
            let u = v & m;
            v = v.wrapping_add(u) | (v - u);
        }
        (!v & live).count_ones() as usize
    }
}

/// `|x| + |y| - 2 * lcs_length(x, y)`.
pub fn lcs_distance(x: &StateSequence, y: &StateSequence) -> f64 {
    (x.len() + y.len() - 2 * lcs_length(x, y)) as f64
}

/// Position-wise substitution cost sum; unit costs when `costs` is `None`.
pub fn hamming_distance(
    x: &StateSequence,
    y: &StateSequence,
    costs: Option<&SubstitutionCostMatrix>,
) -> Result<f64, DissimilarityError> {
    if x.len() != y.len() {
        return Err(DissimilarityError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(hamming_states(x.states(), y.states(), costs))
}

pub(crate) fn hamming_states(x: &[usize], y: &[usize], costs: Option<&SubstitutionCostMatrix>) -> f64 {
    match costs {
        None => x.iter().zip(y).filter(|(a, b)| a != b).count() as f64,
        Some(c) => x.iter().zip(y).map(|(&a, &b)| c.cost(a, b)).sum(),
    }
}

/// Dynamic Hamming distance `sum_t c_t(x_t, y_t)`.
pub fn dhd_distance(x: &StateSequence, y: &StateSequence, costs: &TimeVaryingCosts) -> Result<f64, DissimilarityError> {
    if x.len() != y.len() {
        return Err(DissimilarityError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() != costs.len() {
        return Err(DissimilarityError::LengthMismatch {
            left: x.len(),
            right: costs.len(),
        });
    }
    Ok(dhd_states(x.states(), y.states(), costs))
}

pub(crate) fn dhd_states(x: &[usize], y: &[usize], costs: &TimeVaryingCosts) -> f64 {
    x.iter().zip(y).enumerate().map(|(t, (&a, &b))| costs.cost(t, a, b)).sum()
}
