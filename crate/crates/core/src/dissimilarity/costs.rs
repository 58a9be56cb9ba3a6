use std::io::{Read, Write};

use crate::sequence::{Alphabet, SequenceSet};

use super::DissimilarityError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostSource {
    Constant,
    TransitionRate,
    User,
}

/// Symmetric, zero-diagonal substitution costs plus a single indel cost.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstitutionCostMatrix {
    size: usize,
    costs: Vec<f64>,
    indel: f64,
    source: CostSource,
    unobserved: Vec<usize>,
}

impl SubstitutionCostMatrix {
    /// Every off-diagonal substitution costs `substitution`.
    pub fn constant(size: usize, substitution: f64, indel: f64) -> Result<Self, DissimilarityError> {
        let mut costs = vec![substitution; size * size];
        for i in 0..size {
            costs[i * size + i] = 0.0;
        }
        Self::build(size, costs, indel, CostSource::Constant)
    }

    /// User-supplied row-major `size x size` costs.
    pub fn user(size: usize, costs: Vec<f64>, indel: f64) -> Result<Self, DissimilarityError> {
        Self::build(size, costs, indel, CostSource::User)
    }

    fn build(size: usize, costs: Vec<f64>, indel: f64, source: CostSource) -> Result<Self, DissimilarityError> {
        if size == 0 || costs.len() != size * size {
            return Err(DissimilarityError::InvalidCosts(format!(
                "expected {size}x{size} entries, got {}",
                costs.len()
            )));
        }
        if !(indel > 0.0 && indel.is_finite()) {
            return Err(DissimilarityError::InvalidCosts(format!("indel cost must be > 0, got {indel}")));
        }
        for i in 0..size {
            if costs[i * size + i] != 0.0 {
                return Err(DissimilarityError::InvalidCosts(format!("non-zero diagonal at state {i}")));
            }
            for j in 0..size {
                let c = costs[i * size + j];
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(DissimilarityError::InvalidCosts(format!("cost ({i},{j}) = {c} must be finite and >= 0")));
                }
                if c != costs[j * size + i] {
                    return Err(DissimilarityError::InvalidCosts(format!("costs not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self {
            size,
            costs,
            indel,
            source,
            unobserved: Vec::new(),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn cost(&self, a: usize, b: usize) -> f64 {
        self.costs[a * self.size + b]
    }

    #[inline]
    pub(crate) fn row(&self, a: usize) -> &[f64] {
        &self.costs[a * self.size..(a + 1) * self.size]
    }

    pub fn indel(&self) -> f64 {
        self.indel
    }

    pub fn with_indel(mut self, indel: f64) -> Result<Self, DissimilarityError> {
        if !(indel > 0.0 && indel.is_finite()) {
            return Err(DissimilarityError::InvalidCosts(format!("indel cost must be > 0, got {indel}")));
        }
        self.indel = indel;
        Ok(self)
    }

    pub fn source(&self) -> CostSource {
        self.source
    }

    /// States that never occur before the last position; their outgoing
    /// transition rates were taken as zero.
    pub fn unobserved_states(&self) -> &[usize] {
        &self.unobserved
    }

    /// Number of ordered triples `(a, b, c)` with `c(a,c) > c(a,b) + c(b,c)`.
    pub fn triangle_violations(&self) -> usize {
        let n = self.size;
        let mut count = 0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if self.cost(a, c) > self.cost(a, b) + self.cost(b, c) + 1e-12 {
                        count += 1;
                    }
                }
            }
        }
        count
    }

    /// Square CSV with a state-identifier header row and first column.
    pub fn write_csv<W: Write>(&self, alphabet: &Alphabet, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(alphabet.states().iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.size {
            let mut rec = vec![alphabet.state(i).to_string()];
            rec.extend((0..self.size).map(|j| self.cost(i, j).to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a square CSV written by [`write_csv`](Self::write_csv). Header
    /// states may be in any order; they are mapped onto `alphabet`.
    pub fn read_csv<R: Read>(reader: R, alphabet: &Alphabet, indel: f64) -> Result<Self, DissimilarityError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
        let a = alphabet.len();
        if header.len() != a {
            return Err(DissimilarityError::InvalidCosts(format!(
                "cost matrix has {} states, alphabet has {a}",
                header.len()
            )));
        }
        let col_index = header
            .iter()
            .map(|s| alphabet.index_of(s).ok_or_else(|| DissimilarityError::InvalidCosts(format!("unknown state {s:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut costs = vec![f64::NAN; a * a];
        let mut rows_seen = 0;
        for rec in rdr.records() {
            let rec = rec?;
            let row_state = rec.get(0).unwrap_or_default();
            let i = alphabet
                .index_of(row_state)
                .ok_or_else(|| DissimilarityError::InvalidCosts(format!("unknown state {row_state:?}")))?;
            for (k, &j) in col_index.iter().enumerate() {
                let field = rec.get(k + 1).unwrap_or_default();
                costs[i * a + j] = field
                    .parse()
                    .map_err(|_| DissimilarityError::InvalidCosts(format!("bad number {field:?}")))?;
            }
            rows_seen += 1;
        }
        if rows_seen != a {
            return Err(DissimilarityError::InvalidCosts(format!("expected {a} rows, got {rows_seen}")));
        }
        Self::user(a, costs, indel)
    }
}

/// Pooled transition-rate substitution costs.
///
/// `p(a,b) = sum_t N_{t,t+1}(a,b) / sum_t N_t(a)` over `t = 1..T-1`, and
/// `c(a,b) = 2 - p(a,b) - p(b,a)`. The indel cost is 1.
pub fn transition_rate_costs(set: &SequenceSet) -> Result<SubstitutionCostMatrix, DissimilarityError> {
    let a = set.alphabet().len();
    let t_len = set.length();
    if t_len < 2 {
        return Err(DissimilarityError::TooShort { needed: 2, found: t_len });
    }
    let mut pair = vec![0u64; a * a];
    let mut from = vec![0u64; a];
    for seq in set.sequences() {
        for w in seq.states().windows(2) {
            pair[w[0] * a + w[1]] += 1;
            from[w[0]] += 1;
        }
    }
    let rate = |x: usize, y: usize| {
        if from[x] == 0 {
            0.0
        } else {
            pair[x * a + y] as f64 / from[x] as f64
        }
    };
    let mut costs = vec![0.0; a * a];
    for i in 0..a {
        for j in 0..a {
            if i != j {
                costs[i * a + j] = 2.0 - (rate(i, j) + rate(j, i));
            }
        }
    }
    let mut m = SubstitutionCostMatrix::build(a, costs, 1.0, CostSource::TransitionRate)?;
    m.unobserved = (0..a).filter(|&i| from[i] == 0).collect();
    Ok(m)
}

/// Position-specific substitution costs, one `a x a` slice per position.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingCosts {
    size: usize,
    slices: Vec<Vec<f64>>,
}

impl TimeVaryingCosts {
    pub fn new(size: usize, slices: Vec<Vec<f64>>) -> Result<Self, DissimilarityError> {
        for (t, s) in slices.iter().enumerate() {
            if s.len() != size * size {
                return Err(DissimilarityError::InvalidCosts(format!("slice {} has wrong size", t + 1)));
            }
            for i in 0..size {
                if s[i * size + i] != 0.0 {
                    return Err(DissimilarityError::InvalidCosts(format!("slice {}: non-zero diagonal", t + 1)));
                }
                for j in 0..i {
                    if s[i * size + j] != s[j * size + i] {
                        return Err(DissimilarityError::InvalidCosts(format!("slice {}: not symmetric", t + 1)));
                    }
                }
            }
        }
        Ok(Self { size, slices })
    }

    /// The same slice repeated `length` times.
    pub fn repeated(costs: &SubstitutionCostMatrix, length: usize) -> Self {
        let slice: Vec<f64> = (0..costs.size * costs.size)
            .map(|k| costs.cost(k / costs.size, k % costs.size))
            .collect();
        Self {
            size: costs.size,
            slices: vec![slice; length],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// Cost at 0-based position `t`.
    #[inline]
    pub fn cost(&self, t: usize, a: usize, b: usize) -> f64 {
        self.slices[t][a * self.size + b]
    }
}

/// Dynamic Hamming costs.
///
/// With `P_t(a->b) = N_{t,t+1}(a,b) / N_t(a)` (zero when `N_t(a) = 0`), the
/// interior slice is
///
/// ```text
/// c_t(a,b) = 4 - P_{t-1}(b->a) - P_{t-1}(a->b) - P_t(b->a) - P_t(a->b)
/// ```
///
/// The first and last positions only have one adjacent transition; that
/// pair of terms is doubled so every slice lives on the same `[0, 4]` scale.
pub fn dhd_costs(set: &SequenceSet) -> Result<TimeVaryingCosts, DissimilarityError> {
    let a = set.alphabet().len();
    let t_len = set.length();
    if t_len < 3 {
        return Err(DissimilarityError::TooShort { needed: 3, found: t_len });
    }
    // rates[t][x*a+y] = P_t(x -> y), t = 0..T-2
    let mut rates = Vec::with_capacity(t_len - 1);
    for t in 0..t_len - 1 {
        let mut pair = vec![0u64; a * a];
        let mut from = vec![0u64; a];
        for seq in set.sequences() {
            let s = seq.states();
            pair[s[t] * a + s[t + 1]] += 1;
            from[s[t]] += 1;
        }
        let r: Vec<f64> = (0..a * a)
            .map(|k| {
                let x = k / a;
                if from[x] == 0 {
                    0.0
                } else {
                    pair[k] as f64 / from[x] as f64
                }
            })
            .collect();
        rates.push(r);
    }
    let both = |t: usize, x: usize, y: usize| rates[t][y * a + x] + rates[t][x * a + y];
    let mut slices = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut s = vec![0.0; a * a];
        for x in 0..a {
            for y in 0..a {
                if x == y {
                    continue;
                }
                s[x * a + y] = if t == 0 {
                    2.0 * (2.0 - both(0, x, y))
                } else if t == t_len - 1 {
                    2.0 * (2.0 - both(t - 1, x, y))
                } else {
                    4.0 - both(t - 1, x, y) - both(t, x, y)
                };
            }
        }
        slices.push(s);
    }
    TimeVaryingCosts::new(a, slices)
}
