use std::io::{Read, Write};

use rayon::prelude::*;

use crate::rng::StreamRng;
use crate::sequence::SequenceSet;

use super::kernels::{dhd_states, hamming_states, om_states, om_states_lanes, LcsProfile};
use super::{DissimilarityError, SubstitutionCostMatrix, TimeVaryingCosts};

const MAGIC: &[u8; 4] = b"SQDM";
const VERSION: u16 = 1;

/// Symmetric, zero-diagonal matrix stored as its packed strict lower
/// triangle: `(1,0), (2,0), (2,1), (3,0), ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    values: Vec<f64>,
    metric_tag: String,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i > j { (i, j) } else { (j, i) };
    r * (r - 1) / 2 + c
}

impl DissimilarityMatrix {
    pub fn from_packed(n: usize, values: Vec<f64>, metric_tag: impl Into<String>) -> Result<Self, DissimilarityError> {
        let expected = n * n.saturating_sub(1) / 2;
        if values.len() != expected {
            return Err(DissimilarityError::Format(format!(
                "packed matrix for n={n} needs {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(DissimilarityError::Format(format!("entry {v} is not a finite non-negative number")));
        }
        Ok(Self {
            n,
            values,
            metric_tag: metric_tag.into(),
        })
    }

    /// From a full row-major `n x n` matrix; checks symmetry and the diagonal.
    pub fn from_square(n: usize, full: &[f64], metric_tag: impl Into<String>) -> Result<Self, DissimilarityError> {
        if full.len() != n * n {
            return Err(DissimilarityError::Format(format!("expected {} values, got {}", n * n, full.len())));
        }
        let mut values = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            if full[i * n + i] != 0.0 {
                return Err(DissimilarityError::Format(format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                if full[i * n + j] != full[j * n + i] {
                    return Err(DissimilarityError::Format(format!("not symmetric at ({i},{j})")));
                }
                values.push(full[i * n + j]);
            }
        }
        Self::from_packed(n, values, metric_tag)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn metric_tag(&self) -> &str {
        &self.metric_tag
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.values[packed_index(i, j)]
        }
    }

    pub fn packed(&self) -> &[f64] {
        &self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Square CSV: header `id,<id_1>,...,<id_n>`, then one row per subject.
    pub fn write_csv<W: Write>(&self, ids: &[String], writer: W) -> Result<(), DissimilarityError> {
        if ids.len() != self.n {
            return Err(DissimilarityError::Format(format!("{} ids for n={}", ids.len(), self.n)));
        }
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend(ids.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in ids.iter().enumerate() {
            let mut rec = Vec::with_capacity(self.n + 1);
            rec.push(id.clone());
            rec.extend((0..self.n).map(|j| self.get(i, j).to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<(Vec<String>, Self), DissimilarityError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let ids: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
        let n = ids.len();
        let mut full = Vec::with_capacity(n * n);
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != n + 1 {
                return Err(DissimilarityError::Format(format!("row {} has {} fields", rows + 1, rec.len())));
            }
            if rec[0] != ids[rows] {
                return Err(DissimilarityError::Format(format!("row id {:?} does not match header {:?}", &rec[0], ids[rows])));
            }
            for f in rec.iter().skip(1) {
                full.push(f.parse::<f64>().map_err(|_| DissimilarityError::Format(format!("bad number {f:?}")))?);
            }
            rows += 1;
        }
        if rows != n {
            return Err(DissimilarityError::Format(format!("{rows} rows for {n} columns")));
        }
        let m = Self::from_square(n, &full, "csv")?;
        Ok((ids, m))
    }

    /// `SQDM`, version `u16`, `n` as `u32`, then the packed lower triangle as
    /// little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writer.write_all(MAGIC)?;
        writer.write_all(&VERSION.to_le_bytes())?;
        writer.write_all(&(self.n as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        writer.write_all(&buf)?;
        writer.flush()
    }

    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self, DissimilarityError> {
        let mut head = [0u8; 10];
        reader.read_exact(&mut head).map_err(|e| DissimilarityError::Format(e.to_string()))?;
        if &head[0..4] != MAGIC {
            return Err(DissimilarityError::Format("missing SQDM magic".into()));
        }
        let version = u16::from_le_bytes([head[4], head[5]]);
        if version != VERSION {
            return Err(DissimilarityError::Format(format!("unsupported SQDM version {version}")));
        }
        let n = u32::from_le_bytes([head[6], head[7], head[8], head[9]]) as usize;
        let count = n * n.saturating_sub(1) / 2;
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes).map_err(|e| DissimilarityError::Format(e.to_string()))?;
        if bytes.len() != count * 8 {
            return Err(DissimilarityError::Format(format!("expected {} payload bytes, got {}", count * 8, bytes.len())));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Self::from_packed(n, values, "sqdm")
    }

    /// Samples `samples` random triples and counts triangle-inequality
    /// violations `d(i,k) > d(i,j) + d(j,k)`, for every rotation of each
    /// triple.
    pub fn triangle_audit(&self, samples: usize, seed: u64) -> TriangleAudit {
        let mut rng = StreamRng::new(seed, 0x7472_6961);
        let mut audit = TriangleAudit::default();
        if self.n < 3 {
            return audit;
        }
        for _ in 0..samples {
            let i = rng.below(self.n as u64) as usize;
            let j = rng.below(self.n as u64) as usize;
            let k = rng.below(self.n as u64) as usize;
            for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                audit.checked += 1;
                let slack = 1e-9 * (1.0 + self.get(a, c));
                if self.get(a, c) > self.get(a, b) + self.get(b, c) + slack {
                    audit.violations += 1;
                }
            }
        }
        audit
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TriangleAudit {
    pub checked: usize,
    pub violations: usize,
}

/// Distance family and its parameters.
#[derive(Debug, Clone)]
pub enum Metric {
    Om(SubstitutionCostMatrix),
    Hamming(Option<SubstitutionCostMatrix>),
    Dhd(TimeVaryingCosts),
    Lcs,
}

impl Metric {
    pub fn tag(&self) -> &'static str {
        match self {
            Metric::Om(_) => "om",
            Metric::Hamming(_) => "hamming",
            Metric::Dhd(_) => "dhd",
            Metric::Lcs => "lcs",
        }
    }

    fn check(&self, set: &SequenceSet) -> Result<(), DissimilarityError> {
        let a = set.alphabet().len();
        let size_ok = |size: usize| {
            if size == a {
                Ok(())
            } else {
                Err(DissimilarityError::AlphabetMismatch { costs: size, alphabet: a })
            }
        };
        match self {
            Metric::Om(c) | Metric::Hamming(Some(c)) => size_ok(c.size()),
            Metric::Dhd(c) => {
                size_ok(c.size())?;
                if c.len() != set.length() {
                    return Err(DissimilarityError::LengthMismatch {
                        left: set.length(),
                        right: c.len(),
                    });
                }
                Ok(())
            }
            Metric::Hamming(None) | Metric::Lcs => Ok(()),
        }
    }
}

/// Computes every pair of `set` under `metric`.
///
/// Rows are distributed across a rayon pool of `threads` workers (the
/// global pool when `None`). Each entry is produced by one kernel call, so
/// the result is bit-identical for any thread count.
pub fn pairwise_matrix(
    set: &SequenceSet,
    metric: &Metric,
    threads: Option<usize>,
) -> Result<DissimilarityMatrix, DissimilarityError> {
    metric.check(set)?;
    let run = || compute_rows(set, metric);
    let values = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| DissimilarityError::Pool(e.to_string()))?
            .install(run),
        None => run(),
    };
    DissimilarityMatrix::from_packed(set.len(), values, metric.tag())
}

fn compute_rows(set: &SequenceSet, metric: &Metric) -> Vec<f64> {
    let seqs: Vec<&[usize]> = set.sequences().iter().map(|s| s.states()).collect();
    let n = seqs.len();
    let profiles: Option<Vec<LcsProfile>> = match metric {
        Metric::Lcs if set.length() <= 64 => Some(seqs.iter().map(|s| LcsProfile::new(s)).collect()),
        _ => None,
    };
    let rows: Vec<Vec<f64>> = (1..n)
        .into_par_iter()
        .map(|i| {
            let x = seqs[i];
            if let Metric::Om(c) = metric {
                return om_row(x, &seqs[..i], c);
            }
            (0..i)
                .map(|j| {
                    let y = seqs[j];
                    match metric {
                        Metric::Lcs => {
                            let common = match &profiles {
                                Some(p) => p[j].lcs_with(x),
                                None => super::kernels::lcs_dp(x, y),
                            };
                            (x.len() + y.len() - 2 * common) as f64
                        }
                        Metric::Om(c) => om_states(x, y, c),
                        Metric::Hamming(c) => hamming_states(x, y, c.as_ref()),
                        Metric::Dhd(c) => dhd_states(x, y, c),
                    }
                })
                .collect()
        })
        .collect();
    rows.concat()
}

/// OM distances from `x` to every sequence of `ys` (all of one length).
fn om_row(x: &[usize], ys: &[&[usize]], costs: &SubstitutionCostMatrix) -> Vec<f64> {
    const L: usize = 8;
    let mut out = Vec::with_capacity(ys.len());
    let mut chunks = ys.chunks_exact(L);
    for chunk in &mut chunks {
        let lanes: [&[usize]; L] = std::array::from_fn(|l| chunk[l]);
        out.extend(om_states_lanes(x, lanes, costs));
    }
    out.extend(chunks.remainder().iter().map(|y| om_states(x, y, costs)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissimilarity::{lcs_distance, transition_rate_costs};
    use crate::sequence::{Alphabet, StateSequence};

    fn toy() -> SequenceSet {
        let a = Alphabet::new(["A", "B", "C"]).unwrap();
        let rows = [[0, 1, 2, 1], [1, 2, 0, 1], [2, 2, 2, 2]];
        let seqs = rows
            .iter()
            .enumerate()
            .map(|(i, r)| StateSequence::new(format!("p{i}"), r.to_vec()).unwrap())
            .collect();
        SequenceSet::new(a, seqs, "week").unwrap()
    }

    #[test]
    fn single_sequence_gives_empty_matrix() {
        let set = toy().subset(&[0]).unwrap();
        let m = pairwise_matrix(&set, &Metric::Lcs, None).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.get(0, 0), 0.0);
        assert!(m.packed().is_empty());
    }

    #[test]
    fn matches_individual_kernel_calls() {
        let set = toy();
        let m = pairwise_matrix(&set, &Metric::Lcs, Some(2)).unwrap();
        let s = set.sequences();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), lcs_distance(&s[i], &s[j]));
            }
        }
        assert_eq!(m.metric_tag(), "lcs");
    }

    #[test]
    fn alphabet_mismatch_is_rejected() {
        let c = SubstitutionCostMatrix::constant(2, 2.0, 1.0).unwrap();
        assert!(matches!(
            pairwise_matrix(&toy(), &Metric::Om(c), None),
            Err(DissimilarityError::AlphabetMismatch { costs: 2, alphabet: 3 })
        ));
    }

    #[test]
    fn all_metrics_run() {
        let set = toy();
        let tr = transition_rate_costs(&set).unwrap();
        let dhd = crate::dissimilarity::dhd_costs(&set).unwrap();
        for metric in [Metric::Om(tr.clone()), Metric::Hamming(None), Metric::Hamming(Some(tr)), Metric::Dhd(dhd), Metric::Lcs] {
            let m = pairwise_matrix(&set, &metric, None).unwrap();
            assert_eq!(m.n(), 3);
            assert!(m.packed().iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn csv_and_binary_round_trip() {
        let set = toy();
        let m = pairwise_matrix(&set, &Metric::Lcs, None).unwrap();
        let ids: Vec<String> = set.subject_ids().map(String::from).collect();
        let mut buf = Vec::new();
        m.write_csv(&ids, &mut buf).unwrap();
        let (ids_back, back) = DissimilarityMatrix::read_csv(&buf[..]).unwrap();
        assert_eq!(ids_back, ids);
        assert_eq!(back.packed(), m.packed());

        let mut bin = Vec::new();
        m.write_binary(&mut bin).unwrap();
        assert_eq!(&bin[0..4], b"SQDM");
        assert_eq!(u16::from_le_bytes([bin[4], bin[5]]), 1);
        assert_eq!(u32::from_le_bytes([bin[6], bin[7], bin[8], bin[9]]), 3);
        assert_eq!(bin.len(), 10 + 3 * 8);
        // first packed value is d(1,0)
        assert_eq!(f64::from_le_bytes(bin[10..18].try_into().unwrap()), m.get(1, 0));
        let back = DissimilarityMatrix::read_binary(&bin[..]).unwrap();
        assert_eq!(back.packed(), m.packed());

        assert!(DissimilarityMatrix::read_binary(&b"XXXX\x01\x00\x00\x00\x00\x00"[..]).is_err());
        assert!(DissimilarityMatrix::read_binary(&bin[..bin.len() - 1]).is_err());
    }

    #[test]
    fn square_validation() {
        assert!(DissimilarityMatrix::from_square(2, &[0.0, 1.0, 2.0, 0.0], "x").is_err());
        assert!(DissimilarityMatrix::from_square(2, &[1.0, 1.0, 1.0, 0.0], "x").is_err());
        assert!(DissimilarityMatrix::from_square(2, &[0.0, f64::NAN, f64::NAN, 0.0], "x").is_err());
        let m = DissimilarityMatrix::from_square(2, &[0.0, 3.0, 3.0, 0.0], "x").unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.max(), 3.0);
    }

    #[test]
    fn triangle_audit_detects_violations() {
        // d(0,2) = 10 > d(0,1) + d(1,2) = 2
        let bad = DissimilarityMatrix::from_square(3, &[0.0, 1.0, 10.0, 1.0, 0.0, 1.0, 10.0, 1.0, 0.0], "x").unwrap();
        let audit = bad.triangle_audit(500, 1);
        assert!(audit.violations > 0);
        let good = pairwise_matrix(&toy(), &Metric::Lcs, None).unwrap();
        assert_eq!(good.triangle_audit(500, 1).violations, 0);
    }
}
