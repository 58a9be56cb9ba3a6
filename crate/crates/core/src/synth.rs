//! Seeded synthetic cohorts: first-order Markov state sequences and
//! exponential event times with cluster-specific hazards.
//!
//! Subject `i` draws from its own stream (see [`crate::rng`]), so output
//! depends only on the seed and is identical for any thread count. Outcome
//! streams are offset by [`OUTCOME_STREAM`] to stay independent of the
//! sequence streams under the same seed.

use rayon::prelude::*;
use thiserror::Error;

use crate::clustering::ClusterAssignment;
use crate::rng::{StreamRng, ALGORITHM};
use crate::sequence::{Alphabet, SequenceError, SequenceSet, StateSequence};
use crate::survival::{Outcome, OutcomeTable};

pub const OUTCOME_STREAM: u64 = 1 << 63;

/// Weekly transition probabilities between treatment-coverage states
/// `0/3..3/3`, rows = from, columns = to, as published (two decimals).
pub const COVERAGE_TRANSITIONS: [[f64; 4]; 4] = [
    [0.95, 0.04, 0.01, 0.00],
    [0.09, 0.81, 0.10, 0.01],
    [0.01, 0.12, 0.83, 0.04],
    [0.00, 0.01, 0.12, 0.87],
];

const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{what}: {reason}")]
    InvalidDistribution { what: String, reason: String },
    #[error("hazard ratio for cluster {cluster} must be positive, got {value}")]
    InvalidHazardRatio { cluster: usize, value: f64 },
    #[error("{labels} labels but {hrs} hazard ratios")]
    HazardCount { labels: usize, hrs: usize },
    #[error("{labels} labels but {ids} subject ids")]
    IdCount { labels: usize, ids: usize },
    #[error("{0} must be non-negative and finite")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    alphabet: Alphabet,
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    n: usize,
    length: usize,
    seed: u64,
}

fn check_distribution(what: String, p: &[f64], size: usize) -> Result<(), SynthError> {
    let bad = |reason: String| SynthError::InvalidDistribution { what: what.clone(), reason };
    if p.len() != size {
        return Err(bad(format!("{} entries for {size} states", p.len())));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(bad("entries must be finite and non-negative".into()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(bad(format!("sums to {sum}")));
    }
    Ok(())
}

/// The published matrix with each row divided by its sum; rounding left the
/// `1/3` row at 1.01.
pub fn coverage_transitions() -> Vec<Vec<f64>> {
    COVERAGE_TRANSITIONS
        .iter()
        .map(|row| {
            let s: f64 = row.iter().sum();
            row.iter().map(|v| v / s).collect()
        })
        .collect()
}

impl GeneratorSpec {
    pub fn new(
        alphabet: Alphabet,
        initial: Vec<f64>,
        transition: Vec<Vec<f64>>,
        n: usize,
        length: usize,
        seed: u64,
    ) -> Result<Self, SynthError> {
        let a = alphabet.len();
        check_distribution("initial distribution".into(), &initial, a)?;
        if transition.len() != a {
            return Err(SynthError::InvalidDistribution {
                what: "transition matrix".into(),
                reason: format!("{} rows for {a} states", transition.len()),
            });
        }
        for (i, row) in transition.iter().enumerate() {
            check_distribution(format!("transition row {}", alphabet.state(i)), row, a)?;
        }
        if n == 0 || length == 0 {
            return Err(SynthError::InvalidDistribution {
                what: "cohort shape".into(),
                reason: "n and length must be positive".into(),
            });
        }
        Ok(Self {
            alphabet,
            initial,
            transition,
            n,
            length,
            seed,
        })
    }

    /// Uniform initial distribution.
    pub fn uniform(alphabet: Alphabet, transition: Vec<Vec<f64>>, n: usize, length: usize, seed: u64) -> Result<Self, SynthError> {
        let a = alphabet.len();
        Self::new(alphabet, vec![1.0 / a as f64; a], transition, n, length, seed)
    }

    /// Treatment-coverage alphabet with the (row-normalized) published
    /// matrix and a uniform start.
    pub fn treatment_coverage(n: usize, length: usize, seed: u64) -> Result<Self, SynthError> {
        Self::uniform(Alphabet::treatment_coverage(), coverage_transitions(), n, length, seed)
    }

    /// Replaces the initial distribution by the first-position state shares
    /// of `cohort`.
    pub fn with_initial_from(mut self, cohort: &SequenceSet) -> Result<Self, SynthError> {
        let mut counts = vec![0.0; self.alphabet.len()];
        for s in cohort.sequences() {
            let first = s.states()[0];
            if first >= counts.len() {
                return Err(SynthError::InvalidDistribution {
                    what: "initial distribution".into(),
                    reason: "cohort alphabet is larger than the generator's".into(),
                });
            }
            counts[first] += 1.0;
        }
        let total = cohort.len() as f64;
        self.initial = counts.into_iter().map(|c| c / total).collect();
        Ok(self)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `#`-prefixed comment block describing how a data file was produced.
    pub fn header(&self) -> String {
        let fmt = |p: &[f64]| p.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ");
        let mut out = format!(
            "# synthetic cohort: first-order Markov chain\n# generator: {ALGORITHM}\n# seed: {}\n# n: {}\n# length: {}\n# initial: {}\n",
            self.seed,
            self.n,
            self.length,
            fmt(&self.initial)
        );
        for (i, row) in self.transition.iter().enumerate() {
            out.push_str(&format!("# transition {}: {}\n", self.alphabet.state(i), fmt(row)));
        }
        out
    }
}

/// Subject ids used by generated cohorts: `S0001`, `S0002`, ...
pub fn subject_id(i: usize, n: usize) -> String {
    let width = n.to_string().len().max(4);
    format!("S{:0width$}", i + 1)
}

pub fn generate_sequences(spec: &GeneratorSpec) -> Result<SequenceSet, SynthError> {
    let sequences: Vec<StateSequence> = (0..spec.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = StreamRng::new(spec.seed, i as u64);
            let mut states = Vec::with_capacity(spec.length);
            let mut s = rng.categorical(&spec.initial);
            states.push(s);
            for _ in 1..spec.length {
                s = rng.categorical(&spec.transition[s]);
                states.push(s);
            }
            StateSequence::new(subject_id(i, spec.n), states)
        })
        .collect::<Result<_, _>>()?;
    Ok(SequenceSet::new(spec.alphabet.clone(), sequences, "week")?)
}

/// Exponential event times with hazard `baseline_rate * hr[label - 1]`,
/// administratively censored at `censor_time`.
pub fn generate_outcomes(
    subject_ids: &[String],
    labels: &ClusterAssignment,
    hr_per_cluster: &[f64],
    baseline_rate: f64,
    censor_time: f64,
    seed: u64,
) -> Result<OutcomeTable, SynthError> {
    if subject_ids.len() != labels.len() {
        return Err(SynthError::IdCount {
            labels: labels.len(),
            ids: subject_ids.len(),
        });
    }
    if hr_per_cluster.len() != labels.k() {
        return Err(SynthError::HazardCount {
            labels: labels.k(),
            hrs: hr_per_cluster.len(),
        });
    }
    if let Some((c, &v)) = hr_per_cluster.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(SynthError::InvalidHazardRatio { cluster: c + 1, value: v });
    }
    if !(baseline_rate.is_finite() && baseline_rate >= 0.0) {
        return Err(SynthError::InvalidParameter("baseline rate"));
    }
    if !(censor_time.is_finite() && censor_time > 0.0) {
        return Err(SynthError::InvalidParameter("censoring time"));
    }
    let rows = subject_ids
        .iter()
        .zip(labels.labels())
        .enumerate()
        .map(|(i, (id, &label))| {
            let mut rng = StreamRng::new(seed, OUTCOME_STREAM | i as u64);
            let t = rng.exponential(baseline_rate * hr_per_cluster[label - 1]);
            Outcome {
                subject_id: id.clone(),
                time: t.min(censor_time),
                event: t <= censor_time,
            }
        })
        .collect();
    Ok(OutcomeTable::new(rows).expect("generated times are positive and ids unique"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptives::transition_matrix;
    use crate::sequence::{parse_wide_str, write_wide, WideOptions};

    #[test]
    fn identity_gives_constant_sequences() {
        let a = Alphabet::new(["x", "y", "z"]).unwrap();
        let id = (0..3).map(|i| (0..3).map(|j| (i == j) as u8 as f64).collect()).collect();
        let set = generate_sequences(&GeneratorSpec::uniform(a, id, 50, 20, 1).unwrap()).unwrap();
        assert!(set.sequences().iter().all(|s| s.dss().len() == 1));
        let firsts: std::collections::BTreeSet<usize> = set.sequences().iter().map(|s| s.states()[0]).collect();
        assert_eq!(firsts.len(), 3);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let render = |seed| {
            let set = generate_sequences(&GeneratorSpec::treatment_coverage(100, 52, seed).unwrap()).unwrap();
            let mut buf = Vec::new();
            write_wide(&set, "w", &mut buf).unwrap();
            buf
        };
        assert_eq!(render(7), render(7));
        assert_ne!(render(7), render(8));
    }

    #[test]
    fn header_is_a_csv_comment() {
        let spec = GeneratorSpec::treatment_coverage(5, 6, 3).unwrap();
        let set = generate_sequences(&spec).unwrap();
        let mut buf = spec.header().into_bytes();
        assert!(spec.header().contains("ChaCha8"));
        write_wide(&set, "w", &mut buf).unwrap();
        let back = parse_wide_str(std::str::from_utf8(&buf).unwrap(), &WideOptions::default(), Some(spec.alphabet())).unwrap();
        assert_eq!(back.sequences(), set.sequences());
    }

    #[test]
    fn coverage_round_trip() {
        let set = generate_sequences(&GeneratorSpec::treatment_coverage(2329, 52, 7).unwrap()).unwrap();
        let est = transition_matrix(&set).unwrap();
        let spec = coverage_transitions();
        for i in 0..4 {
            for j in 0..4 {
                assert!((est.prob(i, j) - spec[i][j]).abs() < 0.02, "{i}->{j}");
            }
        }
    }

    #[test]
    fn invalid_specs() {
        let a = Alphabet::new(["x", "y"]).unwrap();
        let ok = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert!(GeneratorSpec::new(a.clone(), vec![0.5, 0.6], ok.clone(), 1, 1, 0).is_err());
        assert!(GeneratorSpec::new(a.clone(), vec![1.5, -0.5], ok.clone(), 1, 1, 0).is_err());
        assert!(GeneratorSpec::uniform(a.clone(), vec![vec![0.5, 0.5]], 1, 1, 0).is_err());
        assert!(GeneratorSpec::uniform(a.clone(), vec![vec![0.5, 0.5], vec![0.3, 0.6]], 1, 1, 0).is_err());
        assert!(GeneratorSpec::uniform(a.clone(), vec![vec![0.5, 0.5 + 1e-12], vec![1.0, 0.0]], 1, 1, 0).is_ok());
        assert!(GeneratorSpec::uniform(a, ok, 0, 1, 0).is_err());
        let raw: Vec<Vec<f64>> = COVERAGE_TRANSITIONS.iter().map(|r| r.to_vec()).collect();
        assert!(GeneratorSpec::uniform(Alphabet::treatment_coverage(), raw, 10, 10, 0).is_err());
    }

    #[test]
    fn empirical_initial_distribution() {
        let cohort = parse_wide_str("id,w1,w2\na,0/3,0/3\nb,0/3,1/3\nc,2/3,0/3\nd,0/3,0/3\n", &WideOptions::default(), Some(&Alphabet::treatment_coverage())).unwrap();
        let spec = GeneratorSpec::treatment_coverage(10, 5, 1).unwrap().with_initial_from(&cohort).unwrap();
        assert_eq!(spec.initial(), &[0.75, 0.0, 0.25, 0.0]);
    }

    #[test]
    fn outcomes() {
        let n = 30000;
        let ids: Vec<String> = (0..n).map(|i| subject_id(i, n)).collect();
        let labels = ClusterAssignment::from_labels((0..n).map(|i| 1 + i % 3).collect()).unwrap();
        let t = generate_outcomes(&ids, &labels, &[1.0, 1.0, 1.0], 1.0, 0.5, 4).unwrap();
        let rate = |c: usize| {
            let m = labels.members(c);
            m.iter().filter(|&&i| t.rows()[i].event).count() as f64 / m.len() as f64
        };
        let expected = 1.0 - (-0.5f64).exp();
        for c in 1..=3 {
            // binomial sd ~ 0.005
            assert!((rate(c) - expected).abs() < 0.02);
        }
        assert!(t.rows().iter().all(|r| r.time <= 0.5 && r.time > 0.0));

        let none = generate_outcomes(&ids, &labels, &[1.0, 2.0, 3.0], 0.0, 52.0, 4).unwrap();
        assert_eq!(none.events(), 0);
        assert!(none.rows().iter().all(|r| r.time == 52.0));

        assert!(generate_outcomes(&ids, &labels, &[1.0, 0.0, 1.0], 1.0, 1.0, 0).is_err());
        assert!(generate_outcomes(&ids, &labels, &[1.0, 1.0], 1.0, 1.0, 0).is_err());
        assert_eq!(
            generate_outcomes(&ids, &labels, &[1.0, 1.8, 1.6], 0.1, 52.0, 9).unwrap(),
            generate_outcomes(&ids, &labels, &[1.0, 1.8, 1.6], 0.1, 52.0, 9).unwrap()
        );
    }
}
