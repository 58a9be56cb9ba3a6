//! Cox proportional-hazards regression relating trajectory groups and
//! complexity strata to a time-to-event outcome.
//!
//! Fits maximize the partial likelihood (Efron ties by default, Breslow on
//! request) by damped Newton steps from zero. Confidence intervals are Wald
//! intervals on the log-hazard scale.

mod cox;
mod report;

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::ClusterAssignment;
use crate::indicators::{above_mean, IndicatorRow};

pub use cox::{cox_fit, cox_fit_with, partial_likelihood, CoxFit, CoxOptions, PartialLikelihood, Ties, SEPARATION_LIMIT};
pub use report::{univariable_and_adjusted, AssociationReport, INTERPRETATION_WARNING};

#[derive(Debug, Error)]
pub enum SurvivalError {
    #[error("no survival records")]
    NoRecords,
    #[error("no events: the partial likelihood is flat")]
    NoEvents,
    #[error("design matrix is rank deficient{}", column.map(|c| format!(" (covariate {c})")).unwrap_or_default())]
    RankDeficient { column: Option<usize> },
    #[error("monotone likelihood: coefficient {column} diverges ({coefficient:.2}), covariate separates events")]
    Separation { column: usize, coefficient: f64 },
    #[error("subject {subject:?}: {reason}")]
    InvalidRecord { subject: String, reason: String },
    #[error("subject {subject:?} has {found} covariates, expected {expected}")]
    CovariateCount { subject: String, found: usize, expected: usize },
    #[error("no outcome row for subject {0:?}")]
    MissingOutcome(String),
    #[error("{labels} cluster labels for {rows} indicator rows")]
    SizeMismatch { labels: usize, rows: usize },
    #[error("outcome line {line}: {message}")]
    OutcomeField { line: usize, message: String },
    #[error("{model} model, covariate {covariate:?}: {source}")]
    Covariate {
        model: &'static str,
        covariate: String,
        source: Box<SurvivalError>,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SurvivalError {
    /// True when the data were well formed but the model cannot be fitted.
    pub fn is_numerical(&self) -> bool {
        match self {
            SurvivalError::NoEvents | SurvivalError::RankDeficient { .. } | SurvivalError::Separation { .. } => true,
            SurvivalError::Covariate { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalRecord {
    pub subject_id: String,
    pub time: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
}

impl SurvivalRecord {
    fn validate(&self) -> Result<(), SurvivalError> {
        let bad = |reason: &str| SurvivalError::InvalidRecord {
            subject: self.subject_id.clone(),
            reason: reason.to_string(),
        };
        if !(self.time.is_finite() && self.time > 0.0) {
            return Err(bad("time must be positive and finite"));
        }
        if self.covariates.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite covariate"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    #[serde(rename = "id")]
    pub subject_id: String,
    pub time: f64,
    #[serde(with = "event_flag")]
    pub event: bool,
}

mod event_flag {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*v as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match String::deserialize(d)?.trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(D::Error::custom(format!("event must be 0 or 1, got {other:?}"))),
        }
    }
}

/// Follow-up per subject: `id,time,event`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutcomeTable {
    rows: Vec<Outcome>,
    index: HashMap<String, usize>,
}

impl OutcomeTable {
    pub fn new(rows: Vec<Outcome>) -> Result<Self, SurvivalError> {
        let mut index = HashMap::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if !(r.time.is_finite() && r.time > 0.0) {
                return Err(SurvivalError::OutcomeField {
                    line: i + 2,
                    message: format!("time must be positive, got {}", r.time),
                });
            }
            if index.insert(r.subject_id.clone(), i).is_some() {
                return Err(SurvivalError::OutcomeField {
                    line: i + 2,
                    message: format!("duplicate id {:?}", r.subject_id),
                });
            }
        }
        Ok(Self { rows, index })
    }

    pub fn rows(&self) -> &[Outcome] {
        &self.rows
    }

    pub fn get(&self, id: &str) -> Option<&Outcome> {
        self.index.get(id).map(|&i| &self.rows[i])
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn events(&self) -> usize {
        self.rows.iter().filter(|r| r.event).count()
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, SurvivalError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<Outcome>().enumerate() {
            rows.push(rec.map_err(|e| SurvivalError::OutcomeField {
                line: i + 2,
                message: e.to_string(),
            })?);
        }
        Self::new(rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Records plus the covariate names, in column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub records: Vec<SurvivalRecord>,
}

impl Design {
    /// The same records restricted to the given covariate columns.
    pub fn select(&self, columns: &[usize]) -> Design {
        Design {
            names: columns.iter().map(|&c| self.names[c].clone()).collect(),
            records: self
                .records
                .iter()
                .map(|r| SurvivalRecord {
                    covariates: columns.iter().map(|&c| r.covariates[c]).collect(),
                    ..r.clone()
                })
                .collect(),
        }
    }
}

/// Dummy-codes clusters 2..k against cluster 1 and adds high-entropy and
/// high-turbulence flags (at or above the cohort mean). `labels` is aligned
/// with `indicators`; outcomes are matched by subject id.
pub fn build_design(
    labels: &ClusterAssignment,
    indicators: &[IndicatorRow],
    outcomes: &OutcomeTable,
) -> Result<Design, SurvivalError> {
    if labels.len() != indicators.len() {
        return Err(SurvivalError::SizeMismatch {
            labels: labels.len(),
            rows: indicators.len(),
        });
    }
    let k = labels.k();
    let entropy: Vec<f64> = indicators.iter().map(|r| r.entropy).collect();
    let turbulence: Vec<f64> = indicators.iter().map(|r| r.turbulence).collect();
    let high_entropy = above_mean(&entropy);
    let high_turbulence = above_mean(&turbulence);

    let mut names: Vec<String> = (2..=k).map(|c| format!("Cluster {c}")).collect();
    names.push("High Entropy".into());
    names.push("High Turbulence".into());

    let mut records = Vec::with_capacity(indicators.len());
    for (i, row) in indicators.iter().enumerate() {
        let outcome = outcomes
            .get(&row.subject_id)
            .ok_or_else(|| SurvivalError::MissingOutcome(row.subject_id.clone()))?;
        let mut covariates: Vec<f64> = (2..=k).map(|c| (labels.labels()[i] == c) as u8 as f64).collect();
        covariates.push(high_entropy[i] as u8 as f64);
        covariates.push(high_turbulence[i] as u8 as f64);
        records.push(SurvivalRecord {
            subject_id: row.subject_id.clone(),
            time: outcome.time,
            event: outcome.event,
            covariates,
        });
    }
    Ok(Design { names, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, entropy: f64, turbulence: f64) -> IndicatorRow {
        IndicatorRow {
            subject_id: id.into(),
            entropy,
            normalized_entropy: 0.0,
            turbulence,
            n_transitions: 0,
            n_distinct_states: 1,
            time_in_state: vec![],
        }
    }

    #[test]
    fn design_layout() {
        let labels = ClusterAssignment::from_labels(vec![1, 2, 3, 1, 2]).unwrap();
        let rows = vec![row("a", 0.0, 1.0), row("b", 1.0, 3.0), row("c", 0.2, 1.0), row("d", 0.9, 1.0), row("e", 0.1, 5.0)];
        let outcomes = OutcomeTable::read_csv("id,time,event\na,3,1\nb,4.5,0\nc,1,1\nd,2,0\ne,9,1\n".as_bytes()).unwrap();
        let d = build_design(&labels, &rows, &outcomes).unwrap();
        assert_eq!(d.names, ["Cluster 2", "Cluster 3", "High Entropy", "High Turbulence"]);
        // reference cell: cluster 1, below-mean indicators
        assert_eq!(d.records[0].covariates, vec![0.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.records[1].covariates, vec![1.0, 0.0, 1.0, 1.0]);
        assert_eq!(d.records[2].covariates, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(d.records[3].covariates, vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!((d.records[1].time, d.records[1].event), (4.5, false));
        assert_eq!(d.select(&[1, 3]).records[4].covariates, vec![0.0, 1.0]);

        let single = ClusterAssignment::from_labels(vec![1; 5]).unwrap();
        assert_eq!(build_design(&single, &rows, &outcomes).unwrap().names.len(), 2);

        let partial = OutcomeTable::read_csv("id,time,event\na,3,1\n".as_bytes()).unwrap();
        assert!(matches!(build_design(&labels, &rows, &partial), Err(SurvivalError::MissingOutcome(ref s)) if s == "b"));
    }

    #[test]
    fn outcome_csv() {
        let t = OutcomeTable::read_csv("id,time,event\nx,2.5,1\ny,3,0\n".as_bytes()).unwrap();
        assert_eq!(t.events(), 1);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "id,time,event\nx,2.5,1\ny,3.0,0\n");
        for bad in ["id,time,event\nx,0,1\n", "id,time,event\nx,2,yes\n", "id,time,event\nx,1,1\nx,2,0\n", "id,time\nx,1\n"] {
            assert!(OutcomeTable::read_csv(bad.as_bytes()).is_err(), "{bad}");
        }
    }
}
