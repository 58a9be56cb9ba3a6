use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::{cox_fit_with, CoxFit, CoxOptions, Design, SurvivalError};

pub const INTERPRETATION_WARNING: &str = "Hazard ratios describe associations, not effects. Subjects on more \
intensive care pathways are often the more severe cases, so a higher hazard for a better-covered group can \
reflect confounding by indication rather than harm from care.";

/// One single-covariate fit per covariate next to the joint fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationReport {
    pub names: Vec<String>,
    pub univariable: Vec<CoxFit>,
    pub adjusted: CoxFit,
}

pub fn univariable_and_adjusted(design: &Design, opts: &CoxOptions) -> Result<AssociationReport, SurvivalError> {
    let univariable = (0..design.names.len())
        .map(|c| cox_fit_with(&design.select(&[c]).records, opts).map_err(|e| named(e, "univariable", design, |_| c)))
        .collect::<Result<Vec<_>, _>>()?;
    let adjusted = cox_fit_with(&design.records, opts).map_err(|e| named(e, "adjusted", design, |c| c))?;
    Ok(AssociationReport {
        names: design.names.clone(),
        univariable,
        adjusted,
    })
}

/// Attaches the covariate name to errors that point at a column.
fn named(e: SurvivalError, model: &'static str, design: &Design, column: impl Fn(usize) -> usize) -> SurvivalError {
    let c = match e {
        SurvivalError::Separation { column, .. } | SurvivalError::RankDeficient { column: Some(column) } => column,
        e => return e,
    };
    SurvivalError::Covariate {
        model,
        covariate: design.names[column(c)].clone(),
        source: Box::new(e),
    }
}

fn hr_cell(fit: &CoxFit, i: usize) -> String {
    format!("{:.2} ({:.2} - {:.2})", fit.hazard_ratios[i], fit.ci_low[i], fit.ci_high[i])
}

impl AssociationReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<20}{:<26}{:<26}", "", "Univariable HR (95%CI)", "Adjusted HR (95%CI)");
        for (i, name) in self.names.iter().enumerate() {
            let _ = writeln!(out, "{:<20}{:<26}{:<26}", name, hr_cell(&self.univariable[i], 0), hr_cell(&self.adjusted, i));
        }
        let _ = writeln!(
            out,
            "\nn = {}, events = {}, ties = {:?}. Cluster 1 is the reference; for entropy and turbulence, \
             values below the cohort mean are the reference.",
            self.adjusted.n, self.adjusted.events, self.adjusted.ties
        );
        let _ = writeln!(out, "Note: {INTERPRETATION_WARNING}");
        out
    }

    /// `covariate,model,coef,se,hr,ci_low,ci_high,p_value`
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["covariate", "model", "coef", "se", "hr", "ci_low", "ci_high", "p_value"])?;
        for (i, name) in self.names.iter().enumerate() {
            for (model, fit, j) in [("univariable", &self.univariable[i], 0), ("adjusted", &self.adjusted, i)] {
                w.write_record([
                    name.clone(),
                    model.to_string(),
                    fit.coefficients[j].to_string(),
                    fit.standard_errors[j].to_string(),
                    fit.hazard_ratios[j].to_string(),
                    fit.ci_low[j].to_string(),
                    fit.ci_high[j].to_string(),
                    fit.p_values[j].to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;
    use crate::survival::SurvivalRecord;

    fn orthogonal(n: usize, seed: u64) -> Design {
        let records = (0..n)
            .map(|i| {
                let mut rng = StreamRng::new(seed, i as u64);
                let (a, b) = ((i % 2) as f64, ((i / 2) % 2) as f64);
                let t = rng.exponential((0.6 * a + 0.3 * b).exp());
                SurvivalRecord {
                    subject_id: i.to_string(),
                    time: t.min(2.0),
                    event: t <= 2.0,
                    covariates: vec![a, b],
                }
            })
            .collect();
        Design {
            names: vec!["A".into(), "B".into()],
            records,
        }
    }

    #[test]
    fn orthogonal_design_univariable_close_to_adjusted() {
        let r = univariable_and_adjusted(&orthogonal(4000, 1), &CoxOptions::default()).unwrap();
        for i in 0..2 {
            let (u, a) = (r.univariable[i].coefficients[0], r.adjusted.coefficients[i]);
            assert!((u - a).abs() < 0.05, "{u} vs {a}");
        }
        let text = r.render_text();
        assert!(text.contains("Univariable HR (95%CI)"));
        assert!(text.contains("confounding"));
        assert_eq!(text.lines().filter(|l| l.starts_with('A') || l.starts_with('B')).count(), 2);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }

    #[test]
    fn collinear_adjusted_fit_fails() {
        let mut d = orthogonal(200, 2);
        d.names.push("copy of A".into());
        for r in &mut d.records {
            r.covariates.push(r.covariates[0]);
        }
        let e = univariable_and_adjusted(&d, &CoxOptions::default()).unwrap_err();
        assert!(e.is_numerical());
        assert!(e.to_string().contains("rank deficient"), "{e}");
    }

    #[test]
    fn separation_names_the_covariate() {
        let mut d = orthogonal(200, 2);
        for r in &mut d.records {
            r.event = r.covariates[1] == 1.0;
        }
        let e = univariable_and_adjusted(&d, &CoxOptions::default()).unwrap_err();
        match e {
            SurvivalError::Covariate { model, ref covariate, .. } => {
                assert_eq!((model, covariate.as_str()), ("univariable", "B"));
            }
            other => panic!("unexpected {other}"),
        }
    }
}
