use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::clustering::ClusterAssignment;
use crate::sequence::SequenceSet;

use super::DescriptiveError;

/// Extra per-subject columns keyed by subject id. A column whose every value
/// parses as a number is numeric; anything else is categorical.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateTable {
    names: Vec<String>,
    rows: HashMap<String, Vec<String>>,
}

impl CovariateTable {
    pub fn new(names: Vec<String>) -> Self {
        Self {
            names,
            rows: HashMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, values: Vec<String>) -> Result<(), DescriptiveError> {
        if values.len() != self.names.len() {
            return Err(DescriptiveError::Covariates(format!(
                "{} values for {} columns",
                values.len(),
                self.names.len()
            )));
        }
        let id = id.into();
        if self.rows.insert(id.clone(), values).is_some() {
            return Err(DescriptiveError::Covariates(format!("duplicate id {id:?}")));
        }
        Ok(())
    }

    /// CSV with an `id` column plus one column per covariate.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DescriptiveError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let id_col = header
            .iter()
            .position(|h| h == "id")
            .ok_or_else(|| DescriptiveError::Covariates("missing id column".into()))?;
        let names: Vec<String> = header.iter().enumerate().filter(|(i, _)| *i != id_col).map(|(_, h)| h.clone()).collect();
        let mut table = Self::new(names);
        for rec in rdr.records() {
            let rec = rec?;
            let values = rec.iter().enumerate().filter(|(i, _)| *i != id_col).map(|(_, v)| v.to_string()).collect();
            table.insert(rec[id_col].to_string(), values)?;
        }
        Ok(table)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn column(&self, col: usize, ids: &[&str]) -> Vec<String> {
        ids.iter().map(|id| self.rows[*id][col].clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileVariable {
    Categorical {
        name: String,
        /// `(level, count per cluster)` in first-appearance order.
        levels: Vec<(String, Vec<usize>)>,
        chi_squared: f64,
        df: usize,
        p_value: Option<f64>,
        /// Some expected cell count is below 5.
        low_expected: bool,
    },
    Numeric {
        name: String,
        means: Vec<f64>,
        sds: Vec<f64>,
        /// One-way ANOVA; `None` when the within-cluster variance is zero.
        p_value: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileReport {
    pub sizes: Vec<usize>,
    pub variables: Vec<ProfileVariable>,
}

/// Per-cluster profile of every covariate plus the time spent in each state.
pub fn cluster_profile(
    set: &SequenceSet,
    labels: &ClusterAssignment,
    covariates: &CovariateTable,
) -> Result<ProfileReport, DescriptiveError> {
    if labels.len() != set.len() {
        return Err(DescriptiveError::SizeMismatch {
            matrix: labels.len(),
            set: set.len(),
        });
    }
    let ids: Vec<&str> = set.subject_ids().collect();
    if let Some(missing) = ids.iter().find(|id| !covariates.rows.contains_key(**id)) {
        return Err(DescriptiveError::UnmatchedSubject(missing.to_string()));
    }
    let groups: Vec<usize> = labels.labels().iter().map(|l| l - 1).collect();
    let k = labels.k();
    let mut variables = Vec::new();
    for (c, name) in covariates.names.iter().enumerate() {
        let column = covariates.column(c, &ids);
        let numeric: Option<Vec<f64>> = column.iter().map(|v| v.parse::<f64>().ok()).collect();
        variables.push(match numeric {
            Some(values) if !values.is_empty() => numeric_variable(name, &values, &groups, k),
            _ => categorical_variable(name, &column, &groups, k),
        });
    }
    let alphabet = set.alphabet();
    for s in 0..alphabet.len() {
        let values: Vec<f64> = set
            .sequences()
            .iter()
            .map(|q| q.states().iter().filter(|&&x| x == s).count() as f64)
            .collect();
        variables.push(numeric_variable(&format!("time_in_{}", alphabet.state(s)), &values, &groups, k));
    }
    Ok(ProfileReport {
        sizes: labels.sizes().to_vec(),
        variables,
    })
}

fn categorical_variable(name: &str, column: &[String], groups: &[usize], k: usize) -> ProfileVariable {
    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut table: Vec<Vec<usize>> = Vec::new();
    for (v, &g) in column.iter().zip(groups) {
        let r = *index.entry(v.as_str()).or_insert_with(|| {
            order.push(v.clone());
            table.push(vec![0; k]);
            order.len() - 1
        });
        table[r][g] += 1;
    }
    let (chi_squared, df, p_value, low_expected) = chi_squared_test(&table);
    ProfileVariable::Categorical {
        name: name.to_string(),
        levels: order.into_iter().zip(table).collect(),
        chi_squared,
        df,
        p_value,
        low_expected,
    }
}

/// Pearson chi-squared test of independence, no continuity correction.
/// Returns `(statistic, df, p, any expected count < 5)`.
pub(crate) fn chi_squared_test(table: &[Vec<usize>]) -> (f64, usize, Option<f64>, bool) {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    let row_tot: Vec<f64> = table.iter().map(|r| r.iter().sum::<usize>() as f64).collect();
    let col_tot: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum::<usize>() as f64).collect();
    let total: f64 = row_tot.iter().sum();
    let live_rows = row_tot.iter().filter(|&&x| x > 0.0).count();
    let live_cols = col_tot.iter().filter(|&&x| x > 0.0).count();
    let mut stat = 0.0;
    let mut low = false;
    for i in 0..rows {
        for j in 0..cols {
            let e = row_tot[i] * col_tot[j] / total;
            if e <= 0.0 {
                continue;
            }
            if e < 5.0 {
                low = true;
            }
            stat += (table[i][j] as f64 - e).powi(2) / e;
        }
    }
    let df = live_rows.saturating_sub(1) * live_cols.saturating_sub(1);
    let p = (df > 0).then(|| ChiSquared::new(df as f64).expect("df > 0").sf(stat));
    (stat, df, p, low)
}

fn numeric_variable(name: &str, values: &[f64], groups: &[usize], k: usize) -> ProfileVariable {
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&v, &g) in values.iter().zip(groups) {
        sums[g] += v;
        counts[g] += 1;
    }
    let means: Vec<f64> = (0..k).map(|g| if counts[g] > 0 { sums[g] / counts[g] as f64 } else { f64::NAN }).collect();
    let mut ss = vec![0.0; k];
    for (&v, &g) in values.iter().zip(groups) {
        ss[g] += (v - means[g]).powi(2);
    }
    let sds = (0..k)
        .map(|g| if counts[g] > 1 { (ss[g] / (counts[g] - 1) as f64).sqrt() } else { 0.0 })
        .collect();

    let n = values.len() as f64;
    let grand = values.iter().sum::<f64>() / n;
    let between: f64 = (0..k).map(|g| counts[g] as f64 * (means[g] - grand).powi(2)).sum();
    let within: f64 = ss.iter().sum();
    let (df1, df2) = (k as f64 - 1.0, n - k as f64);
    let p_value = if df1 > 0.0 && df2 > 0.0 && within > 0.0 {
        let f = (between / df1) / (within / df2);
        FisherSnedecor::new(df1, df2).ok().map(|d| d.sf(f))
    } else {
        None
    };
    ProfileVariable::Numeric {
        name: name.to_string(),
        means,
        sds,
        p_value,
    }
}

fn format_p(p: Option<f64>) -> String {
    match p {
        None => "-".to_string(),
        Some(p) if p < 0.001 => "<0.001".to_string(),
        Some(p) => format!("{p:.3}"),
    }
}

impl ProfileReport {
    /// Plain-text table: one column per cluster, `count (pct%)` for
    /// categorical levels and `mean (SD)` for numeric variables.
    pub fn render_text(&self) -> String {
        let k = self.sizes.len();
        let mut out = String::new();
        let _ = write!(out, "{:<28}", "");
        for c in 0..k {
            let _ = write!(out, "{:>18}", format!("Cluster {}", c + 1));
        }
        let _ = writeln!(out, "{:>10}", "P-value");
        let _ = write!(out, "{:<28}", "");
        for s in &self.sizes {
            let _ = write!(out, "{:>18}", format!("(N = {s})"));
        }
        out.push('\n');
        for v in &self.variables {
            match v {
                ProfileVariable::Categorical {
                    name,
                    levels,
                    p_value,
                    low_expected,
                    ..
                } => {
                    let flag = if *low_expected { " [expected<5]" } else { "" };
                    let _ = writeln!(out, "{name}{flag}");
                    for (i, (level, counts)) in levels.iter().enumerate() {
                        let _ = write!(out, "  {:<26}", level);
                        for (c, &count) in counts.iter().enumerate() {
                            let pct = 100.0 * count as f64 / self.sizes[c] as f64;
                            let _ = write!(out, "{:>18}", format!("{count} ({pct:.1}%)"));
                        }
                        let p = if i == 0 { format_p(*p_value) } else { String::new() };
                        let _ = writeln!(out, "{p:>10}");
                    }
                }
                ProfileVariable::Numeric { name, means, sds, p_value } => {
                    let _ = write!(out, "{:<28}", name);
                    for (m, s) in means.iter().zip(sds) {
                        let _ = write!(out, "{:>18}", format!("{m:.1} ({s:.1})"));
                    }
                    let _ = writeln!(out, "{:>10}", format_p(*p_value));
                }
            }
        }
        out
    }

    /// Long-format CSV: `variable,level,cluster,value,p_value`, where value is
    /// a count for categorical rows and `mean`/`sd` rows for numeric ones.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["variable", "level", "cluster", "statistic", "value", "p_value"])?;
        let p_str = |p: &Option<f64>| p.map(|p| p.to_string()).unwrap_or_default();
        for v in &self.variables {
            match v {
                ProfileVariable::Categorical { name, levels, p_value, .. } => {
                    for (level, counts) in levels {
                        for (c, count) in counts.iter().enumerate() {
                            w.write_record([name, level, &(c + 1).to_string(), "count", &count.to_string(), &p_str(p_value)])?;
                        }
                    }
                }
                ProfileVariable::Numeric { name, means, sds, p_value } => {
                    for c in 0..means.len() {
                        w.write_record([name, "", &(c + 1).to_string(), "mean", &means[c].to_string(), &p_str(p_value)])?;
                        w.write_record([name, "", &(c + 1).to_string(), "sd", &sds[c].to_string(), &p_str(p_value)])?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{Alphabet, StateSequence};

    fn cohort(n: usize) -> SequenceSet {
        let a = Alphabet::new(["A", "B"]).unwrap();
        let seqs = (0..n).map(|i| StateSequence::new(format!("p{i}"), vec![i % 2, 0]).unwrap()).collect();
        SequenceSet::new(a, seqs, "week").unwrap()
    }

    #[test]
    fn chi_squared_2x2_by_hand() {
        // [[10, 0], [0, 10]]: expected 5 everywhere, stat = 4 * 25 / 5 = 20
        let (stat, df, p, low) = chi_squared_test(&[vec![10, 0], vec![0, 10]]);
        assert!((stat - 20.0).abs() < 1e-12);
        assert_eq!(df, 1);
        assert!(p.unwrap() < 0.001);
        // P(chi2_1 > 20) = erfc(sqrt(10))
        assert!((p.unwrap() - 7.744_216_431_044_1e-6).abs() < 1e-12);
        assert!(!low);
    }

    #[test]
    fn identical_distribution_gives_p_one() {
        let n = 400;
        let set = cohort(n);
        let labels = ClusterAssignment::from_labels((0..n).map(|i| 1 + (i / 2) % 2).collect()).unwrap();
        let mut cov = CovariateTable::new(vec!["sex".into(), "const".into()]);
        for i in 0..n {
            cov.insert(format!("p{i}"), vec![if i % 2 == 0 { "M".into() } else { "F".into() }, "3".into()]).unwrap();
        }
        let report = cluster_profile(&set, &labels, &cov).unwrap();
        match &report.variables[0] {
            ProfileVariable::Categorical { chi_squared, p_value, levels, .. } => {
                assert_eq!(*chi_squared, 0.0);
                assert!((p_value.unwrap() - 1.0).abs() < 1e-12);
                assert_eq!(levels[0], ("M".to_string(), vec![100, 100]));
            }
            other => panic!("unexpected {other:?}"),
        }
        match &report.variables[1] {
            ProfileVariable::Numeric { means, sds, p_value, .. } => {
                assert_eq!(means, &vec![3.0, 3.0]);
                assert_eq!(sds, &vec![0.0, 0.0]);
                assert!(p_value.is_none());
            }
            other => panic!("unexpected {other:?}"),
        }
        // time_in_A / time_in_B appended
        assert_eq!(report.variables.len(), 4);
        let text = report.render_text();
        assert!(text.contains("Cluster 2"));
        assert!(text.contains("(N = 200)"));
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("variable,level,cluster,statistic,value,p_value\n"));
    }

    #[test]
    fn deterministic_covariate() {
        let n = 40;
        let set = cohort(n);
        let labels = ClusterAssignment::from_labels((0..n).map(|i| 1 + i % 2).collect()).unwrap();
        let mut cov = CovariateTable::new(vec!["group".into()]);
        for i in 0..n {
            cov.insert(format!("p{i}"), vec![format!("g{}", i % 2)]).unwrap();
        }
        let report = cluster_profile(&set, &labels, &cov).unwrap();
        match &report.variables[0] {
            ProfileVariable::Categorical { p_value, .. } => assert!(p_value.unwrap() < 0.001),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unmatched_ids() {
        let set = cohort(3);
        let labels = ClusterAssignment::from_labels(vec![1, 2, 1]).unwrap();
        let cov = CovariateTable::read_csv("id,sex\np0,M\np1,F\n".as_bytes()).unwrap();
        assert!(matches!(
            cluster_profile(&set, &labels, &cov),
            Err(DescriptiveError::UnmatchedSubject(ref s)) if s == "p2"
        ));
        assert!(CovariateTable::read_csv("sex\nM\n".as_bytes()).is_err());
        assert!(CovariateTable::read_csv("id,sex\na,M\na,F\n".as_bytes()).is_err());
    }
}
