use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{SurvivalError, SurvivalRecord};

/// 97.5% standard normal quantile.
const Z_975: f64 = 1.959_963_984_540_054;
/// Coefficients beyond this magnitude (HR > ~22000) are taken as divergence.
pub const SEPARATION_LIMIT: f64 = 10.0;
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ties {
    #[default]
    Efron,
    Breslow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoxOptions {
    pub ties: Ties,
    pub max_iter: usize,
    /// Relative change in log-likelihood that counts as converged.
    pub tolerance: f64,
}

impl Default for CoxOptions {
    fn default() -> Self {
        Self {
            ties: Ties::Efron,
            max_iter: 50,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoxFit {
    pub coefficients: Vec<f64>,
    pub hazard_ratios: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Two-sided Wald p-values.
    pub p_values: Vec<f64>,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub ties: Ties,
    pub n: usize,
    pub events: usize,
}

/// Log partial likelihood with its gradient and observed information.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialLikelihood {
    pub log_likelihood: f64,
    pub gradient: Vec<f64>,
    pub information: Vec<Vec<f64>>,
}

struct Prepared {
    p: usize,
    /// Centered covariates, row-major, in processing order.
    x: Vec<f64>,
    event: Vec<bool>,
    /// `[start, end)` ranges of tied times, longest time first.
    groups: Vec<(usize, usize)>,
    events: usize,
}

impl Prepared {
    fn new(records: &[SurvivalRecord]) -> Result<Self, SurvivalError> {
        if records.is_empty() {
            return Err(SurvivalError::NoRecords);
        }
        let p = records[0].covariates.len();
        for r in records {
            r.validate()?;
            if r.covariates.len() != p {
                return Err(SurvivalError::CovariateCount {
                    subject: r.subject_id.clone(),
                    found: r.covariates.len(),
                    expected: p,
                });
            }
        }
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by(|&a, &b| records[b].time.total_cmp(&records[a].time));

        let n = records.len() as f64;
        let mut mean = vec![0.0; p];
        for r in records {
            for (m, v) in mean.iter_mut().zip(&r.covariates) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);

        let mut x = Vec::with_capacity(records.len() * p);
        let mut event = Vec::with_capacity(records.len());
        let mut groups = Vec::new();
        for (pos, &i) in order.iter().enumerate() {
            let r = &records[i];
            x.extend(r.covariates.iter().zip(&mean).map(|(v, m)| v - m));
            event.push(r.event);
            if pos == 0 || records[order[pos - 1]].time != r.time {
                groups.push((pos, pos + 1));
            } else {
                groups.last_mut().expect("group open").1 = pos + 1;
            }
        }
        let events = event.iter().filter(|&&e| e).count();
        Ok(Self {
            p,
            x,
            event,
            groups,
            events,
        })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    fn check_rank(&self) -> Result<(), SurvivalError> {
        let p = self.p;
        if p == 0 {
            return Ok(());
        }
        let n = self.event.len();
        let mut cross = DMatrix::<f64>::zeros(p, p);
        for i in 0..n {
            let r = self.row(i);
            for a in 0..p {
                for b in 0..p {
                    cross[(a, b)] += r[a] * r[b];
                }
            }
        }
        let eig = SymmetricEigen::new(cross).eigenvalues;
        let max = eig.iter().cloned().fold(0.0f64, f64::max);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if max <= 0.0 || min / max < RANK_TOLERANCE {
            let column = (0..p)
                .find(|&c| (0..n).all(|i| self.row(i)[c] == 0.0))
                .or_else(|| eig.iter().position(|&v| v == min));
            return Err(SurvivalError::RankDeficient { column });
        }
        Ok(())
    }

    fn evaluate(&self, beta: &[f64], ties: Ties, derivs: bool) -> (f64, DVector<f64>, DMatrix<f64>) {
        let p = self.p;
        let mut ll = 0.0;
        let mut grad = DVector::<f64>::zeros(if derivs { p } else { 0 });
        let mut info = DMatrix::<f64>::zeros(if derivs { p } else { 0 }, if derivs { p } else { 0 });
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = vec![0.0; p * p];
        let mut d1 = vec![0.0; p];
        let mut d2 = vec![0.0; p * p];
        let mut num = vec![0.0; p];

        for &(start, end) in &self.groups {
            let mut d0 = 0.0;
            let mut d = 0usize;
            if derivs {
                d1.iter_mut().for_each(|v| *v = 0.0);
                d2.iter_mut().for_each(|v| *v = 0.0);
            }
            for i in start..end {
                let r = self.row(i);
                let eta: f64 = r.iter().zip(beta).map(|(x, b)| x * b).sum();
                let w = eta.exp();
                s0 += w;
                if derivs {
                    for a in 0..p {
                        s1[a] += w * r[a];
                        for b in 0..p {
                            s2[a * p + b] += w * r[a] * r[b];
                        }
                    }
                }
                if self.event[i] {
                    d += 1;
                    d0 += w;
                    ll += eta;
                    if derivs {
                        for a in 0..p {
                            grad[a] += r[a];
                            d1[a] += w * r[a];
                            for b in 0..p {
                                d2[a * p + b] += w * r[a] * r[b];
                            }
                        }
                    }
                }
            }
            for l in 0..d {
                let f = match ties {
                    Ties::Efron => l as f64 / d as f64,
                    Ties::Breslow => 0.0,
                };
                let den = s0 - f * d0;
                ll -= den.ln();
                if derivs {
                    for a in 0..p {
                        num[a] = s1[a] - f * d1[a];
                        grad[a] -= num[a] / den;
                    }
                    for a in 0..p {
                        for b in 0..p {
                            info[(a, b)] += (s2[a * p + b] - f * d2[a * p + b]) / den - num[a] * num[b] / (den * den);
                        }
                    }
                }
            }
        }
        (ll, grad, info)
    }
}

/// Log partial likelihood, gradient and observed information at `beta`.
pub fn partial_likelihood(records: &[SurvivalRecord], beta: &[f64], ties: Ties) -> Result<PartialLikelihood, SurvivalError> {
    let prep = Prepared::new(records)?;
    if beta.len() != prep.p {
        return Err(SurvivalError::CovariateCount {
            subject: String::new(),
            found: beta.len(),
            expected: prep.p,
        });
    }
    let (ll, grad, info) = prep.evaluate(beta, ties, true);
    Ok(PartialLikelihood {
        log_likelihood: ll,
        gradient: grad.iter().cloned().collect(),
        information: (0..prep.p).map(|a| (0..prep.p).map(|b| info[(a, b)]).collect()).collect(),
    })
}

/// Cox proportional-hazards fit with default options (Efron ties).
pub fn cox_fit(records: &[SurvivalRecord]) -> Result<CoxFit, SurvivalError> {
    cox_fit_with(records, &CoxOptions::default())
}

/// Damped Newton maximization of the partial likelihood. A step that lowers
/// the likelihood is halved until it does not.
pub fn cox_fit_with(records: &[SurvivalRecord], opts: &CoxOptions) -> Result<CoxFit, SurvivalError> {
    let prep = Prepared::new(records)?;
    if prep.events == 0 {
        return Err(SurvivalError::NoEvents);
    }
    prep.check_rank()?;
    let p = prep.p;
    let mut beta = vec![0.0; p];
    let (mut ll, mut grad, mut info) = prep.evaluate(&beta, opts.ties, true);
    let null_ll = ll;
    let mut iterations = 0;
    let mut converged = p == 0;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let step = info
            .clone()
            .cholesky()
            .ok_or(SurvivalError::RankDeficient { column: None })?
            .solve(&grad);
        let mut scale = 1.0;
        let (candidate, new_ll) = loop {
            let cand: Vec<f64> = beta.iter().zip(step.iter()).map(|(b, s)| b + scale * s).collect();
            let (l, _, _) = prep.evaluate(&cand, opts.ties, false);
            if l.is_finite() && l >= ll {
                break (cand, l);
            }
            scale *= 0.5;
            if scale < 1e-10 {
                break (beta.clone(), ll);
            }
        };
        let change = (new_ll - ll).abs();
        beta = candidate;
        (ll, grad, info) = prep.evaluate(&beta, opts.ties, true);
        if change <= opts.tolerance * ll.abs().max(f64::MIN_POSITIVE) {
            converged = true;
        }
        if let Some(i) = beta.iter().position(|b| b.abs() > SEPARATION_LIMIT * 3.0) {
            return Err(SurvivalError::Separation {
                column: i,
                coefficient: beta[i],
            });
        }
    }
    if let Some(i) = beta.iter().position(|b| b.abs() > SEPARATION_LIMIT) {
        return Err(SurvivalError::Separation {
            column: i,
            coefficient: beta[i],
        });
    }

    let cov = if p == 0 {
        DMatrix::zeros(0, 0)
    } else {
        info.cholesky().ok_or(SurvivalError::RankDeficient { column: None })?.inverse()
    };
    let normal = Normal::standard();
    let se: Vec<f64> = (0..p).map(|i| cov[(i, i)].sqrt()).collect();
    Ok(CoxFit {
        hazard_ratios: beta.iter().map(|b| b.exp()).collect(),
        ci_low: beta.iter().zip(&se).map(|(b, s)| (b - Z_975 * s).exp()).collect(),
        ci_high: beta.iter().zip(&se).map(|(b, s)| (b + Z_975 * s).exp()).collect(),
        p_values: beta.iter().zip(&se).map(|(b, s)| 2.0 * normal.sf((b / s).abs())).collect(),
        standard_errors: se,
        coefficients: beta,
        log_likelihood: ll,
        null_log_likelihood: null_ll,
        iterations,
        converged,
        ties: opts.ties,
        n: records.len(),
        events: prep.events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    fn rec(id: usize, time: f64, event: bool, x: Vec<f64>) -> SurvivalRecord {
        SurvivalRecord {
            subject_id: format!("s{id}"),
            time,
            event,
            covariates: x,
        }
    }

    /// Two-arm exponential data with true log-HR `beta`, continuous times.
    fn simulate(n: usize, beta: f64, censor: f64, seed: u64) -> Vec<SurvivalRecord> {
        (0..n)
            .map(|i| {
                let mut rng = StreamRng::new(seed, i as u64);
                let x = (i % 2) as f64;
                let t = rng.exponential((beta * x).exp());
                let z = rng.uniform() - 0.5;
                rec(i, t.min(censor), t <= censor, vec![x, z])
            })
            .collect()
    }

    #[test]
    fn null_likelihood_by_direct_summation() {
        let times = [5.0, 3.0, 3.0, 3.0, 8.0, 1.0, 3.0, 8.0, 2.0];
        let events = [true, true, false, true, true, true, true, false, false];
        let records: Vec<_> = (0..times.len()).map(|i| rec(i, times[i], events[i], vec![])).collect();
        for ties in [Ties::Efron, Ties::Breslow] {
            let mut expected = 0.0;
            let mut distinct: Vec<f64> = times.to_vec();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            for &t in &distinct {
                let at_risk = times.iter().filter(|&&s| s >= t).count() as f64;
                let d = (0..times.len()).filter(|&i| times[i] == t && events[i]).count();
                for l in 0..d {
                    expected -= match ties {
                        Ties::Efron => (at_risk - l as f64).ln(),
                        Ties::Breslow => at_risk.ln(),
                    };
                }
            }
            let fit = cox_fit_with(&records, &CoxOptions { ties, ..Default::default() }).unwrap();
            assert!((fit.log_likelihood - expected).abs() < 1e-12, "{ties:?}");
            assert_eq!(fit.null_log_likelihood, fit.log_likelihood);
            assert!(fit.coefficients.is_empty());
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let records = simulate(300, 0.7, 1.0, 3);
        for beta in [[0.0, 0.0], [0.4, -0.3], [1.2, 0.8]] {
            let at = partial_likelihood(&records, &beta, Ties::Efron).unwrap();
            for k in 0..2 {
                let h = 1e-5;
                let mut up = beta;
                let mut dn = beta;
                up[k] += h;
                dn[k] -= h;
                let fd = (partial_likelihood(&records, &up, Ties::Efron).unwrap().log_likelihood
                    - partial_likelihood(&records, &dn, Ties::Efron).unwrap().log_likelihood)
                    / (2.0 * h);
                let g = at.gradient[k];
                assert!((fd - g).abs() <= 1e-4 * g.abs().max(1.0), "{fd} vs {g}");
            }
        }
        let fit = cox_fit(&records).unwrap();
        let at = partial_likelihood(&records, &fit.coefficients, Ties::Efron).unwrap();
        assert!(at.gradient.iter().all(|g| g.abs() < 1e-6));
        assert!(fit.converged);
    }

    #[test]
    fn efron_equals_breslow_without_ties() {
        let records = simulate(400, 0.5, 0.8, 11);
        let e = cox_fit(&records).unwrap();
        let b = cox_fit_with(&records, &CoxOptions { ties: Ties::Breslow, ..Default::default() }).unwrap();
        for (x, y) in e.coefficients.iter().zip(&b.coefficients) {
            assert!((x - y).abs() < 1e-8);
        }
        assert!((e.log_likelihood - b.log_likelihood).abs() < 1e-8);
    }

    #[test]
    fn efron_differs_from_breslow_with_ties() {
        let records: Vec<_> = simulate(400, 0.5, 0.8, 12)
            .into_iter()
            .map(|mut r| {
                r.time = (r.time * 10.0).ceil();
                r
            })
            .collect();
        let e = cox_fit(&records).unwrap();
        let b = cox_fit_with(&records, &CoxOptions { ties: Ties::Breslow, ..Default::default() }).unwrap();
        assert!((e.coefficients[0] - b.coefficients[0]).abs() > 1e-4);
        // Breslow attenuates towards zero under heavy ties
        assert!(b.coefficients[0].abs() < e.coefficients[0].abs());
    }

    #[test]
    fn time_scaling_invariance() {
        let records = simulate(300, 0.6, 1.5, 5);
        let base = cox_fit(&records).unwrap();
        for c in [2.0, 0.125, 7.3] {
            let scaled: Vec<_> = records
                .iter()
                .map(|r| SurvivalRecord {
                    time: r.time * c,
                    ..r.clone()
                })
                .collect();
            let fit = cox_fit(&scaled).unwrap();
            for (x, y) in base.coefficients.iter().zip(&fit.coefficients) {
                assert!((x - y).abs() < 1e-12, "{c}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn relabel_negates_coefficient() {
        let records = simulate(300, 0.6, 1.5, 6);
        let flipped: Vec<_> = records
            .iter()
            .map(|r| SurvivalRecord {
                covariates: vec![1.0 - r.covariates[0], r.covariates[1]],
                ..r.clone()
            })
            .collect();
        let a = cox_fit(&records).unwrap();
        let b = cox_fit(&flipped).unwrap();
        assert!((a.coefficients[0] + b.coefficients[0]).abs() < 1e-9);
        assert!((a.coefficients[1] - b.coefficients[1]).abs() < 1e-9);
        assert!((a.log_likelihood - b.log_likelihood).abs() < 1e-9);
        assert!((a.standard_errors[0] - b.standard_errors[0]).abs() < 1e-9);
    }

    #[test]
    fn intervals_bracket_estimates() {
        let fit = cox_fit(&simulate(1000, 2f64.ln(), 0.35, 9)).unwrap();
        for i in 0..2 {
            assert!(fit.ci_low[i] < fit.hazard_ratios[i] && fit.hazard_ratios[i] < fit.ci_high[i]);
        }
        assert!(fit.hazard_ratios[0] > 1.4 && fit.hazard_ratios[0] < 2.8);
        assert!(fit.p_values[0] < 1e-6);
    }

    #[test]
    fn errors() {
        let zero: Vec<_> = (0..20).map(|i| rec(i, 1.0 + i as f64, i % 3 == 0, vec![0.0])).collect();
        assert!(matches!(cox_fit(&zero), Err(SurvivalError::RankDeficient { column: Some(0) })));

        let collinear: Vec<_> = (0..20)
            .map(|i| {
                let x = (i % 2) as f64;
                rec(i, 1.0 + i as f64, i % 3 == 0, vec![x, x])
            })
            .collect();
        assert!(matches!(cox_fit(&collinear), Err(SurvivalError::RankDeficient { .. })));

        let none: Vec<_> = (0..5).map(|i| rec(i, 1.0, false, vec![i as f64])).collect();
        assert!(matches!(cox_fit(&none), Err(SurvivalError::NoEvents)));

        // every exposed subject fails before every unexposed one
        let separated: Vec<_> = (0..20)
            .map(|i| {
                let x = (i < 10) as u8 as f64;
                rec(i, 1.0 + i as f64, true, vec![x])
            })
            .collect();
        match cox_fit(&separated) {
            Err(SurvivalError::Separation { column: 0, coefficient }) => assert!(coefficient > SEPARATION_LIMIT),
            other => panic!("expected separation, got {other:?}"),
        }

        assert!(matches!(cox_fit(&[rec(0, 0.0, true, vec![])]), Err(SurvivalError::InvalidRecord { .. })));
        assert!(matches!(cox_fit(&[]), Err(SurvivalError::NoRecords)));
    }
}
