//! Linear models of expected topic prevalence on the covariates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::design::CovariateDesign;
use super::em::{sample_theta, TopicModelFit};
use crate::error::{Error, Result};
use crate::linalg::{check_full_rank, least_squares_unchecked, quantile, sample_sd};
use crate::rng::substream;

pub const INTERCEPT: &str = "(Intercept)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Uncertainty {
    /// Classical OLS standard errors on the point estimates of θ.
    Analytic,
    /// θ redrawn from each document's Laplace posterior; every draw also
    /// samples the coefficient from its OLS sampling distribution.
    Simulation { draws: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub topic: usize,
    pub covariate: String,
    pub estimate: f64,
    pub std_error: f64,
    pub ci: (f64, f64),
    pub method: String,
}

pub fn estimate_effect(
    fit: &TopicModelFit,
    design: &CovariateDesign,
    covariate: &str,
    uncertainty: Uncertainty,
) -> Result<Vec<EffectEstimate>> {
    let column = if covariate == INTERCEPT {
        0
    } else {
        design
            .column_index(covariate)
            .map(|c| c + 1)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown covariate {covariate:?}")))?
    };
    if design.num_docs() != fit.num_docs() {
        return Err(Error::InvalidInput("design and fit differ in document count".into()));
    }
    let x = design.with_intercept();
    check_full_rank(&x, "effect design")?;
    let n = x.nrows();
    let p = x.ncols();
    if n <= p {
        return Err(Error::RankDeficient(format!("{n} documents for {p} coefficients")));
    }
    let dof = (n - p) as f64;
    match uncertainty {
        Uncertainty::Analytic => {
            let fit_ls = least_squares_unchecked(&x, &fit.theta)?;
            let t = StudentsT::new(0.0, 1.0, dof).expect("positive dof");
            let crit = t.inverse_cdf(0.975);
            Ok((0..fit.k)
                .map(|k| {
                    let sigma2 = fit_ls.rss(k) / dof;
                    let est = fit_ls.coef[(column, k)];
                    let se = (sigma2 * fit_ls.xtx_inv[(column, column)]).max(0.0).sqrt();
                    EffectEstimate {
                        topic: k,
                        covariate: covariate.to_string(),
                        estimate: est,
                        std_error: se,
                        ci: (est - crit * se, est + crit * se),
                        method: "OLS, t-based 95% interval".into(),
                    }
                })
                .collect())
        }
        Uncertainty::Simulation { draws, seed } => {
            if draws < 2 {
                return Err(Error::InvalidParameter("at least two simulation draws are required".into()));
            }
            let mut rng = substream(seed, "effect-simulation");
            let mut samples = vec![Vec::with_capacity(draws); fit.k];
            for _ in 0..draws {
                let mut theta = DMatrix::zeros(n, fit.k);
                for d in 0..n {
                    let eta = fit.eta.row(d).transpose();
                    let row = sample_theta(&eta, &fit.nu[d], &mut rng);
                    for j in 0..fit.k {
                        theta[(d, j)] = row[j];
                    }
                }
                let ls = least_squares_unchecked(&x, &theta)?;
                for (k, sample) in samples.iter_mut().enumerate() {
                    let sigma2 = ls.rss(k) / dof;
                    let se = (sigma2 * ls.xtx_inv[(column, column)]).max(0.0).sqrt();
                    let z: f64 = rng.sample(StandardNormal);
                    sample.push(ls.coef[(column, k)] + se * z);
                }
            }
            Ok(samples
                .into_iter()
                .enumerate()
                .map(|(k, mut s)| {
                    let est = s.iter().sum::<f64>() / s.len() as f64;
                    let se = sample_sd(&s);
                    s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                    let lo = quantile(&s, 0.025).min(est);
                    let hi = quantile(&s, 0.975).max(est);
                    EffectEstimate {
                        topic: k,
                        covariate: covariate.to_string(),
                        estimate: est,
                        std_error: se,
                        ci: (lo, hi),
                        method: format!("simulation, {draws} draws, percentile 95% interval"),
                    }
                })
                .collect())
        }
    }
}

/// Coefficient vector of an OLS regression of `y` on `[1, X]`; used by callers
/// that need every coefficient at once.
pub fn prevalence_coefficients(theta_column: &DVector<f64>, design: &CovariateDesign) -> Result<DVector<f64>> {
    let x = design.with_intercept();
    check_full_rank(&x, "effect design")?;
    let y = DMatrix::from_column_slice(theta_column.len(), 1, theta_column.as_slice());
    Ok(least_squares_unchecked(&x, &y)?.coef.column(0).into_owned())
}
