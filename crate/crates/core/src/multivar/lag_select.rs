use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::series::MultiSeries;
use super::var::fit_var_from;
use crate::error::{Error, Result};
use crate::table::{num, opt_num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub fpe: f64,
    pub aic: f64,
    pub hqic: f64,
    pub sbic: f64,
}

/// Final prediction error and information criteria of a VAR(p) with
/// intercept from its log-likelihood on `n` observations.
pub fn information_criteria(loglik: f64, n: usize, k: usize, p: usize) -> Criteria {
    let (nf, kf) = (n as f64, k as f64);
    let params = kf * (kf * p as f64 + 1.0);
    let ln_det = -2.0 * loglik / nf - kf * ((2.0 * std::f64::consts::PI).ln() + 1.0);
    let base = -2.0 * loglik / nf;
    let m = kf * p as f64 + 1.0;
    Criteria {
        fpe: ln_det.exp() * ((nf + m) / (nf - m)).powf(kf),
        aic: base + 2.0 * params / nf,
        hqic: base + 2.0 * nf.ln().ln() * params / nf,
        sbic: base + nf.ln() * params / nf,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelectionRow {
    pub lag: usize,
    pub loglik: f64,
    /// 2 (LL_p − LL_{p−1}); absent at lag 0.
    pub lr: Option<f64>,
    pub df: Option<usize>,
    pub p_value: Option<f64>,
    pub criteria: Criteria,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelection {
    pub rows: Vec<LagSelectionRow>,
    pub n_obs: usize,
    /// Largest lag whose LR test rejects at 5%.
    pub best_lr: Option<usize>,
    pub best_fpe: usize,
    pub best_aic: usize,
    pub best_hqic: usize,
    pub best_sbic: usize,
}

fn argmin(rows: &[LagSelectionRow], f: impl Fn(&Criteria) -> f64) -> usize {
    rows.iter()
        .min_by(|a, b| f(&a.criteria).total_cmp(&f(&b.criteria)))
        .map(|r| r.lag)
        .unwrap_or(0)
}

/// Fits VAR(0)…VAR(max_lag) on the common sample that drops the first
/// `max_lag` periods.
pub fn select_lag(data: &MultiSeries, max_lag: usize) -> Result<LagSelection> {
    let k = data.dim();
    let n = data.len().saturating_sub(max_lag);
    if n <= k * max_lag + 1 {
        return Err(Error::InvalidInput(format!(
            "{} periods are too few for lag selection up to {max_lag} with {k} variables",
            data.len()
        )));
    }
    let chi = ChiSquared::new((k * k) as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rows: Vec<LagSelectionRow> = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let m = fit_var_from(&data.values, &data.names, lag, max_lag)?;
        if !m.loglik.is_finite() {
            return Err(Error::Degenerate(format!("VAR({lag}) fits the data exactly")));
        }
        let lr = rows.last().map(|prev| 2.0 * (m.loglik - prev.loglik));
        rows.push(LagSelectionRow {
            lag,
            loglik: m.loglik,
            lr,
            df: lr.map(|_| k * k),
            p_value: lr.map(|v| 1.0 - chi.cdf(v.max(0.0))),
            criteria: information_criteria(m.loglik, n, k, lag),
        });
    }
    Ok(LagSelection {
        best_lr: rows.iter().rev().find(|r| r.p_value.is_some_and(|p| p < 0.05)).map(|r| r.lag),
        best_fpe: argmin(&rows, |c| c.fpe),
        best_aic: argmin(&rows, |c| c.aic),
        best_hqic: argmin(&rows, |c| c.hqic),
        best_sbic: argmin(&rows, |c| c.sbic),
        rows,
        n_obs: n,
    })
}

impl LagSelection {
    /// One row per lag; winning cells carry a trailing `*`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["lag", "LL", "LR", "df", "p", "FPE", "AIC", "HQIC", "SBIC"]);
        let mark = |v: String, win: bool| if win { format!("{v}*") } else { v };
        for r in &self.rows {
            t.push([
                r.lag.to_string(),
                num(r.loglik),
                mark(opt_num(r.lr), self.best_lr == Some(r.lag)),
                r.df.map(|d| d.to_string()).unwrap_or_default(),
                opt_num(r.p_value),
                mark(format!("{:.6e}", r.criteria.fpe), self.best_fpe == r.lag),
                mark(num(r.criteria.aic), self.best_aic == r.lag),
                mark(num(r.criteria.hqic), self.best_hqic == r.lag),
                mark(num(r.criteria.sbic), self.best_sbic == r.lag),
            ]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn published_selection_rows() {
        // Three variables, common sample of 19 periods.
        let c0 = information_criteria(-31.148, 19, 3, 0);
        assert!((c0.fpe - 0.0073).abs() < 5e-5);
        assert!((c0.aic - 3.5945).abs() < 5e-4);
        assert!((c0.hqic - 3.6198).abs() < 5e-4);
        assert!((c0.sbic - 3.7437).abs() < 5e-4);
        let c2 = information_criteria(-7.0418, 19, 3, 2);
        assert!((c2.fpe - 0.0043).abs() < 5e-5);
        assert!((c2.aic - 2.9518).abs() < 5e-4);
        assert!((c2.hqic - 3.1284).abs() < 5e-4);
        assert!((c2.sbic - 3.9956).abs() < 5e-4);
        // Two variables, 20 periods.
        let c = information_criteria(-16.1596, 20, 2, 2);
        assert!((c.aic - 2.616).abs() < 5e-4);
        assert!((c.sbic - 3.1138).abs() < 5e-4);
    }

    #[test]
    fn too_short() {
        let y = DMatrix::from_fn(8, 2, |i, j| (i * i + j) as f64);
        let s = MultiSeries::new(vec!["a".into(), "b".into()], y).unwrap();
        assert!(select_lag(&s, 4).is_err());
    }
}
