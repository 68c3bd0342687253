use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::irf::ModelRef;
use super::var::{modulus, STABILITY_TOL};
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::table::{num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityRow {
    pub equation: String,
    pub skewness: f64,
    pub skewness_chi2: f64,
    pub kurtosis: f64,
    pub kurtosis_chi2: f64,
    pub jarque_bera: f64,
}

/// (statistic, df, p-value)
pub type ChiTest = (f64, usize, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub rows: Vec<NormalityRow>,
    pub joint_jarque_bera: ChiTest,
    pub joint_skewness: ChiTest,
    pub joint_kurtosis: ChiTest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmRow {
    pub lag: usize,
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub stability: Vec<StabilityRow>,
    /// All moduli below one, ignoring the unit roots an error-correction model imposes.
    pub stable: bool,
    pub normality: NormalityReport,
    pub lm_autocorrelation: Vec<LmRow>,
}

fn chi_sf(stat: f64, df: usize) -> f64 {
    ChiSquared::new(df as f64).map(|d| 1.0 - d.cdf(stat.max(0.0))).unwrap_or(f64::NAN)
}

/// Companion eigenvalues by decreasing modulus and the stability verdict.
pub fn stability(model: ModelRef<'_>) -> (Vec<StabilityRow>, bool) {
    let (ev, imposed) = match model {
        ModelRef::Var(m) => (m.eigenvalues(), 0),
        ModelRef::Vecm(m) => (m.eigenvalues(), m.k() - m.rank),
    };
    let rows: Vec<StabilityRow> = ev
        .iter()
        .map(|z| StabilityRow {
            re: z.re,
            im: z.im,
            modulus: modulus(z),
        })
        .collect();
    let stable = rows.iter().skip(imposed).all(|r| r.modulus < 1.0 - STABILITY_TOL);
    (rows, stable)
}

/// Skewness, kurtosis and Jarque-Bera tests on mean-centred residuals
/// standardised by the Cholesky factor of their ML covariance.
pub fn normality(residuals: &DMatrix<f64>, names: &[String]) -> Result<NormalityReport> {
    let (n, k) = (residuals.nrows(), residuals.ncols());
    if n < 3 {
        return Err(Error::InvalidInput("too few residuals for normality tests".into()));
    }
    let mut centred = residuals.clone();
    for mut col in centred.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let sigma = centred.transpose() * &centred / n as f64;
    let l_inv = sigma
        .cholesky()
        .ok_or_else(|| Error::Degenerate("residual covariance is not positive definite".into()))?
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("singular residual covariance".into()))?;
    let w = centred * l_inv.transpose();
    let nf = n as f64;
    let mut rows = Vec::with_capacity(k);
    for j in 0..k {
        let col = w.column(j);
        let b1 = col.iter().map(|v| v.powi(3)).sum::<f64>() / nf;
        let b2 = col.iter().map(|v| v.powi(4)).sum::<f64>() / nf;
        let s = nf * b1 * b1 / 6.0;
        let ku = nf * (b2 - 3.0).powi(2) / 24.0;
        rows.push(NormalityRow {
            equation: names.get(j).cloned().unwrap_or_else(|| format!("eq{}", j + 1)),
            skewness: b1,
            skewness_chi2: s,
            kurtosis: b2,
            kurtosis_chi2: ku,
            jarque_bera: s + ku,
        });
    }
    let total = |f: fn(&NormalityRow) -> f64, df: usize| {
        let stat: f64 = rows.iter().map(f).sum();
        (stat, df, chi_sf(stat, df))
    };
    Ok(NormalityReport {
        joint_jarque_bera: total(|r| r.jarque_bera, 2 * k),
        joint_skewness: total(|r| r.skewness_chi2, k),
        joint_kurtosis: total(|r| r.kurtosis_chi2, k),
        rows,
    })
}

/// LM test of no residual autocorrelation at each lag 1..=max_lag, from the
/// auxiliary regression of the residuals on the model regressors and the
/// residuals lagged s periods (zero before the sample).
pub fn lm_autocorrelation(model: ModelRef<'_>, max_lag: usize) -> Result<Vec<LmRow>> {
    let (design, resid) = match model {
        ModelRef::Var(m) => (&m.design, &m.residuals),
        ModelRef::Vecm(m) => (&m.design, &m.residuals),
    };
    let (n, k) = (resid.nrows(), resid.ncols());
    let d = design.ncols() + k;
    if max_lag < 1 || n <= d + max_lag {
        return Err(Error::InvalidInput(format!("{n} residuals are too few for LM tests up to lag {max_lag}")));
    }
    let nf = n as f64;
    let det_full = (resid.transpose() * resid / nf).determinant();
    (1..=max_lag)
        .map(|s| {
            let x = DMatrix::from_fn(n, d, |i, j| {
                if j < design.ncols() {
                    design[(i, j)]
                } else if i >= s {
                    resid[(i - s, j - design.ncols())]
                } else {
                    0.0
                }
            });
            let aux = least_squares(&x, resid)?;
            let det_aux = (aux.residuals.transpose() * &aux.residuals / nf).determinant();
            let chi2 = (nf - d as f64 - 0.5) * (det_full / det_aux).ln();
            Ok(LmRow {
                lag: s,
                chi2,
                df: k * k,
                p_value: chi_sf(chi2, k * k),
            })
        })
        .collect()
}

pub fn diagnostics(model: ModelRef<'_>, lm_lags: usize) -> Result<Diagnostics> {
    let (rows, stable) = stability(model);
    let (resid, names) = match model {
        ModelRef::Var(m) => (&m.residuals, &m.names),
        ModelRef::Vecm(m) => (&m.residuals, &m.names),
    };
    Ok(Diagnostics {
        stability: rows,
        stable,
        normality: normality(resid, names)?,
        lm_autocorrelation: lm_autocorrelation(model, lm_lags)?,
    })
}

impl Diagnostics {
    pub fn stability_table(&self) -> Table {
        let mut t = Table::new(["real", "imaginary", "modulus"]);
        for r in &self.stability {
            t.push([num(r.re), num(r.im), num(r.modulus)]);
        }
        t
    }

    pub fn normality_table(&self) -> Table {
        let mut t = Table::new(["test", "equation", "value", "chi2", "df", "p_value"]);
        let nr = &self.normality;
        for r in &nr.rows {
            t.push(["jarque-bera".into(), r.equation.clone(), String::new(), num(r.jarque_bera), "2".into(), num(chi_sf(r.jarque_bera, 2))]);
        }
        let (s, df, p) = nr.joint_jarque_bera;
        t.push(["jarque-bera".into(), "ALL".into(), String::new(), num(s), df.to_string(), num(p)]);
        for r in &nr.rows {
            t.push(["skewness".into(), r.equation.clone(), num(r.skewness), num(r.skewness_chi2), "1".into(), num(chi_sf(r.skewness_chi2, 1))]);
        }
        let (s, df, p) = nr.joint_skewness;
        t.push(["skewness".into(), "ALL".into(), String::new(), num(s), df.to_string(), num(p)]);
        for r in &nr.rows {
            t.push(["kurtosis".into(), r.equation.clone(), num(r.kurtosis), num(r.kurtosis_chi2), "1".into(), num(chi_sf(r.kurtosis_chi2, 1))]);
        }
        let (s, df, p) = nr.joint_kurtosis;
        t.push(["kurtosis".into(), "ALL".into(), String::new(), num(s), df.to_string(), num(p)]);
        t
    }

    pub fn lm_table(&self) -> Table {
        let mut t = Table::new(["lag", "chi2", "df", "p_value"]);
        for r in &self.lm_autocorrelation {
            t.push([r.lag.to_string(), num(r.chi2), r.df.to_string(), num(r.p_value)]);
        }
        t
    }
}
