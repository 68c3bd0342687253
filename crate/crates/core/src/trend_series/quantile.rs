use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFit {
    pub degree: usize,
    /// Constant first; the regressor is `year − first year`.
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopQuantileSeries {
    pub years: Vec<i32>,
    /// Yearly mean of each document's largest topic probability.
    pub values: Vec<f64>,
    pub trend: PolynomialFit,
}

/// Least-squares polynomial of `degree` in x. Solved through a QR
/// decomposition of the Vandermonde matrix.
pub fn polynomial_fit(x: &[f64], y: &[f64], degree: usize) -> Result<PolynomialFit> {
    if degree < 1 {
        return Err(Error::InvalidParameter("polynomial degree must be at least 1".into()));
    }
    if x.len() != y.len() {
        return Err(Error::InvalidInput("x and y differ in length".into()));
    }
    if x.len() <= degree + 1 {
        return Err(Error::InvalidInput(format!(
            "{} points cannot support a degree-{degree} trend with residual degrees of freedom",
            x.len()
        )));
    }
    let v = DMatrix::from_fn(x.len(), degree + 1, |i, j| x[i].powi(j as i32));
    crate::linalg::check_full_rank(&v, "polynomial trend")?;
    let qr = v.clone().qr();
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    let coef = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient("polynomial trend".into()))?;
    let fitted = &v * &coef;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    Ok(PolynomialFit {
        degree,
        coefficients: coef.iter().copied().collect(),
        fitted: fitted.iter().copied().collect(),
        residuals,
    })
}

pub fn top_quantile_series(theta: &DMatrix<f64>, years: &[i32], degree: usize) -> Result<TopQuantileSeries> {
    if theta.nrows() != years.len() {
        return Err(Error::InvalidInput(format!(
            "theta has {} rows but {} document years were given",
            theta.nrows(),
            years.len()
        )));
    }
    let mut by_year: std::collections::BTreeMap<i32, (f64, usize)> = Default::default();
    for (d, &year) in years.iter().enumerate() {
        let top = theta.row(d).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e = by_year.entry(year).or_default();
        e.0 += top;
        e.1 += 1;
    }
    let years: Vec<i32> = by_year.keys().copied().collect();
    let values: Vec<f64> = by_year.values().map(|(s, n)| s / *n as f64).collect();
    let first = *years.first().ok_or_else(|| Error::InvalidInput("no documents".into()))?;
    let x: Vec<f64> = years.iter().map(|y| (y - first) as f64).collect();
    let trend = polynomial_fit(&x, &values, degree)?;
    Ok(TopQuantileSeries { years, values, trend })
}
