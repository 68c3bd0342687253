//! Small dense least-squares helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value threshold below which a design is treated as rank-deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Least-squares fit of possibly many responses on a common design.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// `p × m` coefficients, one column per response.
    pub coef: DMatrix<f64>,
    /// `(X'X)^{-1}`.
    pub xtx_inv: DMatrix<f64>,
    /// `n × m` residuals.
    pub residuals: DMatrix<f64>,
}

impl LeastSquares {
    pub fn rss(&self, column: usize) -> f64 {
        self.residuals.column(column).norm_squared()
    }
}

/// Errors if the columns of `x` are (numerically) linearly dependent.
pub fn check_full_rank(x: &DMatrix<f64>, what: &str) -> Result<()> {
    if x.ncols() == 0 {
        return Ok(());
    }
    if x.nrows() < x.ncols() {
        return Err(Error::RankDeficient(format!(
            "{what}: {} rows for {} columns",
            x.nrows(),
            x.ncols()
        )));
    }
    let mut scaled = x.clone();
    for mut col in scaled.column_iter_mut() {
        let norm = col.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::RankDeficient(format!("{what}: zero or non-finite column")));
        }
        col /= norm;
    }
    let sv = scaled.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= RANK_TOL * max {
        return Err(Error::RankDeficient(format!(
            "{what}: condition {:.3e}",
            if min > 0.0 { max / min } else { f64::INFINITY }
        )));
    }
    Ok(())
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().cholesky().map(|c| c.inverse())
}

pub fn spd_log_det(a: &DMatrix<f64>) -> Option<f64> {
    a.clone()
        .cholesky()
        .map(|c| 2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// OLS of every column of `y` on `x` after a rank check.
pub fn least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<LeastSquares> {
    check_full_rank(x, "least squares")?;
    least_squares_unchecked(x, y)
}

pub(crate) fn least_squares_unchecked(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<LeastSquares> {
    let xtx = x.tr_mul(x);
    let chol = xtx
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("singular cross-product".into()))?;
    let xtx_inv = chol.inverse();
    let coef = chol.solve(&x.tr_mul(y));
    let residuals = y - x * &coef;
    Ok(LeastSquares {
        coef,
        xtx_inv,
        residuals,
    })
}

/// Coefficients, residual variance and classical standard errors for one response.
#[derive(Debug, Clone)]
pub struct OlsSummary {
    pub coef: DVector<f64>,
    pub std_errors: DVector<f64>,
    pub sigma2: f64,
    pub residuals: DVector<f64>,
    pub xtx_inv: DMatrix<f64>,
}

pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsSummary> {
    let n = x.nrows();
    let p = x.ncols();
    if n <= p {
        return Err(Error::RankDeficient(format!("{n} observations for {p} parameters")));
    }
    let ymat = DMatrix::from_column_slice(n, 1, y.as_slice());
    let fit = least_squares(x, &ymat)?;
    let residuals = fit.residuals.column(0).into_owned();
    let sigma2 = residuals.norm_squared() / (n - p) as f64;
    let std_errors = fit.xtx_inv.diagonal().map(|v| (v * sigma2).max(0.0).sqrt());
    Ok(OlsSummary {
        coef: fit.coef.column(0).into_owned(),
        std_errors,
        sigma2,
        residuals,
        xtx_inv: fit.xtx_inv,
    })
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_line() {
        let x = DMatrix::from_fn(6, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y = DVector::from_fn(6, |i, _| 2.0 + 0.5 * i as f64);
        let fit = ols(&x, &y).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-12);
        assert!((fit.coef[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn collinear_columns_are_rejected() {
        let x = DMatrix::from_fn(5, 2, |i, j| (i as f64 + 1.0) * (j as f64 + 1.0));
        assert!(matches!(check_full_rank(&x, "t"), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert!((quantile(&v, 0.5) - 2.5).abs() < 1e-12);
    }
}
