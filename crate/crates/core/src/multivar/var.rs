use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::series::MultiSeries;
use crate::error::{Error, Result};
use crate::linalg::least_squares;

/// Moduli at or above this bound count as unstable.
pub(crate) const STABILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarModel {
    pub names: Vec<String>,
    pub p: usize,
    pub intercept: DVector<f64>,
    /// Θ_1..Θ_p; row i holds equation i.
    pub coefficients: Vec<DMatrix<f64>>,
    /// n × K
    pub residuals: DMatrix<f64>,
    /// Residual covariance with divisor n − Kp − 1.
    pub sigma: DMatrix<f64>,
    /// Residual covariance with divisor n.
    pub sigma_ml: DMatrix<f64>,
    pub n_obs: usize,
    pub loglik: f64,
    /// Regressors `[1, y_{t−1}, …, y_{t−p}]`, n × (1 + Kp).
    pub(crate) design: DMatrix<f64>,
    pub(crate) xtx_inv: DMatrix<f64>,
    /// Estimation input including presample rows.
    pub(crate) data: DMatrix<f64>,
    /// First row of `data` used as a left-hand observation.
    pub(crate) start: usize,
}

pub(crate) fn lagged_design(values: &DMatrix<f64>, p: usize, start: usize) -> DMatrix<f64> {
    let k = values.ncols();
    let n = values.nrows() - start;
    DMatrix::from_fn(n, 1 + k * p, |i, j| {
        if j == 0 {
            1.0
        } else {
            let lag = (j - 1) / k + 1;
            values[(start + i - lag, (j - 1) % k)]
        }
    })
}

/// Gaussian log-likelihood at the ML covariance; +∞ for an exact fit.
pub(crate) fn gaussian_loglik(n: usize, k: usize, sigma_ml: &DMatrix<f64>) -> f64 {
    let det = sigma_ml.determinant();
    if det <= 0.0 {
        return f64::INFINITY;
    }
    -0.5 * n as f64 * (k as f64 * ((2.0 * std::f64::consts::PI).ln() + 1.0) + det.ln())
}

/// VAR(p) with intercept, using rows `start..` as left-hand observations.
pub(crate) fn fit_var_from(values: &DMatrix<f64>, names: &[String], p: usize, start: usize) -> Result<VarModel> {
    let k = values.ncols();
    if start < p || start >= values.nrows() {
        return Err(Error::InvalidInput("estimation sample does not leave room for the lags".into()));
    }
    let n = values.nrows() - start;
    if n <= k * p + 1 {
        return Err(Error::InvalidInput(format!(
            "{n} usable observations are too few for a VAR({p}) in {k} variables (need more than {})",
            k * p + 1
        )));
    }
    let x = lagged_design(values, p, start);
    let y = values.rows(start, n).into_owned();
    let fit = least_squares(&x, &y)?;
    let b = &fit.coef;
    let intercept = b.row(0).transpose();
    let coefficients = (0..p).map(|l| b.rows(1 + l * k, k).transpose()).collect();
    let cross = fit.residuals.transpose() * &fit.residuals;
    let sigma_ml = &cross / n as f64;
    let sigma = &cross / (n - k * p - 1) as f64;
    let loglik = gaussian_loglik(n, k, &sigma_ml);
    Ok(VarModel {
        names: names.to_vec(),
        p,
        intercept,
        coefficients,
        residuals: fit.residuals,
        sigma,
        sigma_ml,
        n_obs: n,
        loglik,
        design: x,
        xtx_inv: fit.xtx_inv,
        data: values.clone(),
        start,
    })
}

/// Equation-by-equation least squares of each variable on an intercept and
/// `p` lags of every variable.
pub fn fit_var(data: &MultiSeries, p: usize) -> Result<VarModel> {
    fit_var_from(&data.values, &data.names, p, p)
}

pub(crate) fn companion_of(coefficients: &[DMatrix<f64>], k: usize) -> DMatrix<f64> {
    let p = coefficients.len();
    let mut c = DMatrix::zeros(k * p, k * p);
    for (l, a) in coefficients.iter().enumerate() {
        c.view_mut((0, l * k), (k, k)).copy_from(a);
    }
    for i in k..k * p {
        c[(i, i - k)] = 1.0;
    }
    c
}

pub(crate) fn modulus(z: &Complex<f64>) -> f64 {
    z.re.hypot(z.im)
}

/// Companion eigenvalues sorted by decreasing modulus.
pub(crate) fn sorted_eigenvalues(companion: &DMatrix<f64>) -> Vec<Complex<f64>> {
    if companion.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<Complex<f64>> = companion.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| modulus(b).total_cmp(&modulus(a)).then(b.im.total_cmp(&a.im)));
    ev
}

impl VarModel {
    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn companion(&self) -> DMatrix<f64> {
        companion_of(&self.coefficients, self.k())
    }

    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        sorted_eigenvalues(&self.companion())
    }

    pub fn is_stable(&self) -> bool {
        self.eigenvalues().iter().all(|z| modulus(z) < 1.0 - STABILITY_TOL)
    }

    /// Stacked coefficients `[δ'; Θ_1'; …; Θ_p']`, (1 + Kp) × K.
    pub fn coefficient_matrix(&self) -> DMatrix<f64> {
        let k = self.k();
        let mut b = DMatrix::zeros(1 + k * self.p, k);
        b.row_mut(0).copy_from(&self.intercept.transpose());
        for (l, a) in self.coefficients.iter().enumerate() {
            b.rows_mut(1 + l * k, k).copy_from(&a.transpose());
        }
        b
    }

    /// Standard errors laid out like [`coefficient_matrix`](Self::coefficient_matrix).
    pub fn std_errors(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.xtx_inv.nrows(), self.k(), |i, j| (self.xtx_inv[(i, i)] * self.sigma[(j, j)]).sqrt())
    }
}
