use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::cointegration::{rrr_core, DetSpec};
use super::series::MultiSeries;
use super::var::{companion_of, sorted_eigenvalues};
use crate::error::{Error, Result};
use crate::linalg::least_squares;

/// Error-correction model Δy_t = α β' y_{t−1} + Σ Γ_i Δy_{t−i} + c + u_t,
/// estimated by reduced-rank regression.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VecmModel {
    pub names: Vec<String>,
    /// Lag order of the VAR in levels; the model carries `p − 1` lagged differences.
    pub p: usize,
    pub rank: usize,
    pub det: DetSpec,
    /// K × r loadings.
    pub alpha: DMatrix<f64>,
    /// K × r cointegrating vectors with the leading r × r block set to the identity.
    pub beta: DMatrix<f64>,
    pub gamma: Vec<DMatrix<f64>>,
    pub intercept: Option<DVector<f64>>,
    /// n × K
    pub residuals: DMatrix<f64>,
    /// Residual covariance with divisor n.
    pub sigma: DMatrix<f64>,
    pub n_obs: usize,
    /// A_1..A_p of the implied VAR in levels.
    pub level_coefficients: Vec<DMatrix<f64>>,
    /// Regressors `[β'y_{t−1}, Δy_{t−1}, …, 1]` used for the short-run fit.
    pub(crate) design: DMatrix<f64>,
}

pub fn fit_vecm(data: &MultiSeries, p: usize, rank: usize, det: DetSpec) -> Result<VecmModel> {
    let k = data.dim();
    if rank >= k {
        return Err(Error::InvalidParameter(format!(
            "cointegration rank {rank} must be below the number of variables {k}"
        )));
    }
    let core = rrr_core(&data.values, p, det)?;
    let n = core.n;
    let mut beta = core.vectors.columns(0, rank).into_owned();
    if rank > 0 {
        if let Some(inv) = beta.rows(0, rank).into_owned().try_inverse() {
            beta = &beta * inv;
        }
    }
    let ect = &core.z1 * &beta;
    let m2 = core.z2.ncols();
    let mut design = DMatrix::zeros(n, rank + m2);
    design.columns_mut(0, rank).copy_from(&ect);
    design.columns_mut(rank, m2).copy_from(&core.z2);
    let (coef, residuals) = if design.ncols() == 0 {
        (DMatrix::zeros(0, k), core.z0.clone())
    } else {
        let fit = least_squares(&design, &core.z0)?;
        (fit.coef, fit.residuals)
    };
    let alpha = coef.rows(0, rank).transpose();
    let gamma: Vec<DMatrix<f64>> = (0..p - 1).map(|i| coef.rows(rank + i * k, k).transpose()).collect();
    let intercept = (det == DetSpec::Constant).then(|| coef.row(rank + k * (p - 1)).transpose());
    let sigma = residuals.transpose() * &residuals / n as f64;

    let pi = &alpha * beta.transpose();
    let eye = DMatrix::<f64>::identity(k, k);
    let mut level = Vec::with_capacity(p);
    for i in 0..p {
        let mut a = if i == 0 { &eye + &pi } else { DMatrix::zeros(k, k) };
        if i < p - 1 {
            a += &gamma[i];
        }
        if i > 0 {
            a -= &gamma[i - 1];
        }
        level.push(a);
    }
    Ok(VecmModel {
        names: data.names.clone(),
        p,
        rank,
        det,
        alpha,
        beta,
        gamma,
        intercept,
        residuals,
        sigma,
        n_obs: n,
        level_coefficients: level,
        design,
    })
}

impl VecmModel {
    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn companion(&self) -> DMatrix<f64> {
        companion_of(&self.level_coefficients, self.k())
    }

    /// Companion eigenvalues by decreasing modulus; K − r of them are one by construction.
    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        sorted_eigenvalues(&self.companion())
    }
}
