use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::var::{fit_var_from, VarModel};
use super::vecm::VecmModel;
use crate::error::{Error, Result};
use crate::linalg::{quantile, sample_sd};
use crate::rng::indexed_substream;
use crate::table::{num, opt_num, Table};

pub const DEFAULT_BOOTSTRAP_REPLICATIONS: usize = 500;

#[derive(Debug, Clone, Copy)]
pub enum ModelRef<'a> {
    Var(&'a VarModel),
    Vecm(&'a VecmModel),
}

impl<'a> From<&'a VarModel> for ModelRef<'a> {
    fn from(m: &'a VarModel) -> Self {
        ModelRef::Var(m)
    }
}

impl<'a> From<&'a VecmModel> for ModelRef<'a> {
    fn from(m: &'a VecmModel) -> Self {
        ModelRef::Vecm(m)
    }
}

impl ModelRef<'_> {
    fn names(&self) -> &[String] {
        match self {
            ModelRef::Var(m) => &m.names,
            ModelRef::Vecm(m) => &m.names,
        }
    }

    fn level_coefficients(&self) -> &[DMatrix<f64>] {
        match self {
            ModelRef::Var(m) => &m.coefficients,
            ModelRef::Vecm(m) => &m.level_coefficients,
        }
    }

    fn sigma(&self) -> &DMatrix<f64> {
        match self {
            ModelRef::Var(m) => &m.sigma,
            ModelRef::Vecm(m) => &m.sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    /// Estimate ± z · bootstrap standard error.
    #[default]
    Normal,
    /// Quantiles of the bootstrap distribution.
    Percentile,
}

/// Residual resampling with recursive regeneration of the sample from the
/// original presample values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub replications: usize,
    pub level: f64,
    pub seed: u64,
    pub interval: IntervalMethod,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        BootstrapSpec {
            replications: DEFAULT_BOOTSTRAP_REPLICATIONS,
            level: 0.95,
            seed: 0,
            interval: IntervalMethod::Normal,
        }
    }
}

fn ma_coefficients(a: &[DMatrix<f64>], k: usize, horizon: usize) -> Vec<DMatrix<f64>> {
    let mut phi: Vec<DMatrix<f64>> = vec![DMatrix::identity(k, k)];
    for h in 1..=horizon {
        let mut next = DMatrix::zeros(k, k);
        for (l, al) in a.iter().enumerate().take(h) {
            next += al * &phi[h - l - 1];
        }
        phi.push(next);
    }
    phi
}

fn impact_matrix(sigma: &DMatrix<f64>, ortho: bool) -> Result<DMatrix<f64>> {
    if ortho {
        sigma
            .clone()
            .cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::Degenerate("residual covariance is not positive definite".into()))
    } else {
        Ok(DMatrix::identity(sigma.nrows(), sigma.nrows()))
    }
}

/// Responses at steps 0..=horizon of a VAR given by its lag matrices and
/// residual covariance, indexed [response, impulse].
pub fn point_irf(a: &[DMatrix<f64>], sigma: &DMatrix<f64>, horizon: usize, ortho: bool) -> Result<Vec<DMatrix<f64>>> {
    let p = impact_matrix(sigma, ortho)?;
    Ok(ma_coefficients(a, sigma.nrows(), horizon).into_iter().map(|phi| phi * &p).collect())
}

/// Step 0 is all zeros; step s ≥ 1 decomposes the s-step forecast error.
pub fn point_fevd(a: &[DMatrix<f64>], sigma: &DMatrix<f64>, horizon: usize) -> Result<Vec<DMatrix<f64>>> {
    let k = sigma.nrows();
    let theta = point_irf(a, sigma, horizon.saturating_sub(1), true)?;
    let mut out = vec![DMatrix::zeros(k, k)];
    let mut acc = DMatrix::<f64>::zeros(k, k);
    for step in 1..=horizon {
        acc += theta[step - 1].map(|v| v * v);
        let mut share = acc.clone();
        for j in 0..k {
            let total: f64 = acc.row(j).sum();
            share.row_mut(j).scale_mut(1.0 / total);
        }
        out.push(share);
    }
    Ok(out)
}

fn bootstrap_models(model: &VarModel, spec: &BootstrapSpec) -> Vec<VarModel> {
    let k = model.k();
    let n = model.n_obs;
    let means = DVector::from_fn(k, |j, _| model.residuals.column(j).mean());
    (0..spec.replications)
        .into_par_iter()
        .map(|b| {
            let mut rng = indexed_substream(spec.seed, "bootstrap", b as u64);
            let mut y = model.data.clone();
            for t in model.start..y.nrows() {
                let draw = rng.gen_range(0..n);
                let mut next = model.intercept.clone() + model.residuals.row(draw).transpose() - &means;
                for (l, a) in model.coefficients.iter().enumerate() {
                    next += a * y.row(t - l - 1).transpose();
                }
                y.set_row(t, &next.transpose());
            }
            fit_var_from(&y, &model.names, model.p, model.start).ok()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

struct Bands {
    se: Vec<DMatrix<f64>>,
    lower: Vec<DMatrix<f64>>,
    upper: Vec<DMatrix<f64>>,
}

fn bands(point: &[DMatrix<f64>], draws: &[Vec<DMatrix<f64>>], spec: &BootstrapSpec) -> Result<Bands> {
    if draws.len() < 2 {
        return Err(Error::Degenerate("fewer than two bootstrap replications succeeded".into()));
    }
    let alpha = 1.0 - spec.level;
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - alpha / 2.0);
    let k = point[0].nrows();
    let (mut se, mut lower, mut upper) = (Vec::new(), Vec::new(), Vec::new());
    for (h, est) in point.iter().enumerate() {
        let (mut s, mut lo, mut hi) = (DMatrix::zeros(k, k), DMatrix::zeros(k, k), DMatrix::zeros(k, k));
        for i in 0..k {
            for j in 0..k {
                let mut v: Vec<f64> = draws.iter().map(|d| d[h][(i, j)]).collect();
                let sd = sample_sd(&v);
                s[(i, j)] = sd;
                match spec.interval {
                    IntervalMethod::Normal => {
                        lo[(i, j)] = est[(i, j)] - z * sd;
                        hi[(i, j)] = est[(i, j)] + z * sd;
                    }
                    IntervalMethod::Percentile => {
                        v.sort_by(f64::total_cmp);
                        lo[(i, j)] = quantile(&v, alpha / 2.0);
                        hi[(i, j)] = quantile(&v, 1.0 - alpha / 2.0);
                    }
                }
            }
        }
        se.push(s);
        lower.push(lo);
        upper.push(hi);
    }
    Ok(Bands { se, lower, upper })
}

fn check_spec(spec: &BootstrapSpec) -> Result<()> {
    if spec.replications < 2 {
        return Err(Error::InvalidParameter("bootstrap needs at least two replications".into()));
    }
    if !(spec.level > 0.0 && spec.level < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence level {} is not in (0, 1)", spec.level)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfResult {
    /// Variables in Cholesky order.
    pub names: Vec<String>,
    pub horizon: usize,
    pub orthogonalized: bool,
    /// One K × K matrix per step 0..=horizon, indexed [response, impulse].
    pub responses: Vec<DMatrix<f64>>,
    pub lower: Option<Vec<DMatrix<f64>>>,
    pub upper: Option<Vec<DMatrix<f64>>>,
    /// Why requested bands were not produced.
    pub bands_refused: Option<String>,
    pub replications_used: usize,
}

pub fn impulse_response(model: ModelRef<'_>, horizon: usize, ortho: bool, ci: Option<BootstrapSpec>) -> Result<IrfResult> {
    let responses = point_irf(model.level_coefficients(), model.sigma(), horizon, ortho)?;
    let mut out = IrfResult {
        names: model.names().to_vec(),
        horizon,
        orthogonalized: ortho,
        responses,
        lower: None,
        upper: None,
        bands_refused: None,
        replications_used: 0,
    };
    match (ci, model) {
        (None, _) => {}
        (Some(_), ModelRef::Vecm(_)) => {
            out.bands_refused = Some("confidence bands are not computed for error-correction models".into());
        }
        (Some(spec), ModelRef::Var(var)) => {
            check_spec(&spec)?;
            let draws: Vec<Vec<DMatrix<f64>>> = bootstrap_models(var, &spec)
                .iter()
                .filter_map(|m| point_irf(&m.coefficients, &m.sigma, horizon, ortho).ok())
                .collect();
            let b = bands(&out.responses, &draws, &spec)?;
            out.lower = Some(b.lower);
            out.upper = Some(b.upper);
            out.replications_used = draws.len();
        }
    }
    Ok(out)
}

impl IrfResult {
    pub fn response(&self, response: usize, impulse: usize) -> Vec<f64> {
        self.responses.iter().map(|m| m[(response, impulse)]).collect()
    }

    /// Long form: impulse, response, step, value, lower, upper.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["impulse", "response", "step", "irf", "lower", "upper"]);
        let k = self.names.len();
        for imp in 0..k {
            for resp in 0..k {
                for h in 0..=self.horizon {
                    t.push([
                        self.names[imp].clone(),
                        self.names[resp].clone(),
                        h.to_string(),
                        num(self.responses[h][(resp, imp)]),
                        opt_num(self.lower.as_ref().map(|l| l[h][(resp, imp)])),
                        opt_num(self.upper.as_ref().map(|u| u[h][(resp, imp)])),
                    ]);
                }
            }
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FevdResult {
    pub names: Vec<String>,
    pub horizon: usize,
    /// Steps 0..=horizon, indexed [response, impulse].
    pub shares: Vec<DMatrix<f64>>,
    pub se: Option<Vec<DMatrix<f64>>>,
    pub lower: Option<Vec<DMatrix<f64>>>,
    pub upper: Option<Vec<DMatrix<f64>>>,
    pub interval: Option<IntervalMethod>,
    pub replications_used: usize,
}

/// Orthogonalised forecast error variance decomposition in the declared
/// variable order.
pub fn fevd(model: &VarModel, horizon: usize, ci: Option<BootstrapSpec>) -> Result<FevdResult> {
    let shares = point_fevd(&model.coefficients, &model.sigma, horizon)?;
    let mut out = FevdResult {
        names: model.names.clone(),
        horizon,
        shares,
        se: None,
        lower: None,
        upper: None,
        interval: None,
        replications_used: 0,
    };
    if let Some(spec) = ci {
        check_spec(&spec)?;
        let draws: Vec<Vec<DMatrix<f64>>> = bootstrap_models(model, &spec)
            .iter()
            .filter_map(|m| point_fevd(&m.coefficients, &m.sigma, horizon).ok())
            .collect();
        let b = bands(&out.shares, &draws, &spec)?;
        out.se = Some(b.se);
        out.lower = Some(b.lower);
        out.upper = Some(b.upper);
        out.interval = Some(spec.interval);
        out.replications_used = draws.len();
    }
    Ok(out)
}

impl FevdResult {
    pub fn share(&self, response: usize, impulse: usize) -> Vec<f64> {
        self.shares.iter().map(|m| m[(response, impulse)]).collect()
    }

    /// Step table for one impulse/response pair.
    pub fn pair_table(&self, impulse: usize, response: usize) -> Table {
        let mut t = Table::new(["step", "fevd", "se", "lower", "upper"]);
        for h in 0..=self.horizon {
            t.push([
                h.to_string(),
                num(self.shares[h][(response, impulse)]),
                opt_num(self.se.as_ref().map(|s| s[h][(response, impulse)])),
                opt_num(self.lower.as_ref().map(|s| s[h][(response, impulse)])),
                opt_num(self.upper.as_ref().map(|s| s[h][(response, impulse)])),
            ]);
        }
        t
    }

    /// Long form over all pairs: impulse, response, step, fevd, se, lower, upper.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["impulse", "response", "step", "fevd", "se", "lower", "upper"]);
        let k = self.names.len();
        for imp in 0..k {
            for resp in 0..k {
                for row in self.pair_table(imp, resp).rows {
                    let mut full = vec![self.names[imp].clone(), self.names[resp].clone()];
                    full.extend(row);
                    t.push(full);
                }
            }
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multivar::{fit_var, fit_vecm, DetSpec, MultiSeries};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn simulate(a: &[DMatrix<f64>], t: usize, seed: u64) -> MultiSeries {
        let k = a[0].nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = DMatrix::zeros(t, k);
        for i in 0..t {
            let mut next = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
            for (l, al) in a.iter().enumerate() {
                if i > l {
                    next += al * y.row(i - l - 1).transpose();
                }
            }
            y.set_row(i, &next.transpose());
        }
        MultiSeries::new((0..k).map(|j| format!("v{j}")).collect(), y).unwrap()
    }

    #[test]
    fn diagonal_closed_form() {
        let a = vec![DMatrix::from_diagonal(&DVector::from_vec(vec![0.7, -0.4]))];
        let sigma = DMatrix::identity(2, 2);
        let irf = point_irf(&a, &sigma, 12, true).unwrap();
        for (h, m) in irf.iter().enumerate() {
            assert!((m[(0, 0)] - 0.7f64.powi(h as i32)).abs() < 1e-10);
            assert!((m[(1, 1)] - (-0.4f64).powi(h as i32)).abs() < 1e-10);
            assert_eq!(m[(0, 1)], 0.0);
            assert_eq!(m[(1, 0)], 0.0);
        }
        let f = point_fevd(&a, &sigma, 6).unwrap();
        for step in 1..=6 {
            assert!((f[step][(0, 0)] - 1.0).abs() < 1e-12 && f[step][(0, 1)] == 0.0);
        }
    }

    #[test]
    fn last_ordered_impulse_has_no_early_share() {
        let a = vec![
            DMatrix::from_row_slice(2, 2, &[0.4, 0.3, 0.1, 0.3]),
            DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.0, 0.1]),
        ];
        let m = fit_var(&simulate(&a, 300, 4), 2).unwrap();
        let f = fevd(&m, 8, None).unwrap();
        let share = f.share(0, 1);
        assert_eq!(share[0], 0.0);
        assert!(share[1].abs() < 1e-15);
        assert!(share[2] > 0.0);
        for step in 1..=8 {
            for r in 0..2 {
                assert!((f.shares[step].row(r).sum() - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn stable_responses_die_out() {
        let a = vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.4, -0.3, 0.6])];
        let m = fit_var(&simulate(&a, 200, 9), 1).unwrap();
        assert!(m.is_stable());
        let irf = impulse_response((&m).into(), 200, true, None).unwrap();
        assert!(irf.responses[200].amax() < 1e-6);
    }

    #[test]
    fn bootstrap_is_deterministic_and_brackets_the_estimate() {
        let a = vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.2, 0.0, 0.4])];
        let m = fit_var(&simulate(&a, 120, 2), 1).unwrap();
        let spec = BootstrapSpec {
            replications: 60,
            seed: 11,
            interval: IntervalMethod::Percentile,
            ..Default::default()
        };
        let r1 = fevd(&m, 5, Some(spec)).unwrap();
        let r2 = fevd(&m, 5, Some(spec)).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.replications_used, 60);
        let irf = impulse_response((&m).into(), 5, true, Some(spec)).unwrap();
        let (lo, hi) = (irf.lower.as_ref().unwrap(), irf.upper.as_ref().unwrap());
        assert!(lo[1][(0, 0)] < irf.responses[1][(0, 0)] && irf.responses[1][(0, 0)] < hi[1][(0, 0)]);
        assert_eq!(r1.pair_table(1, 0).rows.len(), 6);
    }

    #[test]
    fn vecm_bands_are_refused() {
        let data = simulate(&[DMatrix::identity(2, 2)], 80, 3);
        let m = fit_vecm(&data, 2, 1, DetSpec::Constant).unwrap();
        let irf = impulse_response((&m).into(), 10, true, Some(BootstrapSpec::default())).unwrap();
        assert!(irf.lower.is_none());
        assert!(irf.bands_refused.is_some());
        assert_eq!(irf.responses.len(), 11);
    }
}
