use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::series::MultiSeries;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, ols};
use crate::table::{num, Table};
use crate::trend_series::{unit_root_test, ModelType, UnitRootReport, UnitRootTest};

/// Deterministic terms in the error-correction model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetSpec {
    None,
    /// Unrestricted constant.
    #[default]
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CointegrationMethod {
    Johansen,
    EngleGranger,
}

/// 5% trace critical values indexed by K − r (1..=5), Osterwald-Lenum (1992).
const TRACE_5PCT_CONSTANT: [f64; 5] = [3.76, 15.41, 29.68, 47.21, 68.52];
const TRACE_5PCT_NONE: [f64; 5] = [3.84, 12.53, 24.31, 39.89, 59.46];

/// 5% critical values of the trace test of rank ≤ r, for r = 0..K−1.
pub fn johansen_trace_critical_5pct(k: usize, det: DetSpec) -> Vec<Option<f64>> {
    let table = match det {
        DetSpec::Constant => &TRACE_5PCT_CONSTANT,
        DetSpec::None => &TRACE_5PCT_NONE,
    };
    (0..k).map(|r| table.get(k - r - 1).copied()).collect()
}

/// Residual-based cointegration critical values (1%, 5%, 10%) for a
/// cointegrating regression with constant on N = 2..=6 variables
/// (Davidson and MacKinnon 1993, table 20.2, asymptotic).
pub fn engle_granger_critical_values(n_vars: usize) -> Option<(f64, f64, f64)> {
    match n_vars {
        2 => Some((-3.90, -3.34, -3.04)),
        3 => Some((-4.29, -3.74, -3.45)),
        4 => Some((-4.64, -4.10, -3.81)),
        5 => Some((-4.96, -4.42, -4.13)),
        6 => Some((-5.25, -4.71, -4.42)),
        _ => None,
    }
}

/// Moment matrices of the reduced-rank regression.
pub(crate) struct RrrCore {
    pub n: usize,
    pub z0: DMatrix<f64>,
    pub z1: DMatrix<f64>,
    pub z2: DMatrix<f64>,
    pub s00: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns, normalised so that v' S11 v = I.
    pub vectors: DMatrix<f64>,
}

/// Δy_t on y_{t−1} after partialling out `p − 1` lagged differences and the
/// deterministic terms.
pub(crate) fn rrr_core(values: &DMatrix<f64>, p: usize, det: DetSpec) -> Result<RrrCore> {
    let (t, k) = (values.nrows(), values.ncols());
    if p < 1 {
        return Err(Error::InvalidParameter("the level VAR needs at least one lag".into()));
    }
    if k < 1 || t <= p {
        return Err(Error::InvalidInput("too few periods".into()));
    }
    let n = t - p;
    let m2 = k * (p - 1) + usize::from(det == DetSpec::Constant);
    if n <= m2 + k {
        return Err(Error::InvalidInput(format!("{t} periods are too few for {p} lags in {k} variables")));
    }
    let diff = |row: usize, col: usize| values[(row, col)] - values[(row - 1, col)];
    let z0 = DMatrix::from_fn(n, k, |i, j| diff(p + i, j));
    let z1 = DMatrix::from_fn(n, k, |i, j| values[(p + i - 1, j)]);
    let z2 = DMatrix::from_fn(n, m2, |i, j| {
        if j < k * (p - 1) {
            diff(p + i - 1 - j / k, j % k)
        } else {
            1.0
        }
    });
    let (r0, r1) = if m2 == 0 {
        (z0.clone(), z1.clone())
    } else {
        (least_squares(&z2, &z0)?.residuals, least_squares(&z2, &z1)?.residuals)
    };
    let nf = n as f64;
    let s00 = r0.transpose() * &r0 / nf;
    let s01 = r0.transpose() * &r1 / nf;
    let s11 = r1.transpose() * &r1 / nf;
    let l = s11
        .clone()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("lagged levels are collinear after partialling out".into()))?
        .l();
    let s00_inv = s00
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("differenced series are collinear".into()))?;
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("lagged levels are collinear".into()))?;
    let m = &l_inv * s01.transpose() * &s00_inv * &s01 * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].clamp(0.0, 1.0 - 1e-15)).collect();
    let w = DMatrix::from_fn(k, k, |i, j| eig.eigenvectors[(i, order[j])]);
    let vectors = l_inv.transpose() * w;
    Ok(RrrCore {
        n,
        z0,
        z1,
        z2,
        s00,
        eigenvalues,
        vectors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohansenResult {
    pub names: Vec<String>,
    /// Lag order of the underlying VAR in levels.
    pub lags: usize,
    pub det: DetSpec,
    pub n_obs: usize,
    /// Ranks 0..=K.
    pub loglik: Vec<f64>,
    pub params: Vec<usize>,
    /// Descending, one per variable.
    pub eigenvalues: Vec<f64>,
    /// Trace statistic for H0: rank ≤ r, r = 0..K−1.
    pub trace: Vec<f64>,
    pub critical_5pct: Vec<Option<f64>>,
    /// First rank whose trace statistic falls below its critical value; K if none does.
    pub selected_rank: usize,
    /// Cointegrating vectors as columns, unnormalised.
    pub vectors: DMatrix<f64>,
}

pub fn johansen(data: &MultiSeries, lags: usize, det: DetSpec) -> Result<JohansenResult> {
    let k = data.dim();
    if k < 2 {
        return Err(Error::InvalidInput("cointegration needs at least two variables".into()));
    }
    let core = rrr_core(&data.values, lags, det)?;
    let nf = core.n as f64;
    let base = -0.5 * nf * (k as f64 * ((2.0 * std::f64::consts::PI).ln() + 1.0) + core.s00.determinant().ln());
    let mut loglik = vec![base];
    for lambda in &core.eigenvalues {
        let prev = *loglik.last().unwrap();
        loglik.push(prev - 0.5 * nf * (1.0 - lambda).ln());
    }
    let m2 = core.z2.ncols();
    let params = (0..=k).map(|r| k * m2 + r * (2 * k - r)).collect();
    let trace: Vec<f64> = (0..k)
        .map(|r| -nf * core.eigenvalues[r..].iter().map(|l| (1.0 - l).ln()).sum::<f64>())
        .collect();
    let critical_5pct = johansen_trace_critical_5pct(k, det);
    let selected_rank = (0..k)
        .find(|&r| matches!(critical_5pct[r], Some(cv) if trace[r] < cv))
        .unwrap_or(k);
    Ok(JohansenResult {
        names: data.names.clone(),
        lags,
        det,
        n_obs: core.n,
        loglik,
        params,
        eigenvalues: core.eigenvalues,
        trace,
        critical_5pct,
        selected_rank,
        vectors: core.vectors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngleGrangerResult {
    pub dependent: String,
    /// Constant first, then the remaining variables in order.
    pub regressors: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub residual_test: UnitRootReport,
    /// (1%, 5%, 10%)
    pub critical_values: (f64, f64, f64),
    pub rejects_at_5pct: bool,
}

/// First variable on a constant and the others, then a Dickey-Fuller test
/// without deterministic terms on the residuals with `adf_lags` lagged
/// differences.
pub fn engle_granger(data: &MultiSeries, adf_lags: usize) -> Result<EngleGrangerResult> {
    let k = data.dim();
    let critical_values = engle_granger_critical_values(k)
        .ok_or_else(|| Error::InvalidInput(format!("Engle-Granger critical values cover 2 to 6 variables, got {k}")))?;
    let t = data.len();
    let x = DMatrix::from_fn(t, k, |i, j| if j == 0 { 1.0 } else { data.values[(i, j)] });
    let y = DVector::from_iterator(t, data.values.column(0).iter().copied());
    let fit = ols(&x, &y)?;
    let mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let residual_test = unit_root_test(fit.residuals.as_slice(), UnitRootTest::Adf, ModelType::Type1, adf_lags)?;
    let mut regressors = vec!["constant".to_string()];
    regressors.extend(data.names[1..].iter().cloned());
    Ok(EngleGrangerResult {
        dependent: data.names[0].clone(),
        regressors,
        coefficients: fit.coef.iter().copied().collect(),
        std_errors: fit.std_errors.iter().copied().collect(),
        r_squared: 1.0 - fit.residuals.norm_squared() / tss,
        n_obs: t,
        rejects_at_5pct: residual_test.statistic < critical_values.1,
        residual_test,
        critical_values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CointegrationReport {
    Johansen(JohansenResult),
    EngleGranger(EngleGrangerResult),
}

/// `lags` is the lag order of the VAR in levels; the Engle-Granger residual
/// test uses `lags − 1` lagged differences to match.
pub fn cointegration(data: &MultiSeries, method: CointegrationMethod, lags: usize, det: DetSpec) -> Result<CointegrationReport> {
    if lags < 1 {
        return Err(Error::InvalidParameter("lags must be at least 1".into()));
    }
    match method {
        CointegrationMethod::Johansen => johansen(data, lags, det).map(CointegrationReport::Johansen),
        CointegrationMethod::EngleGranger => engle_granger(data, lags - 1).map(CointegrationReport::EngleGranger),
    }
}

impl CointegrationReport {
    pub fn to_table(&self) -> Table {
        match self {
            CointegrationReport::Johansen(j) => {
                let mut t = Table::new(["rank", "params", "LL", "eigenvalue", "trace", "crit_5pct", "selected"]);
                for r in 0..=j.eigenvalues.len() {
                    t.push([
                        r.to_string(),
                        j.params[r].to_string(),
                        num(j.loglik[r]),
                        if r == 0 { String::new() } else { num(j.eigenvalues[r - 1]) },
                        j.trace.get(r).map(|v| num(*v)).unwrap_or_default(),
                        j.critical_5pct.get(r).copied().flatten().map(num).unwrap_or_default(),
                        if r == j.selected_rank { "*".into() } else { String::new() },
                    ]);
                }
                t
            }
            CointegrationReport::EngleGranger(e) => {
                let mut t = Table::new(["step", "term", "estimate", "se", "crit_1pct", "crit_5pct", "crit_10pct"]);
                for (i, name) in e.regressors.iter().enumerate() {
                    t.push([
                        "first".to_string(),
                        name.clone(),
                        num(e.coefficients[i]),
                        num(e.std_errors[i]),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]);
                }
                let (c1, c5, c10) = e.critical_values;
                t.push([
                    "second".to_string(),
                    format!("DF type 1 lag {}", e.residual_test.lag),
                    num(e.residual_test.statistic),
                    String::new(),
                    num(c1),
                    num(c5),
                    num(c10),
                ]);
                t
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn published_critical_values() {
        let cv = johansen_trace_critical_5pct(3, DetSpec::Constant);
        assert_eq!(cv, vec![Some(29.68), Some(15.41), Some(3.76)]);
        assert_eq!(johansen_trace_critical_5pct(2, DetSpec::Constant), vec![Some(15.41), Some(3.76)]);
        assert_eq!(engle_granger_critical_values(3), Some((-4.29, -3.74, -3.45)));
        assert_eq!(engle_granger_critical_values(7), None);
    }

    fn pair(seed: u64, t: usize) -> MultiSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        let mut v = DMatrix::zeros(t, 2);
        for i in 0..t {
            x += rng.sample::<f64, _>(StandardNormal);
            let e: f64 = StandardNormal.sample(&mut rng);
            v[(i, 0)] = 2.0 * x + e;
            v[(i, 1)] = x;
        }
        MultiSeries::new(vec!["y".into(), "x".into()], v).unwrap()
    }

    #[test]
    fn trace_and_loglik_are_consistent() {
        let j = johansen(&pair(4, 200), 2, DetSpec::Constant).unwrap();
        assert!(j.trace.windows(2).all(|w| w[0] >= w[1]));
        assert!(j.eigenvalues.iter().all(|l| (0.0..1.0).contains(l)));
        for r in 0..2 {
            assert!((j.trace[r] - 2.0 * (j.loglik[2] - j.loglik[r])).abs() < 1e-8);
        }
        assert_eq!(j.params, vec![6, 9, 10]);
        assert!(j.trace[0] > 15.41);
        assert!(j.selected_rank >= 1);
    }

    #[test]
    fn engle_granger_on_cointegrated_pair() {
        let e = engle_granger(&pair(5, 200), 0).unwrap();
        assert!(e.rejects_at_5pct);
        assert!((e.coefficients[1] - 2.0).abs() < 0.1);
    }

    #[test]
    fn single_variable_is_rejected() {
        let s = MultiSeries::new(vec!["a".into()], DMatrix::from_fn(30, 1, |i, _| (i as f64).sin())).unwrap();
        assert!(johansen(&s, 2, DetSpec::Constant).is_err());
        assert!(engle_granger(&s, 0).is_err());
    }
}
