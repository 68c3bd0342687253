use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::critical::{self, fuller_pvalue, kpss_pvalue, FullerTable};
use crate::error::{Error, Result};
use crate::linalg::check_full_rank;
use crate::pvalue::PValue;
use crate::table::{num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitRootTest {
    Adf,
    Pp,
    Kpss,
}

impl UnitRootTest {
    pub fn name(self) -> &'static str {
        match self {
            UnitRootTest::Adf => "ADF",
            UnitRootTest::Pp => "PP",
            UnitRootTest::Kpss => "KPSS",
        }
    }
}

/// Deterministic terms in the test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelType {
    /// No drift, no trend.
    Type1,
    /// Drift.
    Type2,
    /// Drift and linear trend.
    Type3,
}

impl ModelType {
    pub const ALL: [ModelType; 3] = [ModelType::Type1, ModelType::Type2, ModelType::Type3];

    pub fn number(self) -> u8 {
        match self {
            ModelType::Type1 => 1,
            ModelType::Type2 => 2,
            ModelType::Type3 => 3,
        }
    }

    fn tau_table(self) -> &'static FullerTable {
        match self {
            ModelType::Type1 => &critical::TAU_NONE,
            ModelType::Type2 => &critical::TAU_DRIFT,
            ModelType::Type3 => &critical::TAU_TREND,
        }
    }

    fn rho_table(self) -> &'static FullerTable {
        match self {
            ModelType::Type1 => &critical::RHO_NONE,
            ModelType::Type2 => &critical::RHO_DRIFT,
            ModelType::Type3 => &critical::RHO_TREND,
        }
    }
}

/// Which Phillips-Perron statistic to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PpStatistic {
    #[default]
    ZAlpha,
    ZTau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootReport {
    pub test: UnitRootTest,
    /// `None` for KPSS, which is run for level stationarity only.
    pub model_type: Option<ModelType>,
    pub lag: usize,
    pub statistic: f64,
    pub p_value: PValue,
    /// Observations in the test regression.
    pub n_obs: usize,
    /// PP only: the regression t-ratio before the Z correction.
    pub uncorrected_statistic: Option<f64>,
    pub note: Option<String>,
}

/// Bandwidth rule floor(4 (T/100)^(2/9)).
pub fn newey_west_lag(t: usize) -> Result<usize> {
    if t < 1 {
        return Err(Error::InvalidParameter("series length must be at least 1".into()));
    }
    Ok((4.0 * (t as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize)
}

fn validate(series: &[f64], lag: usize) -> Result<()> {
    if series.len() < lag + 5 {
        return Err(Error::InvalidInput(format!(
            "series of length {} is too short for lag {lag} (need at least {})",
            series.len(),
            lag + 5
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("series contains non-finite values".into()));
    }
    if series.iter().all(|v| *v == series[0]) {
        return Err(Error::ZeroVariance("constant series".into()));
    }
    Ok(())
}

struct DfRegression {
    /// Coefficient on the lagged level, i.e. ρ̂ − 1.
    alpha: f64,
    se_alpha: f64,
    residuals: DVector<f64>,
    /// RSS / (n − k)
    s2: f64,
    n: usize,
}

impl DfRegression {
    fn t_ratio(&self) -> f64 {
        self.alpha / self.se_alpha
    }
}

/// Δy_t on y_{t−1}, deterministic terms and `lag` lagged differences.
fn df_regression(y: &[f64], model: ModelType, lag: usize) -> Result<DfRegression> {
    let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let n = dy.len() - lag;
    let k = 1 + model.number() as usize - 1 + lag;
    if n <= k {
        return Err(Error::InvalidInput(format!("{n} observations for {k} regressors")));
    }
    let x = DMatrix::from_fn(n, k, |i, j| {
        let t = i + lag;
        let mut col = j;
        if col == 0 {
            return y[t];
        }
        col -= 1;
        if model != ModelType::Type1 {
            if col == 0 {
                return 1.0;
            }
            col -= 1;
            if model == ModelType::Type3 {
                if col == 0 {
                    return (t + 1) as f64;
                }
                col -= 1;
            }
        }
        dy[t - 1 - col]
    });
    let target = DVector::from_iterator(n, dy[lag..].iter().copied());
    check_full_rank(&x, "unit-root regression")
        .map_err(|_| Error::Degenerate("deterministic terms leave zero residual variance".into()))?;
    let xtx = x.transpose() * &x;
    let chol = xtx
        .cholesky()
        .ok_or_else(|| Error::Degenerate("singular unit-root regression".into()))?;
    let coef = chol.solve(&(x.transpose() * &target));
    let residuals = &target - &x * &coef;
    let rss = residuals.norm_squared();
    let tss: f64 = target.iter().map(|v| v * v).sum();
    if rss <= 1e-24 * tss.max(1.0) {
        return Err(Error::Degenerate("deterministic terms leave zero residual variance".into()));
    }
    let s2 = rss / (n - k) as f64;
    let xtx_inv = chol.inverse();
    Ok(DfRegression {
        alpha: coef[0],
        se_alpha: (s2 * xtx_inv[(0, 0)]).sqrt(),
        residuals,
        s2,
        n,
    })
}

/// γ₀ and the Bartlett-weighted long-run variance, both with divisor n.
fn long_run_variance(u: &[f64], bandwidth: usize) -> (f64, f64) {
    let n = u.len() as f64;
    let gamma = |j: usize| u[j..].iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / n;
    let g0 = gamma(0);
    let mut lrv = g0;
    for j in 1..=bandwidth.min(u.len() - 1) {
        lrv += 2.0 * (1.0 - j as f64 / (bandwidth as f64 + 1.0)) * gamma(j);
    }
    (g0, lrv)
}

pub fn unit_root_test(series: &[f64], test: UnitRootTest, model_type: ModelType, lag: usize) -> Result<UnitRootReport> {
    match test {
        UnitRootTest::Adf => {
            validate(series, lag)?;
            let reg = df_regression(series, model_type, lag)?;
            let statistic = reg.t_ratio();
            Ok(UnitRootReport {
                test,
                model_type: Some(model_type),
                lag,
                statistic,
                p_value: fuller_pvalue(model_type.tau_table(), reg.n, statistic),
                n_obs: reg.n,
                uncorrected_statistic: None,
                note: None,
            })
        }
        UnitRootTest::Pp => phillips_perron(series, model_type, lag, PpStatistic::default()),
        UnitRootTest::Kpss => kpss(series, lag),
    }
}

/// Phillips-Perron test; `lag` is the Newey-West bandwidth.
pub fn phillips_perron(series: &[f64], model_type: ModelType, lag: usize, statistic: PpStatistic) -> Result<UnitRootReport> {
    validate(series, lag)?;
    let reg = df_regression(series, model_type, 0)?;
    let n = reg.n as f64;
    let (g0, lrv) = long_run_variance(reg.residuals.as_slice(), lag);
    if lrv <= 0.0 {
        return Err(Error::Degenerate("non-positive long-run variance".into()));
    }
    let t = reg.t_ratio();
    let (value, table) = match statistic {
        PpStatistic::ZAlpha => (
            n * reg.alpha - 0.5 * (n * reg.se_alpha).powi(2) / reg.s2 * (lrv - g0),
            model_type.rho_table(),
        ),
        PpStatistic::ZTau => (
            (g0 / lrv).sqrt() * t - 0.5 * (lrv - g0) * n * reg.se_alpha / (lrv.sqrt() * reg.s2.sqrt()),
            model_type.tau_table(),
        ),
    };
    Ok(UnitRootReport {
        test: UnitRootTest::Pp,
        model_type: Some(model_type),
        lag,
        statistic: value,
        p_value: fuller_pvalue(table, reg.n, value),
        n_obs: reg.n,
        uncorrected_statistic: Some(t),
        note: Some(format!(
            "{} statistic; lag is the Newey-West bandwidth",
            match statistic {
                PpStatistic::ZAlpha => "Z(alpha)",
                PpStatistic::ZTau => "Z(t)",
            }
        )),
    })
}

/// KPSS test of level stationarity with Newey-West bandwidth `lag`.
pub fn kpss(series: &[f64], lag: usize) -> Result<UnitRootReport> {
    validate(series, lag)?;
    let t = series.len();
    let mean = series.iter().sum::<f64>() / t as f64;
    let e: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let (_, lrv) = long_run_variance(&e, lag);
    if lrv <= 0.0 {
        return Err(Error::Degenerate("non-positive long-run variance".into()));
    }
    let mut partial = 0.0;
    let mut sum_sq = 0.0;
    for v in &e {
        partial += v;
        sum_sq += partial * partial;
    }
    let statistic = sum_sq / ((t * t) as f64 * lrv);
    Ok(UnitRootReport {
        test: UnitRootTest::Kpss,
        model_type: None,
        lag,
        statistic,
        p_value: kpss_pvalue(statistic),
        n_obs: t,
        uncorrected_statistic: None,
        note: Some("level stationarity null".into()),
    })
}

/// ADF for lags 0..=2 and all three model types, then PP for each type and
/// KPSS, both at `pp_kpss_lag` (defaults to the Newey-West rule).
pub fn unit_root_battery(series: &[f64], pp_kpss_lag: Option<usize>) -> Result<Vec<UnitRootReport>> {
    let bandwidth = match pp_kpss_lag {
        Some(l) => l,
        None => newey_west_lag(series.len())?,
    };
    let mut out = Vec::new();
    for model in ModelType::ALL {
        for lag in 0..=2 {
            out.push(unit_root_test(series, UnitRootTest::Adf, model, lag)?);
        }
    }
    for model in ModelType::ALL {
        out.push(phillips_perron(series, model, bandwidth, PpStatistic::default())?);
    }
    out.push(kpss(series, bandwidth)?);
    Ok(out)
}

/// Rows keyed by (series, test, type, lag).
pub fn battery_table(results: &[(String, Vec<UnitRootReport>)]) -> Table {
    let mut table = Table::new(["series", "test", "type", "lag", "statistic", "p_value", "n_obs"]);
    for (name, reports) in results {
        for r in reports {
            table.push([
                name.clone(),
                r.test.name().to_string(),
                r.model_type.map(|m| m.number().to_string()).unwrap_or_default(),
                r.lag.to_string(),
                num(r.statistic),
                r.p_value.to_string(),
                r.n_obs.to_string(),
            ]);
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn newey_west_rule() {
        assert_eq!(newey_west_lag(22).unwrap(), 2);
        assert_eq!(newey_west_lag(100).unwrap(), 4);
        assert_eq!(newey_west_lag(50).unwrap(), 3);
        assert!(newey_west_lag(0).is_err());
    }

    #[test]
    fn linear_series_with_trend_is_degenerate() {
        let err = unit_root_test(&[1.0, 2.0, 3.0, 4.0, 5.0], UnitRootTest::Adf, ModelType::Type3, 0).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)), "{err}");
    }

    #[test]
    fn preconditions() {
        assert!(unit_root_test(&[1.0, 2.0, 1.0, 2.0], UnitRootTest::Adf, ModelType::Type1, 0).is_err());
        assert!(matches!(
            unit_root_test(&[3.0; 10], UnitRootTest::Kpss, ModelType::Type1, 0),
            Err(Error::ZeroVariance(_))
        ));
        assert!(unit_root_test(&[1.0, f64::NAN, 2.0, 3.0, 1.0, 0.0], UnitRootTest::Pp, ModelType::Type2, 0).is_err());
    }

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn adf_matches_direct_regression() {
        // Type2, lag 1, against an explicit normal-equation solve.
        let e = noise(3, 40);
        let mut y = vec![0.0];
        for v in &e {
            y.push(0.8 * y.last().unwrap() + v);
        }
        let r = unit_root_test(&y, UnitRootTest::Adf, ModelType::Type2, 1).unwrap();
        let dy: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
        let rows: Vec<[f64; 3]> = (1..dy.len()).map(|t| [y[t], 1.0, dy[t - 1]]).collect();
        let target: Vec<f64> = dy[1..].to_vec();
        let x = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
        let b = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * DVector::from_vec(target.clone());
        let resid = DVector::from_vec(target) - &x * &b;
        let s2 = resid.norm_squared() / (rows.len() - 3) as f64;
        let se = (s2 * (x.transpose() * &x).try_inverse().unwrap()[(0, 0)]).sqrt();
        assert!((r.statistic - b[0] / se).abs() < 1e-9);
        assert_eq!(r.n_obs, 39);
    }

    #[test]
    fn pp_shares_the_adf_core() {
        for seed in 0..5 {
            let y: Vec<f64> = noise(seed, 30).iter().scan(0.0, |s, v| { *s += v; Some(*s) }).collect();
            let adf = unit_root_test(&y, UnitRootTest::Adf, ModelType::Type1, 0).unwrap();
            let pp = phillips_perron(&y, ModelType::Type1, 2, PpStatistic::ZTau).unwrap();
            assert!((adf.statistic - pp.uncorrected_statistic.unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn pp_with_zero_bandwidth_is_the_df_statistic() {
        let y: Vec<f64> = noise(9, 50).iter().scan(0.0, |s, v| { *s += v; Some(*s) }).collect();
        let adf = unit_root_test(&y, UnitRootTest::Adf, ModelType::Type2, 0).unwrap();
        let zt = phillips_perron(&y, ModelType::Type2, 0, PpStatistic::ZTau).unwrap();
        assert!((adf.statistic - zt.statistic).abs() < 1e-10);
    }

    #[test]
    fn kpss_hand_computed() {
        // e = [-1.5, -0.5, 0.5, 1.5], partial sums [-1.5, -2, -1.5, 0], S² sum 8.5,
        // lrv at bandwidth 0 = 5/4.
        let r = kpss(&[1.0, 2.0, 3.0, 4.0, 2.5], 0).unwrap();
        assert!(r.statistic > 0.0);
        let r = kpss(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0][..], 0).unwrap();
        // e = ±2.5, ±1.5, ±0.5; partial sums -2.5,-4,-4.5,-4,-2.5,0 → 64.75; γ0 = 17.5/6.
        assert!((r.statistic - 64.75 / (36.0 * 17.5 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn battery_shape() {
        let y: Vec<f64> = noise(1, 22).iter().scan(0.0, |s, v| { *s += v; Some(*s) }).collect();
        let b = unit_root_battery(&y, None).unwrap();
        assert_eq!(b.len(), 13);
        assert!(b[9..12].iter().all(|r| r.test == UnitRootTest::Pp && r.lag == 2));
        assert_eq!(b[12].test, UnitRootTest::Kpss);
        let t = battery_table(&[("x".into(), b)]);
        assert_eq!(t.rows.len(), 13);
        assert_eq!(t.rows[12][2], "");
    }

    proptest::proptest! {
        #[test]
        fn kpss_positive(v in proptest::collection::vec(-100.0f64..100.0, 6..40), lag in 0usize..2) {
            proptest::prop_assume!(v.iter().any(|x| (x - v[0]).abs() > 1e-6));
            let r = kpss(&v, lag).unwrap();
            proptest::prop_assert!(r.statistic > 0.0);
        }
    }
}
