use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::series::MultiSeries;
use super::var::fit_var;
use crate::error::{Error, Result};
use crate::table::{num, Table};

/// Label of the joint test that excludes every other variable.
pub const ALL_LABEL: &str = "ALL";

/// Which lags of the causing variable are restricted in the augmented VAR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrangerMode {
    /// Only the first `p` lags; the `d_max` extra lags stay unrestricted.
    StrictTodaYamamoto,
    /// All `p + d_max` lags.
    #[default]
    AllLags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerRow {
    pub equation: String,
    pub excluded: String,
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Wald tests of zero restrictions in a VAR(p + d_max) in levels.
pub fn granger_wald(data: &MultiSeries, p: usize, d_max: usize, mode: GrangerMode) -> Result<Vec<GrangerRow>> {
    if p < 1 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    let k = data.dim();
    if k < 2 {
        return Err(Error::InvalidInput("Granger tests need at least two variables".into()));
    }
    let model = fit_var(data, p + d_max)?;
    let tested = match mode {
        GrangerMode::StrictTodaYamamoto => p,
        GrangerMode::AllLags => p + d_max,
    };
    let index = |lag: usize, var: usize| 1 + lag * k + var;
    let b = model.coefficient_matrix();
    let mut rows = Vec::new();
    for eq in 0..k {
        let wald = |causes: &[usize]| -> Result<(f64, usize)> {
            let idx: Vec<usize> = causes.iter().flat_map(|&c| (0..tested).map(move |l| index(l, c))).collect();
            let m = idx.len();
            let r = DMatrix::from_fn(m, 1, |i, _| b[(idx[i], eq)]);
            let v = DMatrix::from_fn(m, m, |i, j| model.xtx_inv[(idx[i], idx[j])] * model.sigma[(eq, eq)]);
            let v_inv = v
                .try_inverse()
                .ok_or_else(|| Error::RankDeficient("singular covariance of the restricted coefficients".into()))?;
            Ok(((r.transpose() * v_inv * &r)[(0, 0)], m))
        };
        let mut push = |excluded: String, (chi2, df): (f64, usize)| -> Result<()> {
            let dist = ChiSquared::new(df as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            rows.push(GrangerRow {
                equation: data.names[eq].clone(),
                excluded,
                chi2,
                df,
                p_value: 1.0 - dist.cdf(chi2),
            });
            Ok(())
        };
        let others: Vec<usize> = (0..k).filter(|&c| c != eq).collect();
        for &c in &others {
            push(data.names[c].clone(), wald(&[c])?)?;
        }
        if others.len() > 1 {
            push(ALL_LABEL.to_string(), wald(&others)?)?;
        }
    }
    Ok(rows)
}

pub fn granger_table(rows: &[GrangerRow]) -> Table {
    let mut t = Table::new(["equation", "excluded", "chi2", "df", "p_value"]);
    for r in rows {
        t.push([r.equation.clone(), r.excluded.clone(), num(r.chi2), r.df.to_string(), num(r.p_value)]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn driven(seed: u64, t: usize) -> MultiSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = DMatrix::zeros(t, 2);
        for i in 0..t {
            let x: f64 = StandardNormal.sample(&mut rng);
            let e: f64 = StandardNormal.sample(&mut rng);
            v[(i, 1)] = x;
            v[(i, 0)] = if i == 0 { e } else { 0.8 * v[(i - 1, 1)] + e };
        }
        MultiSeries::new(vec!["y".into(), "x".into()], v).unwrap()
    }

    #[test]
    fn degrees_of_freedom_by_mode() {
        let data = driven(1, 200);
        let all = granger_wald(&data, 2, 1, GrangerMode::AllLags).unwrap();
        assert!(all.iter().all(|r| r.df == 3));
        let strict = granger_wald(&data, 2, 1, GrangerMode::StrictTodaYamamoto).unwrap();
        assert!(strict.iter().all(|r| r.df == 2));
        let y_eq = all.iter().find(|r| r.equation == "y" && r.excluded == "x").unwrap();
        assert!(y_eq.p_value < 1e-6);
    }

    #[test]
    fn three_variables_add_joint_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = DMatrix::from_fn(120, 3, |_, _| StandardNormal.sample(&mut rng));
        let data = MultiSeries::new(vec!["a".into(), "b".into(), "c".into()], v).unwrap();
        let rows = granger_wald(&data, 2, 1, GrangerMode::AllLags).unwrap();
        assert_eq!(rows.len(), 9);
        let all = rows.iter().find(|r| r.equation == "a" && r.excluded == ALL_LABEL).unwrap();
        assert_eq!(all.df, 6);
        assert_eq!(granger_table(&rows).rows.len(), 9);
    }
}
