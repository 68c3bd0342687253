use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pvalue::{Censoring, PValue};

/// Smallest p-value reported as a number; anything below is shown as `<2.2e-16`.
pub const REPORTABLE_P_FLOOR: f64 = 2.2e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d_plus: f64,
    pub p_value: PValue,
    pub m: usize,
    pub n: usize,
}

fn sorted(sample: &[f64], what: &str) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::InvalidInput(format!("{what} is empty")));
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput(format!("{what} contains NaN")));
    }
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Largest value of F_a(x) − F_b(x) over the pooled sample points.
fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    let (m, n) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut best = 0.0f64;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max(i as f64 / m - j as f64 / n);
    }
    best
}

/// Asymptotic p-value exp(−2 D² mn/(m+n)) of the one-sided statistic,
/// censored below [`REPORTABLE_P_FLOOR`].
pub fn dominance_pvalue(d_plus: f64, m: usize, n: usize) -> PValue {
    let p = (-2.0 * d_plus * d_plus * (m as f64 * n as f64) / (m + n) as f64).exp();
    if p < REPORTABLE_P_FLOOR {
        PValue {
            value: p,
            censoring: Censoring::BelowReportable(REPORTABLE_P_FLOOR),
        }
    } else {
        PValue::exact(p)
    }
}

/// One-sided two-sample test with alternative F_a > F_b somewhere, i.e. `a`
/// tends to lie below `b`.
pub fn ks_dominance(sample_a: &[f64], sample_b: &[f64]) -> Result<KsResult> {
    let a = sorted(sample_a, "first sample")?;
    let b = sorted(sample_b, "second sample")?;
    let d = sup_diff(&a, &b);
    let (m, n) = (a.len(), b.len());
    let p_value = dominance_pvalue(d, m, n);
    Ok(KsResult { d_plus: d, p_value, m, n })
}

/// Two-sided statistic sup |F_a − F_b|.
pub fn ks_two_sided(sample_a: &[f64], sample_b: &[f64]) -> Result<f64> {
    let a = sorted(sample_a, "first sample")?;
    let b = sorted(sample_b, "second sample")?;
    Ok(sup_diff(&a, &b).max(sup_diff(&b, &a)))
}
