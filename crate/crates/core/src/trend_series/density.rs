use crate::error::{Error, Result};
use crate::linalg::{quantile, sample_sd};

pub const KDE_GRID_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    Pdf,
    Cdf,
}

/// Fraction of `sample` at or below `x`.
pub fn ecdf_at(sample: &[f64], x: f64) -> f64 {
    sample.iter().filter(|v| **v <= x).count() as f64 / sample.len() as f64
}

/// `Pdf`: Gaussian kernel estimate with Silverman's bandwidth on a 512-point
/// grid spanning three bandwidths beyond the data. `Cdf`: the empirical step
/// function evaluated at each distinct sample value.
pub fn density_curves(sample: &[f64], kind: DensityKind) -> Result<Vec<(f64, f64)>> {
    if sample.len() < 2 {
        return Err(Error::InvalidInput("density needs at least two observations".into()));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("sample contains non-finite values".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    match kind {
        DensityKind::Cdf => {
            let mut out: Vec<(f64, f64)> = Vec::new();
            let n = sorted.len() as f64;
            for (i, &x) in sorted.iter().enumerate() {
                if sorted.get(i + 1) != Some(&x) {
                    out.push((x, (i + 1) as f64 / n));
                }
            }
            Ok(out)
        }
        DensityKind::Pdf => {
            let h = silverman(&sorted)?;
            let (lo, hi) = (sorted[0] - 3.0 * h, sorted[sorted.len() - 1] + 3.0 * h);
            let step = (hi - lo) / (KDE_GRID_POINTS - 1) as f64;
            let norm = 1.0 / (sorted.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
            Ok((0..KDE_GRID_POINTS)
                .map(|g| {
                    let x = lo + g as f64 * step;
                    let d: f64 = sorted.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum();
                    (x, d * norm)
                })
                .collect())
        }
    }
}

/// 0.9 · min(sd, IQR/1.34) · n^(−1/5), falling back to whichever scale is positive.
fn silverman(sorted: &[f64]) -> Result<f64> {
    let sd = sample_sd(sorted);
    let iqr = (quantile(sorted, 0.75) - quantile(sorted, 0.25)) / 1.34;
    let scale = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => return Err(Error::ZeroVariance("all observations are equal".into())),
    };
    Ok(0.9 * scale * (sorted.len() as f64).powf(-0.2))
}
