//! Lookup tables for unit-root p-values.
//!
//! Dickey-Fuller percentiles from Fuller (1976/1996), tables 8.5.1 and 8.5.2,
//! rows indexed by sample size, columns by lower-tail probability. P-values
//! are interpolated linearly first in sample size, then in the statistic, and
//! censored to [0.01, 0.99] outside the table.

use crate::pvalue::PValue;

pub const FULLER_SAMPLE_SIZES: [f64; 6] = [25.0, 50.0, 100.0, 250.0, 500.0, 100_000.0];
pub const FULLER_PROBABILITIES: [f64; 8] = [0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99];

pub type FullerTable = [[f64; 8]; 6];

/// τ, no deterministic terms.
pub const TAU_NONE: FullerTable = [
    [-2.66, -2.26, -1.95, -1.60, 0.92, 1.33, 1.70, 2.16],
    [-2.62, -2.25, -1.95, -1.61, 0.91, 1.31, 1.66, 2.08],
    [-2.60, -2.24, -1.95, -1.61, 0.90, 1.29, 1.64, 2.03],
    [-2.58, -2.23, -1.95, -1.62, 0.89, 1.29, 1.63, 2.01],
    [-2.58, -2.23, -1.95, -1.62, 0.89, 1.28, 1.62, 2.00],
    [-2.58, -2.23, -1.95, -1.62, 0.89, 1.28, 1.62, 2.00],
];

/// τ_μ, constant.
pub const TAU_DRIFT: FullerTable = [
    [-3.75, -3.33, -3.00, -2.63, -0.37, 0.00, 0.34, 0.72],
    [-3.58, -3.22, -2.93, -2.60, -0.40, -0.03, 0.29, 0.66],
    [-3.51, -3.17, -2.89, -2.58, -0.42, -0.05, 0.26, 0.63],
    [-3.46, -3.14, -2.88, -2.57, -0.42, -0.06, 0.24, 0.62],
    [-3.44, -3.13, -2.87, -2.57, -0.43, -0.07, 0.24, 0.61],
    [-3.43, -3.12, -2.86, -2.57, -0.44, -0.07, 0.23, 0.60],
];

/// τ_τ, constant and linear trend.
pub const TAU_TREND: FullerTable = [
    [-4.38, -3.95, -3.60, -3.24, -1.14, -0.80, -0.50, -0.15],
    [-4.15, -3.80, -3.50, -3.18, -1.19, -0.87, -0.58, -0.24],
    [-4.04, -3.73, -3.45, -3.15, -1.22, -0.90, -0.62, -0.28],
    [-3.99, -3.69, -3.43, -3.13, -1.23, -0.92, -0.64, -0.31],
    [-3.98, -3.68, -3.42, -3.13, -1.24, -0.93, -0.65, -0.32],
    [-3.96, -3.66, -3.41, -3.12, -1.25, -0.94, -0.66, -0.33],
];

/// n(ρ̂ − 1), no deterministic terms.
pub const RHO_NONE: FullerTable = [
    [-11.9, -9.3, -7.3, -5.3, 1.01, 1.40, 1.79, 2.28],
    [-12.9, -9.9, -7.7, -5.5, 0.97, 1.35, 1.70, 2.16],
    [-13.3, -10.2, -7.9, -5.6, 0.95, 1.31, 1.65, 2.09],
    [-13.6, -10.3, -8.0, -5.7, 0.93, 1.28, 1.62, 2.04],
    [-13.7, -10.4, -8.0, -5.7, 0.93, 1.28, 1.61, 2.04],
    [-13.8, -10.5, -8.1, -5.7, 0.93, 1.28, 1.60, 2.03],
];

/// n(ρ̂ − 1), constant.
pub const RHO_DRIFT: FullerTable = [
    [-17.2, -14.6, -12.5, -10.2, -0.76, 0.01, 0.65, 1.40],
    [-18.9, -15.7, -13.3, -10.7, -0.81, -0.07, 0.53, 1.22],
    [-19.8, -16.3, -13.7, -11.0, -0.83, -0.10, 0.47, 1.14],
    [-20.3, -16.6, -14.0, -11.2, -0.84, -0.12, 0.43, 1.09],
    [-20.5, -16.8, -14.0, -11.2, -0.84, -0.13, 0.42, 1.06],
    [-20.7, -16.9, -14.1, -11.3, -0.85, -0.13, 0.41, 1.04],
];

/// n(ρ̂ − 1), constant and linear trend.
pub const RHO_TREND: FullerTable = [
    [-22.5, -19.9, -17.9, -15.6, -3.66, -2.51, -1.53, -0.43],
    [-25.7, -22.4, -19.8, -16.8, -3.71, -2.60, -1.66, -0.65],
    [-27.4, -23.6, -20.7, -17.5, -3.74, -2.62, -1.73, -0.75],
    [-28.4, -24.4, -21.3, -18.0, -3.75, -2.64, -1.78, -0.82],
    [-28.9, -24.8, -21.5, -18.1, -3.76, -2.65, -1.78, -0.84],
    [-29.5, -25.1, -21.8, -18.3, -3.77, -2.66, -1.79, -0.87],
];

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

/// Lower-tail p-value of a Dickey-Fuller-type statistic computed on `n` observations.
pub fn fuller_pvalue(table: &FullerTable, n: usize, statistic: f64) -> PValue {
    let quantiles: Vec<f64> = (0..8)
        .map(|c| {
            let column: Vec<f64> = table.iter().map(|row| row[c]).collect();
            interp(&FULLER_SAMPLE_SIZES, &column, n as f64)
        })
        .collect();
    if statistic <= quantiles[0] {
        PValue::below(FULLER_PROBABILITIES[0])
    } else if statistic >= quantiles[7] {
        PValue::above(FULLER_PROBABILITIES[7])
    } else {
        PValue::exact(interp(&quantiles, &FULLER_PROBABILITIES, statistic))
    }
}

/// Level-stationarity KPSS critical values (Kwiatkowski et al. 1992, table 1).
pub const KPSS_LEVEL_CRITICAL: [f64; 4] = [0.347, 0.463, 0.574, 0.739];
pub const KPSS_LEVEL_PROBABILITIES: [f64; 4] = [0.10, 0.05, 0.025, 0.01];

/// Upper-tail p-value, censored to [0.01, 0.10].
pub fn kpss_pvalue(statistic: f64) -> PValue {
    if statistic <= KPSS_LEVEL_CRITICAL[0] {
        PValue::above(KPSS_LEVEL_PROBABILITIES[0])
    } else if statistic >= KPSS_LEVEL_CRITICAL[3] {
        PValue::below(KPSS_LEVEL_PROBABILITIES[3])
    } else {
        PValue::exact(interp(&KPSS_LEVEL_CRITICAL, &KPSS_LEVEL_PROBABILITIES, statistic))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pvalue::Censoring;

    #[test]
    fn small_sample_values_reported_alongside_the_published_series() {
        // Statistics and p-values of a 22-year annual series (21 usable
        // observations, so the n = 25 row applies).
        let cases = [
            (&TAU_DRIFT, -3.4869, 0.0194),
            (&TAU_TREND, -3.4341, 0.0730),
            (&TAU_TREND, -4.1344, 0.0186),
            (&TAU_NONE, -1.6836, 0.0881),
            (&TAU_NONE, -1.8849, 0.0593),
        ];
        for (table, stat, p) in cases {
            let got = fuller_pvalue(table, 21, stat);
            assert!((got.value - p).abs() < 5e-5, "{stat}: {} vs {p}", got.value);
        }
        let floor = fuller_pvalue(&TAU_DRIFT, 21, -4.6838);
        assert_eq!(floor.censoring, Censoring::Below(0.01));
        assert_eq!(floor.to_string(), "<0.01");
    }

    #[test]
    fn kpss_interpolation() {
        assert!((kpss_pvalue(0.5281).value - 0.0353).abs() < 5e-5);
        assert_eq!(kpss_pvalue(0.1).censoring, Censoring::Above(0.10));
        assert_eq!(kpss_pvalue(2.0).censoring, Censoring::Below(0.01));
        assert!((kpss_pvalue(0.463).value - 0.05).abs() < 1e-12);
    }

    #[test]
    fn tables_are_monotone() {
        for table in [&TAU_NONE, &TAU_DRIFT, &TAU_TREND, &RHO_NONE, &RHO_DRIFT, &RHO_TREND] {
            for row in table.iter() {
                assert!(row.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}
