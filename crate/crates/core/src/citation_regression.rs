//! Citations-per-year regressions on log topic prevalence with year×journal
//! fixed effects, author dummies and cluster-robust standard errors.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::table::{num, Table};

/// Floor applied to topic shares before taking logs.
pub const SHARE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CitationTransform {
    /// log(c/y); papers without citations are dropped.
    #[serde(rename = "log_cy")]
    LogCY,
    /// log(c/y + 1)
    #[serde(rename = "log1p_cy")]
    Log1pCY,
    /// asinh(c/y)
    Ihs,
}

impl CitationTransform {
    pub fn name(self) -> &'static str {
        match self {
            CitationTransform::LogCY => "log(c/y)",
            CitationTransform::Log1pCY => "log(c/y+1)",
            CitationTransform::Ihs => "asinh(c/y)",
        }
    }
}

impl std::str::FromStr for CitationTransform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logcy" | "log" => Ok(CitationTransform::LogCY),
            "log1pcy" | "log1p" => Ok(CitationTransform::Log1pCY),
            "ihs" | "asinh" => Ok(CitationTransform::Ihs),
            _ => Err(Error::Config(format!("unknown citation transform {s:?} (expected logcy, log1pcy or ihs)"))),
        }
    }
}

/// Transformed citations per year, or `None` when the observation must be
/// dropped (log of zero).
pub fn transform_citations(citations: u64, years_since_pub: f64, mode: CitationTransform) -> Result<Option<f64>> {
    if !(years_since_pub > 0.0) || !years_since_pub.is_finite() {
        return Err(Error::InvalidInput(format!("years since publication must be positive, got {years_since_pub}")));
    }
    let cy = citations as f64 / years_since_pub;
    Ok(match mode {
        CitationTransform::LogCY if citations == 0 => None,
        CitationTransform::LogCY => Some(cy.ln()),
        CitationTransform::Log1pCY => Some(cy.ln_1p()),
        CitationTransform::Ihs => Some((cy + (cy * cy + 1.0).sqrt()).ln()),
    })
}

/// `reference_year − year + 1`.
pub fn years_since_publication(year: i32, reference_year: i32) -> Result<f64> {
    if year > reference_year {
        return Err(Error::InvalidInput(format!("publication year {year} is after the reference year {reference_year}")));
    }
    Ok((reference_year - year + 1) as f64)
}

/// One paper as it enters the regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationRow {
    pub citations: u64,
    pub year: i32,
    pub journal: String,
    pub open_access: bool,
    pub author: String,
    /// Topic prevalence for every topic.
    pub shares: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub topic: usize,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Two-sided p-values from t with G − 1 degrees of freedom.
    pub p_values: Vec<f64>,
    pub n_obs: usize,
    pub dropped_rows: usize,
    pub n_clusters: usize,
    pub r_squared: f64,
    pub within_r_squared: f64,
    pub fixed_effects: String,
    pub transform: CitationTransform,
    /// Dummies removed because they were collinear with the fixed effects or
    /// with earlier columns.
    pub dropped_regressors: Vec<String>,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.coefficients[i], self.std_errors[i]))
    }
}

pub const TOPIC_REGRESSOR: &str = "log_topic";
pub const OPEN_ACCESS_REGRESSOR: &str = "open_access";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationModelOptions {
    pub transform: CitationTransform,
    pub reference_year: i32,
    pub author_effects: bool,
}

/// Response and design after dropping rows, before any demeaning.
struct Design {
    y: Vec<f64>,
    columns: Vec<(String, Vec<f64>)>,
    cells: Vec<usize>,
    n_cells: usize,
    dropped_rows: usize,
}

fn build_design(rows: &[CitationRow], topic: usize, opts: &CitationModelOptions) -> Result<Design> {
    let mut y = Vec::new();
    let mut kept = Vec::new();
    for row in rows {
        let share = *row
            .shares
            .get(topic)
            .ok_or_else(|| Error::InvalidInput(format!("row has {} topic shares, topic {} requested", row.shares.len(), topic + 1)))?;
        if !(share >= 0.0) {
            return Err(Error::InvalidInput(format!("topic share {share} is not a probability")));
        }
        let ys = years_since_publication(row.year, opts.reference_year)?;
        if let Some(v) = transform_citations(row.citations, ys, opts.transform)? {
            y.push(v);
            kept.push(row);
        }
    }
    let mut cell_index: BTreeMap<(i32, &str), usize> = BTreeMap::new();
    for row in &kept {
        let next = cell_index.len();
        cell_index.entry((row.year, row.journal.as_str())).or_insert(next);
    }
    let cells: Vec<usize> = kept.iter().map(|r| cell_index[&(r.year, r.journal.as_str())]).collect();
    let mut columns = vec![
        (
            TOPIC_REGRESSOR.to_string(),
            kept.iter().map(|r| r.shares[topic].max(SHARE_FLOOR).ln()).collect(),
        ),
        (
            OPEN_ACCESS_REGRESSOR.to_string(),
            kept.iter().map(|r| if r.open_access { 1.0 } else { 0.0 }).collect(),
        ),
    ];
    if opts.author_effects {
        let authors: BTreeSet<&str> = kept.iter().map(|r| r.author.as_str()).collect();
        for a in authors {
            columns.push((format!("author:{a}"), kept.iter().map(|r| if r.author == a { 1.0 } else { 0.0 }).collect()));
        }
    }
    Ok(Design {
        y,
        columns,
        cells,
        n_cells: cell_index.len(),
        dropped_rows: rows.len() - kept.len(),
    })
}

fn demean(v: &[f64], cells: &[usize], n_cells: usize) -> Vec<f64> {
    let mut sums = vec![0.0; n_cells];
    let mut counts = vec![0usize; n_cells];
    for (x, &c) in v.iter().zip(cells) {
        sums[c] += x;
        counts[c] += 1;
    }
    v.iter().zip(cells).map(|(x, &c)| x - sums[c] / counts[c] as f64).collect()
}

/// Relative squared norm below which a demeaned column counts as zero or as
/// collinear with earlier columns.
const COLLINEAR_TOL: f64 = 1e-10;

/// OLS with year×journal effects absorbed by the within transformation.
pub fn fit_citation_model(rows: &[CitationRow], topic: usize, opts: &CitationModelOptions) -> Result<RegressionFit> {
    let design = build_design(rows, topic, opts)?;
    let n = design.y.len();
    if design.n_cells < 2 {
        return Err(Error::InvalidInput(format!("{} cluster(s); at least two year×journal cells are needed", design.n_cells)));
    }
    let y_w = demean(&design.y, &design.cells, design.n_cells);
    let mut names = Vec::new();
    let mut kept_cols: Vec<Vec<f64>> = Vec::new();
    let mut orthonormal: Vec<Vec<f64>> = Vec::new();
    let mut dropped_regressors = Vec::new();
    for (i, (name, raw)) in design.columns.iter().enumerate() {
        let col = demean(raw, &design.cells, design.n_cells);
        let raw_norm: f64 = raw.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
        let mut resid = col.clone();
        for q in &orthonormal {
            let dot: f64 = resid.iter().zip(q).map(|(a, b)| a * b).sum();
            resid.iter_mut().zip(q).for_each(|(r, b)| *r -= dot * b);
        }
        let norm2: f64 = resid.iter().map(|v| v * v).sum();
        if norm2 <= COLLINEAR_TOL * raw_norm {
            if i == 0 {
                return Err(Error::ZeroVariance(format!(
                    "topic {} prevalence has no variation within year×journal cells",
                    topic + 1
                )));
            }
            dropped_regressors.push(name.clone());
            continue;
        }
        let norm = norm2.sqrt();
        orthonormal.push(resid.into_iter().map(|v| v / norm).collect());
        names.push(name.clone());
        kept_cols.push(col);
    }
    let k = kept_cols.len();
    if n <= k + design.n_cells {
        return Err(Error::InvalidInput(format!(
            "{n} observations for {k} regressors and {} fixed effects",
            design.n_cells
        )));
    }
    let x = DMatrix::from_fn(n, k, |i, j| kept_cols[j][i]);
    let yv = DVector::from_vec(y_w.clone());
    let xtx = x.transpose() * &x;
    let xtx_inv = xtx
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("citation design".into()))?
        .inverse();
    let beta = &xtx_inv * x.transpose() * &yv;
    let resid = &yv - &x * &beta;

    let g = design.n_cells;
    let mut meat = DMatrix::zeros(k, k);
    let mut scores = vec![DVector::zeros(k); g];
    for i in 0..n {
        scores[design.cells[i]] += x.row(i).transpose() * resid[i];
    }
    for s in &scores {
        meat += s * s.transpose();
    }
    let correction = (g as f64 / (g - 1) as f64) * ((n - 1) as f64 / (n - k) as f64);
    let vcov = &xtx_inv * meat * &xtx_inv * correction;
    let std_errors: Vec<f64> = (0..k).map(|j| vcov[(j, j)].max(0.0).sqrt()).collect();
    let t_dist = StudentsT::new(0.0, 1.0, (g - 1) as f64).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let p_values = beta
        .iter()
        .zip(&std_errors)
        .map(|(b, se)| if *se > 0.0 { 2.0 * (1.0 - t_dist.cdf((b / se).abs())) } else { f64::NAN })
        .collect();

    let rss = resid.norm_squared();
    let y_mean = design.y.iter().sum::<f64>() / n as f64;
    let tss: f64 = design.y.iter().map(|v| (v - y_mean).powi(2)).sum();
    let tss_within: f64 = y_w.iter().map(|v| v * v).sum();
    Ok(RegressionFit {
        topic,
        names,
        coefficients: beta.iter().copied().collect(),
        std_errors,
        p_values,
        n_obs: n,
        dropped_rows: design.dropped_rows,
        n_clusters: g,
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { f64::NAN },
        within_r_squared: if tss_within > 0.0 { 1.0 - rss / tss_within } else { f64::NAN },
        fixed_effects: "year×journal".into(),
        transform: opts.transform,
        dropped_regressors,
    })
}

/// One fit per topic and transform, in topic-major order.
pub fn fit_all_topics(rows: &[CitationRow], k: usize, transforms: &[CitationTransform], opts: &CitationModelOptions) -> Vec<Result<RegressionFit>> {
    let jobs: Vec<(usize, CitationTransform)> = (0..k).flat_map(|t| transforms.iter().map(move |m| (t, *m))).collect();
    jobs.par_iter()
        .map(|&(t, m)| fit_citation_model(rows, t, &CitationModelOptions { transform: m, ..*opts }))
        .collect()
}

/// Topic coefficient per topic and transform, one row each.
pub fn regression_table(fits: &[RegressionFit]) -> Table {
    let mut table = Table::new(["topic", "transform", "coefficient", "se", "p_value", "n", "dropped", "clusters", "r2", "within_r2"]);
    for f in fits {
        let (b, se) = f.coefficient(TOPIC_REGRESSOR).unwrap_or((f64::NAN, f64::NAN));
        let p = f.names.iter().position(|n| n == TOPIC_REGRESSOR).map(|i| f.p_values[i]).unwrap_or(f64::NAN);
        table.push([
            (f.topic + 1).to_string(),
            f.transform.name().to_string(),
            num(b),
            num(se),
            num(p),
            f.n_obs.to_string(),
            f.dropped_rows.to_string(),
            f.n_clusters.to_string(),
            num(f.r_squared),
            num(f.within_r_squared),
        ]);
    }
    table
}

/// Joins records with their document-topic proportions.
pub fn citation_rows(records: &[crate::corpus::DocumentRecord], theta: &DMatrix<f64>) -> Result<Vec<CitationRow>> {
    if records.len() != theta.nrows() {
        return Err(Error::InvalidInput(format!("{} records but theta has {} rows", records.len(), theta.nrows())));
    }
    Ok(records
        .iter()
        .enumerate()
        .map(|(d, r)| CitationRow {
            citations: r.citation_count,
            year: r.year,
            journal: r.journal.clone(),
            open_access: r.open_access,
            author: r.corresponding_author.clone().unwrap_or_default(),
            shares: theta.row(d).iter().copied().collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn transforms() {
        assert_eq!(transform_citations(0, 3.0, CitationTransform::Ihs).unwrap(), Some(0.0));
        let v = transform_citations(3, 4.0, CitationTransform::Ihs).unwrap().unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-15);
        assert_eq!(transform_citations(0, 3.0, CitationTransform::LogCY).unwrap(), None);
        assert!((transform_citations(6, 3.0, CitationTransform::LogCY).unwrap().unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(transform_citations(1, 0.0, CitationTransform::Ihs).is_err());
        assert_eq!(years_since_publication(2021, 2021).unwrap(), 1.0);
        assert!(years_since_publication(2022, 2021).is_err());
    }

    #[test]
    fn ihs_dominates_log1p() {
        assert_eq!(
            transform_citations(0, 1.0, CitationTransform::Ihs).unwrap(),
            transform_citations(0, 1.0, CitationTransform::Log1pCY).unwrap()
        );
        for c in 1..2000u64 {
            let ihs = transform_citations(c, 7.0, CitationTransform::Ihs).unwrap().unwrap();
            let lp = transform_citations(c, 7.0, CitationTransform::Log1pCY).unwrap().unwrap();
            assert!(ihs > lp, "c = {c}");
        }
    }

    fn synthetic_rows(seed: u64, n: usize, slope: f64) -> Vec<CitationRow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let journals = ["A", "B", "C"];
        let authors: Vec<String> = (0..15).map(|i| format!("au{i}")).collect();
        let author_fx: Vec<f64> = (0..15).map(|_| rng.gen_range(-0.5..0.5)).collect();
        (0..n)
            .map(|_| {
                let year = rng.gen_range(2005..2015);
                let j = rng.gen_range(0..3);
                let a = rng.gen_range(0..15);
                let share: f64 = rng.gen_range(0.01..0.6);
                let oa = rng.gen_bool(0.3);
                let fe = 0.1 * (year - 2005) as f64 + 0.4 * j as f64;
                let target = 3.0 + slope * share.ln() + 0.2 * f64::from(u8::from(oa)) + author_fx[a] + fe + noise.sample(&mut rng);
                let cy = target.sinh();
                let ys = (2021 - year + 1) as f64;
                CitationRow {
                    citations: (cy * ys).round() as u64,
                    year,
                    journal: journals[j].into(),
                    open_access: oa,
                    author: authors[a].clone(),
                    shares: vec![share, 1.0 - share],
                }
            })
            .collect()
    }

    fn opts(transform: CitationTransform) -> CitationModelOptions {
        CitationModelOptions {
            transform,
            reference_year: 2021,
            author_effects: true,
        }
    }

    /// Dummy-expanded OLS: kept regressors plus one dummy per cell, no intercept.
    fn dummy_oracle(rows: &[CitationRow], fit: &RegressionFit, transform: CitationTransform) -> (Vec<f64>, f64) {
        let kept: Vec<(&CitationRow, f64)> = rows
            .iter()
            .filter_map(|r| {
                transform_citations(r.citations, (2021 - r.year + 1) as f64, transform)
                    .unwrap()
                    .map(|v| (r, v))
            })
            .collect();
        let cells: BTreeSet<(i32, String)> = kept.iter().map(|(r, _)| (r.year, r.journal.clone())).collect();
        let cells: Vec<(i32, String)> = cells.into_iter().collect();
        let k = fit.names.len();
        let x = DMatrix::from_fn(kept.len(), k + cells.len(), |i, j| {
            let r = kept[i].0;
            if j < k {
                match fit.names[j].as_str() {
                    TOPIC_REGRESSOR => r.shares[0].ln(),
                    OPEN_ACCESS_REGRESSOR => f64::from(u8::from(r.open_access)),
                    name => f64::from(u8::from(name == format!("author:{}", r.author))),
                }
            } else {
                f64::from(u8::from(cells[j - k] == (r.year, r.journal.clone())))
            }
        });
        let y = DVector::from_iterator(kept.len(), kept.iter().map(|(_, v)| *v));
        let b = (x.transpose() * &x).lu().solve(&(x.transpose() * &y)).unwrap();
        let resid = &y - &x * &b;
        let mean = y.mean();
        let r2 = 1.0 - resid.norm_squared() / y.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        (b.iter().take(k).copied().collect(), r2)
    }

    #[test]
    fn matches_dummy_expansion() {
        for seed in 0..4 {
            let rows = synthetic_rows(seed, 300, -0.12);
            for m in [CitationTransform::Ihs, CitationTransform::LogCY] {
                let fit = fit_citation_model(&rows, 0, &opts(m)).unwrap();
                let (oracle, r2) = dummy_oracle(&rows, &fit, m);
                for (a, b) in fit.coefficients.iter().zip(&oracle) {
                    assert!((a - b).abs() < 1e-8, "{a} vs {b}");
                }
                assert!((fit.r_squared - r2).abs() < 1e-8);
                assert!(fit.within_r_squared <= fit.r_squared + 1e-12);
                assert_eq!(fit.n_obs + fit.dropped_rows, rows.len());
                // One author dummy is always redundant with the absorbed effects.
                assert_eq!(fit.dropped_regressors.len(), 1);
            }
        }
    }

    #[test]
    fn recovers_known_slope() {
        let rows = synthetic_rows(42, 800, -0.12);
        let fit = fit_citation_model(&rows, 0, &opts(CitationTransform::Ihs)).unwrap();
        let (b, se) = fit.coefficient(TOPIC_REGRESSOR).unwrap();
        assert!((b + 0.12).abs() < 2.0 * se.max(0.02), "b = {b}, se = {se}");
    }

    #[test]
    fn constant_share_is_rejected() {
        let mut rows = synthetic_rows(1, 50, -0.1);
        rows.iter_mut().for_each(|r| r.shares[0] = 0.2);
        assert!(matches!(
            fit_citation_model(&rows, 0, &opts(CitationTransform::Ihs)),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn single_cluster_is_rejected() {
        let mut rows = synthetic_rows(2, 50, -0.1);
        rows.iter_mut().for_each(|r| {
            r.year = 2010;
            r.journal = "A".into()
        });
        assert!(fit_citation_model(&rows, 0, &opts(CitationTransform::Ihs)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn se_invariant_to_cluster_labels(seed in 0u64..1000) {
            let rows = synthetic_rows(seed, 120, -0.1);
            let relabelled: Vec<CitationRow> = rows.iter().map(|r| CitationRow { journal: format!("zz{}", r.journal), year: r.year, ..r.clone() }).collect();
            let o = CitationModelOptions { author_effects: false, ..opts(CitationTransform::Log1pCY) };
            let a = fit_citation_model(&rows, 0, &o).unwrap();
            let b = fit_citation_model(&relabelled, 0, &o).unwrap();
            for (x, y) in a.std_errors.iter().zip(&b.std_errors) {
                prop_assert!(*x >= 0.0);
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
