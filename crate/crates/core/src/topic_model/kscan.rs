use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::CovariateDesign;
use super::em::{fit, FitOptions};
use super::quality::{coherence_exclusivity, DEFAULT_TOP_M};
use crate::corpus::ProcessedCorpus;
use crate::error::{Error, Result};
use crate::table::{num, opt_num, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScanRow {
    pub k: usize,
    pub coherence: f64,
    pub exclusivity: f64,
    /// `SC / EX`.
    pub ser: f64,
    /// `SER_k − SER_{k−1}`; absent for the first K.
    pub delta_ser: Option<f64>,
    /// `ΔSER_k / SER_k`.
    pub wser: Option<f64>,
    /// `wSER < 0`: one of the two measures improved.
    pub improvement: bool,
}

/// One row per candidate K. The final choice is left to the analyst;
/// `highlight` is only a suggestion (largest coherence among improving rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelectionReport {
    pub rows: Vec<KScanRow>,
    pub highlight: Option<usize>,
}

/// Ratio, difference and weighted difference from `(K, SC, EX)` triples
/// ordered by K.
pub fn ser_rows(values: &[(usize, f64, f64)]) -> Vec<KScanRow> {
    let mut rows: Vec<KScanRow> = Vec::with_capacity(values.len());
    for &(k, sc, ex) in values {
        let ser = sc / ex;
        let delta = rows.last().map(|prev| ser - prev.ser);
        let wser = delta.map(|d| d / ser);
        rows.push(KScanRow {
            k,
            coherence: sc,
            exclusivity: ex,
            ser,
            delta_ser: delta,
            wser,
            improvement: wser.is_some_and(|w| w < 0.0),
        });
    }
    rows
}

pub fn highlight(rows: &[KScanRow]) -> Option<usize> {
    rows.iter()
        .filter(|r| r.improvement)
        .max_by(|a, b| a.coherence.partial_cmp(&b.coherence).expect("finite").then(b.k.cmp(&a.k)))
        .map(|r| r.k)
}

pub fn k_scan(
    corpus: &ProcessedCorpus,
    design: &CovariateDesign,
    k_range: (usize, usize),
    opts: &FitOptions,
) -> Result<KSelectionReport> {
    let (lo, hi) = k_range;
    if lo < 2 || lo > hi || hi > corpus.num_terms() || hi > corpus.num_docs() {
        return Err(Error::InvalidParameter(format!(
            "K range [{lo}, {hi}] invalid for {} terms and {} documents",
            corpus.num_terms(),
            corpus.num_docs()
        )));
    }
    let m = DEFAULT_TOP_M.min(corpus.num_terms());
    let measured: Vec<Result<(usize, f64, f64)>> = (lo..=hi)
        .into_par_iter()
        .map(|k| {
            let f = fit(corpus, design, k, opts)?;
            let q = coherence_exclusivity(&f, corpus, m)?;
            Ok((k, q.mean_coherence, q.mean_exclusivity))
        })
        .collect();
    let values = measured.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = ser_rows(&values);
    let highlight = highlight(&rows);
    Ok(KSelectionReport { rows, highlight })
}

impl KSelectionReport {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["K", "SC", "EX", "SER", "dSER", "wSER", "flag"]);
        for r in &self.rows {
            let mut flag = String::new();
            if r.improvement {
                flag.push_str("wSER<0");
            }
            if self.highlight == Some(r.k) {
                flag.push_str(if flag.is_empty() { "highlight" } else { ";highlight" });
            }
            t.push([
                r.k.to_string(),
                num(r.coherence),
                num(r.exclusivity),
                num(r.ser),
                opt_num(r.delta_ser),
                opt_num(r.wser),
                flag,
            ]);
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ser_arithmetic() {
        let rows = ser_rows(&[(5, -100.0, 10.0), (6, -80.0, 10.0)]);
        assert_eq!(rows[0].ser, -10.0);
        assert_eq!(rows[0].delta_ser, None);
        assert_eq!(rows[0].wser, None);
        assert!(!rows[0].improvement);
        assert_eq!(rows[1].ser, -8.0);
        assert_eq!(rows[1].delta_ser, Some(2.0));
        assert_eq!(rows[1].wser, Some(-0.25));
        assert!(rows[1].improvement);
    }

    #[test]
    fn highlight_picks_max_coherence_among_improvements() {
        let rows = ser_rows(&[(2, -50.0, 5.0), (3, -40.0, 5.0), (4, -45.0, 4.0), (5, -30.0, 5.0)]);
        // SER: -10, -8, -11.25, -6 -> wSER<0 at K=3 and K=5.
        assert!(rows[1].improvement && !rows[2].improvement && rows[3].improvement);
        assert_eq!(highlight(&rows), Some(5));
    }

    #[test]
    fn invalid_range() {
        let c = ProcessedCorpus::from_parts(vec!["a".into(), "b".into()], vec!["d".into()], vec![vec![(0, 1)]]).unwrap();
        let x = CovariateDesign::intercept_only(1);
        assert!(k_scan(&c, &x, (1, 2), &FitOptions::default()).is_err());
        assert!(k_scan(&c, &x, (3, 2), &FitOptions::default()).is_err());
    }
}
