use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::em::TopicModelFit;
use crate::error::{Error, Result};

pub const DEFAULT_FREX_WEIGHT: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WordMetric {
    HighestProb,
    /// Weighted harmonic mean of the within-topic ECDFs of exclusivity
    /// (weight ω) and frequency (weight 1 − ω).
    Frex { weight: f64 },
}

/// `β_kw / Σ_j β_jw`.
pub fn exclusivity(beta: &DMatrix<f64>) -> DMatrix<f64> {
    let mut ex = beta.clone();
    for mut col in ex.column_iter_mut() {
        let s = col.sum();
        if s > 0.0 {
            col /= s;
        }
    }
    ex
}

/// Fraction of entries in `row` that are `<=` each entry.
fn ecdf_row(row: &[f64]) -> Vec<f64> {
    let n = row.len();
    let mut sorted: Vec<f64> = row.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    row.iter()
        .map(|x| sorted.partition_point(|y| y <= x) as f64 / n as f64)
        .collect()
}

pub fn frex_scores(beta: &DMatrix<f64>, weight: f64) -> DMatrix<f64> {
    let ex = exclusivity(beta);
    let mut out = DMatrix::zeros(beta.nrows(), beta.ncols());
    for k in 0..beta.nrows() {
        let freq: Vec<f64> = beta.row(k).iter().copied().collect();
        let excl: Vec<f64> = ex.row(k).iter().copied().collect();
        let f_ecdf = ecdf_row(&freq);
        let e_ecdf = ecdf_row(&excl);
        for w in 0..beta.ncols() {
            out[(k, w)] = 1.0 / (weight / e_ecdf[w] + (1.0 - weight) / f_ecdf[w]);
        }
    }
    out
}

/// Indices of the `n` largest entries, ties broken by lower index.
pub(crate) fn rank_desc(values: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite").then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

pub fn top_words_from_beta(beta: &DMatrix<f64>, n: usize, metric: WordMetric) -> Result<Vec<Vec<usize>>> {
    if n == 0 || n > beta.ncols() {
        return Err(Error::InvalidParameter(format!(
            "n = {n} outside 1..={}",
            beta.ncols()
        )));
    }
    let scores = match metric {
        WordMetric::HighestProb => beta.clone(),
        WordMetric::Frex { weight } => {
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::InvalidParameter(format!("FREX weight {weight} outside [0, 1]")));
            }
            frex_scores(beta, weight)
        }
    };
    Ok(scores
        .row_iter()
        .map(|r| rank_desc(&r.iter().copied().collect::<Vec<_>>(), n))
        .collect())
}

/// Ranked word indices per topic.
pub fn top_words(fit: &TopicModelFit, n: usize, metric: WordMetric) -> Result<Vec<Vec<usize>>> {
    top_words_from_beta(&fit.beta, n, metric)
}

/// Top words rendered as vocabulary strings.
pub fn label_topics(
    fit: &TopicModelFit,
    vocabulary: &[String],
    n: usize,
    metric: WordMetric,
) -> Result<Vec<Vec<String>>> {
    Ok(top_words(fit, n, metric)?
        .into_iter()
        .map(|ws| ws.into_iter().map(|w| vocabulary[w].clone()).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn highest_prob_is_argsort() {
        let beta = DMatrix::from_row_slice(1, 3, &[0.2, 0.5, 0.3]);
        assert_eq!(top_words_from_beta(&beta, 3, WordMetric::HighestProb).unwrap(), vec![vec![1, 2, 0]]);
        let beta = DMatrix::from_row_slice(1, 3, &[0.5, 0.3, 0.2]);
        assert_eq!(top_words_from_beta(&beta, 3, WordMetric::HighestProb).unwrap(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn frex_weight_one_is_exclusivity_order() {
        let beta = DMatrix::from_row_slice(
            3,
            5,
            &[
                0.30, 0.25, 0.20, 0.15, 0.10, //
                0.10, 0.40, 0.10, 0.20, 0.20, //
                0.25, 0.05, 0.40, 0.10, 0.20,
            ],
        );
        let ex = exclusivity(&beta);
        for k in 0..3 {
            let by_ex = rank_desc(&ex.row(k).iter().copied().collect::<Vec<_>>(), 5);
            let by_frex = &top_words_from_beta(&beta, 5, WordMetric::Frex { weight: 1.0 }).unwrap()[k];
            assert_eq!(&by_ex, by_frex);
        }
    }

    #[test]
    fn exclusive_word_leads_frex_but_not_probability() {
        // w2 carries 0.2 in topic 0 and nothing elsewhere; w0 and w1 are shared.
        let beta = DMatrix::from_row_slice(
            3,
            6,
            &[
                0.30, 0.25, 0.20, 0.10, 0.10, 0.05, //
                0.50, 0.40, 0.00, 0.04, 0.03, 0.03, //
                0.50, 0.40, 0.00, 0.03, 0.04, 0.03,
            ],
        );
        // Topic 0 by hand (omega = 0.7):
        //   exclusivity  .231  .238  1.0  .588  .588  .455
        //   ECDF(ex)      1/6   2/6   1    5/6   5/6   3/6
        //   ECDF(freq)    1     5/6   4/6  3/6   3/6   1/6
        let expected = [
            1.0 / (0.7 * 6.0 + 0.3),
            1.0 / (0.7 * 3.0 + 0.3 * 1.2),
            1.0 / (0.7 + 0.3 * 1.5),
            1.0 / (0.7 * 1.2 + 0.3 * 2.0),
            1.0 / (0.7 * 1.2 + 0.3 * 2.0),
            1.0 / (0.7 * 2.0 + 0.3 * 6.0),
        ];
        let frex = frex_scores(&beta, 0.7);
        for w in 0..6 {
            assert!((frex[(0, w)] - expected[w]).abs() < 1e-12, "w{w}");
        }
        let by_prob = &top_words_from_beta(&beta, 6, WordMetric::HighestProb).unwrap()[0];
        let by_frex = &top_words_from_beta(&beta, 6, WordMetric::Frex { weight: 0.7 }).unwrap()[0];
        assert_eq!(by_frex[0], 2);
        assert_eq!(by_prob[0], 0);
        assert_eq!(by_prob.iter().position(|&w| w == 2), Some(2));
    }

    #[test]
    fn out_of_range_n() {
        let beta = DMatrix::from_row_slice(1, 2, &[0.5, 0.5]);
        assert!(top_words_from_beta(&beta, 0, WordMetric::HighestProb).is_err());
        assert!(top_words_from_beta(&beta, 3, WordMetric::HighestProb).is_err());
    }
}
