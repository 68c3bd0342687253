use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::em::TopicModelFit;
use super::words::{exclusivity, rank_desc};
use crate::corpus::ProcessedCorpus;
use crate::error::{Error, Result};

pub const DEFAULT_TOP_M: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicQuality {
    /// Semantic coherence per topic.
    pub coherence: Vec<f64>,
    /// Mean exclusivity of each topic's top words.
    pub exclusivity: Vec<f64>,
    pub mean_coherence: f64,
    pub mean_exclusivity: f64,
}

fn contains(row: &[(usize, u32)], w: usize) -> bool {
    row.binary_search_by_key(&w, |&(t, _)| t).is_ok()
}

/// Semantic coherence of one ranked word list:
/// `Σ_{m≥2} Σ_{l<m} log((D(v_m, v_l) + 1) / D(v_l))`.
pub fn semantic_coherence(words: &[usize], corpus: &ProcessedCorpus) -> f64 {
    let mut df = vec![0usize; words.len()];
    let mut co = vec![vec![0usize; words.len()]; words.len()];
    for row in &corpus.rows {
        let present: Vec<bool> = words.iter().map(|&w| contains(row, w)).collect();
        for m in 0..words.len() {
            if !present[m] {
                continue;
            }
            df[m] += 1;
            for l in 0..m {
                if present[l] {
                    co[m][l] += 1;
                }
            }
        }
    }
    let mut sc = 0.0;
    for m in 1..words.len() {
        for l in 0..m {
            // A word absent from every document contributes nothing.
            if df[l] > 0 {
                sc += ((co[m][l] as f64 + 1.0) / df[l] as f64).ln();
            }
        }
    }
    sc
}

pub fn coherence_exclusivity_from_beta(
    beta: &DMatrix<f64>,
    corpus: &ProcessedCorpus,
    m: usize,
) -> Result<TopicQuality> {
    if m == 0 || m > beta.ncols() {
        return Err(Error::InvalidParameter(format!(
            "M = {m} outside 1..={}",
            beta.ncols()
        )));
    }
    if beta.ncols() != corpus.num_terms() {
        return Err(Error::InvalidInput("beta and corpus vocabularies differ".into()));
    }
    let ex = exclusivity(beta);
    let mut coherence = Vec::with_capacity(beta.nrows());
    let mut excl = Vec::with_capacity(beta.nrows());
    for k in 0..beta.nrows() {
        let row: Vec<f64> = beta.row(k).iter().copied().collect();
        let top = rank_desc(&row, m);
        coherence.push(semantic_coherence(&top, corpus));
        excl.push(top.iter().map(|&w| ex[(k, w)]).sum::<f64>() / m as f64);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(TopicQuality {
        mean_coherence: mean(&coherence),
        mean_exclusivity: mean(&excl),
        coherence,
        exclusivity: excl,
    })
}

pub fn coherence_exclusivity(fit: &TopicModelFit, corpus: &ProcessedCorpus, m: usize) -> Result<TopicQuality> {
    coherence_exclusivity_from_beta(&fit.beta, corpus, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn perfect_co_occurrence_attains_the_bound() {
        // Words 0..3 always appear together.
        let corpus = ProcessedCorpus::from_parts(
            (0..4).map(|i| format!("w{i}")).collect(),
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![(0, 1), (1, 2), (2, 1)],
                vec![(0, 3), (1, 1), (2, 1)],
                vec![(3, 2)],
            ],
        )
        .unwrap();
        let sc = semantic_coherence(&[0, 1, 2], &corpus);
        let bound = 3.0 * (3.0f64 / 2.0).ln();
        assert!((sc - bound).abs() < 1e-12);
    }

    #[test]
    fn identical_topics_share_exclusivity_equally() {
        let corpus = ProcessedCorpus::from_parts(
            (0..4).map(|i| format!("w{i}")).collect(),
            vec!["a".into()],
            vec![vec![(0, 1), (1, 1), (2, 1), (3, 1)]],
        )
        .unwrap();
        let beta = DMatrix::from_row_slice(2, 4, &[0.4, 0.3, 0.2, 0.1, 0.4, 0.3, 0.2, 0.1]);
        let q = coherence_exclusivity_from_beta(&beta, &corpus, 3).unwrap();
        assert!((q.exclusivity[0] - 0.5).abs() < 1e-15);
        assert!((q.exclusivity[1] - 0.5).abs() < 1e-15);
        assert!(coherence_exclusivity_from_beta(&beta, &corpus, 5).is_err());
    }

    #[test]
    fn coherence_matches_brute_force_pair_loop() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let v = 8;
        let rows: Vec<Vec<(usize, u32)>> = (0..5)
            .map(|_| {
                let mut r: Vec<(usize, u32)> = Vec::new();
                for w in 0..v {
                    if rng.gen_bool(0.5) {
                        r.push((w, rng.gen_range(1..4)));
                    }
                }
                if r.is_empty() {
                    r.push((0, 1));
                }
                r
            })
            .collect();
        let docs: Vec<Vec<usize>> = rows.iter().map(|r| r.iter().map(|&(w, _)| w).collect()).collect();
        let corpus = ProcessedCorpus::from_parts(
            (0..v).map(|i| format!("w{i}")).collect(),
            (0..5).map(|i| i.to_string()).collect(),
            rows,
        )
        .unwrap();
        let words = [3usize, 0, 6, 1, 5];
        // Brute force over pairs, counting documents directly each time.
        let mut oracle = 0.0;
        for m in 1..words.len() {
            for l in 0..m {
                let dl = docs.iter().filter(|d| d.contains(&words[l])).count();
                let dml = docs
                    .iter()
                    .filter(|d| d.contains(&words[l]) && d.contains(&words[m]))
                    .count();
                if dl > 0 {
                    oracle += ((dml as f64 + 1.0) / dl as f64).ln();
                }
            }
        }
        assert!((semantic_coherence(&words, &corpus) - oracle).abs() < 1e-12);
    }
}
