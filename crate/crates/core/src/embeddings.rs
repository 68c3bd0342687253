//! Paragraph-vector (distributed bag of words) document embeddings and
//! within-year similarity series.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{DocumentRecord, ProcessedCorpus};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::table::{num, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingOptions {
    pub dim: usize,
    pub iterations: usize,
    pub negative: usize,
    pub alpha_start: f64,
    pub alpha_end: f64,
    pub seed: u64,
}

impl Default for EmbeddingOptions {
    fn default() -> Self {
        EmbeddingOptions {
            dim: 50,
            iterations: 20,
            negative: 5,
            alpha_start: 0.025,
            alpha_end: 0.0001,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub dim: usize,
    pub iterations: usize,
    pub seed: u64,
    pub doc_ids: Vec<String>,
    /// D × dim
    pub doc_vectors: DMatrix<f64>,
    pub vocabulary_size: usize,
    /// Mean negative-sampling loss per predicted token, one entry per epoch.
    pub epoch_loss: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Trains document vectors to predict each of the document's tokens against
/// `negative` noise words drawn from the unigram distribution raised to 0.75.
/// Single-threaded, so a fixed seed reproduces the vectors exactly.
pub fn train_pvdbow(corpus: &ProcessedCorpus, opts: &EmbeddingOptions) -> Result<EmbeddingModel> {
    let (d, v) = (corpus.num_docs(), corpus.num_terms());
    if d < 2 {
        return Err(Error::InvalidInput("embedding needs at least two documents".into()));
    }
    if opts.dim < 2 || opts.dim > v {
        return Err(Error::InvalidParameter(format!(
            "dimension {} must lie between 2 and the vocabulary size {v}",
            opts.dim
        )));
    }
    if opts.iterations == 0 || opts.negative == 0 {
        return Err(Error::InvalidParameter("iterations and negative samples must be positive".into()));
    }
    let dim = opts.dim;
    let mut rng = substream(opts.seed, "embedding");
    let mut doc_vecs: Vec<f64> = (0..d * dim).map(|_| (rng.gen::<f64>() - 0.5) / dim as f64).collect();
    let mut out_vecs = vec![0.0f64; v * dim];
    let weights: Vec<f64> = corpus.term_totals().iter().map(|&c| (c as f64).powf(0.75)).collect();
    let noise = WeightedIndex::new(&weights).map_err(|e| Error::InvalidInput(format!("noise distribution: {e}")))?;
    let tokens: Vec<Vec<usize>> = corpus
        .rows
        .iter()
        .map(|row| row.iter().flat_map(|&(w, c)| std::iter::repeat(w).take(c as usize)).collect())
        .collect();
    let total = (corpus.num_tokens() as f64 * opts.iterations as f64).max(1.0);
    let mut seen = 0.0f64;
    let mut order: Vec<usize> = (0..d).collect();
    let mut grad = vec![0.0f64; dim];
    let mut epoch_loss = Vec::with_capacity(opts.iterations);
    for _ in 0..opts.iterations {
        order.shuffle(&mut rng);
        let (mut loss, mut count) = (0.0f64, 0usize);
        for &doc in &order {
            let mut words = tokens[doc].clone();
            words.shuffle(&mut rng);
            for &target in &words {
                let alpha = opts.alpha_start - (opts.alpha_start - opts.alpha_end) * (seen / total);
                seen += 1.0;
                grad.iter_mut().for_each(|g| *g = 0.0);
                let dv = doc * dim;
                for s in 0..=opts.negative {
                    let (word, label) = if s == 0 {
                        (target, 1.0)
                    } else {
                        let w = noise.sample(&mut rng);
                        if w == target {
                            continue;
                        }
                        (w, 0.0)
                    };
                    let ov = word * dim;
                    let dot: f64 = (0..dim).map(|i| doc_vecs[dv + i] * out_vecs[ov + i]).sum();
                    let p = sigmoid(dot);
                    loss -= if label == 1.0 { p.max(1e-300).ln() } else { (1.0 - p).max(1e-300).ln() };
                    let g = (label - p) * alpha;
                    for i in 0..dim {
                        grad[i] += g * out_vecs[ov + i];
                        out_vecs[ov + i] += g * doc_vecs[dv + i];
                    }
                }
                for i in 0..dim {
                    doc_vecs[dv + i] += grad[i];
                }
                count += 1;
            }
        }
        epoch_loss.push(loss / count.max(1) as f64);
    }
    let doc_vectors = DMatrix::from_row_slice(d, dim, &doc_vecs);
    if doc_vectors.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { iteration: opts.iterations });
    }
    Ok(EmbeddingModel {
        dim,
        iterations: opts.iterations,
        seed: opts.seed,
        doc_ids: corpus.doc_ids.clone(),
        doc_vectors,
        vocabulary_size: v,
        epoch_loss,
    })
}

impl EmbeddingModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Row `d` scaled to unit length.
    pub fn unit_vector(&self, d: usize) -> Vec<f64> {
        let row: Vec<f64> = self.doc_vectors.row(d).iter().copied().collect();
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.into_iter().map(|x| x / norm).collect()
        } else {
            row
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySeries {
    pub years: Vec<i32>,
    pub values: Vec<f64>,
    pub doc_counts: Vec<usize>,
    /// Years with a single document.
    pub omitted_years: Vec<i32>,
    /// False when vectors were unit-normalised (cosine similarity).
    pub raw_inner_product: bool,
}

impl SimilaritySeries {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["year", "mean_similarity"]);
        for (y, v) in self.years.iter().zip(&self.values) {
            t.push([y.to_string(), num(*v)]);
        }
        t
    }
}

/// Per year: each document's mean similarity to the other documents of that
/// year, averaged over the year's documents.
pub fn similarity_series_from_vectors(vectors: &[Vec<f64>], years: &[i32], raw_inner_product: bool) -> Result<SimilaritySeries> {
    if vectors.len() != years.len() {
        return Err(Error::InvalidInput(format!("{} vectors for {} years", vectors.len(), years.len())));
    }
    let prepared: Vec<Vec<f64>> = if raw_inner_product {
        vectors.to_vec()
    } else {
        vectors
            .iter()
            .map(|v| {
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 0.0 {
                    v.iter().map(|x| x / n).collect()
                } else {
                    v.clone()
                }
            })
            .collect()
    };
    let mut groups: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, &y) in years.iter().enumerate() {
        groups.entry(y).or_default().push(i);
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut out = SimilaritySeries {
        years: Vec::new(),
        values: Vec::new(),
        doc_counts: Vec::new(),
        omitted_years: Vec::new(),
        raw_inner_product,
    };
    for (year, members) in groups {
        if members.len() < 2 {
            out.omitted_years.push(year);
            continue;
        }
        let m = members.len();
        let mut total = 0.0;
        for &i in &members {
            let s: f64 = members.iter().filter(|&&j| j != i).map(|&j| dot(&prepared[i], &prepared[j])).sum();
            total += s / (m - 1) as f64;
        }
        out.years.push(year);
        out.values.push(total / m as f64);
        out.doc_counts.push(m);
    }
    if out.years.is_empty() {
        return Err(Error::InvalidInput("no year has two or more documents".into()));
    }
    Ok(out)
}

/// Matches records to model vectors by document id.
pub fn similarity_series(model: &EmbeddingModel, records: &[DocumentRecord], raw_inner_product: bool) -> Result<SimilaritySeries> {
    let index: HashMap<&str, usize> = model.doc_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut vectors = Vec::with_capacity(records.len());
    let mut years = Vec::with_capacity(records.len());
    for r in records {
        let &d = index
            .get(r.id.as_str())
            .ok_or_else(|| Error::InvalidInput(format!("document {:?} has no embedding", r.id)))?;
        vectors.push(model.doc_vectors.row(d).iter().copied().collect());
        years.push(r.year);
    }
    similarity_series_from_vectors(&vectors, &years, raw_inner_product)
}
