//! Seeded generators for synthetic corpora, bibliographic exports and
//! multivariate series. Used by the examples, the bundled demo data and the
//! test suites.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Dirichlet, Poisson, StandardNormal};

use crate::corpus::{build_matrix, DocumentRecord, JournalType, ProcessedCorpus};
use crate::error::{Error, Result};
use crate::multivar::MultiSeries;
use crate::rng::substream;
use crate::topic_model::softmax_with_reference;

/// A corpus drawn from known topic-word and document-topic matrices.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: ProcessedCorpus,
    /// Generating topic-word matrix, columns in `corpus.vocabulary` order.
    pub beta: DMatrix<f64>,
    /// Generating document-topic proportions, rows in `corpus.doc_ids` order.
    pub theta: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopicCorpusSpec {
    pub topics: usize,
    pub docs: usize,
    pub tokens_per_doc: usize,
    /// Words owned by each topic; vocabularies are disjoint.
    pub words_per_topic: usize,
    /// Standard deviation of the logistic-normal document modes.
    pub eta_sd: f64,
    pub seed: u64,
}

impl Default for TopicCorpusSpec {
    fn default() -> Self {
        TopicCorpusSpec {
            topics: 2,
            docs: 200,
            tokens_per_doc: 40,
            words_per_topic: 25,
            eta_sd: 1.0,
            seed: 0,
        }
    }
}

/// Draws documents from the logistic-normal mixed-membership process with
/// disjoint topic vocabularies. Word `j` of topic `k` is named `t{k}w{j}`.
pub fn topic_corpus(spec: &TopicCorpusSpec) -> Result<SyntheticCorpus> {
    let TopicCorpusSpec {
        topics: k,
        docs,
        tokens_per_doc,
        words_per_topic: w,
        eta_sd,
        seed,
    } = *spec;
    if k < 2 || docs < 1 || tokens_per_doc < 1 || w < 2 {
        return Err(Error::InvalidParameter("topic corpus needs K ≥ 2, D ≥ 1, tokens ≥ 1 and ≥ 2 words per topic".into()));
    }
    let mut rng = substream(seed, "synthetic-corpus");
    let dirichlet = Dirichlet::new_with_size(1.0, w).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let names: Vec<String> = (0..k).flat_map(|t| (0..w).map(move |j| format!("t{t}w{j:02}"))).collect();
    let mut beta_gen = DMatrix::zeros(k, k * w);
    for t in 0..k {
        for (j, p) in dirichlet.sample(&mut rng).into_iter().enumerate() {
            beta_gen[(t, t * w + j)] = p;
        }
    }
    let topic_word: Vec<WeightedIndex<f64>> = (0..k)
        .map(|t| WeightedIndex::new(beta_gen.row(t).iter().copied()).expect("dirichlet weights"))
        .collect();
    let mut theta_gen = DMatrix::zeros(docs, k);
    let mut documents = Vec::with_capacity(docs);
    for d in 0..docs {
        let eta: Vec<f64> = (0..k - 1).map(|_| eta_sd * rng.sample::<f64, _>(StandardNormal)).collect();
        let theta = softmax_with_reference(&eta);
        let mix = WeightedIndex::new(&theta).expect("softmax weights");
        let stems: Vec<String> = (0..tokens_per_doc)
            .map(|_| names[topic_word[mix.sample(&mut rng)].sample(&mut rng)].clone())
            .collect();
        for (t, p) in theta.iter().enumerate() {
            theta_gen[(d, t)] = *p;
        }
        documents.push((format!("doc{d:04}"), stems));
    }
    let corpus = build_matrix(&documents)?;
    // Vocabulary is sorted; reorder the generating columns to match.
    let beta = DMatrix::from_fn(k, corpus.num_terms(), |t, v| {
        let j = names.iter().position(|n| n == &corpus.vocabulary[v]).expect("generated word");
        beta_gen[(t, j)]
    });
    let keep: Vec<usize> = corpus
        .doc_ids
        .iter()
        .map(|id| id[3..].parse::<usize>().expect("generated id"))
        .collect();
    let theta = DMatrix::from_fn(keep.len(), k, |i, t| theta_gen[(keep[i], t)]);
    Ok(SyntheticCorpus { corpus, beta, theta })
}

/// The two-topic, 25-words-per-topic corpus used for recovery checks.
pub fn two_topic_corpus(seed: u64) -> Result<SyntheticCorpus> {
    topic_corpus(&TopicCorpusSpec { seed, ..Default::default() })
}

/// Greedy alignment of estimated to true topics followed by the mean
/// total-variation distance of the matched rows. Returns (distance, mapping
/// true → estimated).
pub fn aligned_total_variation(truth: &DMatrix<f64>, estimate: &DMatrix<f64>) -> (f64, Vec<usize>) {
    let k = truth.nrows();
    let tv = |a: usize, b: usize| {
        0.5 * truth.row(a).iter().zip(estimate.row(b).iter()).map(|(x, y)| (x - y).abs()).sum::<f64>()
    };
    let mut pairs: Vec<(f64, usize, usize)> = (0..k)
        .flat_map(|a| (0..estimate.nrows()).map(move |b| (a, b)))
        .map(|(a, b)| (tv(a, b), a, b))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut mapping = vec![usize::MAX; k];
    let mut used = vec![false; estimate.nrows()];
    let mut total = 0.0;
    for (d, a, b) in pairs {
        if mapping[a] == usize::MAX && !used[b] {
            mapping[a] = b;
            used[b] = true;
            total += d;
        }
    }
    (total / k as f64, mapping)
}

struct Theme {
    name: &'static str,
    words: &'static [&'static str],
    /// Log-odds at the first and last year.
    start: f64,
    end: f64,
}

const THEMES: [Theme; 4] = [
    Theme {
        name: "theory",
        words: &[
            "equilibrium", "strategy", "repeated", "game", "incentive", "deviation", "punishment",
            "payoff", "oligopoly", "tacit", "stability", "discount",
        ],
        start: 1.2,
        end: -0.8,
    },
    Theme {
        name: "empirics",
        words: &[
            "evidence", "data", "estimation", "panel", "regression", "sample", "overcharge",
            "damages", "empirical", "prices", "industry", "markup",
        ],
        start: -0.6,
        end: 1.2,
    },
    Theme {
        name: "auctions",
        words: &[
            "auction", "bidder", "procurement", "tender", "contract", "reserve", "award",
            "rotation", "allocation", "screening", "submission", "winner",
        ],
        start: 0.0,
        end: 0.3,
    },
    Theme {
        name: "enforcement",
        words: &[
            "leniency", "antitrust", "enforcement", "fine", "authority", "competition", "law",
            "detection", "sanction", "programme", "court", "deterrence",
        ],
        start: 0.0,
        end: 0.0,
    },
];

const OPERATOR_PHRASES: [&str; 4] = ["cartel", "collusion", "bidding ring", "collusive agreements"];

const JOURNALS: [(&str, JournalType); 8] = [
    ("Review of Economic Studies", JournalType::Top5),
    ("Econometrica", JournalType::Top5),
    ("Economic Journal", JournalType::GeneralInterest),
    ("European Economic Review", JournalType::GeneralInterest),
    ("Journal of Public Economics", JournalType::Field),
    ("International Journal of Industrial Organization", JournalType::IndustrialOrganization),
    ("Journal of Industrial Economics", JournalType::IndustrialOrganization),
    ("Journal of Competition Law and Economics", JournalType::Antitrust),
];

/// A generated export row: the record, the raw author-team string and the
/// theme shares it was drawn from.
#[derive(Debug, Clone)]
pub struct SyntheticRecord {
    pub record: DocumentRecord,
    pub authors: String,
    /// Generating shares in [`theme_names`] order.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordSpec {
    pub first_year: i32,
    pub last_year: i32,
    /// Documents in the first year; one more every second year.
    pub base_per_year: usize,
    pub tokens_per_doc: usize,
    /// Share of documents without any operator phrase.
    pub off_topic_share: f64,
    pub seed: u64,
}

impl Default for RecordSpec {
    fn default() -> Self {
        RecordSpec {
            first_year: 2000,
            last_year: 2021,
            base_per_year: 8,
            tokens_per_doc: 35,
            off_topic_share: 0.05,
            seed: 2021,
        }
    }
}

/// Generating shares of the records as a `D × themes` matrix.
pub fn generating_theta(rows: &[SyntheticRecord]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), THEMES.len(), |d, k| rows[d].theta[k])
}

/// Names of the generating themes, in the order used by [`synthetic_records`].
pub fn theme_names() -> Vec<&'static str> {
    THEMES.iter().map(|t| t.name).collect()
}

/// Bibliographic export with four themes whose prevalence drifts linearly in
/// log-odds over the years. Citations rise with the empirical theme and with
/// open access. Three rows have an empty abstract and some rows carry no
/// corresponding author, only the author team.
pub fn synthetic_records(spec: &RecordSpec) -> Result<Vec<SyntheticRecord>> {
    if spec.last_year < spec.first_year || spec.base_per_year == 0 || spec.tokens_per_doc == 0 {
        return Err(Error::InvalidParameter("empty record specification".into()));
    }
    let mut rng = substream(spec.seed, "synthetic-records");
    let span = (spec.last_year - spec.first_year).max(1) as f64;
    let authors: Vec<String> = (0..60).map(|i| format!("Author{i:02}")).collect();
    let mut out = Vec::new();
    let mut serial = 0usize;
    for year in spec.first_year..=spec.last_year {
        let pos = (year - spec.first_year) as f64 / span;
        let logits: Vec<f64> = THEMES.iter().map(|t| t.start + (t.end - t.start) * pos).collect();
        let count = spec.base_per_year + ((year - spec.first_year) / 2) as usize;
        for _ in 0..count {
            serial += 1;
            let eta: Vec<f64> = logits.iter().map(|l| l + 0.8 * rng.sample::<f64, _>(StandardNormal)).collect();
            let max = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = eta.iter().map(|e| (e - max).exp()).collect();
            let total: f64 = weights.iter().sum();
            let theta: Vec<f64> = weights.iter().map(|w| w / total).collect();
            let mix = WeightedIndex::new(&theta).expect("positive weights");
            let mut words: Vec<&str> = (0..spec.tokens_per_doc)
                .map(|_| {
                    let theme = &THEMES[mix.sample(&mut rng)];
                    *theme.words.choose(&mut rng).expect("non-empty theme")
                })
                .collect();
            let on_topic = !rng.gen_bool(spec.off_topic_share);
            if on_topic {
                let at = rng.gen_range(0..=words.len());
                words.insert(at, OPERATOR_PHRASES.choose(&mut rng).expect("phrases"));
            }
            let mut text = words.join(" ");
            text.push('.');
            let text = capitalize(&text);
            let dominant = (0..THEMES.len()).max_by(|&a, &b| theta[a].total_cmp(&theta[b])).expect("themes");
            let (journal, journal_type) = JOURNALS[rng.gen_range(0..JOURNALS.len())];
            let open_access = rng.gen_bool(0.3);
            let age = (spec.last_year - year + 1) as f64;
            let rate = age * (1.0 + 2.5 * theta[1] + if open_access { 0.8 } else { 0.0 }) * rng.gen_range(0.3..1.7);
            let citations = if rate > 0.0 {
                Poisson::new(rate).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(&mut rng) as u64
            } else {
                0
            };
            let team_size = rng.gen_range(1..=3);
            let team: Vec<String> = authors.choose_multiple(&mut rng, team_size).cloned().collect();
            let corresponding = if rng.gen_bool(0.9) { Some(team[0].clone()) } else { None };
            let empty_abstract = serial % 97 == 0;
            out.push(SyntheticRecord {
                record: DocumentRecord {
                    id: format!("S{serial:04}"),
                    title: capitalize(&format!("{} and {}", THEMES[dominant].words[0], THEMES[dominant].words[1])),
                    r#abstract: if empty_abstract { String::new() } else { text },
                    keywords: vec![THEMES[dominant].name.to_string()],
                    year,
                    journal: journal.to_string(),
                    journal_type,
                    citation_count: citations,
                    open_access,
                    corresponding_author: corresponding,
                    paper_type: None,
                },
                authors: team.join("; "),
                theta,
            });
        }
    }
    Ok(out)
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub const RECORD_COLUMNS: [&str; 11] = [
    "id",
    "title",
    "abstract",
    "keywords",
    "year",
    "journal",
    "journal_type",
    "citations",
    "open_access",
    "corresponding_author",
    "authors",
];

/// CSV export readable with the default column schema.
pub fn records_to_csv(rows: &[SyntheticRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(RECORD_COLUMNS)?;
    for SyntheticRecord { record: r, authors, .. } in rows {
        w.write_record([
            r.id.as_str(),
            &r.title,
            &r.r#abstract,
            &r.keywords.join(";"),
            &r.year.to_string(),
            &r.journal,
            r.journal_type.code(),
            &r.citation_count.to_string(),
            if r.open_access { "1" } else { "0" },
            r.corresponding_author.as_deref().unwrap_or(""),
            authors,
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(format!("csv flush: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_records_csv(rows: &[SyntheticRecord], path: &Path) -> Result<()> {
    std::fs::write(path, records_to_csv(rows)?).map_err(|e| Error::io(path, e))
}

/// Simulates `y_t = c + Σ A_i y_{t−i} + ε_t` with standard normal shocks
/// scaled by `noise_sd`, after discarding `burn_in` draws started at zero.
pub fn simulate_var(
    coefficients: &[DMatrix<f64>],
    intercept: &DVector<f64>,
    noise_sd: f64,
    t: usize,
    burn_in: usize,
    seed: u64,
) -> Result<MultiSeries> {
    let Some(first) = coefficients.first() else {
        return Err(Error::InvalidParameter("at least one lag matrix required".into()));
    };
    let k = first.nrows();
    if coefficients.iter().any(|a| a.shape() != (k, k)) || intercept.len() != k {
        return Err(Error::InvalidParameter("coefficient shapes disagree".into()));
    }
    let mut rng = substream(seed, "synthetic-var");
    let total = t + burn_in;
    let mut y = DMatrix::zeros(total, k);
    for i in 0..total {
        let mut next = intercept.clone();
        for (l, a) in coefficients.iter().enumerate() {
            if i > l {
                next += a * y.row(i - l - 1).transpose();
            }
        }
        for j in 0..k {
            next[j] += noise_sd * rng.sample::<f64, _>(StandardNormal);
        }
        y.set_row(i, &next.transpose());
    }
    let names = (1..=k).map(|j| format!("y{j}")).collect();
    MultiSeries::new(names, y.rows(burn_in, t).into_owned())
}

/// Independent Gaussian random walks started at zero.
pub fn random_walks(k: usize, t: usize, seed: u64) -> Result<MultiSeries> {
    let eye = DMatrix::identity(k, k);
    simulate_var(&[eye], &DVector::zeros(k), 1.0, t, 0, seed)
}

/// A cointegrated pair: `x` is a random walk with the given drift and
/// `y = slope·x + u` with stationary AR(1) error `u` (coefficient `rho`).
pub fn cointegrated_pair(t: usize, slope: f64, rho: f64, drift: f64, seed: u64) -> Result<MultiSeries> {
    let mut rng = substream(seed, "synthetic-coint");
    let mut values = DMatrix::zeros(t, 2);
    let (mut x, mut u) = (0.0, 0.0);
    for i in 0..t {
        x += drift + rng.sample::<f64, _>(StandardNormal);
        u = rho * u + rng.sample::<f64, _>(StandardNormal);
        values[(i, 0)] = slope * x + u;
        values[(i, 1)] = x;
    }
    MultiSeries::new(vec!["y".into(), "x".into()], values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_records, preprocess, select_subset, ColumnSchema, LoadOptions, StopwordConfig};

    #[test]
    fn topic_corpus_matches_generating_shapes() {
        let s = two_topic_corpus(3).unwrap();
        assert_eq!(s.corpus.num_terms(), s.beta.ncols());
        assert_eq!(s.corpus.num_docs(), 200);
        assert_eq!(s.corpus.num_tokens(), 200 * 40);
        for r in 0..2 {
            assert!((s.beta.row(r).sum() - 1.0).abs() < 1e-12);
        }
        let (tv, map) = aligned_total_variation(&s.beta, &s.beta);
        assert_eq!(tv, 0.0);
        assert_eq!(map, vec![0, 1]);
    }

    #[test]
    fn alignment_undoes_a_row_swap() {
        let s = two_topic_corpus(1).unwrap();
        let swapped = DMatrix::from_fn(2, s.beta.ncols(), |r, c| s.beta[(1 - r, c)]);
        let (tv, map) = aligned_total_variation(&s.beta, &swapped);
        assert_eq!(tv, 0.0);
        assert_eq!(map, vec![1, 0]);
    }

    #[test]
    fn records_round_trip_through_the_loader() {
        let rows = synthetic_records(&RecordSpec::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        write_records_csv(&rows, &path).unwrap();
        let (loaded, summary) = load_records(&path, &ColumnSchema::default(), &LoadOptions::default()).unwrap();
        let empty = rows.iter().filter(|r| r.record.r#abstract.is_empty()).count();
        assert!(empty > 0);
        assert_eq!(summary.dropped_empty_abstract, empty);
        assert_eq!(loaded.len(), rows.len() - empty);
        assert!(summary.author_team_fallbacks > 0);
        let ops: Vec<String> = ["collus", "cartel", "bidding ring"].iter().map(|s| s.to_string()).collect();
        let subset = select_subset(&loaded, &ops).unwrap();
        assert!(subset.len() < loaded.len() && subset.len() > loaded.len() * 9 / 10);
        let config = StopwordConfig::default();
        for t in &THEMES {
            for w in t.words {
                assert_eq!(preprocess(w, &config).len(), 1, "{w}");
            }
        }
    }

    #[test]
    fn simulated_series_have_requested_shape() {
        let s = random_walks(3, 50, 0).unwrap();
        assert_eq!(s.values.shape(), (50, 3));
        let c = cointegrated_pair(80, 2.0, 0.3, 0.0, 0).unwrap();
        assert_eq!(c.names, vec!["y".to_string(), "x".to_string()]);
    }
}
