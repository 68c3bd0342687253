use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vocabulary plus sparse document-term counts.
///
/// Rows hold `(term index, count)` pairs sorted by term index; every row has
/// at least one positive count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedCorpus {
    pub vocabulary: Vec<String>,
    pub doc_ids: Vec<String>,
    pub rows: Vec<Vec<(usize, u32)>>,
    /// Ids of documents dropped because no stems survived preprocessing.
    pub dropped: Vec<String>,
    n_tokens: u64,
}

impl ProcessedCorpus {
    /// Assembles a corpus from already-counted rows, validating the invariants.
    pub fn from_parts(
        vocabulary: Vec<String>,
        doc_ids: Vec<String>,
        rows: Vec<Vec<(usize, u32)>>,
    ) -> Result<Self> {
        if doc_ids.len() != rows.len() {
            return Err(Error::InvalidInput("doc_ids and rows differ in length".into()));
        }
        let v = vocabulary.len();
        let mut n_tokens = 0u64;
        for (id, row) in doc_ids.iter().zip(&rows) {
            if row.iter().all(|&(_, c)| c == 0) {
                return Err(Error::InvalidInput(format!("document {id:?} has no tokens")));
            }
            for w in row.windows(2) {
                if w[0].0 >= w[1].0 {
                    return Err(Error::InvalidInput(format!("document {id:?}: unsorted row")));
                }
            }
            for &(t, c) in row {
                if t >= v {
                    return Err(Error::InvalidInput(format!("document {id:?}: term {t} out of range")));
                }
                n_tokens += c as u64;
            }
        }
        Ok(ProcessedCorpus {
            vocabulary,
            doc_ids,
            rows,
            dropped: Vec::new(),
            n_tokens,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn num_terms(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn num_tokens(&self) -> u64 {
        self.n_tokens
    }

    pub fn doc_length(&self, d: usize) -> u64 {
        self.rows[d].iter().map(|&(_, c)| c as u64).sum()
    }

    /// Number of documents containing each term.
    pub fn document_frequencies(&self) -> Vec<usize> {
        let mut df = vec![0usize; self.num_terms()];
        for row in &self.rows {
            for &(t, c) in row {
                if c > 0 {
                    df[t] += 1;
                }
            }
        }
        df
    }

    pub fn term_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.num_terms()];
        for row in &self.rows {
            for &(t, c) in row {
                totals[t] += c as u64;
            }
        }
        totals
    }

    /// Copy restricted to the given documents, in the given order.
    pub fn subset(&self, docs: &[usize]) -> Result<Self> {
        ProcessedCorpus::from_parts(
            self.vocabulary.clone(),
            docs.iter().map(|&d| self.doc_ids[d].clone()).collect(),
            docs.iter().map(|&d| self.rows[d].clone()).collect(),
        )
    }
}

/// Counts stems per document; the vocabulary is the sorted set of stems.
pub fn build_matrix(docs: &[(String, Vec<String>)]) -> Result<ProcessedCorpus> {
    let vocab: BTreeSet<&str> = docs
        .iter()
        .flat_map(|(_, stems)| stems.iter().map(String::as_str))
        .collect();
    if vocab.is_empty() {
        return Err(Error::InvalidInput("all documents are empty".into()));
    }
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut doc_ids = Vec::new();
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for (id, stems) in docs {
        if stems.is_empty() {
            dropped.push(id.clone());
            continue;
        }
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for s in stems {
            *counts.entry(index[s.as_str()]).or_default() += 1;
        }
        doc_ids.push(id.clone());
        rows.push(counts.into_iter().collect());
    }
    let mut corpus =
        ProcessedCorpus::from_parts(vocab.into_iter().map(str::to_string).collect(), doc_ids, rows)?;
    corpus.dropped = dropped;
    Ok(corpus)
}

/// Totals and drop counts stored next to the archive files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub documents: usize,
    pub terms: usize,
    pub tokens: u64,
    pub dropped_documents: Vec<String>,
}

pub const VOCAB_FILE: &str = "vocabulary.txt";
pub const DOCS_FILE: &str = "documents.txt";
pub const TRIPLETS_FILE: &str = "counts.tsv";
pub const MANIFEST_FILE: &str = "corpus_manifest.json";

/// Writes `vocabulary.txt`, `documents.txt`, `counts.tsv` (doc, term, count;
/// zero-based) and `corpus_manifest.json` into `dir`. Returns the written paths.
pub fn write_archive(corpus: &ProcessedCorpus, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| -> Result<std::path::PathBuf> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    };
    let mut paths = vec![
        write(VOCAB_FILE, corpus.vocabulary.iter().map(|v| format!("{v}\n")).collect())?,
        write(DOCS_FILE, corpus.doc_ids.iter().map(|v| format!("{v}\n")).collect())?,
    ];
    let mut triplets = Vec::new();
    writeln!(triplets, "doc\tterm\tcount").expect("in-memory write");
    for (d, row) in corpus.rows.iter().enumerate() {
        for &(t, c) in row {
            writeln!(triplets, "{d}\t{t}\t{c}").expect("in-memory write");
        }
    }
    paths.push(write(TRIPLETS_FILE, String::from_utf8(triplets).expect("ascii"))?);
    let manifest = CorpusManifest {
        documents: corpus.num_docs(),
        terms: corpus.num_terms(),
        tokens: corpus.num_tokens(),
        dropped_documents: corpus.dropped.clone(),
    };
    paths.push(write(MANIFEST_FILE, serde_json::to_string_pretty(&manifest)? + "\n")?);
    Ok(paths)
}

pub fn read_archive(dir: &Path) -> Result<ProcessedCorpus> {
    let read = |name: &str| {
        let path = dir.join(name);
        fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
    };
    let vocabulary: Vec<String> = read(VOCAB_FILE)?.lines().map(str::to_string).collect();
    let doc_ids: Vec<String> = read(DOCS_FILE)?.lines().map(str::to_string).collect();
    let manifest: CorpusManifest = serde_json::from_str(&read(MANIFEST_FILE)?)?;
    let mut rows = vec![Vec::new(); doc_ids.len()];
    for (i, line) in read(TRIPLETS_FILE)?.lines().enumerate().skip(1) {
        let parts: Vec<&str> = line.split('\t').collect();
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("{TRIPLETS_FILE} line {}: {line:?}", i + 1)))
        };
        if parts.len() != 3 {
            return Err(Error::Parse(format!("{TRIPLETS_FILE} line {}: {line:?}", i + 1)));
        }
        let d = parse(parts[0])?;
        if d >= rows.len() {
            return Err(Error::Parse(format!("{TRIPLETS_FILE} line {}: document out of range", i + 1)));
        }
        rows[d].push((parse(parts[1])?, parse(parts[2])? as u32));
    }
    let mut corpus = ProcessedCorpus::from_parts(vocabulary, doc_ids, rows)?;
    if corpus.num_tokens() != manifest.tokens {
        return Err(Error::Parse("archive token total disagrees with manifest".into()));
    }
    corpus.dropped = manifest.dropped_documents;
    Ok(corpus)
}
