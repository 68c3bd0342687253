//! Load a bibliographic export, keep the records matching the search
//! operators and build the document-term matrix.

use std::path::Path;

use topictrend::corpus::{build_matrix, load_records, preprocess, select_subset, ColumnSchema, LoadOptions, StopwordConfig};

fn main() -> topictrend::Result<()> {
    let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_records.csv");
    let (records, summary) = load_records(&input, &ColumnSchema::default(), &LoadOptions::default())?;
    for w in summary.warnings() {
        println!("warning: {w}");
    }

    let operators: Vec<String> = ["collus", "cartel", "bidding ring"].map(String::from).to_vec();
    let selected = select_subset(&records, &operators)?;
    println!("{} of {} records match {:?}", selected.len(), records.len(), operators);

    let stopwords = StopwordConfig::default();
    println!("\"Cooperation among firms.\" -> {:?}", preprocess("Cooperation among firms.", &stopwords));

    let docs: Vec<(String, Vec<String>)> = selected
        .iter()
        .map(|r| (r.id.clone(), preprocess(&r.r#abstract, &stopwords)))
        .collect();
    let corpus = build_matrix(&docs)?;
    println!(
        "{} documents, {} terms and {} tokens",
        corpus.num_docs(),
        corpus.num_terms(),
        corpus.num_tokens()
    );
    let mut totals: Vec<(u64, &str)> = corpus
        .term_totals()
        .into_iter()
        .zip(corpus.vocabulary.iter().map(String::as_str))
        .collect();
    totals.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
    println!("most frequent stems: {:?}", &totals[..8]);
    Ok(())
}
