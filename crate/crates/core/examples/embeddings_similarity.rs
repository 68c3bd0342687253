//! Paragraph vectors for each abstract and the mean within-year similarity.

use std::path::Path;

use topictrend::corpus::{build_matrix, load_records, preprocess, ColumnSchema, LoadOptions, StopwordConfig};
use topictrend::embeddings::{similarity_series, train_pvdbow, EmbeddingOptions};

fn main() -> topictrend::Result<()> {
    let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_records.csv");
    let (records, _) = load_records(&input, &ColumnSchema::default(), &LoadOptions::default())?;
    let stop = StopwordConfig::default();
    let docs: Vec<_> = records.iter().map(|r| (r.id.clone(), preprocess(&r.r#abstract, &stop))).collect();
    let corpus = build_matrix(&docs)?;

    let model = train_pvdbow(&corpus, &EmbeddingOptions { seed: 4, ..EmbeddingOptions::default() })?;
    println!(
        "{} vectors of dimension {}; loss per epoch {:.3} -> {:.3}",
        model.doc_vectors.nrows(),
        model.dim,
        model.epoch_loss[0],
        model.epoch_loss.last().unwrap()
    );
    let series = similarity_series(&model, &records, false)?;
    print!("{}", series.to_table().to_csv()?);
    Ok(())
}
