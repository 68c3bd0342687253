//! Fit the covariate-aware topic model, label topics and estimate how
//! prevalence moves with the publication year.

use std::path::Path;

use topictrend::corpus::{build_matrix, load_records, preprocess, select_subset, ColumnSchema, LoadOptions, StopwordConfig};
use topictrend::topic_model::{
    coherence_exclusivity, estimate_effect, fit, label_topics, CovariateDesign, FitOptions, InitMode, Uncertainty,
    WordMetric,
};

fn main() -> topictrend::Result<()> {
    let input = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_records.csv");
    let (records, _) = load_records(&input, &ColumnSchema::default(), &LoadOptions::default())?;
    let records = select_subset(&records, &["collus".into(), "cartel".into(), "bidding ring".into()])?;
    let stop = StopwordConfig::default();
    let docs: Vec<_> = records.iter().map(|r| (r.id.clone(), preprocess(&r.r#abstract, &stop))).collect();
    let corpus = build_matrix(&docs)?;

    let design = CovariateDesign::from_records(&records, true, true)?;
    let opts = FitOptions {
        seed: 7,
        init: InitMode::Spectral,
        ..FitOptions::default()
    };
    let model = fit(&corpus, &design, 4, &opts)?;
    println!(
        "EM: {} iterations, bound {:.2} -> {:.2}",
        model.iterations_used,
        model.bound_trace[0],
        model.bound_trace.last().unwrap()
    );

    let frex = label_topics(&model, &corpus.vocabulary, 6, WordMetric::Frex { weight: 0.7 })?;
    let quality = coherence_exclusivity(&model, &corpus, 10)?;
    for (k, words) in frex.iter().enumerate() {
        println!(
            "topic {}: {:<55} SC {:>7.2} EX {:.3}",
            k + 1,
            words.join(" "),
            quality.coherence[k],
            quality.exclusivity[k]
        );
    }

    println!("\nchange in expected prevalence per year:");
    for e in estimate_effect(&model, &design, "year", Uncertainty::Analytic)? {
        println!("  topic {}: {:+.4} [{:+.4}, {:+.4}]", e.topic + 1, e.estimate, e.ci.0, e.ci.1);
    }
    Ok(())
}
