//! Choosing the number of topics with the coherence/exclusivity ratio.

use topictrend::synthetic::two_topic_corpus;
use topictrend::topic_model::{k_scan, ser_rows, CovariateDesign, FitOptions};

fn main() -> topictrend::Result<()> {
    // The arithmetic on hand-made (K, coherence, exclusivity) triples.
    for r in ser_rows(&[(10, -80.0, 10.0), (11, -60.0, 10.0)]) {
        println!("K={} SER={:.2} dSER={:?} wSER={:?} improves={}", r.k, r.ser, r.delta_ser, r.wser, r.improvement);
    }

    // A scan over K on a corpus generated from two topics.
    let synthetic = two_topic_corpus(11)?;
    let design = CovariateDesign::intercept_only(synthetic.corpus.num_docs());
    let report = k_scan(&synthetic.corpus, &design, (2, 5), &FitOptions::default())?;
    println!("\n{}", report.to_table().to_csv()?);
    println!("highlighted K: {:?}", report.highlight);
    Ok(())
}
