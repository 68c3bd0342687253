//! Citations per year regressed on topic shares with year x journal fixed
//! effects and author-clustered standard errors.

use topictrend::citation_regression::{
    citation_rows, fit_all_topics, regression_table, transform_citations, CitationModelOptions, CitationTransform,
};
use topictrend::synthetic::{generating_theta, synthetic_records, RecordSpec};

fn main() -> topictrend::Result<()> {
    for c in [0u64, 3] {
        println!("asinh of {c} citations over 4 years: {:?}", transform_citations(c, 4.0, CitationTransform::Ihs)?);
    }

    // The generator raises citations with the empirical share (theme 2).
    let rows = synthetic_records(&RecordSpec::default())?;
    let theta = generating_theta(&rows);
    let records: Vec<_> = rows.into_iter().map(|r| r.record).collect();
    let data = citation_rows(&records, &theta)?;
    let opts = CitationModelOptions {
        transform: CitationTransform::LogCY,
        reference_year: 2021,
        author_effects: true,
    };
    let transforms = [CitationTransform::LogCY, CitationTransform::Log1pCY, CitationTransform::Ihs];
    let fits = fit_all_topics(&data, theta.ncols(), &transforms, &opts)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    print!("{}", regression_table(&fits).to_csv()?);
    Ok(())
}
