//! Covariate-aware mixed-membership topic model.
//!
//! Fitting ([`fit`]), topic labels ([`top_words`]), quality scores
//! ([`coherence_exclusivity`]), topic-count scan ([`k_scan`]) and prevalence
//! effects ([`estimate_effect`]).

mod design;
mod effects;
mod em;
mod kscan;
mod quality;
mod words;

pub use design::CovariateDesign;
pub use effects::{estimate_effect, prevalence_coefficients, EffectEstimate, Uncertainty, INTERCEPT};
pub use em::{fit, softmax_with_reference, FitOptions, InitMode, TopicModelFit, FIT_ARCHIVE_VERSION};
pub use kscan::{highlight, k_scan, ser_rows, KScanRow, KSelectionReport};
pub use quality::{
    coherence_exclusivity, coherence_exclusivity_from_beta, semantic_coherence, TopicQuality,
    DEFAULT_TOP_M,
};
pub use words::{
    exclusivity, frex_scores, label_topics, top_words, top_words_from_beta, WordMetric,
    DEFAULT_FREX_WEIGHT,
};
