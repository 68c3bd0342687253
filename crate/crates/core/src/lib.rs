//! Topic modeling and econometric trend analysis for bibliographic corpora.
//!
//! The crate is organised as a pipeline of independent modules:
//!
//! * [`corpus`]: load exported records, select the topical subset, clean and
//!   stem the text and build a sparse document-term matrix.
//! * [`topic_model`]: covariate-aware logistic-normal topic model fitted by
//!   EM, with FREX labels, coherence/exclusivity scoring and a K scan.
//! * [`trend_series`]: yearly prevalence series, unit-root batteries,
//!   one-sided Kolmogorov-Smirnov dominance and density curves.
//! * [`citation_regression`]: citation-per-year regressions with
//!   year×journal fixed effects and clustered standard errors.
//! * [`multivar`]: VAR/VECM estimation, cointegration, Granger causality,
//!   impulse responses, FEVD and residual diagnostics.
//! * [`embeddings`]: PV-DBOW document vectors and within-year similarity.
//! * [`pipeline`]: configuration-driven orchestration and report emission.

pub mod citation_regression;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod linalg;
pub mod multivar;
pub mod pipeline;
pub mod pvalue;
pub mod rng;
pub mod synthetic;
pub mod table;
pub mod topic_model;
pub mod trend_series;

pub use error::{Error, Result};
