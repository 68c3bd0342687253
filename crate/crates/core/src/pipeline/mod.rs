//! Configuration-driven orchestration: stages, hashed run manifest and
//! report emission.

mod config;
mod manifest;
mod report;
mod run;

pub use config::{
    CorpusConfig, EmbeddingConfig, MultivarConfig, PipelineConfig, RegressionConfig, TopicConfig, TrendConfig,
};
pub use manifest::{
    sha256_file, sha256_hex, Artifact, PlotShape, RunManifest, Section, StageRecord, FAILED_MARKER, MANIFEST_FILE,
    TIMINGS_FILE,
};
pub use report::{emit_report, plot_rows, ReportFormat, PLOT_COLUMNS};
pub use run::{config_fingerprint, enabled_steps, run, run_steps, Step};
