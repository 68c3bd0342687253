//! The whole flow from one configuration file, followed by the plot-data
//! report.
//!
//! cargo run --example pipeline_run -- [config] [out]

use std::path::{Path, PathBuf};

use topictrend::pipeline::{emit_report, run, PipelineConfig, ReportFormat};

fn main() -> topictrend::Result<()> {
    let mut args = std::env::args().skip(1);
    let config_path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic.toml"));
    let mut config = PipelineConfig::from_file(&config_path)?;
    if let Some(out) = args.next() {
        config.out = out.into();
    }
    let manifest = run(&config)?;
    for stage in &manifest.stages {
        println!("{:<14} {:>2} artifacts", stage.name, stage.artifacts.len());
    }
    for w in manifest.warnings() {
        println!("warning: {w}");
    }
    let files = emit_report(&manifest, &config.out, ReportFormat::PlotData, &[])?;
    println!("{} plot-data files under {}", files.len(), config.out.join("report").display());
    Ok(())
}
