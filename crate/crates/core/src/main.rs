use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use topictrend::pipeline::{emit_report, run_steps, PipelineConfig, ReportFormat, RunManifest, Step};
use topictrend::Error;

/// Topic modeling and trend econometrics for bibliographic corpora.
///
/// Exit codes: 0 success, 1 invalid input or configuration, 2 stage failure.
#[derive(Parser)]
#[command(name = "topictrend", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Configuration whose output directory holds the run; `--out` alone suffices.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// tables or plotdata.
    #[arg(long, default_value = "tables")]
    format: ReportFormat,
    /// Sections to emit; all when omitted.
    #[arg(long = "section")]
    sections: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load, select and preprocess records into a document-term archive.
    Ingest(Common),
    /// Coherence/exclusivity scan over the configured K range.
    SelectK(Common),
    /// Fit the topic model.
    FitTopics(Common),
    /// Yearly prevalence, top-probability trend, dominance test and densities.
    Trends(Common),
    /// Unit-root battery on the prevalence series.
    Unitroot(Common),
    /// Citation regressions on topic shares.
    Regress(Common),
    /// Johansen and Engle-Granger tests.
    Cointegration(Common),
    /// Lag selection, VAR estimates and residual diagnostics.
    Var(Common),
    /// Error-correction model at the selected rank.
    Vecm(Common),
    /// Granger-causality Wald tests.
    Granger(Common),
    /// Orthogonalised impulse responses.
    Irf(Common),
    /// Forecast error variance decomposition.
    Fevd(Common),
    /// Document embeddings and the yearly similarity series.
    Embed(Common),
    /// Every configured stage.
    Run(Common),
    /// Tables or long-form plot data from a finished run.
    Report(ReportArgs),
}

fn load(config: &PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> topictrend::Result<PipelineConfig> {
    let mut c = PipelineConfig::from_file(config)?;
    if let Some(s) = seed {
        c.seed = s;
    }
    if let Some(o) = out {
        c.out = o;
    }
    Ok(c)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Stage { .. } => 2,
        _ => 1,
    }
}

fn execute(command: Command) -> Result<(), Error> {
    let (common, steps) = match command {
        Command::Report(args) => return report(args),
        Command::Ingest(c) => (c, vec![Step::Ingest]),
        Command::SelectK(c) => (c, vec![Step::SelectK]),
        Command::FitTopics(c) => (c, vec![Step::FitTopics]),
        Command::Trends(c) => (c, vec![Step::Trends]),
        Command::Unitroot(c) => (c, vec![Step::UnitRoot]),
        Command::Regress(c) => (c, vec![Step::Regress]),
        Command::Cointegration(c) => (c, vec![Step::Cointegration]),
        Command::Var(c) => (c, vec![Step::Var]),
        Command::Vecm(c) => (c, vec![Step::Vecm]),
        Command::Granger(c) => (c, vec![Step::Granger]),
        Command::Irf(c) => (c, vec![Step::Irf]),
        Command::Fevd(c) => (c, vec![Step::Fevd]),
        Command::Embed(c) => (c, vec![Step::Embed]),
        Command::Run(c) => {
            let config = load(&c.config, c.seed, c.out.clone())?;
            let steps = topictrend::pipeline::enabled_steps(&config);
            return summarize(&config, run_steps(&config, &steps)?);
        }
    };
    let config = load(&common.config, common.seed, common.out)?;
    summarize(&config, run_steps(&config, &steps)?)
}

fn summarize(config: &PipelineConfig, manifest: RunManifest) -> Result<(), Error> {
    for stage in &manifest.stages {
        println!("{:<14} {} artifacts", stage.name, stage.artifacts.len());
    }
    for w in manifest.warnings() {
        eprintln!("warning: {w}");
    }
    println!("manifest: {}", config.out.join(topictrend::pipeline::MANIFEST_FILE).display());
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Error> {
    let out = match (&args.config, args.out) {
        (_, Some(o)) => o,
        (Some(c), None) => load(c, args.seed, None)?.out,
        (None, None) => return Err(Error::Config("report needs --out or --config".into())),
    };
    let manifest = RunManifest::read(&out)?;
    if let Some(stage) = &manifest.failed_stage {
        eprintln!("warning: the run failed in stage {stage}; reporting the sections it completed");
    }
    for path in emit_report(&manifest, &out, args.format, &args.sections)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
