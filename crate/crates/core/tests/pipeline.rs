mod common;

use std::fs;

use common::{data, quick_config};
use topictrend::pipeline::{
    emit_report, run, run_steps, PipelineConfig, ReportFormat, RunManifest, Step, FAILED_MARKER, MANIFEST_FILE,
};
use topictrend::Error;

#[test]
fn missing_stopword_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = quick_config(dir.path());
    let missing = dir.path().join("no_such_stopwords.txt");
    c.corpus.custom_stopwords = Some(missing.clone());
    match run(&c) {
        Err(Error::Config(msg)) => assert!(msg.contains(&missing.display().to_string()), "{msg}"),
        other => panic!("expected a configuration error, got {other:?}"),
    }
    assert!(!dir.path().join(MANIFEST_FILE).exists());
}

#[test]
fn corpus_only_config_lists_only_corpus_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = PipelineConfig::default();
    c.corpus.input = data("synthetic_records.csv");
    c.out = dir.path().to_path_buf();
    let m = run(&c).unwrap();
    assert_eq!(m.stages.len(), 1);
    let mut paths = m.artifact_paths();
    paths.sort();
    assert_eq!(
        paths,
        vec![
            "corpus/corpus_manifest.json",
            "corpus/counts.tsv",
            "corpus/documents.txt",
            "corpus/records.jsonl",
            "corpus/totals.csv",
            "corpus/vocabulary.txt",
        ]
    );
}

#[test]
fn rerun_reproduces_manifest_and_stage_isolation_holds() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&quick_config(a.path())).unwrap();
    run(&quick_config(b.path())).unwrap();
    let ma = fs::read(a.path().join(MANIFEST_FILE)).unwrap();
    let mb = fs::read(b.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(ma, mb);

    // Dropping the downstream stages leaves upstream hashes untouched.
    let c = tempfile::tempdir().unwrap();
    let mut reduced = quick_config(c.path());
    reduced.embeddings = None;
    reduced.multivar = None;
    let full = RunManifest::read(a.path()).unwrap();
    let part = run(&reduced).unwrap();
    for stage in &part.stages {
        assert_eq!(Some(stage), full.stage(&stage.name), "{}", stage.name);
    }
    assert!(part.stage("embeddings").is_none());
}

#[test]
fn stage_failure_names_the_stage_and_keeps_partial_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = quick_config(dir.path());
    c.multivar.as_mut().unwrap().variables = vec!["no_such_series".into()];
    match run_steps(&c, &[Step::Var]) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "var"),
        other => panic!("expected a stage failure, got {other:?}"),
    }
    let marker = fs::read_to_string(dir.path().join(FAILED_MARKER)).unwrap();
    assert!(marker.starts_with("stage var:"), "{marker}");
    let m = RunManifest::read(dir.path()).unwrap();
    assert_eq!(m.failed_stage.as_deref(), Some("var"));
    assert!(dir.path().join("topics/fit.json").exists());
    assert!(m.stage("trends").is_some());
}

#[test]
fn step_without_configuration_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = quick_config(dir.path());
    c.embeddings = None;
    assert!(matches!(run_steps(&c, &[Step::Embed]), Err(Error::Config(_))));
}

#[test]
fn report_reshapes_sections() {
    let dir = tempfile::tempdir().unwrap();
    let c = quick_config(dir.path());
    let m = run_steps(&c, &[Step::Trends, Step::Fevd]).unwrap();
    let files = emit_report(&m, dir.path(), ReportFormat::PlotData, &["prevalence".into(), "fevd".into()]).unwrap();
    assert_eq!(files.len(), 2);

    let prevalence = fs::read_to_string(&files[0]).unwrap();
    let rows: Vec<&str> = prevalence.lines().skip(1).collect();
    let years = 22;
    assert_eq!(rows.len(), 3 * years, "one row per (category, year)");
    assert!(rows[0].starts_with("game_theory,2000,"));

    let fevd = fs::read_to_string(&files[1]).unwrap();
    let banded = fevd
        .lines()
        .skip(1)
        .filter(|l| !l.split(',').nth(1).unwrap().eq("0"))
        .all(|l| {
            let f: Vec<&str> = l.split(',').collect();
            !f[3].is_empty() && !f[4].is_empty()
        });
    assert!(banded, "FEVD rows after step 0 carry bands");

    match emit_report(&m, dir.path(), ReportFormat::Tables, &["similarity".into()]) {
        Err(Error::MissingSection(s)) => assert_eq!(s, "similarity"),
        other => panic!("expected a missing section, got {other:?}"),
    }
    let tables = emit_report(&m, dir.path(), ReportFormat::Tables, &[]).unwrap();
    assert_eq!(tables.len(), m.sections.len());
}

#[test]
fn tampered_artifact_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_steps(&quick_config(dir.path()), &[Step::Trends]).unwrap();
    fs::write(dir.path().join("trends/prevalence.csv"), "year\n").unwrap();
    assert!(emit_report(&m, dir.path(), ReportFormat::Tables, &["prevalence".into()]).is_err());
}

/// Plot-data report of a fixed run compared byte for byte with the blessed
/// snapshot. Set `BLESS=1` to rewrite the snapshot.
#[test]
fn golden_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = quick_config(dir.path());
    c.multivar.as_mut().unwrap().replications = 20;
    let m = run_steps(&c, &[Step::Trends, Step::Fevd, Step::Embed]).unwrap();
    let mut report = String::new();
    for path in emit_report(&m, dir.path(), ReportFormat::PlotData, &[]).unwrap() {
        report.push_str(&format!("## {}\n", path.file_name().unwrap().to_string_lossy()));
        report.push_str(&fs::read_to_string(&path).unwrap());
    }
    let golden = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/synthetic_plotdata.txt");
    if std::env::var_os("BLESS").is_some() {
        fs::write(&golden, &report).unwrap();
        eprintln!("wrote {}", golden.display());
    }
    let expected = fs::read_to_string(&golden).unwrap();
    assert!(report == expected, "report differs from {}", golden.display());
}
