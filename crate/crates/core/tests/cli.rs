mod common;

use std::process::Command;

use common::data;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topictrend"))
}

const SUBCOMMANDS: [&str; 15] = [
    "ingest", "select-k", "fit-topics", "trends", "unitroot", "regress", "cointegration", "var", "vecm", "granger",
    "irf", "fevd", "embed", "report", "run",
];

#[test]
fn help_lists_every_subcommand() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for s in SUBCOMMANDS {
        assert!(text.contains(s), "missing {s}");
    }
    for s in SUBCOMMANDS.iter().filter(|s| **s != "report") {
        let out = bin().args([s, "--help"]).output().unwrap();
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("--config") && text.contains("--seed") && text.contains("--out"), "{s}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let config = data("synthetic.toml");
    let config = config.to_str().unwrap();

    let usage = bin().arg("no-such-command").output().unwrap();
    assert_eq!(usage.status.code(), Some(1));

    let missing = bin().args(["ingest", "--config", "/nonexistent/config.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));

    let ok = bin().args(["ingest", "--config", config, "--out", out, "--seed", "5"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join("corpus/counts.tsv").exists());

    let report = bin().args(["report", "--out", out, "--section", "corpus_totals"]).output().unwrap();
    assert_eq!(report.status.code(), Some(0));
    assert!(dir.path().join("report/tables/corpus_totals.csv").exists());
    let absent = bin().args(["report", "--out", out, "--section", "fevd"]).output().unwrap();
    assert_eq!(absent.status.code(), Some(1));

    // A category map that names no usable split category makes the trends stage fail.
    let bad = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(data("synthetic.toml"))
        .unwrap()
        .replace("split_categories = [\"external\"]", "split_categories = [\"nothing\"]")
        .replace("k_range = [2, 6]", "")
        .replace("synthetic_records.csv", data("synthetic_records.csv").to_str().unwrap())
        .replace("synthetic_categories.csv", data("synthetic_categories.csv").to_str().unwrap());
    std::fs::write(&bad, text).unwrap();
    let failed = bin().args(["trends", "--config", bad.to_str().unwrap(), "--out", out]).output().unwrap();
    assert_eq!(failed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&failed.stderr).contains("trends"));
    assert!(dir.path().join("FAILED").exists());
}
