//! Writes the synthetic bibliographic export bundled under `data/`.
//!
//! cargo run --example synthetic_export -- [path] [seed]

use std::path::PathBuf;

use topictrend::synthetic::{synthetic_records, theme_names, write_records_csv, RecordSpec};

fn main() -> topictrend::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| "synthetic_records.csv".into());
    let seed = args.next().map(|s| s.parse().expect("integer seed")).unwrap_or(RecordSpec::default().seed);
    let rows = synthetic_records(&RecordSpec { seed, ..RecordSpec::default() })?;
    write_records_csv(&rows, &path)?;
    let empty = rows.iter().filter(|r| r.record.r#abstract.is_empty()).count();
    println!("{} records ({empty} without abstract) -> {}", rows.len(), path.display());
    println!("themes: {}", theme_names().join(", "));
    Ok(())
}
