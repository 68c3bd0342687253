use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::manifest::{sha256_hex, PlotShape, RunManifest, Section};
use crate::error::{Error, Result};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// Each section's table as written by its stage.
    Tables,
    /// Long form: series, x, y, band_low, band_high.
    PlotData,
}

impl ReportFormat {
    fn dir(self) -> &'static str {
        match self {
            ReportFormat::Tables => "tables",
            ReportFormat::PlotData => "plotdata",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tables" => Ok(ReportFormat::Tables),
            "plotdata" => Ok(ReportFormat::PlotData),
            _ => Err(Error::Config(format!("unknown report format {s:?} (expected tables or plotdata)"))),
        }
    }
}

pub const PLOT_COLUMNS: [&str; 5] = ["series", "x", "y", "band_low", "band_high"];

/// Writes one file per section under `<out>/report/<format>/`. An empty
/// `sections` list selects every section (for plot data, every section with
/// a plot form). Artifacts whose bytes no longer match the manifest are
/// refused.
pub fn emit_report(manifest: &RunManifest, out_dir: &Path, format: ReportFormat, sections: &[String]) -> Result<Vec<PathBuf>> {
    let chosen: Vec<(&String, &Section)> = if sections.is_empty() {
        manifest
            .sections
            .iter()
            .filter(|(_, s)| format == ReportFormat::Tables || s.plot.is_some())
            .collect()
    } else {
        sections
            .iter()
            .map(|name| {
                manifest
                    .sections
                    .get_key_value(name)
                    .ok_or_else(|| Error::MissingSection(name.clone()))
            })
            .collect::<Result<_>>()?
    };
    let dir = out_dir.join("report").join(format.dir());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut written = Vec::new();
    for (name, section) in chosen {
        let table = load_section(manifest, out_dir, section)?;
        let rendered = match format {
            ReportFormat::Tables => table,
            ReportFormat::PlotData => {
                let shape = section
                    .plot
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter(format!("section `{name}` has no plot form")))?;
                plot_rows(&table, shape)?
            }
        };
        let path = dir.join(format!("{name}.csv"));
        fs::write(&path, rendered.to_csv()?).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn load_section(manifest: &RunManifest, out_dir: &Path, section: &Section) -> Result<Table> {
    let recorded = manifest
        .stages
        .iter()
        .flat_map(|s| &s.artifacts)
        .find(|a| a.path == section.table)
        .ok_or_else(|| Error::InvalidInput(format!("{} is not a recorded artifact", section.table)))?;
    let path = out_dir.join(&section.table);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if sha256_hex(&bytes) != recorded.sha256 {
        return Err(Error::InvalidInput(format!("{} changed after the run", section.table)));
    }
    let mut reader = csv::Reader::from_reader(bytes.as_slice());
    let mut table = Table::new(reader.headers()?.iter());
    for rec in reader.records() {
        table.push(rec?.iter());
    }
    Ok(table)
}

fn column(table: &Table, name: &str) -> Result<usize> {
    table
        .headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::InvalidInput(format!("table has no column {name:?}")))
}

/// Reshapes a table into plot rows; cells left empty in `y` are skipped.
pub fn plot_rows(table: &Table, shape: &PlotShape) -> Result<Table> {
    let mut out = Table::new(PLOT_COLUMNS);
    match shape {
        PlotShape::Wide { x, columns } => {
            let xi = column(table, x)?;
            let series: Vec<usize> = if columns.is_empty() {
                (0..table.headers.len()).filter(|&i| i != xi).collect()
            } else {
                columns.iter().map(|c| column(table, c)).collect::<Result<_>>()?
            };
            for s in series {
                for row in &table.rows {
                    if !row[s].is_empty() {
                        out.push([table.headers[s].as_str(), &row[xi], &row[s], "", ""]);
                    }
                }
            }
        }
        PlotShape::Long { series, x, y, low, high } => {
            let si: Vec<usize> = series.iter().map(|c| column(table, c)).collect::<Result<_>>()?;
            let (xi, yi) = (column(table, x)?, column(table, y)?);
            let li = low.as_deref().map(|c| column(table, c)).transpose()?;
            let hi = high.as_deref().map(|c| column(table, c)).transpose()?;
            for row in &table.rows {
                if row[yi].is_empty() {
                    continue;
                }
                let label: Vec<&str> = si.iter().map(|&i| row[i].as_str()).collect();
                out.push([
                    label.join("/").as_str(),
                    &row[xi],
                    &row[yi],
                    li.map(|i| row[i].as_str()).unwrap_or(""),
                    hi.map(|i| row[i].as_str()).unwrap_or(""),
                ]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_prevalence_becomes_one_row_per_category_year() {
        let mut t = Table::new(["year", "game", "data"]);
        t.push(["2000", "0.6", "0.4"]);
        t.push(["2001", "0.5", "0.5"]);
        let shape = PlotShape::Wide { x: "year".into(), columns: vec![] };
        let long = plot_rows(&t, &shape).unwrap();
        assert_eq!(long.rows.len(), 4);
        assert_eq!(long.rows[0], vec!["game", "2000", "0.6", "", ""]);
        assert_eq!(long.rows[3], vec!["data", "2001", "0.5", "", ""]);
    }

    #[test]
    fn long_rows_carry_bands() {
        let mut t = Table::new(["impulse", "response", "step", "fevd", "se", "lower", "upper"]);
        t.push(["a", "b", "1", "0.2", "0.05", "0.1", "0.3"]);
        let shape = PlotShape::Long {
            series: vec!["impulse".into(), "response".into()],
            x: "step".into(),
            y: "fevd".into(),
            low: Some("lower".into()),
            high: Some("upper".into()),
        };
        let long = plot_rows(&t, &shape).unwrap();
        assert_eq!(long.rows[0], vec!["a/b", "1", "0.2", "0.1", "0.3"]);
        let bad = PlotShape::Wide { x: "nope".into(), columns: vec![] };
        assert!(plot_rows(&t, &bad).is_err());
    }
}
