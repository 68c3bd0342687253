use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::table::Table;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FAILED_MARKER: &str = "FAILED";
/// Wall-clock stage timings, kept outside the manifest so that manifests of
/// identical runs compare byte for byte.
pub const TIMINGS_FILE: &str = "timings.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
}

/// How a table turns into long-form plot rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotShape {
    /// Column `x` is the abscissa; every listed column (all others when
    /// empty) becomes one series.
    Wide { x: String, columns: Vec<String> },
    /// Already long: series label joined from `series` columns.
    Long {
        series: Vec<String>,
        x: String,
        y: String,
        low: Option<String>,
        high: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub stage: String,
    pub table: String,
    pub plot: Option<PlotShape>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub seed: u64,
    /// Hash of the configuration with input paths replaced by content hashes.
    pub config_sha256: String,
    pub stages: Vec<StageRecord>,
    pub sections: BTreeMap<String, Section>,
    /// Stage that aborted the run, if any.
    pub failed_stage: Option<String>,
}

impl RunManifest {
    pub fn read(out_dir: &Path) -> Result<Self> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn artifact_paths(&self) -> Vec<&str> {
        self.stages
            .iter()
            .flat_map(|s| s.artifacts.iter().map(|a| a.path.as_str()))
            .collect()
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn warnings(&self) -> Vec<String> {
        self.stages
            .iter()
            .flat_map(|s| s.warnings.iter().map(move |w| format!("{}: {w}", s.name)))
            .collect()
    }
}

/// Writes artifacts under the output directory and records their hashes.
pub(crate) struct ArtifactWriter {
    pub root: PathBuf,
    pub manifest: RunManifest,
}

impl ArtifactWriter {
    pub fn new(root: PathBuf, seed: u64, config_sha256: String) -> Self {
        ArtifactWriter {
            root,
            manifest: RunManifest {
                seed,
                config_sha256,
                stages: Vec::new(),
                sections: BTreeMap::new(),
                failed_stage: None,
            },
        }
    }

    pub fn begin(&mut self, stage: &str) {
        self.manifest.stages.push(StageRecord {
            name: stage.into(),
            artifacts: Vec::new(),
            warnings: Vec::new(),
        });
    }

    fn current(&mut self) -> &mut StageRecord {
        self.manifest.stages.last_mut().expect("stage begun")
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.current().warnings.push(message.into());
    }

    pub fn bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.register(rel, bytes)
    }

    /// Records a file some other writer already placed under the root.
    pub fn existing(&mut self, rel: &str) -> Result<()> {
        let path = self.root.join(rel);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        self.register(rel, &bytes)
    }

    fn register(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let artifact = Artifact {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        };
        let stage = self.current();
        stage.artifacts.retain(|a| a.path != rel);
        stage.artifacts.push(artifact);
        Ok(())
    }

    pub fn table(&mut self, section: &str, rel: &str, table: &Table, plot: Option<PlotShape>) -> Result<()> {
        self.bytes(rel, table.to_csv()?.as_bytes())?;
        let stage = self.current().name.clone();
        self.manifest.sections.insert(
            section.to_string(),
            Section {
                stage,
                table: rel.to_string(),
                plot,
            },
        );
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.bytes(rel, s.as_bytes())
    }

    pub fn finish(&self) -> Result<()> {
        let path = self.root.join(MANIFEST_FILE);
        fs::write(&path, self.manifest.to_json()?).map_err(|e| Error::io(&path, e))
    }
}

pub(crate) fn wide(x: &str) -> Option<PlotShape> {
    Some(PlotShape::Wide {
        x: x.into(),
        columns: Vec::new(),
    })
}

pub(crate) fn wide_columns(x: &str, columns: &[&str]) -> Option<PlotShape> {
    Some(PlotShape::Wide {
        x: x.into(),
        columns: columns.iter().map(|c| c.to_string()).collect(),
    })
}

pub(crate) fn long(series: &[&str], x: &str, y: &str, band: Option<(&str, &str)>) -> Option<PlotShape> {
    Some(PlotShape::Long {
        series: series.iter().map(|c| c.to_string()).collect(),
        x: x.into(),
        y: y.into(),
        low: band.map(|b| b.0.to_string()),
        high: band.map(|b| b.1.to_string()),
    })
}
