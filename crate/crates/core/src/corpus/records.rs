use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JournalType {
    Top5,
    GeneralInterest,
    Field,
    IndustrialOrganization,
    Antitrust,
}

impl JournalType {
    pub const ALL: [JournalType; 5] = [
        JournalType::Top5,
        JournalType::GeneralInterest,
        JournalType::Field,
        JournalType::IndustrialOrganization,
        JournalType::Antitrust,
    ];

    pub fn code(self) -> &'static str {
        match self {
            JournalType::Top5 => "T5",
            JournalType::GeneralInterest => "GI",
            JournalType::Field => "FI",
            JournalType::IndustrialOrganization => "IO",
            JournalType::Antitrust => "AT",
        }
    }
}

impl fmt::Display for JournalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for JournalType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "t5" | "top5" => JournalType::Top5,
            "gi" | "generalinterest" => JournalType::GeneralInterest,
            "fi" | "field" => JournalType::Field,
            "io" | "industrialorganization" => JournalType::IndustrialOrganization,
            "at" | "antitrust" => JournalType::Antitrust,
            _ => return Err(Error::UnknownJournalType(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PaperType {
    Theory,
    Empirics,
    Experiment,
    Policy,
}

impl FromStr for PaperType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theory" => Ok(PaperType::Theory),
            "empirics" | "empirical" => Ok(PaperType::Empirics),
            "experiment" | "experimental" => Ok(PaperType::Experiment),
            "policy" => Ok(PaperType::Policy),
            other => Err(Error::Parse(format!("unknown paper type {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub title: String,
    pub r#abstract: String,
    pub keywords: Vec<String>,
    pub year: i32,
    pub journal: String,
    pub journal_type: JournalType,
    pub citation_count: u64,
    pub open_access: bool,
    /// Corresponding author, or the author team when the export lacks one.
    pub corresponding_author: Option<String>,
    pub paper_type: Option<PaperType>,
}

/// Maps record fields onto the column (or JSON key) names of an export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnSchema {
    pub id: String,
    pub r#abstract: String,
    pub year: String,
    pub journal: String,
    pub title: Option<String>,
    pub keywords: Option<String>,
    pub journal_type: Option<String>,
    pub citations: Option<String>,
    pub open_access: Option<String>,
    pub corresponding_author: Option<String>,
    pub authors: Option<String>,
    pub paper_type: Option<String>,
    /// Separator between keywords inside the keyword column.
    pub keyword_separator: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            id: "id".into(),
            r#abstract: "abstract".into(),
            year: "year".into(),
            journal: "journal".into(),
            title: Some("title".into()),
            keywords: Some("keywords".into()),
            journal_type: Some("journal_type".into()),
            citations: Some("citations".into()),
            open_access: Some("open_access".into()),
            corresponding_author: Some("corresponding_author".into()),
            authors: Some("authors".into()),
            paper_type: Some("paper_type".into()),
            keyword_separator: ";".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// Delimiter-separated values with a header row.
    Csv,
    /// One JSON object per line.
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    pub format: InputFormat,
    pub delimiter: char,
    /// Inclusive year window.
    pub year_range: (i32, i32),
    /// Journal name → type, consulted when the export has no type column.
    pub journal_types: HashMap<String, JournalType>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            format: InputFormat::Csv,
            delimiter: ',',
            year_range: (2000, 2021),
            journal_types: HashMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub rows_read: usize,
    pub dropped_empty_abstract: usize,
    pub dropped_out_of_range: usize,
    pub author_team_fallbacks: usize,
}

impl LoadSummary {
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.dropped_empty_abstract > 0 {
            out.push(format!(
                "dropped {} records without abstract",
                self.dropped_empty_abstract
            ));
        }
        if self.dropped_out_of_range > 0 {
            out.push(format!(
                "dropped {} records outside the year range",
                self.dropped_out_of_range
            ));
        }
        if self.author_team_fallbacks > 0 {
            out.push(format!(
                "{} records use the author team in place of a corresponding author",
                self.author_team_fallbacks
            ));
        }
        out
    }
}

/// A row as field-name → raw string, independent of the input format.
type RawRow = HashMap<String, String>;

pub fn load_records(
    path: &Path,
    schema: &ColumnSchema,
    options: &LoadOptions,
) -> Result<(Vec<DocumentRecord>, LoadSummary)> {
    let rows = match options.format {
        InputFormat::Csv => read_delimited(path, options.delimiter)?,
        InputFormat::Jsonl => read_jsonl(path)?,
    };
    records_from_rows(rows, schema, options)
}

fn read_delimited(path: &Path, delimiter: char) -> Result<Vec<(usize, RawRow)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if !delimiter.is_ascii() {
        return Err(Error::InvalidParameter(format!("non-ASCII delimiter {delimiter:?}")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .flexible(false)
        .from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = headers
            .iter()
            .cloned()
            .zip(rec.iter().map(str::to_string))
            .collect();
        rows.push((i + 2, row));
    }
    Ok(rows)
}

fn read_jsonl(path: &Path) -> Result<Vec<(usize, RawRow)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse(format!("line {}: expected a JSON object", i + 1)))?;
        let row = obj
            .iter()
            .map(|(k, v)| {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Null => String::new(),
                    serde_json::Value::Array(items) => items
                        .iter()
                        .map(|x| x.as_str().map(str::to_string).unwrap_or_else(|| x.to_string()))
                        .collect::<Vec<_>>()
                        .join(";"),
                    other => other.to_string(),
                };
                (k.clone(), s)
            })
            .collect();
        rows.push((i + 1, row));
    }
    Ok(rows)
}

fn field<'a>(row: &'a RawRow, column: Option<&String>) -> Option<&'a str> {
    column
        .and_then(|c| row.get(c))
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
}

fn parse_bool(s: &str, line: usize) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" | "t" => Ok(true),
        "0" | "false" | "no" | "n" | "f" => Ok(false),
        other => Err(Error::Parse(format!("line {line}: invalid boolean {other:?}"))),
    }
}

fn records_from_rows(
    rows: Vec<(usize, RawRow)>,
    schema: &ColumnSchema,
    options: &LoadOptions,
) -> Result<(Vec<DocumentRecord>, LoadSummary)> {
    let mut summary = LoadSummary::default();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        summary.rows_read += 1;
        let id = field(&row, Some(&schema.id))
            .ok_or_else(|| Error::Parse(format!("line {line}: missing id")))?
            .to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let Some(abstract_text) = field(&row, Some(&schema.r#abstract)) else {
            summary.dropped_empty_abstract += 1;
            continue;
        };
        let year_raw = field(&row, Some(&schema.year))
            .ok_or_else(|| Error::Parse(format!("line {line}: missing year")))?;
        let year: i32 = year_raw
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: unparsable year {year_raw:?}")))?;
        if year < options.year_range.0 || year > options.year_range.1 {
            summary.dropped_out_of_range += 1;
            continue;
        }
        let journal = field(&row, Some(&schema.journal))
            .ok_or_else(|| Error::Parse(format!("line {line}: missing journal")))?
            .to_string();
        let journal_type = match field(&row, schema.journal_type.as_ref()) {
            Some(label) => label.parse()?,
            None => *options
                .journal_types
                .get(&journal)
                .ok_or_else(|| Error::UnknownJournalType(journal.clone()))?,
        };
        let citation_count = match field(&row, schema.citations.as_ref()) {
            Some(c) => c
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("line {line}: invalid citation count {c:?}")))?,
            None => 0,
        };
        let open_access = match field(&row, schema.open_access.as_ref()) {
            Some(v) => parse_bool(v, line)?,
            None => false,
        };
        let corresponding_author = match field(&row, schema.corresponding_author.as_ref()) {
            Some(a) => Some(a.to_string()),
            None => {
                let team = field(&row, schema.authors.as_ref()).map(str::to_string);
                if team.is_some() {
                    summary.author_team_fallbacks += 1;
                }
                team
            }
        };
        let keywords = field(&row, schema.keywords.as_ref())
            .map(|k| {
                k.split(schema.keyword_separator.as_str())
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            })
            .unwrap_or_default();
        let paper_type = field(&row, schema.paper_type.as_ref())
            .map(str::parse)
            .transpose()?;
        out.push(DocumentRecord {
            id,
            title: field(&row, schema.title.as_ref()).unwrap_or("").to_string(),
            r#abstract: abstract_text.to_string(),
            keywords,
            year,
            journal,
            journal_type,
            citation_count,
            open_access,
            corresponding_author,
            paper_type,
        });
    }
    Ok((out, summary))
}
