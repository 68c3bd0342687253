use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::DocumentRecord;
use crate::error::{Error, Result};

/// Category given to topics absent from a [`CategoryMap`].
pub const UNMAPPED_LABEL: &str = "external";

/// Assignment of topics to named categories.
///
/// The file form has one `topic,category` pair per line with 1-based topic
/// numbers; blank lines and lines starting with `#` are skipped, and a first
/// line of `topic,category` is treated as a header.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryMap {
    /// 0-based topic index to category.
    pub assignments: BTreeMap<usize, String>,
}

impl CategoryMap {
    pub fn new(assignments: impl IntoIterator<Item = (usize, String)>) -> Self {
        CategoryMap {
            assignments: assignments.into_iter().collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut assignments = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (topic, category) = line
                .split_once([',', '\t'])
                .ok_or_else(|| Error::Parse(format!("category map line {}: expected topic,category", lineno + 1)))?;
            let (topic, category) = (topic.trim(), category.trim());
            if lineno == 0 && topic.eq_ignore_ascii_case("topic") {
                continue;
            }
            let number: usize = topic
                .parse()
                .map_err(|_| Error::Parse(format!("category map line {}: bad topic number {topic:?}", lineno + 1)))?;
            if number == 0 {
                return Err(Error::Parse(format!("category map line {}: topics are numbered from 1", lineno + 1)));
            }
            if category.is_empty() {
                return Err(Error::Parse(format!("category map line {}: empty category", lineno + 1)));
            }
            if assignments.insert(number - 1, category.to_string()).is_some() {
                return Err(Error::Parse(format!("category map: topic {number} assigned twice")));
            }
        }
        Ok(CategoryMap { assignments })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn category_of(&self, topic: usize) -> &str {
        self.assignments.get(&topic).map(String::as_str).unwrap_or(UNMAPPED_LABEL)
    }

    /// Category labels in first-appearance order over topics 0..k, with the
    /// unmapped bucket last when any topic falls into it.
    pub fn labels(&self, k: usize) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut unmapped = false;
        for topic in 0..k {
            match self.assignments.get(&topic) {
                Some(c) if !out.contains(c) => out.push(c.clone()),
                Some(_) => {}
                None => unmapped = true,
            }
        }
        if unmapped && !out.iter().any(|c| c == UNMAPPED_LABEL) {
            out.push(UNMAPPED_LABEL.to_string());
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum Grouping {
    Topics,
    Categories(CategoryMap),
}

/// Mean prevalence per year, one column per topic or category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceSeries {
    pub years: Vec<i32>,
    pub labels: Vec<String>,
    /// years × labels
    pub values: DMatrix<f64>,
    pub doc_counts: Vec<usize>,
    /// Years inside the observed span with no documents.
    pub missing_years: Vec<i32>,
    pub category_map: Option<CategoryMap>,
}

impl PrevalenceSeries {
    /// Errors when the observed span has internal gaps.
    pub fn require_gap_free(&self) -> Result<()> {
        if self.missing_years.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("series has no documents for years {:?}", self.missing_years)))
        }
    }

    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let j = self.labels.iter().position(|l| l == label)?;
        Some(self.values.column(j).iter().copied().collect())
    }

    /// Natural logarithm of every cell. Errors if a cell is not positive.
    pub fn log_values(&self) -> Result<DMatrix<f64>> {
        if let Some(v) = self.values.iter().find(|v| **v <= 0.0) {
            return Err(Error::InvalidInput(format!("cannot take the log of prevalence {v}")));
        }
        Ok(self.values.map(f64::ln))
    }

    pub fn to_table(&self) -> crate::table::Table {
        let mut headers = vec!["year".to_string()];
        headers.extend(self.labels.iter().cloned());
        let mut table = crate::table::Table::new(headers);
        for (i, year) in self.years.iter().enumerate() {
            let mut row = vec![year.to_string()];
            row.extend(self.values.row(i).iter().map(|v| crate::table::num(*v)));
            table.push(row);
        }
        table
    }
}

pub fn yearly_prevalence(theta: &DMatrix<f64>, records: &[DocumentRecord], grouping: &Grouping) -> Result<PrevalenceSeries> {
    let years: Vec<i32> = records.iter().map(|r| r.year).collect();
    yearly_prevalence_by_year(theta, &years, grouping)
}

/// Averages document prevalence within each year. Category columns sum their
/// member topics before averaging.
pub fn yearly_prevalence_by_year(theta: &DMatrix<f64>, years: &[i32], grouping: &Grouping) -> Result<PrevalenceSeries> {
    if theta.nrows() != years.len() {
        return Err(Error::InvalidInput(format!(
            "theta has {} rows but {} document years were given",
            theta.nrows(),
            years.len()
        )));
    }
    if years.is_empty() {
        return Err(Error::InvalidInput("no documents".into()));
    }
    let k = theta.ncols();
    let (labels, column_of): (Vec<String>, Vec<usize>) = match grouping {
        Grouping::Topics => ((1..=k).map(|t| format!("topic_{t}")).collect(), (0..k).collect()),
        Grouping::Categories(map) => {
            if let Some(&t) = map.assignments.keys().find(|&&t| t >= k) {
                return Err(Error::InvalidInput(format!("category map names topic {} but the model has {k}", t + 1)));
            }
            let labels = map.labels(k);
            let cols = (0..k)
                .map(|t| labels.iter().position(|l| l == map.category_of(t)).expect("label present"))
                .collect();
            (labels, cols)
        }
    };
    let mut by_year: BTreeMap<i32, (Vec<f64>, usize)> = BTreeMap::new();
    for (d, &year) in years.iter().enumerate() {
        let entry = by_year.entry(year).or_insert_with(|| (vec![0.0; labels.len()], 0));
        for t in 0..k {
            entry.0[column_of[t]] += theta[(d, t)];
        }
        entry.1 += 1;
    }
    let observed: Vec<i32> = by_year.keys().copied().collect();
    let (first, last) = (observed[0], *observed.last().unwrap());
    let missing_years = (first..=last).filter(|y| !by_year.contains_key(y)).collect();
    let mut values = DMatrix::zeros(observed.len(), labels.len());
    let mut doc_counts = Vec::with_capacity(observed.len());
    for (i, (_, (sums, n))) in by_year.iter().enumerate() {
        for (j, s) in sums.iter().enumerate() {
            values[(i, j)] = s / *n as f64;
        }
        doc_counts.push(*n);
    }
    Ok(PrevalenceSeries {
        years: observed,
        labels,
        values,
        doc_counts,
        missing_years,
        category_map: match grouping {
            Grouping::Topics => None,
            Grouping::Categories(map) => Some(map.clone()),
        },
    })
}
