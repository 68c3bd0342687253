use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::{DocumentRecord, JournalType};
use crate::error::{Error, Result};
use crate::linalg::check_full_rank;

/// Prevalence covariates with mean-zero columns. The intercept is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateDesign {
    pub rows: DMatrix<f64>,
    pub names: Vec<String>,
    pub encoding: String,
}

impl CovariateDesign {
    /// Design with no covariates: the prevalence prior mean is a shared intercept.
    pub fn intercept_only(num_docs: usize) -> Self {
        CovariateDesign {
            rows: DMatrix::zeros(num_docs, 0),
            names: Vec::new(),
            encoding: "intercept only".into(),
        }
    }

    /// Centers each column and validates that none is constant.
    pub fn from_columns(num_docs: usize, columns: Vec<(String, Vec<f64>)>, encoding: &str) -> Result<Self> {
        let mut rows = DMatrix::zeros(num_docs, columns.len());
        let mut names = Vec::with_capacity(columns.len());
        for (j, (name, values)) in columns.into_iter().enumerate() {
            if values.len() != num_docs {
                return Err(Error::InvalidInput(format!(
                    "covariate {name:?} has {} values for {num_docs} documents",
                    values.len()
                )));
            }
            let mean = values.iter().sum::<f64>() / num_docs.max(1) as f64;
            let mut spread = 0.0f64;
            for (i, v) in values.iter().enumerate() {
                rows[(i, j)] = v - mean;
                spread = spread.max((v - mean).abs());
            }
            if spread <= 1e-12 * mean.abs().max(1.0) {
                return Err(Error::RankDeficient(format!("covariate {name:?} is constant")));
            }
            names.push(name);
        }
        let design = CovariateDesign {
            rows,
            names,
            encoding: encoding.into(),
        };
        design.check_rank()?;
        Ok(design)
    }

    /// Year as a centered linear term and journal type one-hot with the first
    /// observed type as baseline.
    pub fn from_records(records: &[DocumentRecord], year: bool, journal_type: bool) -> Result<Self> {
        let n = records.len();
        let mut columns = Vec::new();
        if year {
            columns.push(("year".to_string(), records.iter().map(|r| r.year as f64).collect()));
        }
        let mut baseline = None;
        if journal_type {
            let present: Vec<JournalType> = JournalType::ALL
                .into_iter()
                .filter(|t| records.iter().any(|r| r.journal_type == *t))
                .collect();
            baseline = present.first().copied();
            for t in present.iter().skip(1) {
                columns.push((
                    format!("journal_type:{}", t.code()),
                    records
                        .iter()
                        .map(|r| if r.journal_type == *t { 1.0 } else { 0.0 })
                        .collect(),
                ));
            }
        }
        let encoding = match baseline {
            Some(b) => format!("year centered linear; journal_type one-hot, baseline {}", b.code()),
            None => "year centered linear".to_string(),
        };
        if columns.is_empty() {
            return Ok(CovariateDesign::intercept_only(n));
        }
        CovariateDesign::from_columns(n, columns, &encoding)
    }

    pub fn num_docs(&self) -> usize {
        self.rows.nrows()
    }

    pub fn num_covariates(&self) -> usize {
        self.rows.ncols()
    }

    /// `[1, X]`.
    pub fn with_intercept(&self) -> DMatrix<f64> {
        let n = self.num_docs();
        let p = self.num_covariates();
        DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { self.rows[(i, j - 1)] })
    }

    pub fn check_rank(&self) -> Result<()> {
        check_full_rank(&self.with_intercept(), "covariate design")
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}
