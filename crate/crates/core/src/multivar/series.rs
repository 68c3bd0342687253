use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trend_series::PrevalenceSeries;

/// Named columns observed at consecutive periods, T × K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeries {
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
}

impl MultiSeries {
    pub fn new(names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::InvalidInput(format!("{} names for {} columns", names.len(), values.ncols())));
        }
        if values.ncols() == 0 || values.nrows() < 2 {
            return Err(Error::InvalidInput("need at least one variable and two periods".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("series contain non-finite values".into()));
        }
        Ok(MultiSeries { names, values })
    }

    /// Selected columns of a prevalence series, optionally in logs. Refuses
    /// series with missing years.
    pub fn from_prevalence(series: &PrevalenceSeries, columns: &[String], logs: bool) -> Result<Self> {
        series.require_gap_free()?;
        let source = if logs { series.log_values()? } else { series.values.clone() };
        let idx = columns
            .iter()
            .map(|c| {
                series
                    .labels
                    .iter()
                    .position(|l| l == c)
                    .ok_or_else(|| Error::InvalidInput(format!("no series named {c:?}; available: {:?}", series.labels)))
            })
            .collect::<Result<Vec<_>>>()?;
        let values = DMatrix::from_fn(source.nrows(), idx.len(), |i, j| source[(i, idx[j])]);
        Self::new(columns.to_vec(), values)
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn differences(&self) -> MultiSeries {
        let t = self.len();
        MultiSeries {
            names: self.names.clone(),
            values: DMatrix::from_fn(t - 1, self.dim(), |i, j| self.values[(i + 1, j)] - self.values[(i, j)]),
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }
}
