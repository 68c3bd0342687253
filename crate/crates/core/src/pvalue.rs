use std::fmt;

use serde::{Deserialize, Serialize};

/// A p-value that may be censored at the edge of a lookup table or at the
/// smallest reportable magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValue {
    /// Reported value. For censored values this is the bound itself, except
    /// for `BelowReportable`, where it keeps the computed magnitude.
    pub value: f64,
    pub censoring: Censoring,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Censoring {
    None,
    /// True p-value is at most the given bound.
    Below(f64),
    /// True p-value is at least the given bound.
    Above(f64),
    /// Computed value is smaller than the given reporting floor.
    BelowReportable(f64),
}

impl PValue {
    pub fn exact(value: f64) -> Self {
        PValue {
            value: value.clamp(0.0, 1.0),
            censoring: Censoring::None,
        }
    }

    pub fn below(bound: f64) -> Self {
        PValue {
            value: bound,
            censoring: Censoring::Below(bound),
        }
    }

    pub fn above(bound: f64) -> Self {
        PValue {
            value: bound,
            censoring: Censoring::Above(bound),
        }
    }

    /// Reject at level `alpha`. Censored-below values reject at any level above
    /// their bound.
    pub fn rejects(&self, alpha: f64) -> bool {
        match self.censoring {
            Censoring::Above(b) => b < alpha && self.value < alpha,
            _ => self.value < alpha,
        }
    }
}

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.censoring {
            Censoring::None => write!(f, "{:.4}", self.value),
            Censoring::Below(b) => write!(f, "<{b}"),
            Censoring::Above(b) => write!(f, ">{b}"),
            Censoring::BelowReportable(b) => write!(f, "<{b:e}"),
        }
    }
}
