//! Portfolio weight vectors on the unit simplex.

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// Long-only portfolio: nonnegative weights summing to one, with a parallel
/// list of asset identifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    tickers: Vec<String>,
    values: Vec<f64>,
}

impl Weights {
    pub fn new(tickers: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if tickers.len() != values.len() {
            return Err(Error::DimensionMismatch {
                left: tickers.len(),
                right: values.len(),
            });
        }
        if values.is_empty() {
            return Err(Error::InvalidWeights("weight vector is empty".into()));
        }
        for v in &values {
            if !v.is_finite() || *v < -SUM_TOLERANCE || *v > 1.0 + SUM_TOLERANCE {
                return Err(Error::InvalidWeights(format!("weight {v} outside [0, 1]")));
            }
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self { tickers, values })
    }

    /// The equal-weight portfolio 1/N.
    pub fn equal(tickers: Vec<String>) -> Result<Self> {
        let n = tickers.len();
        if n == 0 {
            return Err(Error::InvalidWeights("no tickers".into()));
        }
        let w = 1.0 / n as f64;
        Self::new(tickers, vec![w; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Synthetic ticker labels `A001, A002, ...` for unlabeled experiments.
pub fn auto_tickers(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("A{i:03}")).collect()
}
