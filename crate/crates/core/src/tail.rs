//! Tail-index and spectral-measure estimation from rolling windows.
//!
//! Loss vectors are decomposed into polar coordinates with respect to the
//! L1 norm: radius `R = ||x||_1` and angle `Z = x / R`. The tail index
//! `alpha` is estimated with the Hill estimator on the largest radii, and
//! the spectral measure by the empirical distribution of the angles of
//! exactly those observations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One loss vector in polar coordinates. Rows with zero radius are
/// degenerate: their direction is undefined and `angle` is `None`.
#[derive(Clone, Debug)]
pub struct PolarSample {
    pub radius: f64,
    pub angle: Option<Vec<f64>>,
    pub source_row: usize,
}

impl PolarSample {
    pub fn is_degenerate(&self) -> bool {
        self.angle.is_none()
    }
}

/// Rule for choosing the tail fraction size `k` from the window length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[non_exhaustive]
pub enum TailRule {
    /// `k = round(fraction * window_len)`; the fraction must lie in (0, 1).
    StaticFraction(f64),
}

impl Default for TailRule {
    fn default() -> Self {
        TailRule::StaticFraction(0.10)
    }
}

/// Tail index plus the empirical spectral sample it was estimated with.
#[derive(Clone, Debug)]
pub struct TailEstimate {
    pub alpha_hat: f64,
    /// Number of largest-radius observations used.
    pub k: usize,
    /// Angles of exactly the `k` largest-radius observations.
    pub spectral_sample: Vec<Vec<f64>>,
    pub window_len: usize,
}

impl TailEstimate {
    pub fn dim(&self) -> usize {
        self.spectral_sample.first().map_or(0, Vec::len)
    }
}

/// Polar decomposition of a window of loss vectors, one sample per row.
pub fn polar_decompose(loss_rows: &[Vec<f64>]) -> Vec<PolarSample> {
    loss_rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let radius: f64 = row.iter().map(|x| x.abs()).sum();
            // NaN and zero radii both count as degenerate
            let angle = if radius > 0.0 && radius.is_finite() {
                Some(row.iter().map(|x| x / radius).collect())
            } else {
                None
            };
            PolarSample {
                radius,
                angle,
                source_row: i,
            }
        })
        .collect()
}

/// Indices of the positive-radius samples, sorted by descending radius.
/// Ties keep the earlier window index first.
pub fn descending_radius_order(samples: &[PolarSample]) -> Vec<usize> {
    let mut order: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| s.radius > 0.0 && s.radius.is_finite())
        .map(|(i, _)| i)
        .collect();
    // stable sort preserves window order among equal radii
    order.sort_by(|&a, &b| samples[b].radius.partial_cmp(&samples[a].radius).unwrap());
    order
}

/// Hill estimator of the tail index from a set of radii.
///
/// Uses the descending order statistics `R_(1) >= ... >= R_(k+1)` of the
/// strictly positive radii and returns `k / sum_{j<=k} log(R_(j) / R_(k+1))`.
pub fn hill_estimate(radii: &[f64], k: usize) -> Result<f64> {
    let mut positive: Vec<f64> = radii
        .iter()
        .copied()
        .filter(|r| *r > 0.0 && r.is_finite())
        .collect();
    if k == 0 || positive.len() < k + 1 {
        return Err(Error::InsufficientData {
            needed: k.max(1) + 1,
            got: positive.len(),
        });
    }
    positive.sort_by(|a, b| b.partial_cmp(a).unwrap());
    hill_from_sorted(&positive, k)
}

fn hill_from_sorted(sorted_desc: &[f64], k: usize) -> Result<f64> {
    let pivot = sorted_desc[k];
    let sum: f64 = sorted_desc[..k].iter().map(|r| (r / pivot).ln()).sum();
    if sum <= 0.0 {
        return Err(Error::DegenerateTail { k });
    }
    Ok(k as f64 / sum)
}

/// Tail fraction size `k` for a window of the given length.
pub fn tail_fraction_size(window_len: usize, rule: &TailRule) -> Result<usize> {
    if window_len < 20 {
        return Err(Error::TooFewRows {
            needed: 20,
            got: window_len,
        });
    }
    match *rule {
        TailRule::StaticFraction(fraction) => {
            if !(fraction > 0.0 && fraction < 1.0) {
                return Err(Error::FractionOutOfRange(fraction));
            }
            Ok((fraction * window_len as f64).round() as usize)
        }
    }
}

/// Estimates the tail index and the empirical spectral measure of a window.
///
/// The spectral sample consists of the angles of exactly the `k` samples
/// whose radii enter the Hill sum, so both estimates see the same
/// observations. Degenerate rows are excluded from the order statistics.
pub fn estimate_tail(loss_rows: &[Vec<f64>], rule: &TailRule) -> Result<TailEstimate> {
    let samples = polar_decompose(loss_rows);
    let order = descending_radius_order(&samples);
    if order.len() < 20 {
        return Err(Error::TooFewRows {
            needed: 20,
            got: order.len(),
        });
    }
    let k = tail_fraction_size(loss_rows.len(), rule)?;
    if k == 0 || order.len() < k + 1 {
        return Err(Error::InsufficientData {
            needed: k.max(1) + 1,
            got: order.len(),
        });
    }
    let sorted: Vec<f64> = order.iter().map(|&i| samples[i].radius).collect();
    let alpha_hat = hill_from_sorted(&sorted, k)?;
    let spectral_sample = order[..k]
        .iter()
        .map(|&i| samples[i].angle.clone().expect("positive radius has an angle"))
        .collect();
    Ok(TailEstimate {
        alpha_hat,
        k,
        spectral_sample,
        window_len: loss_rows.len(),
    })
}

/// Hill estimate for a single asset, using absolute losses as radii
/// (the one-dimensional polar decomposition).
pub fn per_stock_alpha(losses: &[f64], rule: &TailRule) -> Result<f64> {
    let radii: Vec<f64> = losses.iter().map(|x| x.abs()).collect();
    let k = tail_fraction_size(losses.len(), rule)?;
    hill_estimate(&radii, k)
}
