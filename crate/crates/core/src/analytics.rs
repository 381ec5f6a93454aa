//! Backtest statistics and time-series diagnostics.
//!
//! Conventions, fixed here and used everywhere:
//!
//! * quantiles follow the inf-definition: the smallest sample value whose
//!   empirical CDF reaches the level;
//! * expected shortfall at level `lambda` averages every return at or below
//!   the `1 - lambda` lower quantile and requires at least one return
//!   strictly below it; the result is sign-flipped to a loss magnitude;
//! * Sharpe and STARR ratios are annualized with `sqrt(252)` and a zero
//!   risk-free rate; the annualized return compounds geometrically over
//!   252 trading days per year.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::backtest::BacktestLedger;
use crate::error::{Error, Result};
use crate::market_data::LossMatrix;
use crate::weights::Weights;

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// Weights at or below this fraction are ignored by the portfolio PCA.
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-4;

/// Summary statistics of one backtest run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StatsReport {
    pub cumulative_return: f64,
    pub annualized_return: f64,
    /// `None` when the ledger is too short or degenerate to estimate.
    pub annualized_sharpe: Option<f64>,
    /// STARR at the 0.95 level; `None` when the tail is empty.
    pub annualized_starr: Option<f64>,
    pub max_drawdown: f64,
    pub avg_concentration: f64,
    pub avg_turnover: f64,
    pub avg_first_pca_explained: f64,
}

/// Per-day diagnostics derived from a ledger.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub date: chrono::NaiveDate,
    pub value: f64,
    pub period_return: f64,
    pub turnover: f64,
    pub concentration: f64,
    pub first_pca_explained: f64,
    pub alpha_hat: Option<f64>,
    pub gamma_or_objective: Option<f64>,
}

/// Smallest sample value whose empirical CDF reaches `level`.
pub fn var_quantile(sample: &[f64], level: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::FractionOutOfRange(level));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    // rank = ceil(level * n), with a guard so exact integer boundaries are
    // not pushed up by floating-point noise
    let rank = ((level * sorted.len() as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(sorted.len()) - 1])
}

/// Empirical expected shortfall of returns at `level`, as a positive loss.
///
/// Averages every return at or below the `1 - level` quantile of the
/// returns. Errors with `EmptyTail` when no return lies strictly below that
/// quantile (the tail would degenerate to the boundary itself).
pub fn expected_shortfall_returns(returns: &[f64], level: f64) -> Result<f64> {
    let cut = var_quantile(returns, 1.0 - level)?;
    if !returns.iter().any(|r| *r < cut) {
        return Err(Error::EmptyTail { level });
    }
    let tail: Vec<f64> = returns.iter().copied().filter(|r| *r <= cut).collect();
    Ok(-tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Sample size of the expected-shortfall tail at `level`.
pub fn expected_shortfall_tail_len(returns: &[f64], level: f64) -> Result<usize> {
    let cut = var_quantile(returns, 1.0 - level)?;
    if !returns.iter().any(|r| *r < cut) {
        return Err(Error::EmptyTail { level });
    }
    Ok(returns.iter().filter(|r| **r <= cut).count())
}

/// Annualized Sharpe ratio of daily returns with zero risk-free rate.
pub fn annualized_sharpe(daily_returns: &[f64]) -> Result<f64> {
    if daily_returns.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: daily_returns.len(),
        });
    }
    if daily_returns.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::ZeroVolatility);
    }
    let n = daily_returns.len() as f64;
    let mean = daily_returns.iter().sum::<f64>() / n;
    let var = daily_returns
        .iter()
        .map(|r| (r - mean) * (r - mean))
        .sum::<f64>()
        / (n - 1.0);
    let std = var.sqrt();
    if std == 0.0 {
        return Err(Error::ZeroVolatility);
    }
    Ok(mean / std * TRADING_DAYS_PER_YEAR.sqrt())
}

/// Annualized STARR ratio: mean return over expected shortfall.
pub fn annualized_starr(daily_returns: &[f64], level: f64) -> Result<f64> {
    let es = expected_shortfall_returns(daily_returns, level)?;
    if es == 0.0 {
        return Err(Error::ZeroShortfall);
    }
    let mean = daily_returns.iter().sum::<f64>() / daily_returns.len() as f64;
    Ok(mean / es * TRADING_DAYS_PER_YEAR.sqrt())
}

/// Cumulative and geometrically annualized return of a positive value path.
pub fn cumulative_and_annualized_return(value_path: &[f64], periods_per_year: f64) -> (f64, f64) {
    if value_path.len() < 2 {
        return (0.0, 0.0);
    }
    let first = value_path[0];
    let last = value_path[value_path.len() - 1];
    let cr = last / first - 1.0;
    let periods = (value_path.len() - 1) as f64;
    let ar = (1.0 + cr).powf(periods_per_year / periods) - 1.0;
    (cr, ar)
}

/// Largest relative decline from a running maximum, in [0, 1].
pub fn max_drawdown(value_path: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for &v in value_path {
        peak = peak.max(v);
        worst = worst.max(1.0 - v / peak);
    }
    worst
}

/// Concentration coefficient, the inverse Herfindahl index of the weights.
/// Equals the number of assets for equal weights and 1 for a single asset.
pub fn concentration_coefficient(weights: &[f64]) -> f64 {
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    1.0 / sum_sq
}

/// Share of window variance explained by the first principal component of
/// the assets with weight strictly above `weight_floor`.
pub fn first_pca_explained(
    loss_window: &[Vec<f64>],
    weights: &[f64],
    weight_floor: f64,
) -> Result<f64> {
    let relevant: Vec<usize> = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > weight_floor)
        .map(|(i, _)| i)
        .collect();
    if relevant.is_empty() {
        return Err(Error::NoRelevantAssets {
            floor: weight_floor,
        });
    }
    if relevant.len() == 1 {
        return Ok(1.0);
    }
    if loss_window.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: loss_window.len(),
        });
    }
    let restricted: Vec<Vec<f64>> = loss_window
        .iter()
        .map(|row| relevant.iter().map(|&i| row[i]).collect())
        .collect();
    let cov = crate::mv::empirical_covariance(&restricted, 0.0)?;
    let trace: f64 = (0..cov.dim()).map(|i| cov.matrix[i][i]).sum();
    if trace <= 0.0 {
        // window with no variance at all: a single flat factor explains it
        return Ok(1.0);
    }
    let top = crate::linalg::top_eigenvalue(&cov.matrix);
    Ok((top / trace).clamp(0.0, 1.0))
}

/// Reference distribution for quantile-quantile diagnostics.
#[derive(Clone, Copy, Debug)]
pub enum QqReference {
    Normal,
    StudentT { dof: f64 },
}

/// Quantile pairs for a QQ plot plus the standard marker levels.
#[derive(Clone, Debug)]
pub struct QqData {
    /// `(theoretical, empirical)` quantiles at plotting positions
    /// `(i - 0.5) / n`.
    pub points: Vec<(f64, f64)>,
    /// `(level, theoretical quantile)` at 0.4%, 10%, 90%, and 99.6%.
    pub markers: Vec<(f64, f64)>,
}

/// Marker levels separating roughly biweekly from yearly extremes.
pub const QQ_MARKER_LEVELS: [f64; 4] = [0.004, 0.10, 0.90, 0.996];

/// Sorted sample against reference quantiles, with the reference rescaled to
/// the sample's median and interquartile range.
pub fn qq_data(sample: &[f64], reference: QqReference) -> Result<QqData> {
    if sample.len() < 10 {
        return Err(Error::TooFewObservations {
            needed: 10,
            got: sample.len(),
        });
    }
    let inverse_cdf: Box<dyn Fn(f64) -> f64> = match reference {
        QqReference::Normal => {
            let dist = Normal::new(0.0, 1.0).expect("standard normal");
            Box::new(move |p| dist.inverse_cdf(p))
        }
        QqReference::StudentT { dof } => {
            if !(dof > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "degrees of freedom {dof} must be positive"
                )));
            }
            let dist = StudentsT::new(0.0, 1.0, dof).expect("valid t distribution");
            Box::new(move |p| dist.inverse_cdf(p))
        }
    };
    let median = var_quantile(sample, 0.5)?;
    let iqr = var_quantile(sample, 0.75)? - var_quantile(sample, 0.25)?;
    let ref_iqr = inverse_cdf(0.75) - inverse_cdf(0.25);
    let scale = iqr / ref_iqr; // zero for constant samples, collapsing the line

    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    let points = sorted
        .iter()
        .enumerate()
        .map(|(i, &empirical)| {
            let p = (i as f64 + 0.5) / n as f64;
            (median + scale * inverse_cdf(p), empirical)
        })
        .collect();
    let markers = QQ_MARKER_LEVELS
        .iter()
        .map(|&p| (p, median + scale * inverse_cdf(p)))
        .collect();
    Ok(QqData { points, markers })
}

/// Value path of a ledger: the initial value followed by the per-day values.
pub fn value_path(ledger: &BacktestLedger) -> Vec<f64> {
    let mut path = Vec::with_capacity(ledger.records.len() + 1);
    path.push(ledger.config.initial_value);
    path.extend(ledger.records.iter().map(|r| r.portfolio_value));
    path
}

/// Per-day diagnostics: concentration, portfolio PCA, and the estimator
/// series carried in the ledger. The PCA for day `t` is computed over the
/// same estimation window that produced the day's weights; days are
/// independent and evaluated in parallel.
pub fn diagnostic_series(ledger: &BacktestLedger, losses: &LossMatrix) -> Result<Vec<SeriesPoint>> {
    use rayon::prelude::*;

    if losses.tickers() != ledger.tickers {
        return Err(Error::InvalidParameter(
            "loss matrix tickers do not match the ledger universe".into(),
        ));
    }
    let window_len = ledger.config.window_len;
    ledger
        .records
        .par_iter()
        .map(|rec| {
            if rec.loss_row < window_len || rec.loss_row >= losses.n_periods() {
                return Err(Error::InvalidParameter(format!(
                    "ledger row {} has no full estimation window",
                    rec.loss_row
                )));
            }
            let window = losses.log_window(rec.loss_row - window_len, rec.loss_row);
            let pca = first_pca_explained(window, &rec.weights_after, DEFAULT_WEIGHT_FLOOR)?;
            Ok(SeriesPoint {
                date: rec.date,
                value: rec.portfolio_value,
                period_return: rec.period_return,
                turnover: rec.turnover,
                concentration: concentration_coefficient(&rec.weights_after),
                first_pca_explained: pca,
                alpha_hat: rec.alpha_hat,
                gamma_or_objective: rec.gamma_or_objective,
            })
        })
        .collect()
}

/// All summary statistics of a ledger, from precomputed diagnostics.
pub fn summarize_series(ledger: &BacktestLedger, series: &[SeriesPoint]) -> Result<StatsReport> {
    if ledger.records.is_empty() || series.len() != ledger.records.len() {
        return Err(Error::EmptySample);
    }
    let returns: Vec<f64> = series.iter().map(|p| p.period_return).collect();
    let path = value_path(ledger);
    let (cr, ar) = cumulative_and_annualized_return(&path, TRADING_DAYS_PER_YEAR);
    let n = series.len() as f64;
    Ok(StatsReport {
        cumulative_return: cr,
        annualized_return: ar,
        annualized_sharpe: annualized_sharpe(&returns).ok(),
        annualized_starr: annualized_starr(&returns, 0.95).ok(),
        max_drawdown: max_drawdown(&path),
        avg_concentration: series.iter().map(|p| p.concentration).sum::<f64>() / n,
        avg_turnover: series.iter().map(|p| p.turnover).sum::<f64>() / n,
        avg_first_pca_explained: series.iter().map(|p| p.first_pca_explained).sum::<f64>() / n,
    })
}

/// All summary statistics of a ledger.
pub fn summarize(ledger: &BacktestLedger, losses: &LossMatrix) -> Result<StatsReport> {
    let series = diagnostic_series(ledger, losses)?;
    summarize_series(ledger, &series)
}

/// Concentration coefficient of a weight vector as a domain type.
pub fn concentration_of(weights: &Weights) -> f64 {
    concentration_coefficient(weights.values())
}
