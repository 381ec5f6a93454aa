//! Rolling-window backtest engine.
//!
//! For each backtest day the engine drifts the held weights by the realized
//! market moves, rebalances on schedule using only strictly prior data, and
//! accounts the portfolio value multiplicatively with relative returns.
//! Day `t` is traded with the weights set at its start; the estimation
//! window for a rebalance on day `t` is the `window_len` loss rows ending
//! at `t - 1`, and it advances daily even when rebalancing is less frequent.

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{compute_losses, LossMatrix, PricePanel};
use crate::strategies::{target_weights, StrategySpec};
use crate::weights::Weights;

/// Backtest parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BacktestConfig {
    /// Estimation window length in trading days.
    pub window_len: usize,
    /// Rebalance every this many trading days (1 = daily, 5 = weekly).
    pub rebalance_every: usize,
    /// Restrict the panel to these tickers; `None` keeps the whole panel.
    pub universe: Option<Vec<String>>,
    pub strategy: StrategySpec,
    /// Portfolio value on the day before the backtest starts.
    pub initial_value: f64,
}

impl BacktestConfig {
    pub fn new(strategy: StrategySpec) -> Self {
        Self {
            window_len: 1500,
            rebalance_every: 1,
            universe: None,
            strategy,
            initial_value: 100.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.window_len < 20 {
            return Err(Error::InvalidParameter(format!(
                "window_len {} below the minimum of 20",
                self.window_len
            )));
        }
        if self.rebalance_every == 0 {
            return Err(Error::InvalidParameter(
                "rebalance_every must be at least 1".into(),
            ));
        }
        if !(self.initial_value > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial_value {} must be positive",
                self.initial_value
            )));
        }
        Ok(())
    }
}

/// One backtest day.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DayRecord {
    pub date: NaiveDate,
    /// Index of this day's row in the loss matrix.
    pub loss_row: usize,
    /// Weights at the start of the day before rebalancing (drifted).
    pub weights_before: Vec<f64>,
    /// Weights in force during the day.
    pub weights_after: Vec<f64>,
    pub portfolio_value: f64,
    pub period_return: f64,
    /// L1 distance between the weights after and before rebalancing.
    pub turnover: f64,
    pub rebalanced: bool,
    /// The solver failed and the drifted weights were carried forward.
    pub solver_fallback: bool,
    pub gamma_or_objective: Option<f64>,
    pub alpha_hat: Option<f64>,
    pub tail_k: Option<usize>,
}

/// Complete record of one backtest run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BacktestLedger {
    pub config: BacktestConfig,
    pub tickers: Vec<String>,
    pub records: Vec<DayRecord>,
    /// Human-readable irregularities (solver fallbacks and the like).
    pub notes: Vec<String>,
}

/// Weights at the end of a trading period: each position grows by its gross
/// relative return `1 / (1 + rel_loss)` and the vector is renormalized.
pub fn drift_weights(weights: &Weights, rel_loss_row: &[f64]) -> Result<Weights> {
    if weights.len() != rel_loss_row.len() {
        return Err(Error::DimensionMismatch {
            left: weights.len(),
            right: rel_loss_row.len(),
        });
    }
    let grown: Vec<f64> = weights
        .values()
        .iter()
        .zip(rel_loss_row)
        .map(|(w, x)| w / (1.0 + x))
        .collect();
    let total: f64 = grown.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegeneratePortfolio(total));
    }
    Weights::new(
        weights.tickers().to_vec(),
        grown.iter().map(|g| g / total).collect(),
    )
}

/// Runs the configured strategy over the panel.
///
/// Rebalance-day estimations are independent and evaluated in parallel;
/// the value accounting is a sequential fold over days. A solver failure on
/// a rebalance day keeps the drifted weights (equal weights on the first
/// day) and is recorded in the ledger notes.
pub fn run_backtest(panel: &PricePanel, cfg: &BacktestConfig) -> Result<BacktestLedger> {
    cfg.validate()?;
    let restricted;
    let panel = match &cfg.universe {
        Some(tickers) => {
            restricted = panel.restrict(tickers)?;
            &restricted
        }
        None => panel,
    };
    let losses = compute_losses(panel)?;
    let periods = losses.n_periods();
    if periods < cfg.window_len + 1 {
        return Err(Error::TooFewRows {
            needed: cfg.window_len + 1,
            got: periods,
        });
    }
    let tickers = losses.tickers().to_vec();
    let first_day = cfg.window_len;

    let rebalance_days: Vec<usize> = (first_day..periods)
        .filter(|t| (t - first_day) % cfg.rebalance_every == 0)
        .collect();
    let estimations: Vec<(usize, Result<crate::strategies::StrategyOutput>)> = rebalance_days
        .par_iter()
        .map(|&t| {
            let window = losses.log_window(t - cfg.window_len, t);
            (t, target_weights(&cfg.strategy, window, &tickers))
        })
        .collect();

    let mut records = Vec::with_capacity(periods - first_day);
    let mut notes = Vec::new();
    let mut value = cfg.initial_value;
    let mut held: Option<Weights> = None;
    let mut next_estimation = estimations.into_iter().peekable();

    for t in first_day..periods {
        let weights_before = match &held {
            Some(prev) => drift_weights(prev, losses.rel_row(t - 1))?,
            None => Weights::equal(tickers.clone())?, // placeholder for day one
        };
        let is_first = held.is_none();

        let mut rebalanced = false;
        let mut solver_fallback = false;
        let mut gamma_or_objective = None;
        let mut alpha_hat = None;
        let mut tail_k = None;
        let mut weights_after = weights_before.clone();

        if next_estimation.peek().map(|(day, _)| *day) == Some(t) {
            let (_, estimation) = next_estimation.next().expect("peeked");
            rebalanced = true;
            match estimation {
                Ok(out) => {
                    weights_after = out.weights;
                    gamma_or_objective = out.gamma_or_objective;
                    alpha_hat = out.alpha_hat;
                    tail_k = out.tail_k;
                    if !out.converged {
                        notes.push(format!(
                            "{}: solver stopped before reaching its tolerance",
                            losses.dates()[t]
                        ));
                    }
                }
                Err(e) => {
                    // carry the drifted weights; on day one there is nothing
                    // to carry, so start from equal weights
                    solver_fallback = true;
                    notes.push(format!("{}: estimation failed ({e})", losses.dates()[t]));
                }
            }
        }

        // the first day has no prior portfolio: turnover is zero by
        // convention and the drifted weights equal the targeted ones
        let (weights_before, turnover) = if is_first {
            (weights_after.clone(), 0.0)
        } else {
            let turnover: f64 = weights_after
                .values()
                .iter()
                .zip(weights_before.values())
                .map(|(a, b)| (a - b).abs())
                .sum();
            (weights_before, turnover)
        };

        let period_return = crate::market_data::portfolio_relative_return(
            &weights_after,
            losses.rel_row(t),
        )?;
        value *= 1.0 + period_return;

        records.push(DayRecord {
            date: losses.dates()[t],
            loss_row: t,
            weights_before: weights_before.values().to_vec(),
            weights_after: weights_after.values().to_vec(),
            portfolio_value: value,
            period_return,
            turnover,
            rebalanced,
            solver_fallback,
            gamma_or_objective,
            alpha_hat,
            tail_k,
        });
        held = Some(weights_after);
    }

    Ok(BacktestLedger {
        config: cfg.clone(),
        tickers,
        records,
        notes,
    })
}

/// The loss matrix a ledger's diagnostics refer to (universe-restricted).
pub fn ledger_losses(panel: &PricePanel, ledger: &BacktestLedger) -> Result<LossMatrix> {
    match &ledger.config.universe {
        Some(tickers) => compute_losses(&panel.restrict(tickers)?),
        None => compute_losses(panel),
    }
}
