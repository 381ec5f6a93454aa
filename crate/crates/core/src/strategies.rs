//! Uniform strategy interface and static tail-index grouping.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{compute_losses, PricePanel};
use crate::simplex::SolverOptions;
use crate::tail::{estimate_tail, per_stock_alpha, TailRule};
use crate::weights::Weights;

/// A portfolio selection rule evaluated on a window of logarithmic losses.
/// Strategy-specific parameters live in their variant, so a spec can never
/// carry settings that its kind does not use.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategySpec {
    /// Minimize the extreme risk index.
    Eri {
        tail_rule: TailRule,
        solver: SolverOptions,
    },
    /// Minimize the portfolio variance under the empirical covariance.
    Mv { ridge: f64, solver: SolverOptions },
    /// Equal weights, ignoring the window.
    Ew,
}

impl StrategySpec {
    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::Eri { .. } => "ERI",
            StrategySpec::Mv { .. } => "MV",
            StrategySpec::Ew => "EW",
        }
    }

    pub fn default_eri() -> Self {
        StrategySpec::Eri {
            tail_rule: TailRule::default(),
            solver: SolverOptions::default(),
        }
    }

    pub fn default_mv() -> Self {
        StrategySpec::Mv {
            ridge: 0.0,
            solver: SolverOptions::default(),
        }
    }
}

/// Target weights plus the estimator diagnostics a ledger wants to keep.
#[derive(Clone, Debug)]
pub struct StrategyOutput {
    pub weights: Weights,
    /// Extreme risk index for ERI, portfolio variance for MV, none for EW.
    pub gamma_or_objective: Option<f64>,
    pub alpha_hat: Option<f64>,
    pub tail_k: Option<usize>,
    pub converged: bool,
}

/// Evaluates a strategy on a window of logarithmic loss rows.
pub fn target_weights(
    spec: &StrategySpec,
    window_log_losses: &[Vec<f64>],
    tickers: &[String],
) -> Result<StrategyOutput> {
    match spec {
        StrategySpec::Ew => Ok(StrategyOutput {
            weights: Weights::equal(tickers.to_vec())?,
            gamma_or_objective: None,
            alpha_hat: None,
            tail_k: None,
            converged: true,
        }),
        StrategySpec::Eri { tail_rule, solver } => {
            let tail = estimate_tail(window_log_losses, tail_rule)?;
            let sol = crate::eri::minimize_eri(&tail, tickers, solver)?;
            Ok(StrategyOutput {
                weights: sol.weights,
                gamma_or_objective: Some(sol.gamma),
                alpha_hat: Some(tail.alpha_hat),
                tail_k: Some(tail.k),
                converged: sol.converged,
            })
        }
        StrategySpec::Mv { ridge, solver } => {
            let cov = crate::mv::empirical_covariance(window_log_losses, *ridge)?;
            let sol = crate::mv::minimize_variance(&cov, tickers, solver)?;
            Ok(StrategyOutput {
                weights: sol.weights,
                gamma_or_objective: Some(sol.objective),
                alpha_hat: None,
                tail_k: None,
                converged: sol.converged,
            })
        }
    }
}

/// One asset's tail estimate and group assignment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupMember {
    pub ticker: String,
    pub alpha_hat: f64,
    /// Zero-based group index; group 0 has the heaviest tails.
    pub group: usize,
}

/// Static grouping of the universe by per-stock tail index, fixed on one
/// date and held for the whole backtest.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlphaGrouping {
    pub cut_points: Vec<f64>,
    pub members: Vec<GroupMember>,
    pub as_of: NaiveDate,
}

impl AlphaGrouping {
    pub fn n_groups(&self) -> usize {
        self.cut_points.len() + 1
    }

    /// Tickers of one group, in universe order.
    pub fn group_tickers(&self, group: usize) -> Vec<String> {
        self.members
            .iter()
            .filter(|m| m.group == group)
            .map(|m| m.ticker.clone())
            .collect()
    }
}

/// Group index for a tail estimate: at or below the first cut goes to group
/// 0, at or above the last cut to the last group, open intervals between.
pub fn group_of(alpha: f64, cut_points: &[f64]) -> usize {
    if alpha >= cut_points[cut_points.len() - 1] {
        return cut_points.len();
    }
    cut_points
        .iter()
        .position(|c| alpha <= *c)
        .unwrap_or(cut_points.len() - 1)
}

/// Estimates a per-stock tail index from the window ending just before
/// `first_backtest_date` and assigns every asset to a group.
pub fn build_grouping(
    panel: &PricePanel,
    first_backtest_date: NaiveDate,
    window_len: usize,
    cut_points: &[f64],
    rule: &TailRule,
) -> Result<AlphaGrouping> {
    if cut_points.is_empty() {
        return Err(Error::InvalidParameter("no cut points".into()));
    }
    if cut_points.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "cut points must be strictly ascending".into(),
        ));
    }
    let losses = compute_losses(panel)?;
    let day = losses
        .dates()
        .iter()
        .position(|d| *d == first_backtest_date)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{first_backtest_date} is not a return date of the panel"
            ))
        })?;
    if day < window_len {
        return Err(Error::TooFewRows {
            needed: window_len,
            got: day,
        });
    }
    let members = losses
        .tickers()
        .iter()
        .enumerate()
        .map(|(i, ticker)| {
            let column: Vec<f64> = (day - window_len..day).map(|t| losses.log_row(t)[i]).collect();
            let alpha_hat = per_stock_alpha(&column, rule)?;
            Ok(GroupMember {
                ticker: ticker.clone(),
                alpha_hat,
                group: group_of(alpha_hat, cut_points),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AlphaGrouping {
        cut_points: cut_points.to_vec(),
        members,
        as_of: first_backtest_date,
    })
}
