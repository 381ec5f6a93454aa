//! Portfolio optimization for heavy-tailed assets.
//!
//! This crate estimates the tail behaviour of asset-loss vectors
//! (Hill tail index plus an empirical spectral measure from the
//! largest-radius observations), minimizes the resulting extreme risk index
//! over the long-only simplex, and benchmarks the strategy against
//! minimum-variance and equal-weight portfolios in a fully instrumented
//! rolling-window backtest.
//!
//! Modules map onto the pipeline stages:
//!
//! * [`market_data`] — CSV ingestion, price panels, loss matrices;
//! * [`tail`] — polar decomposition, Hill estimation, spectral samples;
//! * [`eri`] / [`mv`] — the two optimizers over the simplex ([`simplex`]
//!   holds the shared projected-gradient machinery);
//! * [`strategies`] — the uniform strategy interface and tail-index
//!   grouping;
//! * [`backtest`] — the rolling-window engine and its ledger;
//! * [`analytics`] — summary statistics and per-day diagnostics;
//! * [`synthetic`] — seeded heavy-tailed generators and brute-force
//!   oracles;
//! * [`report`] — CSV/JSON/text rendering of results.

// `!(x > 0.0)` guards reject NaN along with the out-of-range values, and
// index loops over symmetric matrices mirror the i <= j structure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::manual_is_multiple_of)]

pub mod analytics;
pub mod backtest;
pub mod eri;
pub mod error;
pub mod linalg;
pub mod market_data;
pub mod mv;
pub mod report;
pub mod rng;
pub mod simplex;
pub mod strategies;
pub mod synthetic;
pub mod tail;
pub mod weights;

pub use error::{Error, Result};
