//! Report rendering: ledger CSV/JSON, stats tables, and diagnostic series.
//!
//! Every file begins with a `# config: ...` provenance line naming the
//! configuration that produced it; readers in this crate skip `#` comments.
//! Floats in CSV output are printed with 12 significant digits in scientific
//! notation, which round-trips bit-exactly for this pipeline's value ranges.

use std::fmt::Write as _;

use crate::analytics::{SeriesPoint, StatsReport};
use crate::backtest::BacktestLedger;
use crate::error::Result;

/// 12-significant-digit rendering used in all CSV reports.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Quotes a CSV field when it contains a delimiter, quote, or line break.
pub fn csv_escape(field: &str) -> std::borrow::Cow<'_, str> {
    if field.contains([',', '"', '\n', '\r']) {
        std::borrow::Cow::Owned(format!("\"{}\"", field.replace('"', "\"\"")))
    } else {
        std::borrow::Cow::Borrowed(field)
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_sig12).unwrap_or_default()
}

/// Ledger as CSV: one row per day with the fixed column order
/// `date,value,return,turnover,cc,gamma_or_objective,alpha_hat`.
pub fn ledger_to_csv(ledger: &BacktestLedger, provenance: &str) -> String {
    let mut out = format!("# config: {provenance}\n");
    out.push_str("date,value,return,turnover,cc,gamma_or_objective,alpha_hat\n");
    for rec in &ledger.records {
        let cc = crate::analytics::concentration_coefficient(&rec.weights_after);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            rec.date,
            fmt_sig12(rec.portfolio_value),
            fmt_sig12(rec.period_return),
            fmt_sig12(rec.turnover),
            fmt_sig12(cc),
            fmt_opt(rec.gamma_or_objective),
            fmt_opt(rec.alpha_hat),
        );
    }
    out
}

/// Ledger as pretty JSON with full weight vectors.
pub fn ledger_to_json(ledger: &BacktestLedger) -> Result<String> {
    serde_json::to_string_pretty(ledger)
        .map_err(|e| crate::error::Error::InvalidParameter(format!("serialization failed: {e}")))
}

/// Diagnostic series as CSV, one row per backtest day.
pub fn series_to_csv(points: &[SeriesPoint], provenance: &str) -> String {
    let mut out = format!("# config: {provenance}\n");
    out.push_str("date,value,return,turnover,cc,first_pca,alpha_hat,gamma_or_objective\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.date,
            fmt_sig12(p.value),
            fmt_sig12(p.period_return),
            fmt_sig12(p.turnover),
            fmt_sig12(p.concentration),
            fmt_sig12(p.first_pca_explained),
            fmt_opt(p.alpha_hat),
            fmt_opt(p.gamma_or_objective),
        );
    }
    out
}

type RowRender = fn(&StatsReport) -> String;

const TABLE_ROWS: [(&str, RowRender); 8] = [
    ("CR (Cumulative Return)", |s| percent(s.cumulative_return)),
    ("AR (Annualized Return)", |s| percent(s.annualized_return)),
    ("AS (Annualized Sharpe)", |s| {
        ratio_opt(s.annualized_sharpe)
    }),
    ("AST (Annualized STARR 0.95)", |s| {
        ratio_opt(s.annualized_starr)
    }),
    ("MD (Max Drawdown)", |s| percent(s.max_drawdown)),
    ("AC (Average Concentration Coefficient)", |s| {
        format!("{:.2}", s.avg_concentration)
    }),
    ("AT (Average Turnover)", |s| {
        format!("{:.4}", s.avg_turnover)
    }),
    ("PCA (First PCA factor Explained Variance)", |s| {
        percent(s.avg_first_pca_explained)
    }),
];

fn percent(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn ratio_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into())
}

/// Side-by-side statistics table, one column per strategy.
pub fn comparison_table(columns: &[(String, StatsReport)], provenance: &str) -> String {
    let mut out = format!("# config: {provenance}\n");
    let label_width = TABLE_ROWS
        .iter()
        .map(|(name, _)| name.len())
        .max()
        .unwrap_or(0);
    let mut header = format!("{:<label_width$}", "Statistic");
    for (name, _) in columns {
        let _ = write!(header, "  {name:>10}");
    }
    out.push_str(&header);
    out.push('\n');
    out.push_str(&"-".repeat(header.len()));
    out.push('\n');
    for (name, render) in TABLE_ROWS {
        let _ = write!(out, "{name:<label_width$}");
        for (_, stats) in columns {
            let _ = write!(out, "  {:>10}", render(stats));
        }
        out.push('\n');
    }
    out
}
