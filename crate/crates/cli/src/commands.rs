//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use eri_core::analytics::{diagnostic_series, summarize_series, StatsReport};
use eri_core::backtest::{ledger_losses, run_backtest, BacktestConfig, BacktestLedger};
use eri_core::market_data::{compute_losses, load_prices_dropping, CsvSchema, PricePanel};
use eri_core::report;
use eri_core::strategies::{build_grouping, AlphaGrouping};
use eri_core::synthetic::{losses_to_panel, sample, SyntheticDistribution, SyntheticSpec};
use eri_core::tail::{estimate_tail, per_stock_alpha};
use eri_core::weights::auto_tickers;

use crate::config::{Overrides, RunConfig, UniverseSelection};
use crate::CliError;

/// One backtest scope: a file-name prefix and an optional ticker subset.
struct Unit {
    label: String,
    tickers: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct LedgerDoc {
    config: RunConfig,
    universe: String,
    strategy: String,
    ledger: BacktestLedger,
}

#[derive(Serialize)]
struct StatsDoc<'a> {
    config: &'a RunConfig,
    universe: &'a str,
    strategy: &'a str,
    stats: &'a StatsReport,
}

#[derive(Serialize)]
struct GroupingDoc<'a> {
    config: &'a RunConfig,
    grouping: &'a AlphaGrouping,
}

pub fn cmd_backtest(config_path: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path, overrides)?;
    let (panel, dropped) = load_panel(&cfg)?;
    let (units, mut notes) = resolve_units(&cfg, &panel, true)?;
    if !dropped.is_empty() {
        eprintln!(
            "warning: dropped {} tickers without full history: {}",
            dropped.len(),
            dropped.join(", ")
        );
    }

    let mut summary_lines = Vec::new();
    for unit in &units {
        let universe_name = unit_name(unit);
        let mut columns = Vec::new();
        for &kind in &cfg.strategies {
            let bt_cfg = BacktestConfig {
                window_len: cfg.window_len,
                rebalance_every: cfg.rebalance_every,
                universe: unit.tickers.clone(),
                strategy: cfg.strategy_spec(kind),
                initial_value: cfg.initial_value,
            };
            let ledger = run_backtest(&panel, &bt_cfg).map_err(data_err)?;
            let losses = ledger_losses(&panel, &ledger).map_err(data_err)?;
            let series = diagnostic_series(&ledger, &losses).map_err(data_err)?;
            let stats = summarize_series(&ledger, &series).map_err(data_err)?;

            let fallbacks = ledger.records.iter().filter(|r| r.solver_fallback).count();
            if fallbacks > 0 {
                eprintln!(
                    "warning: {}{} had {fallbacks} solver fallback day(s)",
                    unit.label,
                    kind.name()
                );
            }
            for note in &ledger.notes {
                notes.push(format!("{}{}: {note}", unit.label, kind.name()));
            }

            let provenance = provenance_line(&cfg, &universe_name, Some(kind.name()));
            let prefix = format!("{}{}", unit.label, kind.prefix());
            write_out(
                &cfg.out_dir,
                &format!("{prefix}_ledger.csv"),
                report::ledger_to_csv(&ledger, &provenance),
            )?;
            let doc = LedgerDoc {
                config: cfg.clone(),
                universe: universe_name.clone(),
                strategy: kind.name().to_string(),
                ledger,
            };
            write_out(
                &cfg.out_dir,
                &format!("{prefix}_ledger.json"),
                to_pretty_json(&doc)?,
            )?;
            write_out(
                &cfg.out_dir,
                &format!("{prefix}_series.csv"),
                report::series_to_csv(&series, &provenance),
            )?;
            let stats_doc = StatsDoc {
                config: &cfg,
                universe: &universe_name,
                strategy: kind.name(),
                stats: &stats,
            };
            write_out(
                &cfg.out_dir,
                &format!("{prefix}_stats.json"),
                to_pretty_json(&stats_doc)?,
            )?;
            summary_lines.push(format!(
                "{prefix}: {} days, {fallbacks} fallback(s)",
                doc_len(&cfg.out_dir, &prefix)?
            ));
            columns.push((kind.name().to_string(), stats));
        }
        let provenance = provenance_line(&cfg, &universe_name, None);
        write_out(
            &cfg.out_dir,
            &format!("{}comparison.txt", unit.label),
            report::comparison_table(&columns, &provenance),
        )?;
    }

    let mut summary = format!("# config: {}\n", cfg.provenance());
    if dropped.is_empty() {
        summary.push_str("dropped tickers: none\n");
    } else {
        summary.push_str(&format!("dropped tickers: {}\n", dropped.join(", ")));
    }
    for line in &summary_lines {
        summary.push_str(line);
        summary.push('\n');
    }
    if !notes.is_empty() {
        summary.push_str("notes:\n");
        for n in &notes {
            summary.push_str("  ");
            summary.push_str(n);
            summary.push('\n');
        }
    }
    write_out(&cfg.out_dir, "run_summary.txt", summary)?;
    Ok(())
}

pub fn cmd_estimate(config_path: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path, overrides)?;
    let (panel, dropped) = load_panel(&cfg)?;
    if !dropped.is_empty() {
        eprintln!(
            "warning: dropped {} tickers without full history",
            dropped.len()
        );
    }
    let base = base_panel(&cfg, &panel)?;
    let losses = compute_losses(&base).map_err(data_err)?;
    if losses.n_periods() < cfg.window_len + 1 {
        return Err(CliError::Data(format!(
            "panel has {} return days, a {}-day window needs at least {}",
            losses.n_periods(),
            cfg.window_len,
            cfg.window_len + 1
        )));
    }
    let rule = cfg.tail_rule();
    let provenance = provenance_line(&cfg, "estimate", None);

    // daily tail index of the joint loss vector, one row per backtest day
    let mut alpha_csv = format!("# config: {provenance}\ndate,alpha_hat,k\n");
    for t in cfg.window_len..losses.n_periods() {
        let window = losses.log_window(t - cfg.window_len, t);
        let tail = estimate_tail(window, &rule).map_err(data_err)?;
        alpha_csv.push_str(&format!(
            "{},{},{}\n",
            losses.dates()[t],
            report::fmt_sig12(tail.alpha_hat),
            tail.k
        ));
    }
    write_out(&cfg.out_dir, "alpha_series.csv", alpha_csv)?;

    // per-stock estimates on the first backtest day's window
    let first_date = losses.dates()[cfg.window_len];
    let cut_points = match &cfg.universe {
        UniverseSelection::AlphaGroups { cut_points, .. } => Some(cut_points.clone()),
        _ => None,
    };
    let mut stock_csv = format!("# config: {provenance}\nticker,alpha_hat,group\n");
    match &cut_points {
        Some(cuts) => {
            let grouping = build_grouping(&base, first_date, cfg.window_len, cuts, &rule)
                .map_err(data_err)?;
            for m in &grouping.members {
                stock_csv.push_str(&format!(
                    "{},{},{}\n",
                    report::csv_escape(&m.ticker),
                    report::fmt_sig12(m.alpha_hat),
                    m.group + 1
                ));
            }
            write_out(
                &cfg.out_dir,
                "grouping.json",
                to_pretty_json(&GroupingDoc {
                    config: &cfg,
                    grouping: &grouping,
                })?,
            )?;
        }
        None => {
            for (i, ticker) in losses.tickers().iter().enumerate() {
                let column: Vec<f64> = (0..cfg.window_len)
                    .map(|t| losses.log_row(t)[i])
                    .collect();
                let alpha = per_stock_alpha(&column, &rule).map_err(data_err)?;
                stock_csv.push_str(&format!(
                    "{},{},\n",
                    report::csv_escape(ticker),
                    report::fmt_sig12(alpha)
                ));
            }
        }
    }
    write_out(&cfg.out_dir, "per_stock_alpha.csv", stock_csv)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    /// Multivariate Student t losses.
    T,
    /// Pareto radius with a uniform L1-sphere direction.
    Pareto,
    /// Not implemented; listed so the rejection is explicit.
    Stable,
}

/// Flags for `eri synth`.
#[derive(Parser, Debug, Serialize)]
pub struct SynthArgs {
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "t")]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 2)]
    pub assets: usize,
    /// Number of return periods (the panel gets one extra price row).
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Degrees of freedom for the t distribution (its tail index).
    #[arg(long, default_value_t = 3.0)]
    pub nu: f64,
    /// Tail index for the Pareto radius.
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Common correlation of the t scale matrix.
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Per-asset scale multipliers, comma separated (t only).
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<f64>>,
    /// Loss-to-return scale: prices compound exp(-vol * loss).
    #[arg(long, default_value_t = 0.01)]
    pub vol: f64,
    #[arg(long, default_value_t = 100.0)]
    pub start_price: f64,
    #[arg(long, default_value = "2001-01-01")]
    pub start_date: NaiveDate,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    if args.assets == 0 || args.steps == 0 {
        return Err(CliError::Config(
            "assets and steps must be positive".into(),
        ));
    }
    let distribution = match args.kind {
        SynthKind::Stable => {
            return Err(CliError::Config(
                "alpha-stable sampling is unsupported; use --kind t or --kind pareto".into(),
            ))
        }
        SynthKind::Pareto => SyntheticDistribution::ParetoRadialUniformAngle {
            alpha: args.alpha,
            dim: args.assets,
        },
        SynthKind::T => {
            let scales = match &args.scales {
                Some(s) => {
                    if s.len() != args.assets {
                        return Err(CliError::Config(format!(
                            "--scales lists {} values for {} assets",
                            s.len(),
                            args.assets
                        )));
                    }
                    s.clone()
                }
                None => vec![1.0; args.assets],
            };
            if scales.iter().any(|s| !(*s > 0.0)) {
                return Err(CliError::Config("scales must be positive".into()));
            }
            let scale = (0..args.assets)
                .map(|i| {
                    (0..args.assets)
                        .map(|j| {
                            let corr = if i == j { 1.0 } else { args.rho };
                            scales[i] * scales[j] * corr
                        })
                        .collect()
                })
                .collect();
            SyntheticDistribution::MultivariateT {
                dof: args.nu,
                scale,
            }
        }
    };
    let spec = SyntheticSpec {
        distribution,
        n: args.steps,
        seed: args.seed,
    };
    let rows = sample(&spec).map_err(|e| CliError::Config(format!("synthetic spec: {e}")))?;
    let panel = losses_to_panel(
        &rows,
        &auto_tickers(args.assets),
        args.start_date,
        args.start_price,
        args.vol,
    )
    .map_err(|e| CliError::Config(format!("panel construction: {e}")))?;
    let provenance =
        serde_json::to_string(args).map_err(|e| CliError::Other(format!("serialize: {e}")))?;
    let content = format!("# synth: {provenance}\n{}", panel.to_csv_string());
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Other(format!("create {}: {e}", parent.display())))?;
        }
    }
    fs::write(&args.out, content)
        .map_err(|e| CliError::Other(format!("write {}: {e}", args.out.display())))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

pub fn cmd_report(config_path: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let cfg = RunConfig::load(config_path, overrides)?;
    let (panel, _) = load_panel(&cfg)?;
    let (units, _) = resolve_units(&cfg, &panel, false)?;
    for unit in &units {
        let universe_name = unit_name(unit);
        let mut columns = Vec::new();
        for &kind in &cfg.strategies {
            let prefix = format!("{}{}", unit.label, kind.prefix());
            let path = cfg.out_dir.join(format!("{prefix}_ledger.json"));
            let text = fs::read_to_string(&path).map_err(|e| {
                CliError::Data(format!("cannot read ledger {}: {e}", path.display()))
            })?;
            let doc: LedgerDoc = serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let losses = ledger_losses(&panel, &doc.ledger).map_err(data_err)?;
            let series = diagnostic_series(&doc.ledger, &losses).map_err(data_err)?;
            let stats = summarize_series(&doc.ledger, &series).map_err(data_err)?;
            let provenance = provenance_line(&cfg, &universe_name, Some(kind.name()));
            write_out(
                &cfg.out_dir,
                &format!("{prefix}_series.csv"),
                report::series_to_csv(&series, &provenance),
            )?;
            write_out(
                &cfg.out_dir,
                &format!("{prefix}_stats.json"),
                to_pretty_json(&StatsDoc {
                    config: &cfg,
                    universe: &universe_name,
                    strategy: kind.name(),
                    stats: &stats,
                })?,
            )?;
            columns.push((kind.name().to_string(), stats));
        }
        let provenance = provenance_line(&cfg, &universe_name, None);
        write_out(
            &cfg.out_dir,
            &format!("{}comparison.txt", unit.label),
            report::comparison_table(&columns, &provenance),
        )?;
    }
    Ok(())
}

fn load_panel(cfg: &RunConfig) -> Result<(PricePanel, Vec<String>), CliError> {
    let file = fs::File::open(&cfg.data)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", cfg.data.display())))?;
    load_prices_dropping(file, &CsvSchema::Auto)
        .map_err(|e| CliError::Data(format!("{}: {e}", cfg.data.display())))
}

/// The panel an estimation works on before any group split.
fn base_panel(cfg: &RunConfig, panel: &PricePanel) -> Result<PricePanel, CliError> {
    match &cfg.universe {
        UniverseSelection::Tickers { tickers } => panel.restrict(tickers).map_err(data_err),
        _ => Ok(panel.clone()),
    }
}

fn resolve_units(
    cfg: &RunConfig,
    panel: &PricePanel,
    warn_empty: bool,
) -> Result<(Vec<Unit>, Vec<String>), CliError> {
    let mut notes = Vec::new();
    let units = match &cfg.universe {
        UniverseSelection::All => vec![Unit {
            label: String::new(),
            tickers: None,
        }],
        UniverseSelection::Tickers { tickers } => {
            panel.restrict(tickers).map_err(data_err)?; // validate early
            vec![Unit {
                label: String::new(),
                tickers: Some(tickers.clone()),
            }]
        }
        UniverseSelection::AlphaGroups { cut_points, groups } => {
            let losses = compute_losses(panel).map_err(data_err)?;
            if losses.n_periods() < cfg.window_len + 1 {
                return Err(CliError::Data(format!(
                    "panel has {} return days, a {}-day window needs at least {}",
                    losses.n_periods(),
                    cfg.window_len,
                    cfg.window_len + 1
                )));
            }
            let first_date = losses.dates()[cfg.window_len];
            let grouping =
                build_grouping(panel, first_date, cfg.window_len, cut_points, &cfg.tail_rule())
                    .map_err(data_err)?;
            write_out(
                &cfg.out_dir,
                "grouping.json",
                to_pretty_json(&GroupingDoc {
                    config: cfg,
                    grouping: &grouping,
                })?,
            )?;
            let selected: Vec<usize> = groups
                .clone()
                .unwrap_or_else(|| (1..=grouping.n_groups()).collect());
            let mut units = Vec::new();
            for g in selected {
                let tickers = grouping.group_tickers(g - 1);
                if tickers.is_empty() {
                    notes.push(format!("group {g} is empty and was skipped"));
                    if warn_empty {
                        eprintln!("warning: group {g} is empty and was skipped");
                    }
                    continue;
                }
                units.push(Unit {
                    label: format!("group{g}_"),
                    tickers: Some(tickers),
                });
            }
            if units.is_empty() {
                return Err(CliError::Data("every requested group is empty".into()));
            }
            units
        }
    };
    Ok((units, notes))
}

fn unit_name(unit: &Unit) -> String {
    if unit.label.is_empty() {
        "all".to_string()
    } else {
        unit.label.trim_end_matches('_').to_string()
    }
}

fn provenance_line(cfg: &RunConfig, universe: &str, strategy: Option<&str>) -> String {
    let value = serde_json::json!({
        "config": serde_json::from_str::<serde_json::Value>(&cfg.provenance())
            .expect("config provenance is json"),
        "universe": universe,
        "strategy": strategy,
    });
    value.to_string()
}

fn write_out(dir: &Path, name: &str, content: String) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Other(format!("create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, content)
        .map_err(|e| CliError::Other(format!("write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Other(format!("serialize: {e}")))
}

fn data_err(e: eri_core::Error) -> CliError {
    CliError::Data(e.to_string())
}

fn doc_len(dir: &Path, prefix: &str) -> Result<usize, CliError> {
    let path = dir.join(format!("{prefix}_ledger.csv"));
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Other(format!("read {}: {e}", path.display())))?;
    Ok(text.lines().count().saturating_sub(2))
}
