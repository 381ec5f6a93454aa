//! Run configuration: JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use eri_core::simplex::SolverOptions;
use eri_core::strategies::StrategySpec;
use eri_core::tail::TailRule;

use crate::CliError;

/// Which strategies a run evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Eri,
    Mv,
    Ew,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Eri => "ERI",
            StrategyKind::Mv => "MV",
            StrategyKind::Ew => "EW",
        }
    }

    pub fn prefix(self) -> &'static str {
        match self {
            StrategyKind::Eri => "eri",
            StrategyKind::Mv => "mv",
            StrategyKind::Ew => "ew",
        }
    }
}

/// Asset universe selection.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UniverseSelection {
    /// Every ticker with a full history.
    #[default]
    All,
    /// An explicit ticker list.
    Tickers { tickers: Vec<String> },
    /// Static tail-index groups; `groups` are 1-based indices into the
    /// grouping induced by `cut_points` (all groups when omitted).
    AlphaGroups {
        cut_points: Vec<f64>,
        #[serde(default)]
        groups: Option<Vec<usize>>,
    },
}

/// One batch run: data source, estimation settings, strategies, outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// CSV price panel (wide or long layout).
    pub data: PathBuf,
    #[serde(default)]
    pub universe: UniverseSelection,
    #[serde(default = "default_window_len")]
    pub window_len: usize,
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
    #[serde(default = "default_rebalance")]
    pub rebalance_every: usize,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategyKind>,
    #[serde(default)]
    pub ridge: f64,
    #[serde(default = "default_initial_value")]
    pub initial_value: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Seed echoed into reports; synthetic data generation keys off it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
}

fn default_window_len() -> usize {
    1500
}

fn default_tail_fraction() -> f64 {
    0.10
}

fn default_rebalance() -> usize {
    1
}

fn default_strategies() -> Vec<StrategyKind> {
    vec![StrategyKind::Eri, StrategyKind::Mv, StrategyKind::Ew]
}

fn default_initial_value() -> f64 {
    100.0
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub strategies: Vec<StrategyKind>,
    pub rebalance_every: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        // serde_json errors carry line and column references
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(out) = &overrides.out_dir {
            cfg.out_dir = out.clone();
        }
        if !overrides.strategies.is_empty() {
            cfg.strategies = overrides.strategies.clone();
        }
        if let Some(r) = overrides.rebalance_every {
            cfg.rebalance_every = r;
        }
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if self.window_len < 20 {
            return fail(format!("window_len {} below the minimum of 20", self.window_len));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction < 1.0) {
            return fail(format!("tail_fraction {} outside (0, 1)", self.tail_fraction));
        }
        if self.rebalance_every == 0 {
            return fail("rebalance_every must be at least 1".into());
        }
        if self.strategies.is_empty() {
            return fail("strategies must not be empty".into());
        }
        if !(self.ridge >= 0.0) {
            return fail(format!("ridge {} must be nonnegative", self.ridge));
        }
        if !(self.initial_value > 0.0) {
            return fail(format!("initial_value {} must be positive", self.initial_value));
        }
        if !(self.solver.tolerance > 0.0) || self.solver.max_iterations == 0 {
            return fail("solver tolerance and max_iterations must be positive".into());
        }
        if let UniverseSelection::AlphaGroups { cut_points, groups } = &self.universe {
            if cut_points.is_empty() || cut_points.windows(2).any(|w| w[1] <= w[0]) {
                return fail("cut_points must be nonempty and strictly ascending".into());
            }
            if let Some(groups) = groups {
                let n_groups = cut_points.len() + 1;
                if groups.is_empty() || groups.iter().any(|g| *g == 0 || *g > n_groups) {
                    return fail(format!("groups must be 1-based indices up to {n_groups}"));
                }
            }
        }
        if let UniverseSelection::Tickers { tickers } = &self.universe {
            if tickers.is_empty() {
                return fail("universe ticker list must not be empty".into());
            }
        }
        Ok(())
    }

    pub fn tail_rule(&self) -> TailRule {
        TailRule::StaticFraction(self.tail_fraction)
    }

    pub fn strategy_spec(&self, kind: StrategyKind) -> StrategySpec {
        match kind {
            StrategyKind::Eri => StrategySpec::Eri {
                tail_rule: self.tail_rule(),
                solver: self.solver,
            },
            StrategyKind::Mv => StrategySpec::Mv {
                ridge: self.ridge,
                solver: self.solver,
            },
            StrategyKind::Ew => StrategySpec::Ew,
        }
    }

    /// Canonical one-line JSON used in provenance headers.
    pub fn provenance(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
