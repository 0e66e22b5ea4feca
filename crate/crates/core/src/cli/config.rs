//! TOML experiment configuration.
//!
//! Every key is optional and defaults to the reference setup; unknown keys
//! are rejected. Example:
//!
//! ```toml
//! seed = 20250101
//! paths_per_cell = 1000
//! strategies = ["as", "symmetric", "performative", "theta"]
//!
//! [market]
//! order_flow_scale = 140.0
//! book_decay = 1.5
//! volatility = 2.0
//! horizon = 1.0
//! step = 0.005
//!
//! [grid]
//! gamma = [0.1, 0.5, 0.8]
//! xi_range = { lo = 0.3, hi = 20.0, points = 20, spacing = "log" }
//! ```

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::Stepper;
use crate::execution::FillRule;
use crate::harness::{
    linear_grid, log_grid, CellConfig, ExperimentConfig, StrategyKind, ThetaSource,
};
use crate::params::{Gamma, MarketParams, Xi};
use crate::strategies::ThetaParams;
use crate::tuner::{Objective, SearchBox, ThetaTable, TuneConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiRange {
    pub lo: Xi,
    pub hi: Xi,
    pub points: NonZeroUsize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub gamma: Vec<Gamma>,
    #[serde(default)]
    pub xi: Option<Vec<Xi>>,
    #[serde(default)]
    pub xi_range: Option<XiRange>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            gamma: [0.1, 0.5, 0.8]
                .iter()
                .map(|g| Gamma::new(*g).unwrap())
                .collect(),
            xi: None,
            xi_range: Some(XiRange {
                lo: Xi::new(0.3).unwrap(),
                hi: Xi::new(20.0).unwrap(),
                points: NonZeroUsize::new(20).unwrap(),
                spacing: Spacing::Log,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneSection {
    pub budget: NonZeroUsize,
    pub train_paths: NonZeroUsize,
    pub test_paths: NonZeroUsize,
    pub train_seed: u64,
    pub test_seed: u64,
    pub objective: Objective,
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Default for TuneSection {
    fn default() -> Self {
        let d = TuneConfig::default();
        Self {
            budget: NonZeroUsize::new(d.budget).unwrap(),
            train_paths: NonZeroUsize::new(d.train_paths).unwrap(),
            test_paths: NonZeroUsize::new(d.test_paths).unwrap(),
            train_seed: d.train_seed,
            test_seed: d.test_seed,
            objective: d.objective,
            lo: d.search_box.lo,
            hi: d.search_box.hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecomposeSection {
    pub gamma: Gamma,
    pub xi: Xi,
}

impl Default for DecomposeSection {
    fn default() -> Self {
        Self {
            gamma: Gamma::new(0.5).unwrap(),
            xi: Xi::new(10.0).unwrap(),
        }
    }
}

/// The on-disk configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub seed: u64,
    pub paths_per_cell: NonZeroUsize,
    pub strategies: Vec<StrategyKind>,
    pub impact_multiplier: f64,
    pub initial_price: f64,
    pub fill_rule: FillRule,
    pub stepper: Stepper,
    pub as_shadow: bool,
    /// Fixed theta multipliers, used when no table is given.
    pub theta: Option<[f64; 3]>,
    /// Path to a `thetas.csv`, relative to the config file.
    pub theta_table: Option<PathBuf>,
    pub market: MarketParams,
    pub grid: GridSection,
    pub tune: TuneSection,
    pub decompose: DecomposeSection,
}

impl Default for FileConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        Self {
            seed: e.master_seed,
            paths_per_cell: NonZeroUsize::new(e.paths_per_cell).unwrap(),
            strategies: e.strategies,
            impact_multiplier: e.impact_multiplier,
            initial_price: e.initial_price,
            fill_rule: e.fill_rule,
            stepper: e.stepper,
            as_shadow: e.as_shadow,
            theta: None,
            theta_table: None,
            market: e.market,
            grid: GridSection::default(),
            tune: TuneSection::default(),
            decompose: DecomposeSection::default(),
        }
    }
}

/// A configuration problem, rendered as a diagnostic for the user.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl FileConfig {
    /// Parses TOML text; errors carry line and column of the offending key.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let cfg = Self::parse(&text)
            .map_err(|e| ConfigError(format!("invalid config {}:\n{}", path.display(), e.0)))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn xi_grid(&self) -> Result<Vec<f64>, ConfigError> {
        match (&self.grid.xi, &self.grid.xi_range) {
            (Some(_), Some(_)) => Err(ConfigError(
                "grid: give either `xi` or `xi_range`, not both".into(),
            )),
            (None, None) => Err(ConfigError(
                "grid: missing field `xi` (or `xi_range`)".into(),
            )),
            (Some(list), None) => {
                if list.is_empty() {
                    Err(ConfigError("grid: field `xi` is empty".into()))
                } else {
                    Ok(list.iter().map(|x| x.get()).collect())
                }
            }
            (None, Some(r)) => {
                if r.hi < r.lo {
                    return Err(ConfigError("grid.xi_range: `hi` must be >= `lo`".into()));
                }
                Ok(match r.spacing {
                    Spacing::Log => log_grid(r.lo.get(), r.hi.get(), r.points.get()),
                    Spacing::Linear => linear_grid(r.lo.get(), r.hi.get(), r.points.get()),
                })
            }
        }
    }

    /// Builds the experiment; `base_dir` resolves a relative theta table path.
    pub fn experiment(&self, base_dir: &Path) -> Result<ExperimentConfig, ConfigError> {
        if self.grid.gamma.is_empty() {
            return Err(ConfigError("grid: field `gamma` is empty".into()));
        }
        let theta = match (&self.theta_table, self.theta) {
            (Some(_), Some(_)) => {
                return Err(ConfigError(
                    "give either `theta` or `theta_table`, not both".into(),
                ))
            }
            (Some(path), None) => {
                let path = base_dir.join(path);
                let file = std::fs::File::open(&path)
                    .map_err(|e| ConfigError(format!("theta_table {}: {e}", path.display())))?;
                let table = ThetaTable::read_csv(file)
                    .map_err(|e| ConfigError(format!("theta_table {}: {e}", path.display())))?;
                ThetaSource::Table(table)
            }
            (None, Some(t)) => ThetaSource::Fixed(ThetaParams::from_array(t)),
            (None, None) => ThetaSource::Fixed(ThetaParams::IDENTITY),
        };
        let exp = ExperimentConfig {
            market: self.market,
            gammas: self.grid.gamma.iter().map(|g| g.get()).collect(),
            xis: self.xi_grid()?,
            paths_per_cell: self.paths_per_cell.get(),
            master_seed: self.seed,
            strategies: self.strategies.clone(),
            theta,
            impact_multiplier: self.impact_multiplier,
            initial_price: self.initial_price,
            fill_rule: self.fill_rule,
            stepper: self.stepper,
            as_shadow: self.as_shadow,
        };
        exp.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(exp)
    }

    pub fn tune_config(&self) -> Result<TuneConfig, ConfigError> {
        let t = &self.tune;
        let cfg = TuneConfig {
            search_box: SearchBox { lo: t.lo, hi: t.hi },
            budget: t.budget.get(),
            train_paths: t.train_paths.get(),
            test_paths: t.test_paths.get(),
            train_seed: t.train_seed,
            test_seed: t.test_seed,
            objective: t.objective,
        };
        cfg.validate()
            .map_err(|e| ConfigError(format!("tune: {e}")))?;
        Ok(cfg)
    }

    /// The single cell used by `decompose`; always includes the performative agent.
    pub fn decompose_cell(&self) -> Result<CellConfig, ConfigError> {
        let mut strategies = vec![StrategyKind::As, StrategyKind::Performative];
        for s in &self.strategies {
            if !strategies.contains(s) {
                strategies.push(*s);
            }
        }
        let mut cell = CellConfig::new(
            self.market,
            self.decompose.gamma.get(),
            self.decompose.xi.get(),
        )
        .with_strategies(&strategies)
        .with_theta(self.theta.map(ThetaParams::from_array).unwrap_or_default());
        cell.impact_multiplier = self.impact_multiplier;
        cell.initial_price = self.initial_price;
        cell.fill_rule = self.fill_rule;
        cell.stepper = self.stepper;
        cell.as_shadow = self.as_shadow;
        cell.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(cell)
    }

    pub fn snapshot(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = FileConfig::parse("").unwrap();
        let exp = cfg.experiment(Path::new(".")).unwrap();
        assert_eq!(exp, ExperimentConfig::default());
        assert_eq!(exp.cells().count(), 60);
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err = FileConfig::parse("seed = 1\n\n[market]\nvolatilty = 2.0\n").unwrap_err();
        assert!(err.0.contains("line 4"), "{}", err.0);
        assert!(err.0.contains("volatilty"), "{}", err.0);
    }

    #[test]
    fn missing_xi_names_the_field() {
        let cfg = FileConfig::parse("[grid]\ngamma = [0.5]\n").unwrap();
        let err = cfg.experiment(Path::new(".")).unwrap_err();
        assert!(err.0.contains("`xi`"), "{}", err.0);
    }

    #[test]
    fn missing_gamma_names_the_field() {
        let err = FileConfig::parse("[grid]\nxi = [1.0]\n").unwrap_err();
        assert!(err.0.contains("gamma"), "{}", err.0);
    }

    #[test]
    fn non_positive_xi_is_rejected_with_line() {
        let err = FileConfig::parse("[grid]\ngamma = [0.5]\nxi = [1.0, -2.0]\n").unwrap_err();
        assert!(err.0.contains("line 3"), "{}", err.0);
    }

    #[test]
    fn zero_paths_rejected() {
        assert!(FileConfig::parse("paths_per_cell = 0\n").is_err());
    }

    #[test]
    fn explicit_lists_and_linear_range() {
        let cfg = FileConfig::parse(
            "strategies = [\"as\", \"performative\"]\n[grid]\ngamma = [0.5]\nxi_range = { lo = 1.0, hi = 3.0, points = 3, spacing = \"linear\" }\n",
        )
        .unwrap();
        let exp = cfg.experiment(Path::new(".")).unwrap();
        assert_eq!(exp.xis, vec![1.0, 2.0, 3.0]);
        assert_eq!(
            exp.strategies,
            vec![StrategyKind::As, StrategyKind::Performative]
        );
    }

    #[test]
    fn tune_section() {
        let cfg = FileConfig::parse("[tune]\nbudget = 5\ntrain_seed = 3\ntest_seed = 3\n").unwrap();
        assert!(cfg.tune_config().is_err());
        let cfg = FileConfig::parse("[tune]\nbudget = 5\nobjective = \"mean-utility\"\n").unwrap();
        let t = cfg.tune_config().unwrap();
        assert_eq!(t.budget, 5);
        assert_eq!(t.objective, Objective::MeanUtility);
    }
}
