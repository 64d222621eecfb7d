//! Sweep configuration files (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use mpsk_receiver::{OptimizerConfig, StrategyKind, SystemModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
}

fn default_spacing() -> Spacing {
    Spacing::Linear
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "one")]
    pub efficiency: f64,
    #[serde(default = "one")]
    pub visibility: f64,
    #[serde(default)]
    pub dark_per_pulse: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            efficiency: 1.0,
            visibility: 1.0,
            dark_per_pulse: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub slices: usize,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<StrategyKind>,
    pub grid: Grid,
    #[serde(default)]
    pub model: ModelConfig,
    /// Enables Monte Carlo batches when set.
    #[serde(default)]
    pub trials: Option<u64>,
    /// Independent Monte Carlo runs per data point.
    #[serde(default = "one_run")]
    pub runs: u32,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
}

fn default_kinds() -> Vec<StrategyKind> {
    StrategyKind::ALL.to_vec()
}

fn one_run() -> u32 {
    1
}

fn default_seed() -> u64 {
    42
}

fn default_r_max() -> f64 {
    5.0
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let g = &self.grid;
        if g.count == 0 {
            return Err(CliError::config("grid.count must be at least 1"));
        }
        if !(g.min.is_finite() && g.max.is_finite()) || g.min < 0.0 || g.min > g.max {
            return Err(CliError::config(format!(
                "grid must satisfy 0 <= min <= max, got [{}, {}]",
                g.min, g.max
            )));
        }
        if g.spacing == Spacing::Log && g.min <= 0.0 && g.count > 1 {
            return Err(CliError::config("log spacing needs grid.min > 0"));
        }
        if self.kinds.is_empty() {
            return Err(CliError::config("kinds must not be empty"));
        }
        if self.m < 2 {
            return Err(CliError::config(format!("M must be at least 2, got {}", self.m)));
        }
        if self.runs == 0 {
            return Err(CliError::config("runs must be at least 1"));
        }
        if self.trials == Some(0) {
            return Err(CliError::config("trials must be at least 1"));
        }
        self.system_model()?;
        self.optimizer()?;
        Ok(())
    }

    pub fn system_model(&self) -> Result<SystemModel, CliError> {
        SystemModel::new(
            self.model.efficiency,
            self.model.visibility,
            self.model.dark_per_pulse,
            self.slices,
        )
        .map_err(|e| CliError::config(e.to_string()))
    }

    pub fn optimizer(&self) -> Result<OptimizerConfig, CliError> {
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return Err(CliError::config(format!("r_max must be positive, got {}", self.r_max)));
        }
        Ok(OptimizerConfig {
            r_max: self.r_max,
            seed: self.seed,
            ..OptimizerConfig::default()
        })
    }

    /// Mean-photon grid points in ascending order.
    pub fn mean_photon_grid(&self) -> Vec<f64> {
        let g = &self.grid;
        if g.count == 1 {
            return vec![g.min];
        }
        let last = (g.count - 1) as f64;
        (0..g.count)
            .map(|i| {
                let t = i as f64 / last;
                if i + 1 == g.count {
                    g.max
                } else {
                    match g.spacing {
                        Spacing::Linear => g.min + t * (g.max - g.min),
                        Spacing::Log => g.min * (g.max / g.min).powf(t),
                    }
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = r#"
        M = 4
        N = 10
        kinds = ["non-optimized", "flat", "sequential", "historical"]
        [grid]
        min = 0.2
        max = 5.0
        count = 20
        spacing = "log"
    "#;

    #[test]
    fn parses_and_builds_grid() {
        let cfg = SweepConfig::parse(FIG1).unwrap();
        let g = cfg.mean_photon_grid();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.2);
        assert_eq!(g[19], 5.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(cfg.system_model().unwrap(), SystemModel::ideal(10).unwrap());
    }

    #[test]
    fn single_point_grid() {
        let cfg = SweepConfig::parse("M = 4\nN = 2\n[grid]\nmin = 1.0\nmax = 1.0\ncount = 1\n").unwrap();
        assert_eq!(cfg.mean_photon_grid(), vec![1.0]);
    }

    #[test]
    fn rejects_invalid() {
        for bad in [
            "M = 4\nN = 2\n[grid]\nmin = 1.0\nmax = 1.0\ncount = 0\n",
            "M = 4\nN = 2\n[grid]\nmin = 2.0\nmax = 1.0\ncount = 3\n",
            "M = 4\nN = 2\n[grid]\nmin = 0.0\nmax = 1.0\ncount = 3\nspacing = \"log\"\n",
            "M = 1\nN = 2\n[grid]\nmin = 1.0\nmax = 1.0\ncount = 1\n",
            "M = 4\nN = 0\n[grid]\nmin = 1.0\nmax = 1.0\ncount = 1\n",
            "M = 4\nN = 2\ntrials = 0\n[grid]\nmin = 1.0\nmax = 1.0\ncount = 1\n",
            "M = 4\nN = 2\nbogus = 1\n[grid]\nmin = 1.0\nmax = 1.0\ncount = 1\n",
            "M = 4\nN = 2\n[grid]\nmin = 1.0\nmax = 1.0\ncount = 1\n[model]\nefficiency = 1.5\n",
        ] {
            let err = SweepConfig::parse(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}");
        }
    }
}
