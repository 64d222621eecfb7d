//! Versioned schedule files: optimized amplitude schedules stored for later lookup.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::{make_mpsk_ensemble, StateEnsemble, SystemModel};
use crate::error::{Error, Result};
use crate::receiver::{Strategy, StrategyKind};

pub const SCHEDULE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub version: u32,
    pub kind: StrategyKind,
    #[serde(rename = "N")]
    pub slices: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub mean_photon: f64,
    pub priors: Vec<f64>,
    pub model: SystemModel,
    pub ratios: Vec<f64>,
    pub p_error: f64,
}

impl ScheduleFile {
    pub fn new(strategy: &Strategy, ensemble: &StateEnsemble, model: &SystemModel, p_error: f64) -> Self {
        ScheduleFile {
            version: SCHEDULE_VERSION,
            kind: strategy.kind(),
            slices: strategy.slices(),
            m: ensemble.m(),
            mean_photon: ensemble.mean_photon(),
            priors: ensemble.priors().to_vec(),
            model: *model,
            ratios: strategy.ratios().to_vec(),
            p_error,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            version: u32,
        }
        let probe: Probe = serde_json::from_str(text)?;
        if probe.version != SCHEDULE_VERSION {
            return Err(Error::Schedule(format!(
                "unsupported schedule version {} (expected {SCHEDULE_VERSION})",
                probe.version
            )));
        }
        let file: ScheduleFile = serde_json::from_str(text)?;
        if file.model.slices() != file.slices {
            return Err(Error::Schedule(format!(
                "schedule has N = {} but its model has {} slices",
                file.slices,
                file.model.slices()
            )));
        }
        file.strategy()?;
        Ok(file)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn strategy(&self) -> Result<Strategy> {
        Strategy::new(self.kind, self.slices, self.ratios.clone())
    }

    pub fn ensemble(&self) -> Result<StateEnsemble> {
        make_mpsk_ensemble(self.m, self.mean_photon, Some(&self.priors))
    }

    /// Errors unless the schedule was produced for the same constellation size and system.
    pub fn check_compatible(&self, m: usize, model: &SystemModel) -> Result<()> {
        if self.m != m || self.model != *model {
            return Err(Error::Schedule(format!(
                "schedule was optimized for M = {} and {:?}, requested M = {m} and {:?}",
                self.m, self.model, model
            )));
        }
        Ok(())
    }
}
