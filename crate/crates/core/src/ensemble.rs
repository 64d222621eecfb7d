//! Input constellation and detector model.
//!
//! States are labelled `k = 1..=M` with phase `2πk/M`. Internally they are
//! stored zero-based: index `i` holds state `k = i + 1`, so index `M - 1` is
//! the state on the positive real axis.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex field amplitude; `|a|²` is the mean photon number.
pub type ComplexAmplitude = Complex64;

const PRIOR_TOLERANCE: f64 = 1e-12;

/// Equal-modulus M-PSK constellation with prior probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnsemble", into = "RawEnsemble")]
pub struct StateEnsemble {
    m: usize,
    mean_photon: f64,
    priors: Vec<f64>,
    // cos(2πd/M) for d = 0..M, symmetrised so that offsets d and M-d compare equal.
    offset_cos: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawEnsemble {
    m: usize,
    mean_photon: f64,
    #[serde(default)]
    priors: Option<Vec<f64>>,
}

impl TryFrom<RawEnsemble> for StateEnsemble {
    type Error = Error;

    fn try_from(raw: RawEnsemble) -> Result<Self> {
        make_mpsk_ensemble(raw.m, raw.mean_photon, raw.priors.as_deref())
    }
}

impl From<StateEnsemble> for RawEnsemble {
    fn from(e: StateEnsemble) -> Self {
        RawEnsemble {
            m: e.m,
            mean_photon: e.mean_photon,
            priors: Some(e.priors),
        }
    }
}

/// Builds the M-PSK ensemble `{ √⟨n⟩ · e^{i2πk/M} }`, uniform priors when `priors` is `None`.
pub fn make_mpsk_ensemble(m: usize, mean_photon: f64, priors: Option<&[f64]>) -> Result<StateEnsemble> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("constellation size must be at least 2, got {m}")));
    }
    if !mean_photon.is_finite() || mean_photon < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mean photon number must be finite and non-negative, got {mean_photon}"
        )));
    }
    let priors = match priors {
        None => vec![1.0 / m as f64; m],
        Some(p) => normalized_priors(p, m)?,
    };
    let offset_cos = (0..m)
        .map(|d| {
            let d = d.min(m - d);
            (TAU * d as f64 / m as f64).cos()
        })
        .collect();
    Ok(StateEnsemble {
        m,
        mean_photon,
        priors,
        offset_cos,
    })
}

fn normalized_priors(p: &[f64], m: usize) -> Result<Vec<f64>> {
    if p.len() != m {
        return Err(Error::InvalidParameter(format!(
            "expected {m} priors, got {}",
            p.len()
        )));
    }
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidParameter("priors must be finite and non-negative".into()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PRIOR_TOLERANCE {
        return Err(Error::InvalidParameter(format!("priors sum to {sum}, expected 1")));
    }
    Ok(p.iter().map(|x| x / sum).collect())
}

impl StateEnsemble {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mean_photon(&self) -> f64 {
        self.mean_photon
    }

    /// Common modulus `|α| = √⟨n⟩`.
    pub fn modulus(&self) -> f64 {
        self.mean_photon.sqrt()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// Phase `2πk/M` of the zero-based index `i` (state `k = i + 1`).
    pub fn phase(&self, index: usize) -> f64 {
        TAU * (index + 1) as f64 / self.m as f64
    }

    pub fn amplitude(&self, index: usize) -> ComplexAmplitude {
        Complex64::from_polar(self.modulus(), self.phase(index))
    }

    pub fn amplitudes(&self) -> Vec<ComplexAmplitude> {
        (0..self.m).map(|i| self.amplitude(i)).collect()
    }

    /// `cos(φ_k − φ_j)` for zero-based indices, exact under `k ↔ j` and cyclic shifts.
    pub fn relative_cos(&self, k: usize, j: usize) -> f64 {
        self.offset_cos[(k + self.m - j) % self.m]
    }

    /// Same constellation with a different mean photon number.
    pub fn with_mean_photon(&self, mean_photon: f64) -> Result<StateEnsemble> {
        make_mpsk_ensemble(self.m, mean_photon, Some(&self.priors))
    }
}

/// Detector and displacement imperfections plus the number of adaptive slices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct SystemModel {
    efficiency: f64,
    visibility: f64,
    dark_per_pulse: f64,
    slices: usize,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    efficiency: f64,
    visibility: f64,
    dark_per_pulse: f64,
    slices: usize,
}

impl TryFrom<RawModel> for SystemModel {
    type Error = Error;

    fn try_from(r: RawModel) -> Result<Self> {
        SystemModel::new(r.efficiency, r.visibility, r.dark_per_pulse, r.slices)
    }
}

impl From<SystemModel> for RawModel {
    fn from(s: SystemModel) -> Self {
        RawModel {
            efficiency: s.efficiency,
            visibility: s.visibility,
            dark_per_pulse: s.dark_per_pulse,
            slices: s.slices,
        }
    }
}

impl SystemModel {
    pub fn new(efficiency: f64, visibility: f64, dark_per_pulse: f64, slices: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::InvalidParameter(format!("efficiency {efficiency} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::InvalidParameter(format!("visibility {visibility} outside [0, 1]")));
        }
        if !dark_per_pulse.is_finite() || dark_per_pulse < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "dark counts per pulse must be finite and non-negative, got {dark_per_pulse}"
            )));
        }
        if slices == 0 {
            return Err(Error::InvalidParameter("at least one slice is required".into()));
        }
        Ok(SystemModel {
            efficiency,
            visibility,
            dark_per_pulse,
            slices,
        })
    }

    /// Unit efficiency, perfect visibility, no dark counts.
    pub fn ideal(slices: usize) -> Result<Self> {
        Self::new(1.0, 1.0, 0.0, slices)
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    pub fn dark_per_pulse(&self) -> f64 {
        self.dark_per_pulse
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    /// Poisson dark-count mean of a single slice, `ν/N`.
    pub fn dark_per_slice(&self) -> f64 {
        self.dark_per_pulse / self.slices as f64
    }

    pub fn with_slices(&self, slices: usize) -> Result<Self> {
        Self::new(self.efficiency, self.visibility, self.dark_per_pulse, slices)
    }
}

/// Flat configuration record covering both the ensemble and the system model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    #[serde(rename = "M")]
    pub m: usize,
    pub mean_photon: f64,
    #[serde(default)]
    pub priors: Option<Vec<f64>>,
    pub efficiency: f64,
    pub visibility: f64,
    pub dark_per_pulse: f64,
    pub slices: usize,
}

impl SystemConfig {
    pub fn build(&self) -> Result<(StateEnsemble, SystemModel)> {
        let ensemble = make_mpsk_ensemble(self.m, self.mean_photon, self.priors.as_deref())?;
        let model = SystemModel::new(self.efficiency, self.visibility, self.dark_per_pulse, self.slices)?;
        Ok((ensemble, model))
    }

    pub fn from_parts(ensemble: &StateEnsemble, model: &SystemModel) -> Self {
        SystemConfig {
            m: ensemble.m(),
            mean_photon: ensemble.mean_photon(),
            priors: Some(ensemble.priors().to_vec()),
            efficiency: model.efficiency(),
            visibility: model.visibility(),
            dark_per_pulse: model.dark_per_pulse(),
            slices: model.slices(),
        }
    }
}
