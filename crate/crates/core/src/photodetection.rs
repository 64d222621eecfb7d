//! Photon statistics of displaced coherent states and the per-slice Bayesian update.
//!
//! Every slice of an `N`-slice receiver sees `1/N` of the pulse energy, so the
//! displaced mean photon number of a slice is `n̄/N` where `n̄` is computed
//! from full-pulse amplitudes. Detector efficiency scales that mean, and dark
//! counts add a Poisson background of `ν/N` per slice.

use serde::{Deserialize, Serialize};

use crate::ensemble::{ComplexAmplitude, StateEnsemble, SystemModel};
use crate::error::{Error, Result};

/// Above this detected mean the update switches to log-likelihoods.
const LOG_SPACE_THRESHOLD: f64 = 30.0;

const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// On/off detector outcome of one slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceOutcome {
    NoClick,
    Click,
}

impl SliceOutcome {
    pub fn from_clicked(clicked: bool) -> Self {
        if clicked {
            SliceOutcome::Click
        } else {
            SliceOutcome::NoClick
        }
    }

    pub fn clicked(self) -> bool {
        self == SliceOutcome::Click
    }
}

/// Probability vector over the `M` hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    probs: Vec<f64>,
}

impl BeliefState {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidParameter("belief needs at least two hypotheses".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter("belief entries must be finite and non-negative".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidParameter(format!("belief sums to {sum}, expected 1")));
        }
        Ok(BeliefState { probs })
    }

    pub fn uniform(m: usize) -> Self {
        BeliefState {
            probs: vec![1.0 / m as f64; m],
        }
    }

    pub fn from_priors(ensemble: &StateEnsemble) -> Self {
        BeliefState {
            probs: ensemble.priors().to_vec(),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Multiplies by `likelihood` and renormalizes.
    pub(crate) fn absorb(&mut self, likelihood: &[f64]) -> Result<()> {
        let mut sum = 0.0;
        for (p, l) in self.probs.iter_mut().zip(likelihood) {
            *p *= l;
            sum += *p;
        }
        if !(sum > f64::MIN_POSITIVE) {
            return Err(Error::DegenerateEvidence);
        }
        self.probs.iter_mut().for_each(|p| *p /= sum);
        Ok(())
    }

    /// Adds `log_likelihood` to the log-belief and renormalizes via log-sum-exp.
    fn absorb_log(&mut self, log_likelihood: &[f64]) -> Result<()> {
        let logs: Vec<f64> = self
            .probs
            .iter()
            .zip(log_likelihood)
            .map(|(p, l)| p.ln() + l)
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::DegenerateEvidence);
        }
        let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        for (p, l) in self.probs.iter_mut().zip(&logs) {
            *p = (l - max).exp() / sum;
        }
        Ok(())
    }
}

/// Mean photon number of `D(-β)|α_k⟩` with imperfect interference visibility.
pub fn displaced_mean(alpha_k: ComplexAmplitude, beta: ComplexAmplitude, visibility: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(Error::InvalidParameter(format!("visibility {visibility} outside [0, 1]")));
    }
    let (a, b) = (alpha_k.norm(), beta.norm());
    let cos = if a == 0.0 || b == 0.0 {
        0.0
    } else {
        (alpha_k.arg() - beta.arg()).cos()
    };
    Ok(displaced_mean_polar(a, b, cos, visibility))
}

#[inline]
pub(crate) fn displaced_mean_polar(alpha: f64, beta: f64, cos: f64, visibility: f64) -> f64 {
    (alpha * alpha + beta * beta - 2.0 * visibility * alpha * beta * cos).max(0.0)
}

/// Probability that a slice with displaced mean `nbar` registers at least one count.
pub fn click_probability(nbar: f64, model: &SystemModel) -> f64 {
    -(-detected_mean(nbar, model)).exp_m1()
}

#[inline]
pub(crate) fn detected_mean(nbar: f64, model: &SystemModel) -> f64 {
    model.efficiency() * nbar + model.dark_per_slice()
}

/// Poisson probability of exactly `n` counts at mean `nbar`.
pub fn photon_count_pmf(nbar: f64, n: u64) -> f64 {
    if nbar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let n_f = n as f64;
    (n_f * nbar.ln() - nbar - libm::lgamma(n_f + 1.0)).exp()
}

/// Posterior after one slice with displacement `beta` (full-pulse amplitude) and outcome `outcome`.
pub fn bayes_update(
    prior: &BeliefState,
    beta: ComplexAmplitude,
    outcome: SliceOutcome,
    ensemble: &StateEnsemble,
    model: &SystemModel,
) -> Result<BeliefState> {
    if prior.len() != ensemble.m() {
        return Err(Error::InvalidParameter(format!(
            "belief has {} entries, ensemble has {}",
            prior.len(),
            ensemble.m()
        )));
    }
    let n = model.slices() as f64;
    let nbar: Vec<f64> = ensemble
        .amplitudes()
        .into_iter()
        .map(|a| displaced_mean(a, beta, model.visibility()).map(|x| x / n))
        .collect::<Result<_>>()?;

    let mut posterior = prior.clone();
    let loud = nbar.iter().any(|x| model.efficiency() * x > LOG_SPACE_THRESHOLD);
    if loud {
        let log_l: Vec<f64> = nbar
            .iter()
            .map(|&x| {
                let mu = detected_mean(x, model);
                match outcome {
                    SliceOutcome::NoClick => -mu,
                    SliceOutcome::Click => (-(-mu).exp_m1()).ln(),
                }
            })
            .collect();
        posterior.absorb_log(&log_l)?;
    } else {
        let l: Vec<f64> = nbar
            .iter()
            .map(|&x| {
                let p1 = click_probability(x, model);
                match outcome {
                    SliceOutcome::NoClick => 1.0 - p1,
                    SliceOutcome::Click => p1,
                }
            })
            .collect();
        posterior.absorb(&l)?;
    }
    Ok(posterior)
}
