//! Reference curves: heterodyne quantum noise limit, Helstrom bound, Holevo bound
//! and heterodyne channel capacity.
//!
//! Heterodyne convention: the outcome `γ` of measuring `|α⟩` is distributed as the
//! Husimi function `Q(γ) = exp(−|γ − α|²)/π`, i.e. an isotropic complex Gaussian with
//! variance 1/2 per quadrature (unit total added noise).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const QUADRATURE_TOLERANCE: f64 = 1e-13;
const EIGENVALUE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    Qnl,
    QnlScaled,
    Helstrom,
    Holevo,
    HeterodyneCapacity,
}

impl BoundKind {
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Qnl => "qnl",
            BoundKind::QnlScaled => "qnl-scaled",
            BoundKind::Helstrom => "helstrom",
            BoundKind::Holevo => "holevo",
            BoundKind::HeterodyneCapacity => "heterodyne-capacity",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub kind: BoundKind,
    /// `(mean_photon, value)` pairs.
    pub points: Vec<(f64, f64)>,
}

impl BoundCurve {
    /// Evaluates `kind` on `grid`. `efficiency` only affects [`BoundKind::QnlScaled`].
    pub fn generate(kind: BoundKind, m: usize, efficiency: f64, grid: &[f64]) -> Result<Self> {
        let points = grid
            .par_iter()
            .map(|&n| {
                let v = match kind {
                    BoundKind::Qnl => qnl_heterodyne(m, n, 1.0)?,
                    BoundKind::QnlScaled => qnl_heterodyne(m, n, efficiency)?,
                    BoundKind::Helstrom => helstrom_mpsk(m, n)?,
                    BoundKind::Holevo => holevo_bound(n)?,
                    BoundKind::HeterodyneCapacity => heterodyne_capacity(n)?,
                };
                Ok((n, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundCurve { kind, points })
    }
}

fn check_mean_photon(n: f64) -> Result<()> {
    if !n.is_finite() || n < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mean photon number must be finite and non-negative, got {n}"
        )));
    }
    Ok(())
}

/// Error probability of ideal heterodyne detection followed by nearest-phase decisions.
///
/// The radial part of the wedge integral is done in closed form; the angular part by
/// adaptive Simpson quadrature.
pub fn qnl_heterodyne(m: usize, mean_photon: f64, efficiency: f64) -> Result<f64> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!(
            "heterodyne limit is defined here for M >= 3, got {m}"
        )));
    }
    check_mean_photon(mean_photon)?;
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::InvalidParameter(format!("efficiency {efficiency} outside (0, 1]")));
    }
    let a = (efficiency * mean_photon).sqrt();
    let a2 = a * a;
    let sqrt_pi = PI.sqrt();
    // ∫_0^∞ r Q(r e^{iθ}) dr · π
    let radial = |theta: f64| {
        let b = a * theta.cos();
        let s = theta.sin();
        0.5 * (-a2).exp() + 0.5 * sqrt_pi * b * (-a2 * s * s).exp() * libm::erfc(-b)
    };
    let half = PI / m as f64;
    // Integrand is even in θ.
    let correct = 2.0 * adaptive_simpson(&radial, 0.0, half, QUADRATURE_TOLERANCE) / PI;
    Ok((1.0 - correct).clamp(0.0, 1.0))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let c = 0.5 * (a + b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fb: f64, fc: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
        + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
}

/// Minimum error probability for `M` equiprobable PSK coherent states.
///
/// Uses the square-root measurement, which is optimal for this symmetric ensemble. The
/// Gram matrix `G_{jk} = exp(−⟨n⟩(1 − e^{i2π(k−j)/M}))` is circulant, so its eigenvalues
/// are the DFT of its first row and `P_e = 1 − (Σ √λ)² / M²`.
pub fn helstrom_mpsk(m: usize, mean_photon: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("constellation size must be at least 2, got {m}")));
    }
    check_mean_photon(mean_photon)?;
    let first_row: Vec<Complex64> = (0..m)
        .map(|d| {
            let w = Complex64::from_polar(1.0, TAU * d as f64 / m as f64);
            (-(mean_photon * (1.0 - w))).exp()
        })
        .collect();
    let mut root_sum = 0.0;
    for mode in 0..m {
        let lambda: Complex64 = first_row
            .iter()
            .enumerate()
            .map(|(d, g)| g * Complex64::from_polar(1.0, -TAU * (d * mode % m) as f64 / m as f64))
            .sum();
        if lambda.re < -EIGENVALUE_SLACK {
            return Err(Error::Numerical(format!(
                "Gram eigenvalue {} for mode {mode} is negative",
                lambda.re
            )));
        }
        root_sum += lambda.re.max(0.0).sqrt();
    }
    let m2 = (m * m) as f64;
    Ok((1.0 - root_sum * root_sum / m2).clamp(0.0, 1.0))
}

/// Holevo capacity `g(⟨n⟩)` of the lossless bosonic channel, in bits.
pub fn holevo_bound(mean_photon: f64) -> Result<f64> {
    check_mean_photon(mean_photon)?;
    if mean_photon == 0.0 {
        return Ok(0.0);
    }
    let n = mean_photon;
    Ok((n + 1.0) * (n + 1.0).log2() - n * n.log2())
}

/// Shannon capacity `log₂(1 + ⟨n⟩)` of ideal heterodyne detection with Gaussian inputs.
pub fn heterodyne_capacity(mean_photon: f64) -> Result<f64> {
    check_mean_photon(mean_photon)?;
    Ok(mean_photon.ln_1p() / std::f64::consts::LN_2)
}
