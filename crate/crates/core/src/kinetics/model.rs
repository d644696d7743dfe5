use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// One term `a · exp(-t/τ)` of a multiexponential decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub amplitude: f64,
    /// ns.
    pub lifetime: f64,
}

impl Component {
    pub fn new(amplitude: f64, lifetime: f64) -> Self {
        Self {
            amplitude,
            lifetime,
        }
    }
}

/// Amplitude-weighted mean lifetime `Σ aᵢτᵢ² / Σ aᵢτᵢ`, ns.
pub fn tau_mean(components: &[Component]) -> Result<f64> {
    if components.is_empty() {
        return Err(Error::Degenerate("no decay components".into()));
    }
    if components
        .iter()
        .any(|c| !(c.amplitude >= 0.0 && c.lifetime > 0.0 && c.lifetime.is_finite()))
    {
        return Err(Error::Domain(
            "components need amplitude >= 0 and lifetime > 0".into(),
        ));
    }
    let num: f64 = components
        .iter()
        .map(|c| c.amplitude * c.lifetime * c.lifetime)
        .sum();
    let den: f64 = components.iter().map(|c| c.amplitude * c.lifetime).sum();
    if !(den > 0.0) {
        return Err(Error::Degenerate("sum of a·tau vanishes".into()));
    }
    Ok(num / den)
}

/// Gaussian instrument response centered at `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrfModel {
    /// Full width at half maximum, ns.
    pub fwhm: f64,
    /// Center, ns.
    pub t0: f64,
}

impl IrfModel {
    pub fn gaussian(fwhm: f64, t0: f64) -> Result<Self> {
        let irf = Self { fwhm, t0 };
        irf.validate()?;
        Ok(irf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm > 0.0 && self.fwhm.is_finite() && self.t0.is_finite()) {
            return Err(Error::Domain(format!(
                "IRF needs fwhm > 0 and finite t0, got fwhm = {}, t0 = {}",
                self.fwhm, self.t0
            )));
        }
        Ok(())
    }

    /// Standard deviation, ns.
    pub fn sigma(&self) -> f64 {
        self.fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
    }
}

/// `ln(erfc(x) / 2)` without underflow for large `x`.
fn ln_half_erfc(x: f64) -> f64 {
    if x < 25.0 {
        (0.5 * erfc(x)).ln()
    } else {
        let x2 = x * x;
        let series = 1.0 - 0.5 / x2 + 0.75 / (x2 * x2) - 1.875 / (x2 * x2 * x2);
        -x2 - (x * std::f64::consts::PI.sqrt()).ln() + series.ln() - std::f64::consts::LN_2
    }
}

/// `Φ(u2) - Φ(u1)` for the standard normal distribution function.
fn normal_mass(u1: f64, u2: f64) -> f64 {
    let s = std::f64::consts::SQRT_2;
    if u1 > 0.0 {
        0.5 * (erfc(u1 / s) - erfc(u2 / s))
    } else {
        0.5 * (erfc(-u2 / s) - erfc(-u1 / s))
    }
}

/// `exp(-(t-t0)/τ + σ²/2τ²) · Φ((t-t0)/σ - σ/τ)`.
fn tail_term(t: f64, tau: f64, irf: &IrfModel, sigma: f64) -> f64 {
    let x = t - irf.t0;
    let a = -x / tau + 0.5 * (sigma / tau).powi(2);
    let v = x / sigma - sigma / tau;
    (a + ln_half_erfc(-v / std::f64::consts::SQRT_2)).exp()
}

/// Integral over `[t1, t2]` of `exp(-t/τ)·H(t)` convolved with the IRF.
pub fn convolved_bin(t1: f64, t2: f64, tau: f64, irf: &IrfModel) -> f64 {
    let sigma = irf.sigma();
    let mass = normal_mass((t1 - irf.t0) / sigma, (t2 - irf.t0) / sigma);
    let tail = tail_term(t2, tau, irf, sigma) - tail_term(t1, tau, irf, sigma);
    tau * (mass - tail)
}

/// Expected counts per bin of `Σ aᵢ exp(-t/τᵢ)` convolved with the IRF,
/// plus `baseline` per bin.
pub fn convolved_model(
    edges: &[f64],
    components: &[Component],
    baseline: f64,
    irf: &IrfModel,
) -> Vec<f64> {
    edges
        .windows(2)
        .map(|w| {
            baseline
                + components
                    .iter()
                    .map(|c| c.amplitude * convolved_bin(w[0], w[1], c.lifetime, irf))
                    .sum::<f64>()
        })
        .collect()
}

/// `ρ = √(1 - g²(0))`: emitter share of the detected signal for a single
/// emitter over Poissonian background.
pub fn signal_purity_from_g2(g2_zero: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&g2_zero) {
        return Err(Error::Domain(format!(
            "g2(0) must lie in [0, 1], got {g2_zero}"
        )));
    }
    Ok((1.0 - g2_zero).sqrt())
}
