//! Closed-form pair photophysics: transition energy, rates, quantum yield,
//! excitation matching, and the resulting intensity and lifetime versus
//! interlayer thickness.
//!
//! Lengths are in nm, energies in eV, rates in 1/ns. Every function is pure.

use crate::error::{Error, Result};
use crate::params::{ModelParams, CONSTANTS};

/// Pair transition energy `ΔE + C/R` at separation `r`.
pub fn dap_energy(r: f64, p: &ModelParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!(
            "pair separation must be > 0, got {r}"
        )));
    }
    Ok(p.delta_e() + p.coulomb_coefficient() / r)
}

/// `W0_r · exp(-2d/a_eff)`.
pub fn radiative_rate(d: f64, p: &ModelParams) -> Result<f64> {
    check_distance(d)?;
    Ok(p.w0_rad * (-2.0 * d / p.a_eff).exp())
}

/// `W0_nr · exp(-(d/b)²) + W_bg`.
pub fn nonradiative_rate(d: f64, p: &ModelParams) -> Result<f64> {
    check_distance(d)?;
    let x = d / p.quench_length;
    Ok(p.w0_nonrad * (-x * x).exp() + p.w_background)
}

/// Radiative branching ratio `W_r / (W_r + W_nr)`.
pub fn quantum_yield(d: f64, p: &ModelParams) -> Result<f64> {
    let w_r = radiative_rate(d, p)?;
    let w_nr = nonradiative_rate(d, p)?;
    let total = w_r + w_nr;
    if total <= 0.0 {
        return Err(Error::Degenerate(format!(
            "radiative and non-radiative rates both vanish at d = {d} nm"
        )));
    }
    Ok(w_r / total)
}

/// Gaussian excitation window `exp(-(E_exc - E_dap)² / 2σ²)`.
pub fn matching_function(e_exc: f64, e_dap: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
    }
    let x = (e_exc - e_dap) / sigma;
    Ok((-0.5 * x * x).exp())
}

/// Transition energy of a pair whose separation corresponds to interlayer
/// thickness `d`: `dap_energy(d - d_min)`.
///
/// Below `d_min` the asymptotic energy is not constant (band bending), so
/// the model is undefined there.
pub fn thickness_to_energy(d: f64, p: &ModelParams) -> Result<f64> {
    if !(d > p.d_min) {
        return Err(Error::Domain(format!(
            "thickness {d} nm is not above d_min = {} nm (near-surface regime)",
            p.d_min
        )));
    }
    dap_energy(d - p.d_min, p)
}

/// Thickness at which the pair energy equals `e_exc` exactly.
pub fn resonance_thickness(e_exc: f64, p: &ModelParams) -> Result<f64> {
    let detuning = e_exc - p.delta_e();
    if !(detuning > 0.0) {
        return Err(Error::Domain(format!(
            "excitation {e_exc} eV does not exceed delta_e = {} eV",
            p.delta_e()
        )));
    }
    Ok(p.d_min + p.coulomb_coefficient() / detuning)
}

/// Relative PL intensity `η(d) · ζ(E_exc - E(d))`.
pub fn intensity_vs_thickness(d: f64, e_exc: f64, p: &ModelParams) -> Result<f64> {
    let e = thickness_to_energy(d, p)?;
    Ok(quantum_yield(d, p)? * matching_function(e_exc, e, p.sigma)?)
}

/// Natural log of [`intensity_vs_thickness`], evaluated without underflow.
pub fn log_intensity(d: f64, e_exc: f64, p: &ModelParams) -> Result<f64> {
    let e = thickness_to_energy(d, p)?;
    let rates = LogRates::new(d, p);
    let x = (e_exc - e) / p.sigma;
    Ok(rates.ln_rad - rates.ln_total - 0.5 * x * x)
}

/// Analytic derivative of [`log_intensity`] with respect to thickness.
pub fn log_intensity_slope(d: f64, e_exc: f64, p: &ModelParams) -> Result<f64> {
    let e = thickness_to_energy(d, p)?;
    let rates = LogRates::new(d, p);
    let eta = (rates.ln_rad - rates.ln_total).exp();
    let gauss_share = (rates.ln_gauss - rates.ln_total).exp();
    let b2 = p.quench_length * p.quench_length;
    let d_ln_eta = -(2.0 / p.a_eff) * (1.0 - eta) + (2.0 * d / b2) * gauss_share;
    let offset = d - p.d_min;
    let d_energy = -p.coulomb_coefficient() / (offset * offset);
    let d_ln_zeta = (e_exc - e) / (p.sigma * p.sigma) * d_energy;
    Ok(d_ln_eta + d_ln_zeta)
}

/// Log-domain rate terms; keeps the yield finite where the rates underflow.
struct LogRates {
    ln_rad: f64,
    ln_gauss: f64,
    ln_total: f64,
}

impl LogRates {
    fn new(d: f64, p: &ModelParams) -> Self {
        let ln_rad = p.w0_rad.ln() - 2.0 * d / p.a_eff;
        let x = d / p.quench_length;
        let ln_gauss = p.w0_nonrad.ln() - x * x;
        let ln_bg = if p.w_background > 0.0 {
            p.w_background.ln()
        } else {
            f64::NEG_INFINITY
        };
        let m = ln_rad.max(ln_gauss).max(ln_bg);
        let ln_total = m + ((ln_rad - m).exp() + (ln_gauss - m).exp() + (ln_bg - m).exp()).ln();
        Self {
            ln_rad,
            ln_gauss,
            ln_total,
        }
    }
}

/// Thickness of maximum intensity within `range` for excitation `e_exc`.
///
/// A 2001-point scan of the log-intensity brackets the global maximum; the
/// bracket is then refined by bisection on the analytic slope, or by golden
/// section when the slope does not change sign (maximum on the boundary).
pub fn peak_thickness(
    e_exc: f64,
    p: &ModelParams,
    range: (f64, f64),
    tolerance: f64,
) -> Result<f64> {
    let (lo, hi) = range;
    if !(lo > p.d_min && hi > lo && hi.is_finite()) {
        return Err(Error::Domain(format!(
            "thickness range ({lo}, {hi}) must lie inside (d_min = {}, inf)",
            p.d_min
        )));
    }
    if !(tolerance > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be > 0, got {tolerance}"
        )));
    }

    const N: usize = 2001;
    let step = (hi - lo) / (N - 1) as f64;
    let grid = |i: usize| if i == N - 1 { hi } else { lo + step * i as f64 };
    let mut best = (0, f64::NEG_INFINITY);
    let mut worst = f64::INFINITY;
    for i in 0..N {
        let v = log_intensity(grid(i), e_exc, p)?;
        if v > best.1 {
            best = (i, v);
        }
        worst = worst.min(v);
    }
    if !(best.1 - worst > 1e-14 * (1.0 + best.1.abs())) {
        return Err(Error::NoPeak { lo, hi });
    }

    let i = best.0;
    let mut a = grid(i.saturating_sub(1));
    let mut b = grid((i + 1).min(N - 1));
    let slope = |d: f64| log_intensity_slope(d, e_exc, p);

    if slope(a)? > 0.0 && slope(b)? < 0.0 {
        while b - a > tolerance {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if slope(mid)? > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        return Ok(0.5 * (a + b));
    }

    let f = |d: f64| log_intensity(d, e_exc, p);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > tolerance {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    let candidates = [a, 0.5 * (a + b), b];
    let mut arg = candidates[1];
    let mut val = f(arg)?;
    for &x in &[candidates[0], candidates[2]] {
        let v = f(x)?;
        if v > val {
            arg = x;
            val = v;
        }
    }
    Ok(arg)
}

/// Mean lifetime `1 / (W_r + W_nr)` in ns.
pub fn lifetime_vs_thickness(d: f64, p: &ModelParams) -> Result<f64> {
    let total = radiative_rate(d, p)? + nonradiative_rate(d, p)?;
    if total <= 0.0 {
        return Err(Error::Degenerate(format!(
            "total decay rate vanishes at d = {d} nm"
        )));
    }
    Ok(1.0 / total)
}

/// Direction of a photon energy/wavelength conversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conversion {
    WavelengthToEnergy,
    EnergyToWavelength,
}

/// `E = hc/λ`; the map is its own inverse.
pub fn wavelength_energy(x: f64, direction: Conversion) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        let what = match direction {
            Conversion::WavelengthToEnergy => "wavelength",
            Conversion::EnergyToWavelength => "energy",
        };
        return Err(Error::Domain(format!(
            "{what} must be finite and > 0, got {x}"
        )));
    }
    Ok(CONSTANTS.hc_ev_nm / x)
}

pub fn nm_to_ev(wavelength_nm: f64) -> Result<f64> {
    wavelength_energy(wavelength_nm, Conversion::WavelengthToEnergy)
}

pub fn ev_to_nm(energy_ev: f64) -> Result<f64> {
    wavelength_energy(energy_ev, Conversion::EnergyToWavelength)
}

fn check_distance(d: f64) -> Result<()> {
    if !(d >= 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!(
            "distance must be finite and >= 0, got {d}"
        )));
    }
    Ok(())
}
