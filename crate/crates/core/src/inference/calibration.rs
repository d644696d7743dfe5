//! Joint calibration of `(a_eff, b, σ, W0_r, W0_nr)` against observed
//! intensity-maximum thicknesses and the lifetime maximum.
//!
//! The five parameters are fitted in log space inside a box. Residuals are
//! the peak-thickness misfits and the lifetime misfit, each scaled by
//! 0.05 (nm or ns), plus a weak log-space pull (weight 0.1) towards unit
//! lengths, σ = 10 meV and unit rate prefactors. The pull only selects a
//! point along directions the anchors leave flat.

use std::sync::OnceLock;

use serde::Serialize;

use super::lsq::{least_squares, FitOptions, FitProblem, FitResult};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::photophysics::{lifetime_vs_thickness, nm_to_ev, peak_thickness};

/// Excitation wavelength (nm) and thickness of maximum intensity (nm).
pub const PEAK_ANCHORS: [(f64, f64); 4] =
    [(457.0, 1.48), (473.0, 1.46), (532.0, 1.67), (633.0, 2.55)];

/// Thickness (nm) and mean lifetime (ns) of the lifetime maximum.
pub const LIFETIME_ANCHOR: (f64, f64) = (1.7, 1.9);

/// Upper edge of the thickness scan used for peak searches, nm.
pub const SCAN_MAX: f64 = 12.0;

const NAMES: [&str; 5] = ["ln_a_eff", "ln_b", "ln_sigma", "ln_W0_r", "ln_W0_nr"];
const LOWER: [f64; 5] = [0.2, 0.1, 0.002, 1e-3, 1e-3];
/// σ ≤ 10 meV keeps the spectral envelope one phonon below the excitation.
const UPPER: [f64; 5] = [20.0, 10.0, 0.010, 1e3, 1e3];
const PRIOR: [f64; 5] = [1.0, 1.0, 0.01, 1.0, 1.0];
const PRIOR_WEIGHT: f64 = 0.1;
const SCALE: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub params: ModelParams,
    /// `(wavelength nm, target nm, model nm)` per anchor.
    pub peaks: Vec<(f64, f64, f64)>,
    pub lifetime_at_anchor: f64,
    pub fit: FitResult,
}

impl CalibrationReport {
    /// Largest `|model - target|` over the peak anchors, nm.
    pub fn max_peak_error(&self) -> f64 {
        self.peaks
            .iter()
            .map(|(_, t, m)| (m - t).abs())
            .fold(0.0, f64::max)
    }
}

fn apply(base: &ModelParams, theta: &[f64]) -> ModelParams {
    ModelParams {
        a_eff: theta[0].exp(),
        quench_length: theta[1].exp(),
        sigma: theta[2].exp(),
        w0_rad: theta[3].exp(),
        w0_nonrad: theta[4].exp(),
        ..*base
    }
}

fn model_peaks(p: &ModelParams) -> Option<Vec<f64>> {
    PEAK_ANCHORS
        .iter()
        .map(|&(w, _)| {
            let e = nm_to_ev(w).ok()?;
            peak_thickness(e, p, (p.d_min + 1e-3, SCAN_MAX), 1e-12).ok()
        })
        .collect()
}

/// Calibrates the rate, length and window parameters of `base`; the level
/// energies, `d_min` and the spectral parameters are kept.
pub fn calibrate(base: &ModelParams) -> Result<CalibrationReport> {
    base.validate()?;
    let residuals = |theta: &[f64]| {
        let p = apply(base, theta);
        let peaks = model_peaks(&p)?;
        let mut r: Vec<f64> = peaks
            .iter()
            .zip(PEAK_ANCHORS)
            .map(|(m, (_, t))| (m - t) / SCALE)
            .collect();
        let tau = lifetime_vs_thickness(LIFETIME_ANCHOR.0, &p).ok()?;
        r.push((tau - LIFETIME_ANCHOR.1) / SCALE);
        r.extend(
            theta
                .iter()
                .zip(PRIOR)
                .map(|(t, p)| PRIOR_WEIGHT * (t - p.ln())),
        );
        Some(r)
    };
    let lower: Vec<f64> = LOWER.iter().map(|v| v.ln()).collect();
    let upper: Vec<f64> = UPPER.iter().map(|v| v.ln()).collect();
    let init: Vec<f64> = PRIOR.iter().map(|v| v.ln()).collect();
    let problem = FitProblem::new(&NAMES, &init, residuals).with_bounds(&lower, &upper);
    let options = FitOptions {
        fd_step: 1e-4,
        ..Default::default()
    };
    let fit = least_squares(&problem, &options)?;
    let params = apply(base, &fit.values);
    let peaks = model_peaks(&params)
        .ok_or_else(|| Error::FitFailure("calibrated model has no intensity maximum".into()))?;
    Ok(CalibrationReport {
        params,
        peaks: PEAK_ANCHORS
            .iter()
            .zip(peaks)
            .map(|(&(w, t), m)| (w, t, m))
            .collect(),
        lifetime_at_anchor: lifetime_vs_thickness(LIFETIME_ANCHOR.0, &params)?,
        fit,
    })
}

/// The calibrated parameter preset, computed once per process from
/// [`ModelParams::default`].
pub fn calibrated_preset() -> &'static ModelParams {
    static PRESET: OnceLock<ModelParams> = OnceLock::new();
    PRESET.get_or_init(|| {
        calibrate(&ModelParams::default())
            .expect("calibration of the default parameters")
            .params
    })
}
