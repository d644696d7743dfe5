//! Fit of `I(d) = s · η(d) · ζ(E_exc - E(d))` to an intensity-thickness
//! profile.

use serde::Serialize;

use super::lsq::{least_squares, FitOptions, FitProblem, FitResult};
use super::IDENTIFIABILITY_LIMIT;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::photophysics::{intensity_vs_thickness, peak_thickness};

/// Parameters that may be freed in [`fit_intensity_model`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IntensityParam {
    AEff,
    QuenchLength,
    Sigma,
    /// `W0_r / W0_nr`; `W0_nr` stays at its starting value.
    RateRatio,
    /// Overall scale `s`.
    Amplitude,
}

impl IntensityParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::AEff => "a_eff",
            Self::QuenchLength => "b",
            Self::Sigma => "sigma",
            Self::RateRatio => "rate_ratio",
            Self::Amplitude => "amplitude",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            Self::AEff,
            Self::QuenchLength,
            Self::Sigma,
            Self::RateRatio,
            Self::Amplitude,
        ]
        .into_iter()
        .find(|p| p.name() == name)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntensityFit {
    pub params: ModelParams,
    pub amplitude: f64,
    /// Thickness of the fitted model's maximum inside the data range.
    pub peak_thickness: Option<f64>,
    /// `false` when the covariance is too ill-conditioned to trust.
    pub identifiable: bool,
    pub fit: FitResult,
}

/// Model state for a free-parameter vector.
#[derive(Debug, Clone, Copy)]
struct Layout<'a> {
    free: &'a [IntensityParam],
    base: ModelParams,
    amplitude: f64,
}

impl Layout<'_> {
    fn apply(&self, theta: &[f64]) -> (ModelParams, f64) {
        let mut p = self.base;
        let mut amplitude = self.amplitude;
        for (param, &v) in self.free.iter().zip(theta) {
            match param {
                IntensityParam::AEff => p.a_eff = v,
                IntensityParam::QuenchLength => p.quench_length = v,
                IntensityParam::Sigma => p.sigma = v,
                IntensityParam::RateRatio => p.w0_rad = v * p.w0_nonrad,
                IntensityParam::Amplitude => amplitude = v,
            }
        }
        (p, amplitude)
    }

    fn initial(&self) -> Vec<f64> {
        self.free
            .iter()
            .map(|param| match param {
                IntensityParam::AEff => self.base.a_eff,
                IntensityParam::QuenchLength => self.base.quench_length,
                IntensityParam::Sigma => self.base.sigma,
                IntensityParam::RateRatio => self.base.w0_rad / self.base.w0_nonrad,
                IntensityParam::Amplitude => self.amplitude,
            })
            .collect()
    }
}

/// Residual closure `s·I(d) - y/scale`. When the amplitude is not in
/// `free`, `s` is pinned to `pinned_amplitude`.
pub fn residual_fn<'a>(
    data: &'a [(f64, f64)],
    e_exc: f64,
    free: &'a [IntensityParam],
    p0: &ModelParams,
    pinned_amplitude: f64,
    scale: f64,
) -> impl Fn(&[f64]) -> Option<Vec<f64>> + 'a {
    let layout = Layout {
        free,
        base: *p0,
        amplitude: pinned_amplitude,
    };
    move |theta: &[f64]| {
        let (p, s) = layout.apply(theta);
        data.iter()
            .map(|&(d, y)| {
                intensity_vs_thickness(d, e_exc, &p)
                    .ok()
                    .map(|i| s * i - y / scale)
            })
            .collect()
    }
}

/// Fits the `free` subset of parameters to `(d nm, intensity)` data, with
/// every other parameter pinned to `p0` and the amplitude pinned to 1 unless
/// freed.
///
/// Intensities are divided by their maximum before fitting so the shape
/// parameters do not depend on the intensity units.
pub fn fit_intensity_model(
    data: &[(f64, f64)],
    e_exc: f64,
    free: &[IntensityParam],
    p0: &ModelParams,
    weights: Option<&[f64]>,
) -> Result<IntensityFit> {
    p0.validate()?;
    if data.len() < free.len().max(3) {
        return Err(Error::FitFailure(format!(
            "{} points for {} free parameters",
            data.len(),
            free.len()
        )));
    }
    if data.iter().any(|(d, y)| !d.is_finite() || !y.is_finite()) {
        return Err(Error::Domain("intensity data must be finite".into()));
    }
    if let Some(&(d, _)) = data.iter().find(|(d, _)| !(*d > p0.d_min)) {
        return Err(Error::Domain(format!(
            "thickness {d} nm is not above d_min = {} nm",
            p0.d_min
        )));
    }
    let &(d_top, y_top) = data
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let d_lo = data.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let d_hi = data.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if !(y_top > 0.0) || d_top == d_lo || d_top == d_hi {
        return Err(Error::Domain(format!(
            "data must bracket the intensity maximum (largest value at d = {d_top} nm)"
        )));
    }
    for (k, f) in free.iter().enumerate() {
        if free[..k].contains(f) {
            return Err(Error::FitFailure(format!("{} freed twice", f.name())));
        }
    }
    let amplitude_free = free.contains(&IntensityParam::Amplitude);
    let scale = y_top;
    let amplitude0 = if amplitude_free {
        let model_top = intensity_vs_thickness(d_top, e_exc, p0)?;
        if model_top > 0.0 {
            1.0 / model_top
        } else {
            1.0
        }
    } else {
        1.0 / scale
    };
    let layout = Layout {
        free,
        base: *p0,
        amplitude: amplitude0,
    };
    let n = free.len();
    let lower = vec![1e-9; n];
    let upper = vec![f64::INFINITY; n];
    let names: Vec<&str> = free.iter().map(|f| f.name()).collect();
    let residuals = residual_fn(data, e_exc, free, p0, amplitude0, scale);
    let mut problem =
        FitProblem::new(&names, &layout.initial(), residuals).with_bounds(&lower, &upper);
    if let Some(w) = weights {
        if w.len() != data.len() {
            return Err(Error::FitFailure("weight count differs from data".into()));
        }
        // weights refer to the unscaled intensities
        problem = problem.with_weights(w.iter().map(|w| w * scale * scale).collect());
    }
    let mut fit = least_squares(&problem, &FitOptions::default())?;

    let (params, s) = layout.apply(&fit.values);
    if let Some(k) = free.iter().position(|f| *f == IntensityParam::Amplitude) {
        fit.values[k] *= scale;
        fit.uncertainties[k] *= scale;
        for j in 0..n {
            fit.covariance[k * n + j] *= scale;
            fit.covariance[j * n + k] *= scale;
        }
    }
    for r in &mut fit.residuals {
        *r *= scale;
    }
    if weights.is_none() {
        fit.chi2 *= scale * scale;
        fit.reduced_chi2 *= scale * scale;
    }
    let peak = peak_thickness(e_exc, &params, (d_lo, d_hi), 1e-9).ok();
    Ok(IntensityFit {
        params,
        amplitude: s * scale,
        peak_thickness: peak,
        identifiable: fit.condition_number < IDENTIFIABILITY_LIMIT,
        fit,
    })
}
