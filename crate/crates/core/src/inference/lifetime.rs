//! Fit of the total decay rate `W_r(d) + W_nr(d)` to measured mean
//! lifetimes.

use serde::Serialize;

use super::lsq::{least_squares, FitOptions, FitProblem, FitResult};
use super::IDENTIFIABILITY_LIMIT;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::photophysics::lifetime_vs_thickness;

/// Parameters that may be freed in [`fit_lifetime_model`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LifetimeParam {
    W0Rad,
    W0NonRad,
    AEff,
    QuenchLength,
    WBackground,
}

impl LifetimeParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::W0Rad => "W0_r",
            Self::W0NonRad => "W0_nr",
            Self::AEff => "a_eff",
            Self::QuenchLength => "b",
            Self::WBackground => "W_bg",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            Self::W0Rad,
            Self::W0NonRad,
            Self::AEff,
            Self::QuenchLength,
            Self::WBackground,
        ]
        .into_iter()
        .find(|p| p.name() == name)
    }

    fn get(self, p: &ModelParams) -> f64 {
        match self {
            Self::W0Rad => p.w0_rad,
            Self::W0NonRad => p.w0_nonrad,
            Self::AEff => p.a_eff,
            Self::QuenchLength => p.quench_length,
            Self::WBackground => p.w_background,
        }
    }

    fn set(self, p: &mut ModelParams, v: f64) {
        match self {
            Self::W0Rad => p.w0_rad = v,
            Self::W0NonRad => p.w0_nonrad = v,
            Self::AEff => p.a_eff = v,
            Self::QuenchLength => p.quench_length = v,
            Self::WBackground => p.w_background = v,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LifetimeFit {
    pub params: ModelParams,
    /// Closed thickness interval whose points entered the fit.
    pub window: (f64, f64),
    pub points_used: usize,
    pub identifiable: bool,
    pub fit: FitResult,
}

/// Relative rate residuals `τᵢ · (W_r(dᵢ) + W_nr(dᵢ)) - 1`.
pub fn residual_fn<'a>(
    data: &'a [(f64, f64)],
    free: &'a [LifetimeParam],
    p0: &ModelParams,
) -> impl Fn(&[f64]) -> Option<Vec<f64>> + 'a {
    let base = *p0;
    move |theta: &[f64]| {
        let mut p = base;
        for (f, &v) in free.iter().zip(theta) {
            f.set(&mut p, v);
        }
        data.iter()
            .map(|&(d, tau)| lifetime_vs_thickness(d, &p).ok().map(|m| tau / m - 1.0))
            .collect()
    }
}

/// Fits the `free` rate parameters to `(d nm, τ_mean ns)` points lying in
/// `window`; the rest stay at `p0`.
///
/// Residuals are relative (`τ · rate - 1`), so every point carries the same
/// fractional weight.
pub fn fit_lifetime_model(
    data: &[(f64, f64)],
    free: &[LifetimeParam],
    p0: &ModelParams,
    window: (f64, f64),
) -> Result<LifetimeFit> {
    p0.validate()?;
    if data
        .iter()
        .any(|(d, t)| !d.is_finite() || !(*d > 0.0) || !t.is_finite() || !(*t > 0.0))
    {
        return Err(Error::Domain(
            "lifetime points need d > 0 and tau > 0".into(),
        ));
    }
    for (k, f) in free.iter().enumerate() {
        if free[..k].contains(f) {
            return Err(Error::FitFailure(format!("{} freed twice", f.name())));
        }
    }
    let used: Vec<(f64, f64)> = data
        .iter()
        .copied()
        .filter(|(d, _)| *d >= window.0 && *d <= window.1)
        .collect();
    if used.len() < 3 || used.len() < free.len() {
        return Err(Error::FitFailure(format!(
            "{} points inside [{}, {}] nm for {} free parameters (need >= 3)",
            used.len(),
            window.0,
            window.1,
            free.len()
        )));
    }
    let names: Vec<&str> = free.iter().map(|f| f.name()).collect();
    let init: Vec<f64> = free.iter().map(|f| f.get(p0)).collect();
    let lower: Vec<f64> = free
        .iter()
        .map(|f| {
            if *f == LifetimeParam::WBackground {
                0.0
            } else {
                1e-12
            }
        })
        .collect();
    let upper = vec![f64::INFINITY; free.len()];
    let residuals = residual_fn(&used, free, p0);
    let problem = FitProblem::new(&names, &init, residuals).with_bounds(&lower, &upper);
    let fit = least_squares(&problem, &FitOptions::default())?;
    let mut params = *p0;
    for (f, &v) in free.iter().zip(&fit.values) {
        f.set(&mut params, v);
    }
    Ok(LifetimeFit {
        params,
        window,
        points_used: used.len(),
        identifiable: fit.condition_number < IDENTIFIABILITY_LIMIT,
        fit,
    })
}
