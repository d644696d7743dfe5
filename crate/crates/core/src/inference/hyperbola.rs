//! Fit of the peak thickness versus pair energy hyperbola
//! `d(E) = A / (E - ΔE) + d_min`.

use serde::Serialize;

use super::lsq::{least_squares, FitOptions, FitProblem, FitResult};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::photophysics::nm_to_ev;

pub const NAMES: [&str; 3] = ["A", "delta_e", "d_min"];

/// Starting point and box for `(A, ΔE, d_min)`.
///
/// `init: None` selects the start by a fixed grid over `ΔE` with `A` and
/// `d_min` solved linearly at each grid value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolaOptions {
    pub init: Option<[f64; 3]>,
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    /// Number of `ΔE` values in the start grid.
    pub grid: usize,
}

impl Default for HyperbolaOptions {
    fn default() -> Self {
        Self {
            init: None,
            lower: [0.0, 0.0, -10.0],
            upper: [10.0, f64::INFINITY, 10.0],
            grid: 41,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperbolaFit {
    pub a: f64,
    pub delta_e: f64,
    pub d_min: f64,
    /// `E_g - E_D - ΔE` with the level energies of the supplied parameters.
    pub e_acceptor: f64,
    pub e_acceptor_uncertainty: f64,
    pub fit: FitResult,
}

/// `d(E)` at `(A, ΔE, d_min)`; `None` at or beyond the pole.
pub fn hyperbola(e: f64, theta: &[f64]) -> Option<f64> {
    let gap = e - theta[1];
    (gap > 0.0).then(|| theta[0] / gap + theta[2])
}

/// Residual closure `model - d` over `points = [(E, d)]`.
pub fn residual_fn(points: &[(f64, f64)]) -> impl Fn(&[f64]) -> Option<Vec<f64>> + '_ {
    move |theta: &[f64]| {
        points
            .iter()
            .map(|&(e, d)| hyperbola(e, theta).map(|m| m - d))
            .collect()
    }
}

/// Fits `(A, ΔE, d_min)` to `(E eV, d nm)` points.
pub fn fit_hyperbola(
    points: &[(f64, f64)],
    options: &HyperbolaOptions,
    params: &ModelParams,
) -> Result<HyperbolaFit> {
    if points.len() < 3 {
        return Err(Error::FitFailure(format!(
            "hyperbola fit needs >= 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(e, d)| !e.is_finite() || !d.is_finite()) {
        return Err(Error::Domain("hyperbola points must be finite".into()));
    }
    let e_lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut upper = options.upper;
    // keep the pole strictly below every data energy
    upper[1] = upper[1].min(e_lo - 1e-9);
    if !(options.lower[1] < upper[1]) {
        return Err(Error::Domain(format!(
            "delta_e lower bound {} is not below the smallest energy {e_lo}",
            options.lower[1]
        )));
    }

    let init = match options.init {
        Some(init) => init,
        None => grid_start(points, &options.lower, &upper, options.grid.max(2))?,
    };
    let problem =
        FitProblem::new(&NAMES, &init, residual_fn(points)).with_bounds(&options.lower, &upper);
    let fit = least_squares(&problem, &FitOptions::default())?;
    let (a, delta_e, d_min) = (fit.values[0], fit.values[1], fit.values[2]);
    Ok(HyperbolaFit {
        a,
        delta_e,
        d_min,
        e_acceptor: params.band_gap - params.e_donor - delta_e,
        e_acceptor_uncertainty: fit.uncertainties[1],
        fit,
    })
}

/// [`fit_hyperbola`] on `(excitation wavelength nm, d nm)` points.
pub fn fit_hyperbola_wavelengths(
    points_nm: &[(f64, f64)],
    options: &HyperbolaOptions,
    params: &ModelParams,
) -> Result<HyperbolaFit> {
    let points = points_nm
        .iter()
        .map(|&(w, d)| Ok((nm_to_ev(w)?, d)))
        .collect::<Result<Vec<_>>>()?;
    fit_hyperbola(&points, options, params)
}

/// Best of a fixed `ΔE` grid, with `A` and `d_min` from linear least squares
/// in `x = 1/(E - ΔE)` and clamped to the box.
fn grid_start(
    points: &[(f64, f64)],
    lower: &[f64; 3],
    upper: &[f64; 3],
    n: usize,
) -> Result<[f64; 3]> {
    let e_lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let de_lo = lower[1].max(e_lo - 3.0);
    let de_hi = upper[1].min(e_lo - 1e-3);
    let mut best: Option<([f64; 3], f64)> = None;
    for k in 0..n {
        let de = de_lo + (de_hi - de_lo) * k as f64 / (n - 1) as f64;
        let xs: Vec<f64> = points.iter().map(|(e, _)| 1.0 / (e - de)).collect();
        let m = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = points.iter().map(|p| p.1).sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(points).map(|(x, p)| x * p.1).sum();
        let det = m * sxx - sx * sx;
        if det.abs() < 1e-300 {
            continue;
        }
        let a = ((m * sxy - sx * sy) / det).clamp(lower[0], upper[0]);
        let d_min = ((sy - a * sx) / m).clamp(lower[2], upper[2]);
        let theta = [a, de, d_min];
        let Some(r) = residual_fn(points)(&theta) else {
            continue;
        };
        let cost: f64 = r.iter().map(|v| v * v).sum();
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((theta, cost));
        }
    }
    best.map(|(t, _)| t)
        .ok_or_else(|| Error::FitFailure("no feasible start on the delta_e grid".into()))
}
