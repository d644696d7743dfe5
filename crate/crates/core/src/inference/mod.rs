//! Nonlinear least squares and the model fits built on it.

pub mod calibration;
pub mod hyperbola;
pub mod intensity;
pub mod lifetime;
pub mod lsq;

pub use calibration::{calibrate, calibrated_preset, CalibrationReport, PEAK_ANCHORS};
pub use hyperbola::{fit_hyperbola, fit_hyperbola_wavelengths, HyperbolaFit, HyperbolaOptions};
pub use intensity::{fit_intensity_model, IntensityFit, IntensityParam};
pub use lifetime::{fit_lifetime_model, LifetimeFit, LifetimeParam};
pub use lsq::{least_squares, FitOptions, FitProblem, FitResult, FitStatus};

/// Condition number above which a fit is reported as unidentifiable.
pub const IDENTIFIABILITY_LIMIT: f64 = 1e12;
