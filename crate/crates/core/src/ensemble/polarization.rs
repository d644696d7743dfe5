use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::sampling::DapPair;
use crate::error::{Error, Result};

/// Emission dipole orientation: `tilt` from the surface normal, `azimuth`
/// in the surface plane, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dipole {
    pub tilt: f64,
    pub azimuth: f64,
}

impl From<&DapPair> for Dipole {
    fn from(pair: &DapPair) -> Self {
        Self {
            tilt: pair.dipole_tilt,
            azimuth: pair.dipole_azimuth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarizationCurve {
    /// `(analyzer angle in [0, π), intensity)`.
    pub points: Vec<(f64, f64)>,
    /// `(I_max - I_min) / (I_max + I_min)` of the continuous curve.
    pub contrast: f64,
    /// Analyzer angle of the continuous minimum in `[0, π)`, or `None` when
    /// the curve is flat.
    pub minimum_angle: Option<f64>,
}

impl PolarizationCurve {
    /// `angle_rad,intensity` rows after `metadata` and the curve summary.
    pub fn write_csv<W: std::io::Write>(
        &self,
        out: W,
        metadata: &[(String, String)],
    ) -> std::io::Result<()> {
        let mut meta = metadata.to_vec();
        meta.push(("contrast".into(), format!("{}", self.contrast)));
        meta.push((
            "minimum_angle_rad".into(),
            self.minimum_angle.map_or("none".into(), |a| format!("{a}")),
        ));
        super::write_table(
            out,
            &meta,
            "angle_rad,intensity",
            self.points.iter().map(|(a, i)| vec![*a, *i]),
        )
    }
}

/// Paraxial analyzer curve of an emitter set.
///
/// Each dipole adds `background + sin²(tilt)·cos²(θ - azimuth)`. The sum
/// is `B + S/2 + |C|/2·cos(2θ - arg C)` with `S = Σ sin²tilt` and
/// `C = Σ sin²tilt·e^{2i·azimuth}`, which gives the contrast and the
/// minimum in closed form.
pub fn polarization_curve(
    dipoles: &[Dipole],
    angles: &[f64],
    background: f64,
) -> Result<PolarizationCurve> {
    if angles.is_empty() {
        return Err(Error::Domain("no analyzer angles".into()));
    }
    if !(background.is_finite() && background >= 0.0) {
        return Err(Error::Domain(format!(
            "background must be >= 0, got {background}"
        )));
    }
    let offset = background * dipoles.len() as f64;
    let points = angles
        .iter()
        .map(|&theta| {
            let i: f64 = dipoles
                .iter()
                .map(|d| {
                    let s = d.tilt.sin();
                    let c = (theta - d.azimuth).cos();
                    s * s * c * c
                })
                .sum();
            (theta.rem_euclid(PI), offset + i)
        })
        .collect();
    Ok(PolarizationCurve {
        points,
        contrast: contrast(dipoles, background),
        minimum_angle: minimum_angle(dipoles),
    })
}

fn harmonics(dipoles: &[Dipole]) -> (f64, f64, f64) {
    let mut s = 0.0;
    let mut re = 0.0;
    let mut im = 0.0;
    for d in dipoles {
        let w = d.tilt.sin().powi(2);
        s += w;
        re += w * (2.0 * d.azimuth).cos();
        im += w * (2.0 * d.azimuth).sin();
    }
    (s, re, im)
}

/// Contrast of the continuous analyzer curve; 0 for a flat curve.
pub fn contrast(dipoles: &[Dipole], background: f64) -> f64 {
    let (s, re, im) = harmonics(dipoles);
    let modulation = re.hypot(im);
    let mean = background * dipoles.len() as f64 + 0.5 * s;
    if mean > 0.0 {
        0.5 * modulation / mean
    } else {
        0.0
    }
}

/// Analyzer angle of minimum intensity in `[0, π)`; `None` for a flat curve.
pub fn minimum_angle(dipoles: &[Dipole]) -> Option<f64> {
    let (s, re, im) = harmonics(dipoles);
    let modulation = re.hypot(im);
    if modulation <= 1e-12 * s.max(f64::MIN_POSITIVE) {
        return None;
    }
    Some((0.5 * im.atan2(re) + 0.5 * PI).rem_euclid(PI))
}

/// `n` dipoles sharing `azimuth`, with tilts uniform in
/// `[mean_tilt - spread, mean_tilt + spread]` clamped to `[0, π/2]`.
pub fn tilt_ensemble(
    n: usize,
    mean_tilt: f64,
    spread: f64,
    azimuth: f64,
    seed: u64,
) -> Vec<Dipole> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random::<f64>() * 2.0 - 1.0;
            Dipole {
                tilt: (mean_tilt + spread * u).clamp(0.0, 0.5 * PI),
                azimuth,
            }
        })
        .collect()
}
