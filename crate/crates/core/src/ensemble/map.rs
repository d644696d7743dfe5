use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;

use super::config::EnsembleConfig;
use super::sampling::{sample_realization, stream_index, DapPair, RNG_ALGORITHM};
use super::spectrum::line_amplitude;
use crate::error::{Error, Result};
use crate::params::{ModelParams, CONSTANTS};

/// Detection window in wavelength, nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Band {
    pub lo_nm: f64,
    pub hi_nm: f64,
}

impl Band {
    pub fn new(lo_nm: f64, hi_nm: f64) -> Result<Self> {
        if !(lo_nm > 0.0 && hi_nm > lo_nm && hi_nm.is_finite()) {
            return Err(Error::Domain(format!(
                "empty detection band [{lo_nm}, {hi_nm}] nm"
            )));
        }
        Ok(Self { lo_nm, hi_nm })
    }

    /// `(E_lo, E_hi)` in eV.
    pub fn energies(&self) -> (f64, f64) {
        (
            CONSTANTS.hc_ev_nm / self.hi_nm,
            CONSTANTS.hc_ev_nm / self.lo_nm,
        )
    }
}

/// Part of a pair's replica line that falls inside `band`.
///
/// The line is Gaussian in energy, so the band fraction is a difference of
/// normal distribution functions.
pub fn band_intensity(pair: &DapPair, e_exc: f64, p: &ModelParams, band: &Band) -> Result<f64> {
    let amplitude = line_amplitude(pair, e_exc, p)?;
    if amplitude == 0.0 {
        return Ok(0.0);
    }
    let (e_lo, e_hi) = band.energies();
    let center = pair.energy - p.e_phonon;
    let s = p.linewidth * std::f64::consts::SQRT_2;
    // Φ(x) = erfc(-x/√2)/2
    let fraction = 0.5 * (erfc((center - e_hi) / s) - erfc((center - e_lo) / s));
    Ok(amplitude * fraction.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub x_um: f64,
    pub thickness_nm: f64,
    /// Mean band intensity over the realizations.
    pub intensity: f64,
    /// Standard error of the mean.
    pub stderr: f64,
}

/// Band-integrated intensity along a thickness profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub rows: Vec<ProfileRow>,
    pub metadata: Vec<(String, String)>,
}

impl Profile {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        super::write_table(
            out,
            &self.metadata,
            "x_um,thickness_nm,intensity,stderr",
            self.rows
                .iter()
                .map(|r| vec![r.x_um, r.thickness_nm, r.intensity, r.stderr]),
        )
    }

    /// Row with the largest mean intensity.
    pub fn peak(&self) -> Option<&ProfileRow> {
        self.rows
            .iter()
            .max_by(|a, b| a.intensity.total_cmp(&b.intensity))
    }
}

/// Monte Carlo mean band intensity at each `(x μm, d nm)` of `profile`.
///
/// Realization `k` at position `i` uses stream [`stream_index`]`(i, k)` of
/// `template.seed`, with `template.thickness_nm` replaced by `d`. Work is
/// spread over the rayon pool; results are reduced in realization order, so
/// the output does not depend on the thread count.
pub fn intensity_map(
    profile: &[(f64, f64)],
    e_exc: f64,
    template: &EnsembleConfig,
    band: &Band,
    realizations: usize,
) -> Result<Profile> {
    if realizations == 0 {
        return Err(Error::Domain("at least one realization is required".into()));
    }
    if let Some((_, d)) = profile.iter().find(|(_, d)| !(d.is_finite() && *d >= 0.0)) {
        return Err(Error::Domain(format!("thickness must be >= 0, got {d}")));
    }
    template.validate()?;
    let n_real =
        u32::try_from(realizations).map_err(|_| Error::Domain("too many realizations".into()))?;
    let n_pos = u32::try_from(profile.len())
        .map_err(|_| Error::Domain("too many profile positions".into()))?;
    let jobs: Vec<(u32, u32)> = (0..n_pos)
        .flat_map(|i| (0..n_real).map(move |k| (i, k)))
        .collect();
    let values: Vec<f64> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let cfg = EnsembleConfig {
                thickness_nm: profile[i as usize].1,
                ..*template
            };
            let realization = sample_realization(&cfg, stream_index(i, k))?;
            realization
                .pairs
                .iter()
                .map(|pair| band_intensity(pair, e_exc, &cfg.params, band))
                .sum::<Result<f64>>()
        })
        .collect::<Result<Vec<f64>>>()?;

    let n = realizations as f64;
    let rows = profile
        .iter()
        .zip(values.chunks(realizations))
        .map(|(&(x, d), v)| {
            let mean = v.iter().sum::<f64>() / n;
            let var = if realizations > 1 {
                v.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            ProfileRow {
                x_um: x,
                thickness_nm: d,
                intensity: mean,
                stderr: (var / n).sqrt(),
            }
        })
        .collect();
    let metadata = vec![
        (
            "excitation_nm".into(),
            format!("{}", CONSTANTS.hc_ev_nm / e_exc),
        ),
        ("band_nm".into(), format!("{}-{}", band.lo_nm, band.hi_nm)),
        ("realizations".into(), realizations.to_string()),
        ("seed".into(), template.seed.to_string()),
        ("rng".into(), RNG_ALGORITHM.into()),
    ];
    Ok(Profile { rows, metadata })
}
