use serde::Serialize;

use super::sampling::DapPair;
use crate::error::{Error, Result};
use crate::params::{ModelParams, CONSTANTS};
use crate::photophysics::matching_function;

/// Line profiles are evaluated out to this many standard deviations.
const LINE_CUTOFF: f64 = 8.0;

/// Strictly increasing wavelength samples, nm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WavelengthGrid(Vec<f64>);

impl WavelengthGrid {
    pub fn new(wavelengths: Vec<f64>) -> Result<Self> {
        if wavelengths.is_empty() {
            return Err(Error::Domain("wavelength grid is empty".into()));
        }
        if wavelengths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Domain("wavelengths must be finite and > 0".into()));
        }
        if wavelengths.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(
                "wavelength grid must be strictly increasing".into(),
            ));
        }
        Ok(Self(wavelengths))
    }

    /// `n` points from `lo` to `hi` inclusive.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::Domain(format!(
                "bad grid [{lo}, {hi}] with {n} points"
            )));
        }
        let step = (hi - lo) / (n - 1) as f64;
        Self::new((0..n).map(|k| lo + step * k as f64).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Emission intensity per nm on a wavelength grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub wavelength_nm: Vec<f64>,
    pub intensity: Vec<f64>,
    pub metadata: Vec<(String, String)>,
    /// Non-fatal conditions, such as no line falling on the grid.
    pub warnings: Vec<String>,
}

impl Spectrum {
    /// Trapezoidal integral over wavelength.
    pub fn integral(&self) -> f64 {
        self.wavelength_nm
            .windows(2)
            .zip(self.intensity.windows(2))
            .map(|(w, i)| 0.5 * (i[0] + i[1]) * (w[1] - w[0]))
            .sum()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        super::write_table(
            out,
            &self.metadata,
            "wavelength_nm,intensity",
            self.wavelength_nm
                .iter()
                .zip(&self.intensity)
                .map(|(w, i)| vec![*w, *i]),
        )
    }
}

/// Line amplitude of a pair: `η · ζ(E_exc - E)`.
pub fn line_amplitude(pair: &DapPair, e_exc: f64, p: &ModelParams) -> Result<f64> {
    Ok(pair.quantum_yield * matching_function(e_exc, pair.energy, p.sigma)?)
}

/// Sum of the phonon-replica lines of `pairs`.
///
/// Each pair adds a Gaussian in energy (standard deviation `linewidth`)
/// centered at `E - E_phonon`, transformed to a density per nm, so its
/// wavelength integral equals its amplitude when the grid covers the line.
pub fn synth_spectrum(
    pairs: &[DapPair],
    e_exc: f64,
    p: &ModelParams,
    grid: &WavelengthGrid,
) -> Result<Spectrum> {
    p.validate()?;
    let hc = CONSTANTS.hc_ev_nm;
    let wl = grid.as_slice();
    let mut intensity = vec![0.0; wl.len()];
    let sigma = p.linewidth;
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let mut lines_on_grid = 0usize;
    for pair in pairs {
        let amplitude = line_amplitude(pair, e_exc, p)?;
        if amplitude == 0.0 {
            continue;
        }
        let center = pair.energy - p.e_phonon;
        if !(center > 0.0) {
            continue;
        }
        let e_hi = center + LINE_CUTOFF * sigma;
        let e_lo = (center - LINE_CUTOFF * sigma).max(f64::MIN_POSITIVE);
        let w_lo = hc / e_hi;
        let w_hi = hc / e_lo;
        let first = wl.partition_point(|w| *w < w_lo);
        let last = wl.partition_point(|w| *w <= w_hi);
        if first >= last {
            continue;
        }
        lines_on_grid += 1;
        for k in first..last {
            let e = hc / wl[k];
            let x = (e - center) / sigma;
            intensity[k] += amplitude * norm * (-0.5 * x * x).exp() * hc / (wl[k] * wl[k]);
        }
    }
    let mut warnings = Vec::new();
    if lines_on_grid == 0 {
        warnings.push("empty spectrum: no emission line overlaps the wavelength grid".into());
    }
    let metadata = vec![
        ("excitation_nm".to_string(), format!("{}", hc / e_exc)),
        ("excitation_ev".to_string(), format!("{e_exc}")),
        ("pairs".to_string(), pairs.len().to_string()),
    ];
    Ok(Spectrum {
        wavelength_nm: wl.to_vec(),
        intensity,
        metadata,
        warnings,
    })
}

/// Photon energy (eV) of the maximum of the spectrum after Gaussian
/// smoothing in energy with standard deviation `smoothing_ev`.
///
/// The spectrum is first converted to a density per eV. Returns `None` for
/// an all-zero spectrum.
pub fn envelope_maximum(spectrum: &Spectrum, smoothing_ev: f64) -> Option<f64> {
    let hc = CONSTANTS.hc_ev_nm;
    let n = spectrum.wavelength_nm.len();
    if n < 2 || !(smoothing_ev > 0.0) {
        return None;
    }
    // energies ascending
    let mut samples: Vec<(f64, f64, f64)> = Vec::with_capacity(n);
    for k in (0..n).rev() {
        let w = spectrum.wavelength_nm[k];
        let lo = if k + 1 < n {
            spectrum.wavelength_nm[k + 1]
        } else {
            w
        };
        let hi = if k > 0 {
            spectrum.wavelength_nm[k - 1]
        } else {
            w
        };
        // energy width of the cell around sample k
        let de = 0.5 * (hc / hi - hc / lo);
        let per_ev = spectrum.intensity[k] * w * w / hc;
        samples.push((hc / w, per_ev, de));
    }
    let energies: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let reach = 5.0 * smoothing_ev;
    let mut best: Option<(f64, f64)> = None;
    for &e in &energies {
        let from = energies.partition_point(|x| *x < e - reach);
        let to = energies.partition_point(|x| *x <= e + reach);
        let value: f64 = samples[from..to]
            .iter()
            .map(|&(ek, ik, de)| {
                let x = (ek - e) / smoothing_ev;
                ik * de * (-0.5 * x * x).exp()
            })
            .sum();
        if value > 0.0 && best.is_none_or(|(_, v)| value > v) {
            best = Some((e, value));
        }
    }
    best.map(|(e, _)| e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resonant_pair(e_exc: f64) -> DapPair {
        DapPair {
            donor_position: [0.0, 0.0, 0.0],
            acceptor_position: [0.0, 0.0],
            separation: 2.0,
            energy: e_exc,
            w_r: 1.0,
            w_nr: 0.0,
            quantum_yield: 1.0,
            dipole_tilt: 0.0,
            dipole_azimuth: 0.0,
        }
    }

    #[test]
    fn single_resonant_line() {
        let p = ModelParams::default();
        let e_exc = 2.33;
        let pair = resonant_pair(e_exc);
        let grid = WavelengthGrid::uniform(540.0, 700.0, 32001).unwrap();
        let s = synth_spectrum(&[pair], e_exc, &p, &grid).unwrap();
        assert!((s.integral() - 1.0).abs() < 1e-3, "{}", s.integral());
        let k = s
            .intensity
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let e_peak = CONSTANTS.hc_ev_nm / s.wavelength_nm[k];
        assert!((e_peak - (e_exc - p.e_phonon)).abs() < 2e-4);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn off_grid_line_warns() {
        let p = ModelParams::default();
        let pair = resonant_pair(2.33);
        let grid = WavelengthGrid::uniform(400.0, 450.0, 101).unwrap();
        let s = synth_spectrum(&[pair], 2.33, &p, &grid).unwrap();
        assert!(s.intensity.iter().all(|v| *v == 0.0));
        assert_eq!(s.warnings.len(), 1);
        assert_eq!(envelope_maximum(&s, 0.01), None);
    }

    #[test]
    fn doubling_yield_doubles_spectrum() {
        let p = ModelParams::default();
        let mut pair = resonant_pair(2.33);
        pair.quantum_yield = 0.3;
        let grid = WavelengthGrid::uniform(600.0, 620.0, 2001).unwrap();
        let a = synth_spectrum(&[pair], 2.335, &p, &grid).unwrap();
        pair.quantum_yield = 0.6;
        let b = synth_spectrum(&[pair], 2.335, &p, &grid).unwrap();
        for (x, y) in a.intensity.iter().zip(&b.intensity) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(WavelengthGrid::new(vec![]).is_err());
        assert!(WavelengthGrid::new(vec![500.0, 500.0]).is_err());
        assert!(WavelengthGrid::new(vec![500.0, 499.0]).is_err());
    }

    #[test]
    fn envelope_of_a_single_line() {
        let p = ModelParams::default();
        let pair = resonant_pair(2.33);
        let grid = WavelengthGrid::uniform(560.0, 680.0, 12001).unwrap();
        let s = synth_spectrum(&[pair], 2.33, &p, &grid).unwrap();
        let e = envelope_maximum(&s, 0.005).unwrap();
        assert!((e - 2.15).abs() < 2e-4, "{e}");
    }
}
