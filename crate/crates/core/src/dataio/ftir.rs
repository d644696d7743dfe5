//! FTIR absorbance: two-phonon normalization and the nitrogen content from
//! the 1135 cm⁻¹ band.

use std::io::Read;

use serde::Serialize;

use super::table::read_table;
use crate::error::{Error, Result};
use crate::params::CONSTANTS;

/// Nitrogen per unit normalized absorption at 1135 cm⁻¹, cm⁻³.
pub const NITROGEN_PER_MU: f64 = 4.4e18;

/// Normalized two-phonon band height.
pub const TWO_PHONON_TARGET: f64 = 14.0;

/// Wavenumber windows used by the FTIR analysis, cm⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FtirWindows {
    /// The two-phonon band height is the largest absorbance here.
    pub two_phonon: (f64, f64),
    /// The baseline under the 1135 cm⁻¹ band joins the absorbance minima of
    /// these two windows.
    pub baseline_left: (f64, f64),
    pub baseline_right: (f64, f64),
    pub nitrogen_band: f64,
}

impl Default for FtirWindows {
    fn default() -> Self {
        Self {
            two_phonon: (1900.0, 2300.0),
            baseline_left: (1000.0, 1120.0),
            baseline_right: (1150.0, 1300.0),
            nitrogen_band: 1135.0,
        }
    }
}

/// Absorbance on a strictly increasing wavenumber axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FtirSpectrum {
    pub wavenumber: Vec<f64>,
    pub absorbance: Vec<f64>,
    /// Factor applied to the raw absorbance by normalization; `None` while
    /// the spectrum is raw.
    pub scale_factor: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NitrogenContent {
    pub mu_1135: f64,
    pub n_c_cm3: f64,
    pub ppm: f64,
    pub scale_factor: f64,
}

impl FtirSpectrum {
    pub fn new(wavenumber: Vec<f64>, absorbance: Vec<f64>) -> Result<Self> {
        if wavenumber.len() != absorbance.len() || wavenumber.len() < 2 {
            return Err(Error::Domain(
                "FTIR spectrum needs >= 2 samples and equal column lengths".into(),
            ));
        }
        if wavenumber.iter().chain(&absorbance).any(|v| !v.is_finite()) {
            return Err(Error::Domain("FTIR samples must be finite".into()));
        }
        if wavenumber.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain(
                "wavenumbers must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            wavenumber,
            absorbance,
            scale_factor: None,
        })
    }

    pub fn is_normalized(&self) -> bool {
        self.scale_factor.is_some()
    }

    /// Multiplies the raw absorbance by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            absorbance: self.absorbance.iter().map(|a| a * c).collect(),
            ..self.clone()
        }
    }

    /// Linear interpolation at `x`; `None` outside the axis.
    pub fn absorbance_at(&self, x: f64) -> Option<f64> {
        let w = &self.wavenumber;
        if x < w[0] || x > w[w.len() - 1] {
            return None;
        }
        let k = w.partition_point(|v| *v < x);
        if k == 0 {
            return Some(self.absorbance[0]);
        }
        let (x0, x1) = (w[k - 1], w[k]);
        let (y0, y1) = (self.absorbance[k - 1], self.absorbance[k]);
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    fn min_in(&self, window: (f64, f64)) -> Option<(f64, f64)> {
        self.wavenumber
            .iter()
            .zip(&self.absorbance)
            .filter(|(w, _)| **w >= window.0 && **w <= window.1)
            .map(|(w, a)| (*w, *a))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    fn max_in(&self, window: (f64, f64)) -> Option<f64> {
        self.wavenumber
            .iter()
            .zip(&self.absorbance)
            .filter(|(w, _)| **w >= window.0 && **w <= window.1)
            .map(|(_, a)| *a)
            .max_by(f64::total_cmp)
    }
}

/// Scales the spectrum so its two-phonon band peaks at `target`.
///
/// The recorded scale factor is relative to the raw spectrum, so
/// normalizing twice changes nothing.
pub fn normalize_two_phonon(
    s: &FtirSpectrum,
    target: f64,
    windows: &FtirWindows,
) -> Result<FtirSpectrum> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::Domain(format!("target must be > 0, got {target}")));
    }
    let (lo, hi) = windows.two_phonon;
    let w = &s.wavenumber;
    if w[0] > lo || w[w.len() - 1] < hi {
        return Err(Error::Domain(format!(
            "spectrum [{}, {}] cm⁻¹ does not cover the two-phonon window [{lo}, {hi}]",
            w[0],
            w[w.len() - 1]
        )));
    }
    let peak = s
        .max_in(windows.two_phonon)
        .ok_or_else(|| Error::Domain("no samples in the two-phonon window".into()))?;
    if !(peak > 0.0) {
        return Err(Error::Domain(format!(
            "two-phonon band is absent (peak absorbance {peak})"
        )));
    }
    let step = target / peak;
    let mut out = s.scaled(step);
    out.scale_factor = Some(s.scale_factor.unwrap_or(1.0) * step);
    Ok(out)
}

/// Nitrogen concentration and ppm from the baseline-corrected normalized
/// absorbance at the nitrogen band.
pub fn nitrogen_concentration(s: &FtirSpectrum, windows: &FtirWindows) -> Result<NitrogenContent> {
    let scale_factor = s
        .scale_factor
        .ok_or_else(|| Error::Domain("spectrum is not normalized to the two-phonon band".into()))?;
    let band = windows.nitrogen_band;
    let at_band = s
        .absorbance_at(band)
        .ok_or_else(|| Error::Domain(format!("{band} cm⁻¹ lies outside the spectrum")))?;
    let left = s
        .min_in(windows.baseline_left)
        .ok_or_else(|| Error::Domain("no samples in the left baseline window".into()))?;
    let right = s
        .min_in(windows.baseline_right)
        .ok_or_else(|| Error::Domain("no samples in the right baseline window".into()))?;
    let baseline = left.1 + (right.1 - left.1) * (band - left.0) / (right.0 - left.0);
    let mu_1135 = at_band - baseline;
    let n_c_cm3 = NITROGEN_PER_MU * mu_1135;
    Ok(NitrogenContent {
        mu_1135,
        n_c_cm3,
        ppm: n_c_cm3 / CONSTANTS.diamond_atom_density * 1e6,
        scale_factor,
    })
}

/// Reads `wavenumber_cm1,absorbance`; a strictly decreasing axis is
/// reversed.
pub fn read_ftir_csv<R: Read>(input: R) -> Result<FtirSpectrum> {
    let mut table = read_table(input, 2, 2)?;
    if table.rows.len() >= 2 && table.rows[1][0] < table.rows[0][0] {
        table.rows.reverse();
        table.lines.reverse();
        for i in 1..table.rows.len() {
            if !(table.rows[i][0] > table.rows[i - 1][0]) {
                return Err(Error::Parse {
                    line: table.lines[i - 1].max(table.lines[i]),
                    message: "wavenumber axis is not monotone".into(),
                });
            }
        }
    }
    table.require_increasing(0)?;
    FtirSpectrum::new(table.column(0), table.column(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Flat baseline 0.2 under a two-phonon band peaking at `band` and a
    /// triangular 1135 cm⁻¹ band of height `mu` above the baseline.
    fn synthetic(band: f64, mu: f64) -> FtirSpectrum {
        let w: Vec<f64> = (0..=3000).map(|k| 1000.0 + k as f64).collect();
        let a = w
            .iter()
            .map(|&x| {
                let tp = (band - 0.2) * (-0.5 * ((x - 2030.0) / 60.0).powi(2)).exp();
                let n = mu * (1.0 - (x - 1135.0).abs() / 10.0).max(0.0);
                0.2 + tp + n
            })
            .collect();
        FtirSpectrum::new(w, a).unwrap()
    }

    #[test]
    fn scale_factor_examples() {
        let windows = FtirWindows::default();
        let s = synthetic(6.8, 1.0);
        let n = normalize_two_phonon(&s, 14.0, &windows).unwrap();
        let raw_peak = s.max_in(windows.two_phonon).unwrap();
        assert!((n.scale_factor.unwrap() - 14.0 / raw_peak).abs() < 1e-12);
        let again = normalize_two_phonon(&n, 14.0, &windows).unwrap();
        assert!((again.scale_factor.unwrap() - n.scale_factor.unwrap()).abs() < 1e-12);
        for (a, b) in again.absorbance.iter().zip(&n.absorbance) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn peak_seven_doubles() {
        let w = vec![1800.0, 2000.0, 2100.0, 2400.0];
        let s = FtirSpectrum::new(w, vec![1.0, 7.0, 3.0, 1.0]).unwrap();
        let n = normalize_two_phonon(&s, 14.0, &FtirWindows::default()).unwrap();
        assert_eq!(n.scale_factor, Some(2.0));
    }

    #[test]
    fn nitrogen_from_band_height() {
        let windows = FtirWindows::default();
        // raw spectrum at half scale
        let s = synthetic(14.0, 4.62).scaled(0.5);
        let n = normalize_two_phonon(&s, 14.0, &windows).unwrap();
        let c = nitrogen_concentration(&n, &windows).unwrap();
        assert!((c.mu_1135 - 4.62).abs() < 1e-9, "{}", c.mu_1135);
        assert!((c.n_c_cm3 / 2.03e19 - 1.0).abs() < 0.02);
        assert!(c.ppm > 100.0 && c.ppm < 120.0);
    }

    #[test]
    fn zero_band_gives_zero() {
        let windows = FtirWindows::default();
        let w: Vec<f64> = (0..=3000).map(|k| 1000.0 + k as f64).collect();
        let a: Vec<f64> = w
            .iter()
            .map(|&x| 0.3 + 14.0 * (-0.5 * ((x - 2030.0) / 60.0).powi(2)).exp())
            .collect();
        let n = normalize_two_phonon(&FtirSpectrum::new(w, a).unwrap(), 14.0, &windows).unwrap();
        let c = nitrogen_concentration(&n, &windows).unwrap();
        assert!(c.mu_1135.abs() < 1e-12 && c.ppm.abs() < 1e-6);
    }

    #[test]
    fn state_and_band_errors() {
        let windows = FtirWindows::default();
        let s = synthetic(14.0, 1.0);
        assert!(nitrogen_concentration(&s, &windows).is_err());
        let zero = s.scaled(0.0);
        assert!(normalize_two_phonon(&zero, 14.0, &windows).is_err());
    }

    #[test]
    fn reads_descending_axis() {
        let text = "wavenumber_cm1,absorbance\n3,0.3\n2,0.2\n1,0.1\n";
        let s = read_ftir_csv(text.as_bytes()).unwrap();
        assert_eq!(s.wavenumber, vec![1.0, 2.0, 3.0]);
        let bad = "1,0\n3,0\n2,0\n";
        assert!(matches!(
            read_ftir_csv(bad.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
