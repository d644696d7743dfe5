use dap_layer::dataio::{
    correlate_profiles, extract_peak_thickness, nitrogen_concentration, normalize_two_phonon,
    CorrelatedProfile, CorrelatedRow, FtirSpectrum, FtirWindows, NitrogenContent, Sign,
    TWO_PHONON_TARGET,
};
use proptest::prelude::*;

use super::{check, rel};

/// Flat baseline, a Gaussian two-phonon band at 2030 cm⁻¹ and a triangular
/// nitrogen band of height `band` at 1135 cm⁻¹, on a 1 cm⁻¹ grid.
pub fn synthetic_ftir(baseline: f64, two_phonon: f64, band: f64, scale: f64) -> FtirSpectrum {
    let x: Vec<f64> = (1000..=4000).map(f64::from).collect();
    let y = x
        .iter()
        .map(|&k| {
            let g = ((k - 2030.0) / 60.0).powi(2);
            let tri = (1.0 - (k - 1135.0).abs() / 10.0).max(0.0);
            scale * (baseline + two_phonon * (-0.5 * g).exp() + band * tri)
        })
        .collect();
    FtirSpectrum::new(x, y).unwrap()
}

pub fn nitrogen(raw: &FtirSpectrum) -> NitrogenContent {
    let w = FtirWindows::default();
    let n = normalize_two_phonon(raw, TWO_PHONON_TARGET, &w).unwrap();
    nitrogen_concentration(&n, &w).unwrap()
}

pub fn ftir_prescaling() -> Result<(), String> {
    check(
        64,
        (0.0f64..1.0, 1.0f64..20.0, 0.5f64..10.0, -3.0f64..3.0),
        |(baseline, tp, band, log_c)| {
            let c = 10f64.powf(log_c);
            let a = nitrogen(&synthetic_ftir(baseline, tp, band, 1.0));
            let b = nitrogen(&synthetic_ftir(baseline, tp, band, c));
            for (x, y) in [
                (a.mu_1135, b.mu_1135),
                (a.n_c_cm3, b.n_c_cm3),
                (a.ppm, b.ppm),
            ] {
                prop_assert!(rel(y, x) <= 1e-9, "{x} vs {y} at c = {c}");
            }
            Ok(())
        },
    )
}

fn axis(start: f64, steps: Vec<f64>) -> Vec<f64> {
    let mut x = start;
    let mut out = vec![x];
    for s in steps {
        x += s;
        out.push(x);
    }
    out
}

pub fn correlate_rows() -> Result<(), String> {
    let steps = || prop::collection::vec(0.01f64..1.0, 1..60);
    check(
        256,
        (steps(), -5.0f64..5.0, steps(), -5.0f64..5.0, steps()),
        |(hs, c1_start, c1s, c2_start, c2s)| {
            let hx = axis(0.0, hs);
            let height: Vec<(f64, f64)> = hx.iter().map(|&x| (x, 2.0 + x.sin())).collect();
            let ch1: Vec<(f64, f64)> = axis(c1_start, c1s)
                .into_iter()
                .map(|x| (x, x * x))
                .collect();
            let ch2: Vec<(f64, f64)> = axis(c2_start, c2s)
                .into_iter()
                .map(|x| (x, 1.0 - x))
                .collect();
            let lo = ch1[0].0.max(ch2[0].0);
            let hi = ch1.last().unwrap().0.min(ch2.last().unwrap().0);
            let expected = hx.iter().filter(|&&x| x >= lo && x <= hi).count();
            match correlate_profiles(&height, &[ch1, ch2], 0.0, Sign::Positive) {
                Ok(cp) => {
                    prop_assert_eq!(cp.rows.len(), expected);
                    prop_assert_eq!(cp.channels, 2);
                }
                Err(e) => prop_assert_eq!(expected, 0, "{}", e),
            }
            Ok(())
        },
    )
}

pub fn peak_offset() -> Result<(), String> {
    check(
        256,
        (0.8f64..2.2, 0.2f64..0.8, -0.5f64..100.0),
        |(centre, width, offset)| {
            let make = |k: f64| CorrelatedProfile {
                rows: (0..=60)
                    .map(|i| {
                        let t = 0.05 * i as f64;
                        let y = (-((t - centre) / width).powi(2)).exp();
                        CorrelatedRow {
                            x_um: t,
                            thickness_nm: t,
                            intensity: vec![y + k],
                        }
                    })
                    .collect(),
                channels: 1,
            };
            let a = extract_peak_thickness(&make(0.0), 0, 0.1).unwrap();
            let b = extract_peak_thickness(&make(offset), 0, 0.1).unwrap();
            prop_assert!((a.thickness_nm - b.thickness_nm).abs() <= 1e-9);
            prop_assert_eq!(a.bins_used, b.bins_used);
            Ok(())
        },
    )
}
