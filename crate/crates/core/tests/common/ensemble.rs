use dap_layer::ensemble::{
    intensity_map, line_amplitude, sample_realization, synth_spectrum, Band, EnsembleConfig,
    WavelengthGrid,
};
use dap_layer::inference::calibrated_preset;
use dap_layer::photophysics::{intensity_vs_thickness, nm_to_ev};
use dap_layer::{ModelParams, CONSTANTS};
use proptest::prelude::*;

use super::check;

fn small_config() -> impl Strategy<Value = EnsembleConfig> {
    (
        any::<u64>(),
        50.0f64..400.0,
        1.0f64..6.0,
        0.0f64..4.0,
        1e19f64..1e20,
        1e12f64..5e13,
    )
        .prop_map(|(seed, area, depth, d, nd, na)| EnsembleConfig {
            donor_density_cm3: nd,
            acceptor_density_cm2: na,
            slab_area_nm2: area,
            substrate_depth_nm: depth,
            thickness_nm: d,
            seed,
            ..EnsembleConfig::default()
        })
}

pub fn determinism() -> Result<(), String> {
    check(64, (small_config(), 1u64..1000), |(cfg, stream)| {
        let a = sample_realization(&cfg, stream).unwrap();
        let b = sample_realization(&cfg, stream).unwrap();
        prop_assert_eq!(&a, &b);
        let other = sample_realization(&cfg, stream + 1).unwrap();
        if a.counts.donors > 0 && other.counts.donors > 0 {
            prop_assert_ne!(&a.pairs, &other.pairs);
        }
        Ok(())
    })
}

/// Smallest minimum-image offset, wrapped into `[-side/2, side/2]`.
fn wrap(dx: f64, side: f64) -> f64 {
    dx - side * (dx / side).round()
}

pub fn nearest_neighbour() -> Result<(), String> {
    check(64, (small_config(), 0u64..1000), |(cfg, stream)| {
        let r = sample_realization(&cfg, stream).unwrap();
        let side = cfg.side_nm();
        for pair in &r.pairs {
            let [x, y, _] = pair.donor_position;
            let assigned = (pair.acceptor_position[0] - x).hypot(pair.acceptor_position[1] - y);
            let best = r
                .acceptors
                .iter()
                .map(|a| wrap(a[0] - x, side).hypot(wrap(a[1] - y, side)))
                .fold(f64::INFINITY, f64::min);
            prop_assert!(
                assigned <= best * (1.0 + 1e-12) + 1e-12,
                "{assigned} > {best}"
            );
            let is_image = r.acceptors.iter().any(|a| {
                wrap(a[0] - pair.acceptor_position[0], side).abs() < 1e-9
                    && wrap(a[1] - pair.acceptor_position[1], side).abs() < 1e-9
            });
            prop_assert!(is_image, "assigned position is not an acceptor image");
        }
        prop_assert_eq!(
            r.counts.pairs + r.counts.near_surface + r.counts.unpaired,
            r.counts.donors
        );
        Ok(())
    })
}

pub fn separation_bound() -> Result<(), String> {
    check(128, (small_config(), 0u64..1000), |(cfg, stream)| {
        let r = sample_realization(&cfg, stream).unwrap();
        for pair in &r.pairs {
            prop_assert!(pair.separation >= cfg.thickness_nm);
        }
        Ok(())
    })
}

pub fn spectrum_linearity() -> Result<(), String> {
    let grid = WavelengthGrid::uniform(400.0, 850.0, 22_501).unwrap();
    check(
        24,
        (small_config(), 1.5f64..3.0, 0usize..4, 0.0f64..1.0),
        |(cfg, d, anchor, split)| {
            let cfg = EnsembleConfig {
                thickness_nm: d,
                params: ModelParams {
                    sigma: 0.05,
                    ..ModelParams::default()
                },
                ..cfg
            };
            let p = cfg.params;
            let e = nm_to_ev([457.0, 473.0, 532.0, 633.0][anchor]).unwrap();
            let pairs = sample_realization(&cfg, 0).unwrap().pairs;
            let k = (split * pairs.len() as f64) as usize;
            let all = synth_spectrum(&pairs, e, &p, &grid).unwrap();
            let head = synth_spectrum(&pairs[..k], e, &p, &grid).unwrap();
            let tail = synth_spectrum(&pairs[k..], e, &p, &grid).unwrap();
            let top = all.intensity.iter().cloned().fold(0.0, f64::max);
            for i in 0..all.intensity.len() {
                let sum = head.intensity[i] + tail.intensity[i];
                prop_assert!((all.intensity[i] - sum).abs() <= 1e-12 * top.max(1e-300));
            }
            let amplitudes: f64 = pairs
                .iter()
                .map(|q| line_amplitude(q, e, &p).unwrap())
                .sum();
            if amplitudes > 1e-12 {
                let integral = all.integral();
                prop_assert!(
                    (integral - amplitudes).abs() <= 0.01 * amplitudes,
                    "integral {integral} vs amplitudes {amplitudes}"
                );
            }
            Ok(())
        },
    )
}

/// Composite Simpson rule with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * k as f64);
    }
    s * h / 3.0
}

/// Expected band intensity per cell from the closed-form pair intensity
/// integrated over donor depth and the nearest-acceptor distance law.
///
/// With Poisson acceptors of areal density `n` the lateral distance `ρ` to
/// the nearest one has density `2πnρ·exp(-πnρ²)` while `ρ < side/2`. In
/// terms of `R² = ρ² + h²` the inner integral over `R` is regular at
/// `R = h`. Only separations within nine window widths of resonance
/// contribute, and their replicas must lie inside the band.
pub fn closed_form_band_intensity(cfg: &EnsembleConfig, e_exc: f64, band: &Band) -> f64 {
    let p = &cfg.params;
    let n_a = cfg.acceptor_density_nm2();
    let n_d = cfg.donor_density_nm3();
    let c = CONSTANTS.coulomb_ev_nm / p.epsilon_r;
    let de = p.band_gap - p.e_donor - p.e_acceptor;
    let reach = 9.0 * p.sigma;
    assert!(e_exc - reach > de, "window reaches the asymptote");
    let r_lo = p.d_min + c / (e_exc + reach - de);
    let r_hi = p.d_min + c / (e_exc - reach - de);
    let d = cfg.thickness_nm;
    assert!(d > p.d_min);
    let rho_max = (r_hi * r_hi - d * d).max(0.0).sqrt();
    assert!(
        rho_max < 0.5 * cfg.side_nm(),
        "resonant pairs see the cell boundary"
    );
    let (band_lo, band_hi) = (
        CONSTANTS.hc_ev_nm / band.hi_nm + 8.0 * p.linewidth,
        CONSTANTS.hc_ev_nm / band.lo_nm - 8.0 * p.linewidth,
    );
    assert!(e_exc - reach - p.e_phonon > band_lo && e_exc + reach - p.e_phonon < band_hi);

    let inner = |h: f64| {
        let integrand = |r: f64| {
            let rho2 = r * r - h * h;
            intensity_vs_thickness(r, e_exc, p).unwrap()
                * 2.0
                * std::f64::consts::PI
                * n_a
                * r
                * (-std::f64::consts::PI * n_a * rho2).exp()
        };
        simpson(integrand, h.max(r_lo), r_hi, 4000)
    };
    let z_max = (r_hi - d).min(cfg.substrate_depth_nm);
    let kink = (r_lo - d).clamp(0.0, z_max);
    let outer = |z: f64| inner(d + z);
    let total = simpson(outer, 0.0, kink, 400) + simpson(outer, kink, z_max, 800);
    n_d * cfg.slab_area_nm2 * total
}

/// Monte Carlo mean, standard error and closed form at three thicknesses.
pub fn closed_form_table(realizations: usize) -> Vec<(f64, f64, f64, f64)> {
    let template = EnsembleConfig {
        slab_area_nm2: 100.0,
        seed: 31,
        params: *calibrated_preset(),
        ..EnsembleConfig::default()
    };
    let band = Band::new(545.0, 650.0).unwrap();
    let e = nm_to_ev(532.0).unwrap();
    let profile = [(0.0, 1.40), (1.0, 1.60), (2.0, 1.70)];
    let map = intensity_map(&profile, e, &template, &band, realizations).unwrap();
    map.rows
        .iter()
        .map(|row| {
            let cfg = EnsembleConfig {
                thickness_nm: row.thickness_nm,
                ..template
            };
            let oracle = closed_form_band_intensity(&cfg, e, &band);
            (row.thickness_nm, row.intensity, row.stderr, oracle)
        })
        .collect()
}

pub fn closed_form_agreement() -> Result<(), String> {
    for (d, mean, se, oracle) in closed_form_table(10_000) {
        if !((mean - oracle).abs() <= 3.0 * se) {
            return Err(format!(
                "d = {d}: Monte Carlo {mean} ± {se}, closed form {oracle}"
            ));
        }
    }
    Ok(())
}
