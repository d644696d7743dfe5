use dap_layer::inference::{calibrated_preset, PEAK_ANCHORS};
use dap_layer::photophysics::{
    dap_energy, intensity_vs_thickness, lifetime_vs_thickness, matching_function, nm_to_ev,
    nonradiative_rate, peak_thickness, quantum_yield, radiative_rate, resonance_thickness,
    thickness_to_energy,
};
use dap_layer::ModelParams;
use proptest::prelude::*;

use super::{check, model_params, rel};

/// Least-squares slope of `y` on `x`.
fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn energy_law() -> Result<(), String> {
    check(
        256,
        (model_params(), 0.05f64..40.0, 1e-6f64..5.0, 1e-4f64..40.0),
        |(p, r, dr, excess)| {
            let near = dap_energy(r, &p).unwrap();
            let far = dap_energy(r + dr, &p).unwrap();
            prop_assert!(far < near, "E({}) = {far} !< E({r}) = {near}", r + dr);
            let d = p.d_min + excess;
            let shifted = dap_energy(d - p.d_min, &p).unwrap();
            prop_assert_eq!(
                thickness_to_energy(d, &p).unwrap().to_bits(),
                shifted.to_bits()
            );
            Ok(())
        },
    )
}

pub fn rate_regressions() -> Result<(), String> {
    check(128, model_params(), |p| {
        let p = ModelParams {
            w_background: 0.0,
            ..p
        };
        let d: Vec<f64> = (0..25).map(|k| 0.5 + 0.2 * k as f64).collect();
        let ln_r: Vec<f64> = d
            .iter()
            .map(|&x| radiative_rate(x, &p).unwrap().ln())
            .collect();
        let slope = ols_slope(&d, &ln_r);
        prop_assert!(rel(slope, -2.0 / p.a_eff) < 1e-9, "radiative slope {slope}");
        let d2: Vec<f64> = d.iter().map(|x| x * x).collect();
        let ln_nr: Vec<f64> = d
            .iter()
            .map(|&x| nonradiative_rate(x, &p).unwrap().ln())
            .collect();
        let slope = ols_slope(&d2, &ln_nr);
        let b = p.quench_length;
        prop_assert!(rel(slope, -1.0 / (b * b)) < 1e-9, "quenching slope {slope}");
        Ok(())
    })
}

pub fn yield_bounds() -> Result<(), String> {
    check(
        512,
        (model_params(), 1e-3f64..10.0, 1.8f64..3.2),
        |(p, excess, e)| {
            let d = p.d_min + excess;
            let eta = quantum_yield(d, &p).unwrap();
            prop_assert!(eta > 0.0 && eta <= 1.0, "η = {eta}");
            let zeta = matching_function(e, thickness_to_energy(d, &p).unwrap(), p.sigma).unwrap();
            let i = intensity_vs_thickness(d, e, &p).unwrap();
            prop_assert!(i <= eta.min(zeta), "I = {i}, η = {eta}, ζ = {zeta}");
            Ok(())
        },
    )
}

/// Without quenching the maximum sits on the resonance; with quenching it
/// approaches the resonance as the window narrows.
pub fn peak_convergence() -> Result<(), String> {
    let sweep = [0.05, 0.03, 0.02, 0.01, 0.005];
    let base = calibrated_preset();
    for &(nm, _) in &PEAK_ANCHORS {
        let e = nm_to_ev(nm).map_err(|e| e.to_string())?;
        let unquenched = ModelParams {
            w0_nonrad: 1e-300,
            w_background: 0.0,
            ..*base
        };
        let mut last = f64::INFINITY;
        for &sigma in &sweep {
            for (p, strict) in [
                (
                    ModelParams {
                        sigma,
                        ..unquenched
                    },
                    true,
                ),
                (
                    ModelParams {
                        sigma,
                        w_background: 0.0,
                        ..*base
                    },
                    false,
                ),
            ] {
                let res = resonance_thickness(e, &p).map_err(|e| e.to_string())?;
                let peak = peak_thickness(e, &p, (p.d_min + 1e-3, 12.0), 1e-12)
                    .map_err(|e| e.to_string())?;
                let err = (peak - res).abs();
                if strict {
                    if err > 1e-6 {
                        return Err(format!(
                            "{nm} nm, σ = {sigma}: unquenched peak off by {err}"
                        ));
                    }
                } else {
                    if err > last + 1e-9 {
                        return Err(format!("{nm} nm: error grew to {err} at σ = {sigma}"));
                    }
                    last = err;
                }
            }
        }
        if last > 0.01 {
            return Err(format!("{nm} nm: peak still {last} nm from resonance"));
        }
    }
    Ok(())
}

pub fn lifetime_monotone() -> Result<(), String> {
    check(
        512,
        (model_params(), 0.01f64..15.0, 0.0f64..5.0),
        |(p, d, dd)| {
            let p = ModelParams {
                w_background: 0.0,
                ..p
            };
            let near = lifetime_vs_thickness(d, &p).unwrap();
            let far = lifetime_vs_thickness(d + dd, &p).unwrap();
            prop_assert!(near <= far, "τ({d}) = {near} > τ({}) = {far}", d + dd);
            Ok(())
        },
    )
}

pub fn purity() -> Result<(), String> {
    check(
        32,
        (model_params(), 1e-3f64..5.0, 1.9f64..3.0),
        |(p, excess, e)| {
            let d = p.d_min + excess;
            let eval = || {
                [
                    dap_energy(d, &p).unwrap(),
                    thickness_to_energy(d, &p).unwrap(),
                    radiative_rate(d, &p).unwrap(),
                    nonradiative_rate(d, &p).unwrap(),
                    quantum_yield(d, &p).unwrap(),
                    intensity_vs_thickness(d, e, &p).unwrap(),
                    lifetime_vs_thickness(d, &p).unwrap(),
                    peak_thickness(e, &p, (p.d_min + 1e-3, 12.0), 1e-10).unwrap_or(f64::NAN),
                ]
                .map(f64::to_bits)
            };
            prop_assert_eq!(eval(), eval());
            Ok(())
        },
    )
}
