use dap_layer::inference::lsq::{central_difference, forward_difference};
use dap_layer::inference::{
    calibrated_preset, fit_hyperbola, fit_intensity_model, fit_lifetime_model, hyperbola,
    intensity, lifetime, HyperbolaOptions, IntensityParam, LifetimeParam,
};
use dap_layer::kinetics::{convolved_model, Component, IrfModel};
use dap_layer::photophysics::{intensity_vs_thickness, lifetime_vs_thickness, nm_to_ev};
use dap_layer::ModelParams;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{check, rel};

const SHAPE: [IntensityParam; 4] = [
    IntensityParam::AEff,
    IntensityParam::QuenchLength,
    IntensityParam::Sigma,
    IntensityParam::Amplitude,
];

fn thicknesses() -> Vec<f64> {
    (0..34).map(|k| 1.35 + 0.05 * k as f64).collect()
}

/// Calibrated intensity profile at 532 nm with 2% multiplicative noise.
fn noisy_intensity(seed: u64) -> Vec<(f64, f64)> {
    let p = calibrated_preset();
    let e = nm_to_ev(532.0).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    thicknesses()
        .into_iter()
        .map(|d| {
            let noise = 1.0 + 0.02 * (2.0 * rng.random::<f64>() - 1.0);
            (d, 250.0 * intensity_vs_thickness(d, e, p).unwrap() * noise)
        })
        .collect()
}

fn perturbed_start() -> ModelParams {
    let p = calibrated_preset();
    ModelParams {
        a_eff: p.a_eff * 1.05,
        quench_length: p.quench_length * 0.95,
        sigma: p.sigma * 1.1,
        ..*p
    }
}

pub fn scale_equivariance() -> Result<(), String> {
    let e = nm_to_ev(532.0).unwrap();
    check(12, (any::<u64>(), -3.0f64..3.0), |(seed, log_c)| {
        let c = 10f64.powf(log_c);
        let data = noisy_intensity(seed);
        let scaled: Vec<(f64, f64)> = data.iter().map(|&(d, y)| (d, c * y)).collect();
        let start = perturbed_start();
        let a = fit_intensity_model(&data, e, &SHAPE, &start, None).unwrap();
        let b = fit_intensity_model(&scaled, e, &SHAPE, &start, None).unwrap();
        for (x, y) in [
            (a.params.a_eff, b.params.a_eff),
            (a.params.quench_length, b.params.quench_length),
            (a.params.sigma, b.params.sigma),
        ] {
            prop_assert!(rel(y, x) <= 1e-8, "shape {x} vs {y} at c = {c}");
        }
        prop_assert!(rel(b.amplitude, c * a.amplitude) <= 1e-8);
        Ok(())
    })
}

fn hyperbola_points() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (
        0.1f64..1.0,
        1.5f64..1.9,
        0.5f64..1.5,
        prop::collection::vec((2.0f64..3.0, -0.02f64..0.02), 4..9),
    )
        .prop_map(|(a, de, d_min, xs)| {
            xs.into_iter()
                .map(|(e, noise)| (e, a / (e - de) + d_min + noise))
                .collect()
        })
}

pub fn shuffle_invariance() -> Result<(), String> {
    let p = ModelParams::default();
    let strategy = hyperbola_points().prop_flat_map(|pts| {
        let shuffled = Just(pts.clone()).prop_shuffle();
        (Just(pts), shuffled)
    });
    check(64, strategy, |(pts, shuffled)| {
        let opts = HyperbolaOptions::default();
        let (a, b) = match (
            fit_hyperbola(&pts, &opts, &p),
            fit_hyperbola(&shuffled, &opts, &p),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(_), Err(_)) => return Ok(()),
            (a, b) => {
                return Err(TestCaseError::fail(format!(
                    "order changed the outcome: {:?} / {:?}",
                    a.err(),
                    b.err()
                )))
            }
        };
        for (x, y) in [(a.a, b.a), (a.delta_e, b.delta_e), (a.d_min, b.d_min)] {
            prop_assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
        }
        Ok(())
    })
}

pub fn noiseless_chi2() -> Result<(), String> {
    let p = ModelParams::default();
    check(
        32,
        (0.1f64..1.0, 1.5f64..1.9, 0.5f64..1.5),
        |(a, de, d_min)| {
            let pts: Vec<(f64, f64)> = (0..6)
                .map(|k| {
                    let e = 2.0 + 0.2 * k as f64;
                    (e, a / (e - de) + d_min)
                })
                .collect();
            let fit = fit_hyperbola(&pts, &HyperbolaOptions::default(), &p).unwrap();
            prop_assert!(
                fit.fit.reduced_chi2 < 1e-10,
                "hyperbola χ² {}",
                fit.fit.reduced_chi2
            );
            Ok(())
        },
    )?;

    let truth = calibrated_preset();
    let e = nm_to_ev(532.0).unwrap();
    let data: Vec<(f64, f64)> = thicknesses()
        .into_iter()
        .map(|d| (d, 40.0 * intensity_vs_thickness(d, e, truth).unwrap()))
        .collect();
    let fit = fit_intensity_model(&data, e, &SHAPE, &perturbed_start(), None)
        .map_err(|e| e.to_string())?;
    if !(fit.fit.reduced_chi2 < 1e-10) {
        return Err(format!("intensity χ² {}", fit.fit.reduced_chi2));
    }

    let data: Vec<(f64, f64)> = (0..20)
        .map(|k| {
            let d = 0.5 + 0.3 * k as f64;
            (d, lifetime_vs_thickness(d, truth).unwrap())
        })
        .collect();
    let start = ModelParams {
        w0_rad: truth.w0_rad * 1.3,
        w0_nonrad: truth.w0_nonrad * 0.7,
        ..*truth
    };
    let free = [LifetimeParam::W0Rad, LifetimeParam::W0NonRad];
    let fit = fit_lifetime_model(&data, &free, &start, (0.0, f64::INFINITY))
        .map_err(|e| e.to_string())?;
    if !(fit.fit.reduced_chi2 < 1e-10) {
        return Err(format!("lifetime χ² {}", fit.fit.reduced_chi2));
    }
    Ok(())
}

/// Column-wise agreement of the forward- and central-difference Jacobians.
fn jacobians_agree(
    f: impl Fn(&[f64]) -> Option<Vec<f64>>,
    theta: &[f64],
) -> Result<(), TestCaseError> {
    let g = |x: &[f64]| f(x).map(DVector::from_vec);
    let f0 = g(theta).ok_or_else(|| TestCaseError::reject("model undefined"))?;
    let upper = vec![f64::INFINITY; theta.len()];
    let forward = forward_difference(g, theta, &f0, 1e-6, &upper).unwrap();
    let central = central_difference(g, theta, 1e-5).unwrap();
    for j in 0..theta.len() {
        let fc = forward.column(j);
        let cc = central.column(j);
        let scale = cc.norm().max(1e-9 * f0.norm());
        prop_assert!(
            (fc - cc).norm() <= 1e-4 * scale,
            "column {j}: forward {} vs central {}",
            fc.norm(),
            cc.norm()
        );
    }
    Ok(())
}

pub fn jacobian_check() -> Result<(), String> {
    let pts: Vec<(f64, f64)> = (0..6)
        .map(|k| (2.0 + 0.2 * k as f64, 1.5 + 0.1 * k as f64))
        .collect();
    check(
        64,
        (0.05f64..1.0, 1.0f64..1.95, -1.0f64..2.0),
        |(a, de, d_min)| jacobians_agree(hyperbola::residual_fn(&pts), &[a, de, d_min]),
    )?;

    let e = nm_to_ev(532.0).unwrap();
    let data = noisy_intensity(3);
    let base = *calibrated_preset();
    check(
        64,
        (0.7f64..1.5, 0.7f64..1.5, 0.006f64..0.02, 0.5f64..2.0),
        |(a, b, sigma, s)| {
            let f = intensity::residual_fn(&data, e, &SHAPE, &base, 1.0, 250.0);
            jacobians_agree(f, &[a, b, sigma, s])
        },
    )?;

    let taus: Vec<(f64, f64)> = (0..11)
        .map(|k| {
            let d = 0.5 + 0.25 * k as f64;
            (d, lifetime_vs_thickness(d, &base).unwrap())
        })
        .collect();
    let free = [
        LifetimeParam::W0Rad,
        LifetimeParam::W0NonRad,
        LifetimeParam::AEff,
        LifetimeParam::QuenchLength,
        LifetimeParam::WBackground,
    ];
    check(
        64,
        (
            0.5f64..2.0,
            0.5f64..2.0,
            0.5f64..2.0,
            0.5f64..2.0,
            0.0f64..0.1,
        ),
        |(wr, wnr, a, b, bg)| {
            let f = lifetime::residual_fn(&taus, &free, &base);
            let theta = [
                wr * base.w0_rad,
                wnr * base.w0_nonrad,
                a * base.a_eff,
                b * base.quench_length,
                bg,
            ];
            jacobians_agree(f, &theta)
        },
    )?;

    let edges: Vec<f64> = (0..=400).map(|k| 0.016 * k as f64).collect();
    check(
        64,
        (
            0.1f64..2.0,
            0.2f64..1.0,
            0.1f64..2.0,
            1.0f64..3.0,
            0.3f64..1.0,
        ),
        |(a1, t1, a2, t2, t0)| {
            let f = |theta: &[f64]| {
                let irf = IrfModel::gaussian(0.09, theta[4]).ok()?;
                let comps = [
                    Component::new(theta[0], theta[1]),
                    Component::new(theta[2], theta[3]),
                ];
                Some(convolved_model(&edges, &comps, 0.0, &irf))
            };
            jacobians_agree(f, &[a1, t1, a2, t2, t0])
        },
    )
}
