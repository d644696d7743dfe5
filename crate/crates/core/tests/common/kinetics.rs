use dap_layer::kinetics::{
    convolved_model, expected_decay, fit_decay, synth_decay, tau_mean, Acquisition, Component,
    DecayFitOptions, IrfModel, DEFAULT_BIN_WIDTH,
};
use proptest::prelude::*;

use super::{check, median, rel};

pub fn truth() -> [Component; 2] {
    [Component::new(0.7, 0.5), Component::new(0.3, 2.0)]
}

pub fn irf() -> IrfModel {
    IrfModel::gaussian(0.09, 0.5).unwrap()
}

fn edges() -> Vec<f64> {
    (0..=781).map(|k| DEFAULT_BIN_WIDTH * k as f64).collect()
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap()
}

pub fn shift_and_linearity() -> Result<(), String> {
    let edges = edges();
    check(
        128,
        (
            (0.1f64..5.0, 0.1f64..3.0, 0.1f64..5.0, 0.1f64..3.0),
            0.05f64..0.3,
            0.5f64..2.0,
            -0.4f64..0.4,
            0.1f64..10.0,
        ),
        |((a1, t1, a2, t2), fwhm, t0, delta, k)| {
            let c1 = Component::new(a1, t1);
            let c2 = Component::new(a2, t2);
            let irf = IrfModel::gaussian(fwhm, t0).unwrap();
            let moved = IrfModel::gaussian(fwhm, t0 + delta).unwrap();
            let m = convolved_model(&edges, &[c1, c2], 0.0, &irf);
            let shifted = convolved_model(&edges, &[c1, c2], 0.0, &moved);
            let bins = argmax(&shifted) as f64 - argmax(&m) as f64;
            prop_assert!(
                (bins - delta / DEFAULT_BIN_WIDTH).abs() <= 1.0,
                "moved {bins} bins for {delta} ns"
            );

            let m1 = convolved_model(&edges, &[c1], 0.0, &irf);
            let m2 = convolved_model(&edges, &[c2], 0.0, &irf);
            let scaled = convolved_model(&edges, &[Component::new(k * a1, t1)], 0.0, &irf);
            let top = m.iter().cloned().fold(0.0, f64::max);
            for i in 0..m.len() {
                prop_assert!((m[i] - m1[i] - m2[i]).abs() <= 1e-12 * top);
                prop_assert!((scaled[i] - k * m1[i]).abs() <= 1e-12 * k * top);
            }
            Ok(())
        },
    )
}

/// Median relative lifetime error of two-component fits over 20 seeds.
pub fn median_lifetime_error(peak_counts: f64, seed0: u64) -> f64 {
    let truth = truth();
    let errors = (0..20)
        .map(|s| {
            let h = synth_decay(&truth, &irf(), &Acquisition::new(peak_counts, seed0 + s)).unwrap();
            match fit_decay(&h, &irf(), &DecayFitOptions::new(2)) {
                Ok(fit) => fit
                    .components
                    .iter()
                    .zip(&truth)
                    .map(|(f, t)| rel(f.lifetime, t.lifetime))
                    .fold(0.0, f64::max),
                Err(_) => f64::INFINITY,
            }
        })
        .collect();
    median(errors)
}

pub fn consistency() -> Result<(), String> {
    let low = median_lifetime_error(1e3, 100);
    let high = median_lifetime_error(1e5, 100);
    if high < low {
        Ok(())
    } else {
        Err(format!("median error {low} at 10³ counts, {high} at 10⁵"))
    }
}

pub fn tau_mean_convergence() -> Result<(), String> {
    let truth = truth();
    let exact = tau_mean(&truth).unwrap();
    let unit = expected_decay(&truth, &irf(), &Acquisition::new(1.0, 0)).unwrap();
    let peak = 1e6 / unit.iter().sum::<f64>();
    for seed in 0..5 {
        let h = synth_decay(&truth, &irf(), &Acquisition::new(peak, seed)).unwrap();
        let fit = fit_decay(&h, &irf(), &DecayFitOptions::new(2)).map_err(|e| e.to_string())?;
        let err = rel(fit.tau_mean, exact);
        if err > 0.01 {
            return Err(format!(
                "seed {seed}: tau_mean {} vs {exact} at {} counts",
                fit.tau_mean,
                h.total()
            ));
        }
    }
    Ok(())
}

pub fn fit_determinism() -> Result<(), String> {
    check(8, any::<u64>(), |seed| {
        let h = synth_decay(&truth(), &irf(), &Acquisition::new(1e4, seed)).unwrap();
        let opts = DecayFitOptions::new(2);
        let a = fit_decay(&h, &irf(), &opts).unwrap();
        let b = fit_decay(&h, &irf(), &opts).unwrap();
        let bits = |f: &dap_layer::kinetics::MultiExpFit| {
            let mut v: Vec<u64> = f
                .components
                .iter()
                .flat_map(|c| [c.amplitude.to_bits(), c.lifetime.to_bits()])
                .collect();
            v.extend(f.covariance.iter().map(|x| x.to_bits()));
            v.extend([f.baseline.to_bits(), f.chi2.to_bits(), f.tau_mean.to_bits()]);
            v
        };
        prop_assert_eq!(bits(&a), bits(&b));
        prop_assert_eq!(a.iterations, b.iterations);
        Ok(())
    })
}
