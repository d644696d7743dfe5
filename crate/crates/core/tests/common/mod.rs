//! Invariant checks shared by the property suite and the acceptance runner.
//! Every check is deterministic: proptest runs on a fixed ChaCha stream.
#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

pub mod dataio;
pub mod ensemble;
pub mod inference;
pub mod kinetics;
pub mod photophysics;

use dap_layer::ModelParams;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub type Check = fn() -> Result<(), String>;

/// Every invariant, in module order.
pub const INVARIANTS: &[(&str, Check)] = &[
    ("photophysics/energy-law", photophysics::energy_law),
    (
        "photophysics/rate-regressions",
        photophysics::rate_regressions,
    ),
    ("photophysics/yield-bounds", photophysics::yield_bounds),
    (
        "photophysics/peak-convergence",
        photophysics::peak_convergence,
    ),
    (
        "photophysics/lifetime-monotone",
        photophysics::lifetime_monotone,
    ),
    ("photophysics/purity", photophysics::purity),
    ("ensemble/determinism", ensemble::determinism),
    ("ensemble/nearest-neighbour", ensemble::nearest_neighbour),
    ("ensemble/separation-bound", ensemble::separation_bound),
    ("ensemble/spectrum-linearity", ensemble::spectrum_linearity),
    ("ensemble/closed-form", ensemble::closed_form_agreement),
    (
        "kinetics/shift-and-linearity",
        kinetics::shift_and_linearity,
    ),
    ("kinetics/consistency", kinetics::consistency),
    (
        "kinetics/tau-mean-convergence",
        kinetics::tau_mean_convergence,
    ),
    ("kinetics/fit-determinism", kinetics::fit_determinism),
    (
        "inference/scale-equivariance",
        inference::scale_equivariance,
    ),
    (
        "inference/shuffle-invariance",
        inference::shuffle_invariance,
    ),
    ("inference/noiseless-chi2", inference::noiseless_chi2),
    ("inference/jacobian", inference::jacobian_check),
    ("dataio/ftir-prescaling", dataio::ftir_prescaling),
    ("dataio/correlate-rows", dataio::correlate_rows),
    ("dataio/peak-offset", dataio::peak_offset),
];

pub fn check<S>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Default level energies with random rate, length and window parameters.
pub fn model_params() -> impl Strategy<Value = ModelParams> {
    (
        0.3f64..3.0,
        0.3f64..3.0,
        0.01f64..10.0,
        0.01f64..100.0,
        0.002f64..0.05,
        0.5f64..2.0,
        3.0f64..12.0,
    )
        .prop_map(|(a, b, wr, wnr, sigma, d_min, eps)| ModelParams {
            a_eff: a,
            quench_length: b,
            w0_rad: wr,
            w0_nonrad: wnr,
            sigma,
            d_min,
            epsilon_r: eps,
            ..ModelParams::default()
        })
}
