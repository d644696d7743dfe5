//! Fluorescence decay synthesis and analysis: multiexponential decays
//! convolved with a Gaussian instrument response, Poisson histograms,
//! reconvolution fits and the mean lifetime.

mod fit;
mod histogram;
mod io;
mod model;

pub use fit::{
    compare_fits, fit_decay, DecayFitOptions, InitStrategy, ModelComparison, MultiExpFit,
    MIN_TOTAL_COUNTS,
};
pub use histogram::{expected_decay, synth_decay, Acquisition, DecayHistogram, DEFAULT_BIN_WIDTH};
pub use io::{parse_components, read_decay_csv, write_decay_csv};
pub use model::{
    convolved_bin, convolved_model, signal_purity_from_g2, tau_mean, Component, IrfModel,
};
