use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use super::model::{convolved_model, Component, IrfModel};
use crate::error::{Error, Result};

/// Default histogram bin width, ns.
pub const DEFAULT_BIN_WIDTH: f64 = 0.016;

/// Photon arrival-time histogram on uniform bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayHistogram {
    /// Left edge of the first bin, ns.
    pub start: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
    pub metadata: Vec<(String, String)>,
}

impl DecayHistogram {
    pub fn new(start: f64, bin_width: f64, counts: Vec<u64>) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite() && start.is_finite()) {
            return Err(Error::Domain(format!("bad bin width {bin_width}")));
        }
        if counts.is_empty() {
            return Err(Error::Domain("histogram has no bins".into()));
        }
        Ok(Self {
            start,
            bin_width,
            counts,
            metadata: Vec::new(),
        })
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        (0..=self.counts.len())
            .map(|k| self.start + self.bin_width * k as f64)
            .collect()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|k| self.start + self.bin_width * (k as f64 + 0.5))
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Metadata value for `key`, if present.
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Binning and timing of a synthetic measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Acquisition {
    /// Laser repetition period, ns; the histogram spans one period.
    pub repetition_period: f64,
    pub bin_width: f64,
    /// Expected counts in the brightest bin.
    pub peak_counts: f64,
    pub seed: u64,
}

impl Acquisition {
    /// 80 MHz repetition, default bins.
    pub fn new(peak_counts: f64, seed: u64) -> Self {
        Self {
            repetition_period: 12.5,
            bin_width: DEFAULT_BIN_WIDTH,
            peak_counts,
            seed,
        }
    }
}

/// Expected counts per bin, scaled so the brightest bin holds
/// `peak_counts`.
pub fn expected_decay(
    components: &[Component],
    irf: &IrfModel,
    acq: &Acquisition,
) -> Result<Vec<f64>> {
    irf.validate()?;
    if components.is_empty() {
        return Err(Error::Domain("no decay components".into()));
    }
    for c in components {
        if !(c.amplitude >= 0.0 && c.lifetime > 0.0) {
            return Err(Error::Domain(format!("bad component {c:?}")));
        }
        if c.lifetime >= 0.5 * acq.repetition_period {
            return Err(Error::WrapAround {
                tau: c.lifetime,
                period: acq.repetition_period,
            });
        }
    }
    if !(acq.bin_width > 0.0 && acq.repetition_period > acq.bin_width && acq.peak_counts > 0.0) {
        return Err(Error::Domain(
            "acquisition needs bin < period and peak > 0".into(),
        ));
    }
    let n = (acq.repetition_period / acq.bin_width).round() as usize;
    let edges: Vec<f64> = (0..=n).map(|k| acq.bin_width * k as f64).collect();
    let model = convolved_model(&edges, components, 0.0, irf);
    let top = model.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Err(Error::Degenerate("model decay is zero on every bin".into()));
    }
    let scale = acq.peak_counts / top;
    Ok(model.into_iter().map(|m| m * scale).collect())
}

/// Poisson-sampled histogram of the IRF-convolved multiexponential.
///
/// Fails with a wrap-around error when a lifetime is not below half the
/// repetition period, since tails from earlier pulses are not modelled.
pub fn synth_decay(
    components: &[Component],
    irf: &IrfModel,
    acq: &Acquisition,
) -> Result<DecayHistogram> {
    let expected = expected_decay(components, irf, acq)?;
    let mut rng = ChaCha20Rng::seed_from_u64(acq.seed);
    let counts = expected
        .iter()
        .map(|&lambda| {
            if lambda > 0.0 {
                Poisson::new(lambda)
                    .map(|d| d.sample(&mut rng) as u64)
                    .map_err(|e| Error::InvalidParams(e.to_string()))
            } else {
                Ok(0)
            }
        })
        .collect::<Result<Vec<u64>>>()?;
    let mut h = DecayHistogram::new(0.0, acq.bin_width, counts)?;
    let comps: Vec<String> = components
        .iter()
        .map(|c| format!("{}:{}", c.amplitude, c.lifetime))
        .collect();
    h.metadata = vec![
        ("irf_fwhm_ns".into(), irf.fwhm.to_string()),
        ("irf_t0_ns".into(), irf.t0.to_string()),
        (
            "repetition_period_ns".into(),
            acq.repetition_period.to_string(),
        ),
        ("peak_counts".into(), acq.peak_counts.to_string()),
        ("components".into(), comps.join(";")),
        ("seed".into(), acq.seed.to_string()),
        (
            "rng".into(),
            "ChaCha20 (rand_chacha 0.9), Poisson (rand_distr 0.5)".into(),
        ),
    ];
    Ok(h)
}
