//! Versioned JSON run configuration of the `simulate` commands.

use std::path::Path;

use dap_layer::ensemble::{EnsembleConfig, ThicknessRamp, DEFAULT_MAX_OBJECTS};
use dap_layer::inference::calibrated_preset;
use dap_layer::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    /// Overridden by `--seed`.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Calibrated preset when absent.
    #[serde(default)]
    pub params: Option<ModelParams>,
    #[serde(default = "default_excitation")]
    pub excitation_nm: f64,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub map: MapSection,
    #[serde(default)]
    pub polarization: PolarizationSection,
}

fn default_excitation() -> f64 {
    532.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub donor_density_cm3: f64,
    pub acceptor_density_cm2: f64,
    pub slab_area_nm2: f64,
    pub substrate_depth_nm: f64,
    /// Interlayer thickness of `spectrum` and `polarization` runs.
    pub thickness_nm: f64,
    pub max_objects: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        let e = EnsembleConfig::default();
        Self {
            donor_density_cm3: e.donor_density_cm3,
            acceptor_density_cm2: e.acceptor_density_cm2,
            slab_area_nm2: e.slab_area_nm2,
            substrate_depth_nm: e.substrate_depth_nm,
            thickness_nm: e.thickness_nm,
            max_objects: DEFAULT_MAX_OBJECTS,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub min_nm: f64,
    pub max_nm: f64,
    pub points: usize,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            min_nm: 560.0,
            max_nm: 700.0,
            points: 1401,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSection {
    pub ramp: ThicknessRamp,
    pub extent_um: f64,
    pub points: usize,
    pub band_nm: [f64; 2],
    pub realizations: usize,
}

impl Default for MapSection {
    /// The default ramp from 0 to 8 nm.
    fn default() -> Self {
        Self {
            ramp: ThicknessRamp::default(),
            extent_um: 25.2,
            points: 127,
            band_nm: [545.0, 650.0],
            realizations: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolarizationSection {
    /// Analyzer angles evenly spaced over [0, π).
    pub angles: usize,
    pub background: f64,
    /// Synthetic tilt ensemble instead of the sampled pairs.
    pub tilt_ensemble: Option<TiltEnsemble>,
}

impl Default for PolarizationSection {
    fn default() -> Self {
        Self {
            angles: 180,
            background: 0.0,
            tilt_ensemble: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiltEnsemble {
    pub emitters: usize,
    pub mean_tilt_deg: f64,
    pub spread_deg: f64,
    pub azimuth_deg: f64,
}

/// Parsed configuration together with the bytes it was read from.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub bytes: Vec<u8>,
    pub params: ModelParams,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if config.schema != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "{}: unsupported schema {} (expected {SCHEMA_VERSION})",
                path.display(),
                config.schema
            )));
        }
        let params = match config.params {
            Some(p) => p,
            None => *calibrated_preset(),
        };
        params.validate().map_err(|e| CliError::input(path, e))?;
        if !(config.excitation_nm > 0.0 && config.excitation_nm.is_finite()) {
            return Err(CliError::config(format!(
                "{}: excitation_nm must be > 0",
                path.display()
            )));
        }
        Ok(Self {
            config,
            bytes,
            params,
        })
    }

    /// Ensemble at the configured thickness.
    pub fn ensemble(&self, seed: u64) -> EnsembleConfig {
        let e = &self.config.ensemble;
        EnsembleConfig {
            donor_density_cm3: e.donor_density_cm3,
            acceptor_density_cm2: e.acceptor_density_cm2,
            slab_area_nm2: e.slab_area_nm2,
            substrate_depth_nm: e.substrate_depth_nm,
            thickness_nm: e.thickness_nm,
            seed,
            params: self.params,
            max_objects: e.max_objects,
        }
    }
}

/// `ModelParams` JSON file, or the calibrated preset when `path` is absent.
pub fn load_params(path: Option<&Path>) -> CliResult<ModelParams> {
    match path {
        None => Ok(*calibrated_preset()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            ModelParams::from_json(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
        }
    }
}
