use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Largest expected number of donors or acceptors in one realization.
pub const DEFAULT_MAX_OBJECTS: usize = 20_000_000;

/// Geometry and densities of one Monte Carlo realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Donor volume density, cm⁻³.
    pub donor_density_cm3: f64,
    /// Acceptor areal density on the surface plane, cm⁻².
    pub acceptor_density_cm2: f64,
    /// Lateral area of the square cell, nm².
    pub slab_area_nm2: f64,
    /// Depth of the donor slab below the interlayer, nm.
    pub substrate_depth_nm: f64,
    /// Interlayer thickness, nm.
    pub thickness_nm: f64,
    pub seed: u64,
    pub params: ModelParams,
    #[serde(default = "default_cap")]
    pub max_objects: usize,
}

fn default_cap() -> usize {
    DEFAULT_MAX_OBJECTS
}

impl Default for EnsembleConfig {
    /// Nitrogen-rich substrate (2·10¹⁹ cm⁻³), 10¹³ cm⁻² acceptors, a
    /// 100 nm × 100 nm cell, 20 nm of donors and a 1.7 nm interlayer.
    fn default() -> Self {
        Self {
            donor_density_cm3: 2.0e19,
            acceptor_density_cm2: 1.0e13,
            slab_area_nm2: 1.0e4,
            substrate_depth_nm: 20.0,
            thickness_nm: 1.7,
            seed: 0,
            params: ModelParams::default(),
            max_objects: DEFAULT_MAX_OBJECTS,
        }
    }
}

impl EnsembleConfig {
    /// Donors per nm³.
    pub fn donor_density_nm3(&self) -> f64 {
        self.donor_density_cm3 * 1e-21
    }

    /// Acceptors per nm².
    pub fn acceptor_density_nm2(&self) -> f64 {
        self.acceptor_density_cm2 * 1e-14
    }

    /// Side of the square cell, nm.
    pub fn side_nm(&self) -> f64 {
        self.slab_area_nm2.sqrt()
    }

    pub fn expected_donors(&self) -> f64 {
        self.donor_density_nm3() * self.slab_area_nm2 * self.substrate_depth_nm
    }

    pub fn expected_acceptors(&self) -> f64 {
        self.acceptor_density_nm2() * self.slab_area_nm2
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("donor_density_cm3", self.donor_density_cm3),
            ("acceptor_density_cm2", self.acceptor_density_cm2),
            ("thickness_nm", self.thickness_nm),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("slab_area_nm2", self.slab_area_nm2),
            ("substrate_depth_nm", self.substrate_depth_nm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        self.params.validate()?;
        for (what, expected) in [
            ("donors", self.expected_donors()),
            ("acceptors", self.expected_acceptors()),
        ] {
            if !expected.is_finite() || expected > self.max_objects as f64 {
                return Err(Error::Resource {
                    what,
                    expected,
                    cap: self.max_objects,
                });
            }
        }
        Ok(())
    }
}
