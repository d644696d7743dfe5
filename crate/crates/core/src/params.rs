//! Physical constants and the parameter record of the pair photophysics model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants shared by every module. Energies in eV, lengths in nm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Photon energy-wavelength product, eV·nm.
    pub hc_ev_nm: f64,
    /// e²/(4πε₀), eV·nm.
    pub coulomb_ev_nm: f64,
    /// Carbon atoms per cm³ in diamond.
    pub diamond_atom_density: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    hc_ev_nm: 1239.84,
    coulomb_ev_nm: 1.43996,
    diamond_atom_density: 1.76e23,
};

/// Parameters of the donor-acceptor pair model.
///
/// Serialized as a flat JSON object whose keys are the conventional symbols
/// (`E_D`, `a_eff`, `W0_r`, ...). Unknown keys are rejected.
///
/// The pair transition energy is `E_g - E_D - E_A + e²/(4πε₀ε_r R)`. The
/// form `E_D - E_A + ...` that is sometimes quoted is a shorthand for the
/// same law with the band gap folded into the level energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Donor ionization energy, eV.
    #[serde(rename = "E_D")]
    pub e_donor: f64,
    /// Acceptor ionization energy, eV.
    #[serde(rename = "E_A")]
    pub e_acceptor: f64,
    /// Band gap, eV.
    #[serde(rename = "E_g")]
    pub band_gap: f64,
    #[serde(rename = "epsilon_r")]
    pub epsilon_r: f64,
    /// Wave-function overlap length, nm.
    #[serde(rename = "a_eff")]
    pub a_eff: f64,
    /// Quenching length, nm.
    #[serde(rename = "b")]
    pub quench_length: f64,
    /// Radiative rate prefactor, 1/ns.
    #[serde(rename = "W0_r")]
    pub w0_rad: f64,
    /// Non-radiative rate prefactor, 1/ns.
    #[serde(rename = "W0_nr")]
    pub w0_nonrad: f64,
    /// Distance-independent non-radiative rate, 1/ns.
    #[serde(rename = "W_bg", default)]
    pub w_background: f64,
    /// Width of the excitation window, eV.
    #[serde(rename = "sigma")]
    pub sigma: f64,
    /// Near-surface offset of the thickness-energy hyperbola, nm.
    #[serde(rename = "d_min")]
    pub d_min: f64,
    /// Red shift of the detected phonon replica, eV.
    #[serde(rename = "E_phonon")]
    pub e_phonon: f64,
    /// Standard deviation of a single emission line, eV.
    #[serde(rename = "linewidth")]
    pub linewidth: f64,
}

impl Default for ModelParams {
    /// Level energies and geometry of N-doped H-terminated diamond; the rate
    /// and window parameters are nominal starting values, not calibrated.
    fn default() -> Self {
        Self {
            e_donor: 2.2,
            e_acceptor: 1.45,
            band_gap: 5.4,
            epsilon_r: 5.7,
            a_eff: 1.0,
            quench_length: 1.0,
            w0_rad: 1.0,
            w0_nonrad: 1.0,
            w_background: 0.0,
            sigma: 0.01,
            d_min: 1.3,
            e_phonon: 0.180,
            linewidth: 0.001,
        }
    }
}

impl ModelParams {
    /// Asymptotic pair energy `E_g - E_D - E_A`, eV.
    pub fn delta_e(&self) -> f64 {
        self.band_gap - self.e_donor - self.e_acceptor
    }

    /// Coulomb coefficient `e²/(4πε₀ε_r)`, eV·nm.
    pub fn coulomb_coefficient(&self) -> f64 {
        CONSTANTS.coulomb_ev_nm / self.epsilon_r
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("E_D", self.e_donor),
            ("E_A", self.e_acceptor),
            ("E_g", self.band_gap),
            ("epsilon_r", self.epsilon_r),
            ("a_eff", self.a_eff),
            ("b", self.quench_length),
            ("W0_r", self.w0_rad),
            ("W0_nr", self.w0_nonrad),
            ("sigma", self.sigma),
            ("d_min", self.d_min),
            ("E_phonon", self.e_phonon),
            ("linewidth", self.linewidth),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        if !(self.w_background.is_finite() && self.w_background >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "W_bg must be finite and >= 0, got {}",
                self.w_background
            )));
        }
        if self.delta_e() <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "E_g ({}) must exceed E_D + E_A ({})",
                self.band_gap,
                self.e_donor + self.e_acceptor
            )));
        }
        Ok(())
    }

    /// Sets `E_A` so that `delta_e()` equals `delta_e`.
    pub fn with_delta_e(mut self, delta_e: f64) -> Self {
        self.e_acceptor = self.band_gap - self.e_donor - delta_e;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidParams(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }
}
