use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-segment interlayer ramp: a shallow slope followed by a steep one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThicknessRamp {
    /// Thickness at `x = 0`, nm.
    pub start_nm: f64,
    /// nm per μm.
    pub shallow_slope: f64,
    /// Length of the shallow segment, μm.
    pub shallow_length_um: f64,
    /// nm per μm.
    pub steep_slope: f64,
}

impl Default for ThicknessRamp {
    /// 6 nm over 25 μm, then 30 nm over 3 μm.
    fn default() -> Self {
        Self {
            start_nm: 0.0,
            shallow_slope: 6.0 / 25.0,
            shallow_length_um: 25.0,
            steep_slope: 30.0 / 3.0,
        }
    }
}

impl ThicknessRamp {
    pub fn thickness_at(&self, x_um: f64) -> f64 {
        let shallow = x_um.min(self.shallow_length_um);
        let steep = (x_um - self.shallow_length_um).max(0.0);
        self.start_nm + self.shallow_slope * shallow + self.steep_slope * steep
    }

    /// Position where the ramp reaches `d` nm.
    pub fn position_of(&self, d: f64) -> f64 {
        let knee = self.thickness_at(self.shallow_length_um);
        if d <= knee {
            (d - self.start_nm) / self.shallow_slope
        } else {
            self.shallow_length_um + (d - knee) / self.steep_slope
        }
    }
}

/// `n` equally spaced `(x μm, d nm)` samples of `ramp` over `[0, extent]`.
pub fn sample_thickness_profile(
    ramp: &ThicknessRamp,
    extent_um: f64,
    n: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(extent_um > 0.0 && extent_um.is_finite()) || n < 2 {
        return Err(Error::Domain(format!(
            "profile needs extent > 0 and >= 2 points, got {extent_um} μm, {n}"
        )));
    }
    if !(ramp.shallow_slope >= 0.0 && ramp.steep_slope >= 0.0 && ramp.start_nm >= 0.0) {
        return Err(Error::Domain("ramp slopes and start must be >= 0".into()));
    }
    let step = extent_um / (n - 1) as f64;
    Ok((0..n)
        .map(|k| {
            let x = step * k as f64;
            (x, ramp.thickness_at(x))
        })
        .collect())
}
