//! Height and PL line profiles: alignment onto a common grid and the peak
//! thickness of a measured intensity profile.

use std::io::Read;

use serde::Serialize;

use super::table::read_table;
use crate::error::{Error, Result};

/// One sample of a line profile: position, μm, and value.
pub type ProfilePoint = (f64, f64);

/// Thickness convention for `correlate_profiles`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelatedRow {
    pub x_um: f64,
    pub thickness_nm: f64,
    /// One value per PL channel, in the order the channels were given.
    pub intensity: Vec<f64>,
}

/// Rows on the height grid; `x_um` strictly increasing and thickness ≥ 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelatedProfile {
    pub rows: Vec<CorrelatedRow>,
    pub channels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakEstimate {
    pub thickness_nm: f64,
    pub uncertainty_nm: f64,
    pub bins_used: usize,
}

fn check_axis(points: &[ProfilePoint], what: &str) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::Domain(format!("{what} profile needs >= 2 samples")));
    }
    if points.iter().any(|(x, v)| !x.is_finite() || !v.is_finite()) {
        return Err(Error::Domain(format!(
            "{what} profile has non-finite samples"
        )));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Domain(format!(
            "{what} positions must be strictly increasing"
        )));
    }
    Ok(())
}

/// Linear interpolation at `x`, which must lie within the sample range.
fn interpolate(points: &[ProfilePoint], x: f64) -> f64 {
    let k = points.partition_point(|p| p.0 < x);
    if k == 0 {
        return points[0].1;
    }
    let (x0, y0) = points[k - 1];
    let (x1, y1) = points[k];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Interpolates every PL channel onto the height grid and converts height
/// to thickness as `sign·(h − reference)`.
///
/// Height samples outside the range covered by all channels are dropped.
pub fn correlate_profiles(
    height: &[ProfilePoint],
    channels: &[Vec<ProfilePoint>],
    reference: f64,
    sign: Sign,
) -> Result<CorrelatedProfile> {
    check_axis(height, "height")?;
    if channels.is_empty() {
        return Err(Error::Domain("no PL channels".into()));
    }
    for c in channels {
        check_axis(c, "PL")?;
    }
    if !reference.is_finite() {
        return Err(Error::Domain("reference level must be finite".into()));
    }
    let lo = channels.iter().map(|c| c[0].0).fold(f64::MIN, f64::max);
    let hi = channels
        .iter()
        .map(|c| c[c.len() - 1].0)
        .fold(f64::MAX, f64::min);
    let mut rows = Vec::new();
    for &(x, h) in height.iter().filter(|(x, _)| *x >= lo && *x <= hi) {
        let thickness_nm = sign.factor() * (h - reference);
        if thickness_nm < 0.0 {
            return Err(Error::Domain(format!(
                "negative thickness {thickness_nm} nm at x = {x} μm; check the reference and sign"
            )));
        }
        rows.push(CorrelatedRow {
            x_um: x,
            thickness_nm,
            intensity: channels.iter().map(|c| interpolate(c, x)).collect(),
        });
    }
    if rows.is_empty() {
        return Err(Error::Domain(
            "height and PL profiles do not overlap".into(),
        ));
    }
    Ok(CorrelatedProfile {
        rows,
        channels: channels.len(),
    })
}

/// Vertex of the parabola through three points.
fn parabola_vertex(p: [(f64, f64); 3]) -> Option<f64> {
    let [(x0, y0), (x1, y1), (x2, y2)] = p;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if !(curvature < 0.0) {
        return None;
    }
    // y = y0 + d01 (x − x0) + c (x − x0)(x − x1)
    Some(0.5 * (x0 + x1) - d01 / (2.0 * curvature))
}

/// Peak thickness of one channel from bin-averaged intensity.
///
/// Bins are centred on multiples of `bin_width`. The vertex of the parabola
/// through the brightest bin and its populated neighbours is returned with
/// an uncertainty of half a bin.
pub fn extract_peak_thickness(
    cp: &CorrelatedProfile,
    channel: usize,
    bin_width: f64,
) -> Result<PeakEstimate> {
    if channel >= cp.channels {
        return Err(Error::Domain(format!(
            "channel {channel} out of range (profile has {})",
            cp.channels
        )));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::Domain(format!(
            "bin width must be > 0, got {bin_width}"
        )));
    }
    let mut bins: std::collections::BTreeMap<i64, (f64, usize)> = Default::default();
    for r in &cp.rows {
        let e = bins
            .entry((r.thickness_nm / bin_width).round() as i64)
            .or_insert((0.0, 0));
        e.0 += r.intensity[channel];
        e.1 += 1;
    }
    if bins.len() < 5 {
        return Err(Error::Domain(format!(
            "{} thickness bins populated, need at least 5",
            bins.len()
        )));
    }
    let avg: Vec<(f64, f64)> = bins
        .iter()
        .map(|(k, (s, n))| (*k as f64 * bin_width, s / *n as f64))
        .collect();
    let top = avg
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if top == 0 || top == avg.len() - 1 {
        return Err(Error::EdgePeak {
            thickness: avg[top].0,
        });
    }
    let vertex = parabola_vertex([avg[top - 1], avg[top], avg[top + 1]])
        .ok_or_else(|| Error::Degenerate("flat intensity around the maximum".into()))?;
    Ok(PeakEstimate {
        thickness_nm: vertex,
        uncertainty_nm: 0.5 * bin_width,
        bins_used: avg.len(),
    })
}

/// Reads an `x_um,value` profile.
pub fn read_profile_csv<R: Read>(input: R) -> Result<Vec<ProfilePoint>> {
    let table = read_table(input, 2, 2)?;
    table.require_increasing(0)?;
    Ok(table.rows.iter().map(|r| (r[0], r[1])).collect())
}
