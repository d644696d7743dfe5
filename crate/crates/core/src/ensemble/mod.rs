//! Monte Carlo donor and acceptor placement under an interlayer, and the
//! observables synthesized from the sampled pairs: spectra, band-integrated
//! intensity maps and polarization curves.
//!
//! Geometry: donors fill the slab `z ∈ [-substrate_depth, 0]`, acceptors lie
//! on the plane `z = thickness`, and the lateral cell is a square torus of
//! the configured area. Distances use the minimum image, so a pair's stored
//! acceptor position is the image nearest to its donor.

mod config;
mod map;
mod polarization;
mod profile;
mod sampling;
mod spectrum;

pub use config::{EnsembleConfig, DEFAULT_MAX_OBJECTS};
pub use map::{band_intensity, intensity_map, Band, Profile, ProfileRow};
pub use polarization::{
    contrast, minimum_angle, polarization_curve, tilt_ensemble, Dipole, PolarizationCurve,
};
pub use profile::{sample_thickness_profile, ThicknessRamp};
pub use sampling::{
    sample_configuration, sample_realization, stream_index, DapPair, EnsembleRealization,
    RealizationCounts, RNG_ALGORITHM,
};
pub use spectrum::{envelope_maximum, line_amplitude, synth_spectrum, Spectrum, WavelengthGrid};

/// Writes `# dap-layer v1`, the `# key=value` lines, the column header and
/// the rows of a CSV table.
pub(crate) fn write_table<W: std::io::Write>(
    mut out: W,
    metadata: &[(String, String)],
    header: &str,
    rows: impl Iterator<Item = Vec<f64>>,
) -> std::io::Result<()> {
    writeln!(out, "# dap-layer v1")?;
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "{header}")?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.10e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
