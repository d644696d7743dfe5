use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use dap_layer::ensemble::{
    envelope_maximum, intensity_map, polarization_curve, sample_configuration,
    sample_thickness_profile, synth_spectrum, tilt_ensemble, Band, Dipole, WavelengthGrid,
    RNG_ALGORITHM,
};
use dap_layer::photophysics::nm_to_ev;
use serde_json::json;

use crate::config::LoadedConfig;
use crate::error::CliResult;
use crate::manifest::{digest, Run};

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Ensemble PL spectrum at the configured thickness.
    Spectrum(SimulateArgs),
    /// Band-integrated intensity along the thickness ramp.
    Map(SimulateArgs),
    /// Analyzer curve of the sampled pairs or of a tilt ensemble.
    Polarization(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON run configuration (`"schema": 1`).
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

struct Prepared {
    loaded: LoadedConfig,
    seed: u64,
    metadata: Vec<(String, String)>,
    run: Run,
}

fn prepare(args: &SimulateArgs) -> CliResult<Prepared> {
    let loaded = LoadedConfig::load(&args.config)?;
    let seed = args.seed.or(loaded.config.seed).unwrap_or(0);
    let mut run = Run::new(&args.out)?;
    let config_digest = digest(&loaded.bytes);
    let mut resolved = loaded.config.clone();
    resolved.seed = Some(seed);
    resolved.params = Some(loaded.params);
    run.config = Some(serde_json::to_value(&resolved).expect("config serializes"));
    run.config_digest = Some(config_digest.clone());
    run.seed = Some(seed);
    run.rng = Some(RNG_ALGORITHM);
    let metadata = vec![
        ("seed".to_string(), seed.to_string()),
        ("config_digest".to_string(), config_digest),
        ("rng".to_string(), RNG_ALGORITHM.to_string()),
    ];
    Ok(Prepared {
        loaded,
        seed,
        metadata,
        run,
    })
}

pub fn run(command: &SimulateCommand) -> CliResult<()> {
    match command {
        SimulateCommand::Spectrum(args) => spectrum(args),
        SimulateCommand::Map(args) => map(args),
        SimulateCommand::Polarization(args) => polarization(args),
    }
}

fn spectrum(args: &SimulateArgs) -> CliResult<()> {
    let Prepared {
        loaded,
        seed,
        metadata,
        mut run,
    } = prepare(args)?;
    let c = &loaded.config;
    let e_exc = nm_to_ev(c.excitation_nm)?;
    let grid = WavelengthGrid::uniform(c.spectrum.min_nm, c.spectrum.max_nm, c.spectrum.points)?;
    let pairs = sample_configuration(&loaded.ensemble(seed))?;
    let mut spectrum = synth_spectrum(&pairs, e_exc, &loaded.params, &grid)?;
    spectrum
        .metadata
        .push(("thickness_nm".into(), c.ensemble.thickness_nm.to_string()));
    spectrum.metadata.extend(metadata);
    for w in &spectrum.warnings {
        eprintln!("warning: {w}");
    }
    run.write("spectrum.csv", |w| spectrum.write_csv(w))?;
    let envelope = envelope_maximum(&spectrum, 0.01);
    println!(
        "{}",
        json!({
            "pairs": pairs.len(),
            "integral": spectrum.integral(),
            "envelope_max_ev": envelope,
            "detuning_ev": envelope.map(|e| e_exc - e),
        })
    );
    run.finish(0)
}

fn map(args: &SimulateArgs) -> CliResult<()> {
    let Prepared {
        loaded,
        seed,
        metadata,
        mut run,
    } = prepare(args)?;
    let c = &loaded.config;
    let e_exc = nm_to_ev(c.excitation_nm)?;
    let band = Band::new(c.map.band_nm[0], c.map.band_nm[1])?;
    let positions = sample_thickness_profile(&c.map.ramp, c.map.extent_um, c.map.points)?;
    let mut profile = intensity_map(
        &positions,
        e_exc,
        &loaded.ensemble(seed),
        &band,
        c.map.realizations,
    )?;
    profile.metadata.extend(metadata);
    run.write("profile.csv", |w| profile.write_csv(w))?;
    let peak = profile.peak();
    println!(
        "{}",
        json!({
            "positions": profile.rows.len(),
            "peak_x_um": peak.map(|r| r.x_um),
            "peak_thickness_nm": peak.map(|r| r.thickness_nm),
        })
    );
    run.finish(0)
}

fn polarization(args: &SimulateArgs) -> CliResult<()> {
    let Prepared {
        loaded,
        seed,
        mut metadata,
        mut run,
    } = prepare(args)?;
    let section = &loaded.config.polarization;
    let dipoles: Vec<Dipole> = match section.tilt_ensemble {
        Some(t) => {
            metadata.push(("source".into(), "tilt_ensemble".into()));
            tilt_ensemble(
                t.emitters,
                t.mean_tilt_deg.to_radians(),
                t.spread_deg.to_radians(),
                t.azimuth_deg.to_radians(),
                seed,
            )
        }
        None => {
            metadata.push(("source".into(), "sampled_pairs".into()));
            sample_configuration(&loaded.ensemble(seed))?
                .iter()
                .map(Dipole::from)
                .collect()
        }
    };
    let n = section.angles.max(1);
    let angles: Vec<f64> = (0..n).map(|k| k as f64 * PI / n as f64).collect();
    let curve = polarization_curve(&dipoles, &angles, section.background)?;
    run.write("polarization.csv", |w| curve.write_csv(w, &metadata))?;
    println!(
        "{}",
        json!({
            "emitters": dipoles.len(),
            "contrast": curve.contrast,
            "minimum_angle_rad": curve.minimum_angle,
        })
    );
    run.finish(0)
}
