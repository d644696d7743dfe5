use std::path::PathBuf;

use clap::{Args, Subcommand};
use dap_layer::dataio::{
    nitrogen_concentration, normalize_two_phonon, read_ftir_csv, FtirWindows, TWO_PHONON_TARGET,
};

use crate::error::{CliError, CliResult};
use crate::manifest::Run;

#[derive(Debug, Subcommand)]
pub enum FtirCommand {
    /// Nitrogen concentration from the 1135 cm⁻¹ band.
    Nitrogen(NitrogenArgs),
}

#[derive(Debug, Args)]
pub struct NitrogenArgs {
    /// FTIR CSV `wavenumber_cm1,absorbance`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Normalized two-phonon band height.
    #[arg(long, default_value_t = TWO_PHONON_TARGET)]
    pub target: f64,
    /// Also write nitrogen.json and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(command: &FtirCommand) -> CliResult<()> {
    match command {
        FtirCommand::Nitrogen(args) => nitrogen(args),
    }
}

fn nitrogen(args: &NitrogenArgs) -> CliResult<()> {
    let bytes = std::fs::read(&args.input)
        .map_err(|e| CliError::config(format!("{}: {e}", args.input.display())))?;
    let raw = read_ftir_csv(bytes.as_slice()).map_err(|e| CliError::input(&args.input, e))?;
    let windows = FtirWindows::default();
    let normalized = normalize_two_phonon(&raw, args.target, &windows)?;
    let result = nitrogen_concentration(&normalized, &windows)?;
    let text = serde_json::to_string(&result).expect("result serializes");
    println!("{text}");
    if let Some(out) = &args.out {
        let mut run = Run::new(out)?;
        run.read_input(&args.input)?;
        run.write_json("nitrogen.json", &result)?;
        run.finish(0)?;
    }
    Ok(())
}
