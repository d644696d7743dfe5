use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use dap_layer::inference::calibrate;
use dap_layer::ModelParams;

use crate::config::load_params;
use crate::error::CliResult;
use crate::manifest::Run;

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Output directory for params.json and calibration.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Parameters whose level energies and fixed fields seed the
    /// calibration; defaults when absent.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

pub fn run(args: &CalibrateArgs) -> CliResult<()> {
    let base = match &args.params {
        Some(p) => load_params(Some(p))?,
        None => ModelParams::default(),
    };
    let mut run = Run::new(&args.out)?;
    if let Some(p) = &args.params {
        run.read_input(p)?;
    }
    let report = calibrate(&base)?;
    run.write("params.json", |w| {
        writeln!(w, "{}", report.params.to_json())
    })?;
    run.write_json("calibration.json", &report)?;
    println!(
        "{}",
        serde_json::json!({
            "peaks": report.peaks,
            "max_peak_error_nm": report.max_peak_error(),
            "lifetime_at_anchor_ns": report.lifetime_at_anchor,
            "status": report.fit.status,
        })
    );
    run.finish(0)
}
