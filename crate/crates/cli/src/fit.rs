use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use dap_layer::dataio::read_table;
use dap_layer::inference::{
    fit_hyperbola, fit_intensity_model, fit_lifetime_model, FitStatus, HyperbolaOptions,
    IntensityParam, LifetimeParam,
};
use dap_layer::kinetics::{
    convolved_model, fit_decay, read_decay_csv, DecayFitOptions, InitStrategy, IrfModel,
};
use dap_layer::photophysics::{intensity_vs_thickness, lifetime_vs_thickness, nm_to_ev};
use serde::Serialize;

use crate::config::load_params;
use crate::error::{CliError, CliResult, EXIT_NOT_CONVERGED};
use crate::manifest::Run;

#[derive(Debug, Subcommand)]
pub enum FitCommand {
    /// Thickness-energy hyperbola through (energy, thickness) points.
    Hyperbola(HyperbolaArgs),
    /// Intensity-versus-thickness model.
    Intensity(IntensityArgs),
    /// Lifetime-versus-thickness model.
    Lifetime(LifetimeArgs),
    /// Multiexponential reconvolution fit of a decay histogram.
    Decay(DecayArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Input CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum XUnit {
    /// Pair energy in eV.
    Ev,
    /// Excitation wavelength in nm.
    Nm,
}

#[derive(Debug, Args)]
pub struct HyperbolaArgs {
    #[command(flatten)]
    pub common: Common,
    /// Unit of the first column.
    #[arg(long, value_enum, default_value = "ev")]
    pub x_unit: XUnit,
    /// Model parameters JSON supplying E_g and E_D for E_A; calibrated
    /// preset by default.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IntensityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Excitation wavelength, nm.
    #[arg(long)]
    pub excitation_nm: f64,
    /// Comma-separated free parameters among a_eff, b, sigma, rate_ratio,
    /// amplitude.
    #[arg(long, default_value = "a_eff,b,sigma")]
    pub free: String,
    /// Starting model parameters JSON; calibrated preset by default.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LifetimeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated free parameters among W0_r, W0_nr, a_eff, b, W_bg.
    #[arg(long, default_value = "W0_r,W0_nr,W_bg")]
    pub free: String,
    /// Thickness window `lo:hi` in nm.
    #[arg(long, default_value = "0:inf")]
    pub window: String,
    /// Starting model parameters JSON; calibrated preset by default.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[command(flatten)]
    pub common: Common,
    /// Instrument response `gaussian:FWHM[@T0]` in ns; T0 is fitted when
    /// omitted.
    #[arg(long)]
    pub irf: IrfSpec,
    /// Number of exponential components (1 or 2).
    #[arg(long = "n", default_value_t = 2)]
    pub n_components: usize,
    /// Comma-separated starting lifetimes, ns.
    #[arg(long)]
    pub lifetimes: Option<String>,
    /// Iteration limit of the least-squares solver.
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
}

/// Parsed `--irf` value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrfSpec {
    pub fwhm: f64,
    pub t0: Option<f64>,
}

impl FromStr for IrfSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let body = s
            .strip_prefix("gaussian:")
            .ok_or_else(|| format!("expected gaussian:FWHM[@T0], got {s:?}"))?;
        let (fwhm, t0) = match body.split_once('@') {
            Some((f, t)) => (f, Some(t)),
            None => (body, None),
        };
        let number = |v: &str| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("bad number {v:?} in {s:?}"))
        };
        let fwhm = number(fwhm)?;
        if fwhm <= 0.0 {
            return Err(format!("FWHM must be > 0 in {s:?}"));
        }
        Ok(Self {
            fwhm,
            t0: t0.map(number).transpose()?,
        })
    }
}

pub fn run(command: &FitCommand) -> CliResult<()> {
    match command {
        FitCommand::Hyperbola(a) => hyperbola(a),
        FitCommand::Intensity(a) => intensity(a),
        FitCommand::Lifetime(a) => lifetime(a),
        FitCommand::Decay(a) => decay(a),
    }
}

type Points = (Vec<(f64, f64)>, Option<Vec<f64>>);

/// `(x, y)` rows and optional weights from an `x,y[,weight]` file.
fn read_points(run: &mut Run, path: &Path) -> CliResult<Points> {
    let bytes = run.read_input(path)?;
    let table = read_table(bytes.as_slice(), 2, 3).map_err(|e| CliError::input(path, e))?;
    let points = table.rows.iter().map(|r| (r[0], r[1])).collect();
    let weighted = table.rows.iter().any(|r| r.len() == 3);
    if weighted && table.rows.iter().any(|r| r.len() != 3) {
        return Err(CliError::config(format!(
            "{}: weight column present on some rows only",
            path.display()
        )));
    }
    let weights = weighted.then(|| table.rows.iter().map(|r| r[2]).collect());
    Ok((points, weights))
}

fn reject_weights(path: &Path, weights: &Option<Vec<f64>>) -> CliResult<()> {
    match weights {
        Some(_) => Err(CliError::config(format!(
            "{}: this fit does not take a weight column",
            path.display()
        ))),
        None => Ok(()),
    }
}

fn parse_list<T>(text: &str, parse: impl Fn(&str) -> Option<T>) -> CliResult<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(s).ok_or_else(|| CliError::config(format!("unknown parameter {s:?}"))))
        .collect()
}

fn write_residuals(
    run: &mut Run,
    header: &str,
    rows: impl Iterator<Item = [f64; 4]>,
) -> CliResult<()> {
    use std::io::Write;
    run.write("residuals.csv", |w| {
        writeln!(w, "# dap-layer v1")?;
        writeln!(w, "{header}")?;
        for r in rows {
            writeln!(w, "{:.10e},{:.10e},{:.10e},{:.10e}", r[0], r[1], r[2], r[3])?;
        }
        Ok(())
    })
}

/// Writes the manifest and maps an iteration-limited fit to exit 4 after
/// every output is on disk.
fn finish(run: Run, status: FitStatus) -> CliResult<()> {
    if status == FitStatus::MaxIter {
        run.finish(EXIT_NOT_CONVERGED)?;
        return Err(CliError::not_converged(
            "fit stopped at the iteration limit; diagnostics written to fit.json",
        ));
    }
    if status == FitStatus::Singular {
        eprintln!("warning: covariance is singular; uncertainties are not meaningful");
    }
    run.finish(0)
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    model: &'a str,
    #[serde(flatten)]
    result: &'a T,
}

fn hyperbola(args: &HyperbolaArgs) -> CliResult<()> {
    let params = load_params(args.params.as_deref())?;
    let mut run = Run::new(&args.common.out)?;
    let path = &args.common.input;
    let (raw, weights) = read_points(&mut run, path)?;
    reject_weights(path, &weights)?;
    let points = match args.x_unit {
        XUnit::Ev => raw,
        XUnit::Nm => raw
            .iter()
            .map(|&(w, d)| Ok((nm_to_ev(w)?, d)))
            .collect::<dap_layer::Result<Vec<_>>>()
            .map_err(|e| CliError::input(path, e))?,
    };
    let fit = fit_hyperbola(&points, &HyperbolaOptions::default(), &params)?;
    run.write_json(
        "fit.json",
        &Tagged {
            model: "hyperbola",
            result: &fit,
        },
    )?;
    write_residuals(
        &mut run,
        "energy_ev,thickness_nm,model_nm,residual_nm",
        points
            .iter()
            .zip(&fit.fit.residuals)
            .map(|(&(e, d), r)| [e, d, d + r, *r]),
    )?;
    println!(
        "{}",
        serde_json::json!({
            "A": fit.a,
            "delta_e": fit.delta_e,
            "d_min": fit.d_min,
            "E_A": fit.e_acceptor,
            "uncertainties": fit.fit.uncertainties,
            "status": fit.fit.status,
        })
    );
    finish(run, fit.fit.status)
}

fn intensity(args: &IntensityArgs) -> CliResult<()> {
    let p0 = load_params(args.params.as_deref())?;
    let free = parse_list(&args.free, IntensityParam::parse)?;
    let e_exc = nm_to_ev(args.excitation_nm)?;
    let mut run = Run::new(&args.common.out)?;
    let (data, weights) = read_points(&mut run, &args.common.input)?;
    let fit = fit_intensity_model(&data, e_exc, &free, &p0, weights.as_deref())?;
    run.write_json(
        "fit.json",
        &Tagged {
            model: "intensity",
            result: &fit,
        },
    )?;
    let model = |d: f64| intensity_vs_thickness(d, e_exc, &fit.params).map(|i| fit.amplitude * i);
    let rows = data
        .iter()
        .map(|&(d, y)| Ok([d, y, model(d)?, model(d)? - y]))
        .collect::<dap_layer::Result<Vec<_>>>()?;
    write_residuals(
        &mut run,
        "thickness_nm,intensity,model,residual",
        rows.into_iter(),
    )?;
    if !fit.identifiable {
        eprintln!("warning: parameters are not identifiable from these data");
    }
    println!(
        "{}",
        serde_json::json!({
            "values": fit.fit.values,
            "names": fit.fit.names,
            "peak_thickness_nm": fit.peak_thickness,
            "status": fit.fit.status,
        })
    );
    finish(run, fit.fit.status)
}

fn parse_window(text: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::config(format!("window must be lo:hi, got {text:?}"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn lifetime(args: &LifetimeArgs) -> CliResult<()> {
    let p0 = load_params(args.params.as_deref())?;
    let free = parse_list(&args.free, LifetimeParam::parse)?;
    let window = parse_window(&args.window)?;
    let mut run = Run::new(&args.common.out)?;
    let path = &args.common.input;
    let (data, weights) = read_points(&mut run, path)?;
    reject_weights(path, &weights)?;
    let fit = fit_lifetime_model(&data, &free, &p0, window)?;
    run.write_json(
        "fit.json",
        &Tagged {
            model: "lifetime",
            result: &fit,
        },
    )?;
    let rows = data
        .iter()
        .map(|&(d, tau)| {
            let m = lifetime_vs_thickness(d, &fit.params)?;
            Ok([d, tau, m, m - tau])
        })
        .collect::<dap_layer::Result<Vec<_>>>()?;
    write_residuals(
        &mut run,
        "thickness_nm,tau_ns,model_ns,residual_ns",
        rows.into_iter(),
    )?;
    println!(
        "{}",
        serde_json::json!({
            "values": fit.fit.values,
            "names": fit.fit.names,
            "points_used": fit.points_used,
            "status": fit.fit.status,
        })
    );
    finish(run, fit.fit.status)
}

fn decay(args: &DecayArgs) -> CliResult<()> {
    let mut run = Run::new(&args.common.out)?;
    let path = &args.common.input;
    let bytes = run.read_input(path)?;
    let h = read_decay_csv(bytes.as_slice()).map_err(|e| CliError::input(path, e))?;
    let centers = h.bin_centers();
    let t0 = match args.irf.t0 {
        Some(t0) => t0,
        None => {
            // start the fitted IRF centre at the brightest bin
            let k = (0..h.counts.len())
                .max_by_key(|&k| h.counts[k])
                .unwrap_or(0);
            centers[k]
        }
    };
    let irf = IrfModel::gaussian(args.irf.fwhm, t0)?;
    let mut options = DecayFitOptions::new(args.n_components);
    options.free_t0 = args.irf.t0.is_none();
    options.lsq.max_iterations = args.max_iterations;
    if let Some(list) = &args.lifetimes {
        options.init = InitStrategy::Lifetimes(parse_list(list, |s| s.parse().ok())?);
    }
    let fit = fit_decay(&h, &irf, &options)?;
    run.write_json(
        "fit.json",
        &Tagged {
            model: "decay",
            result: &fit,
        },
    )?;
    let fitted_irf = IrfModel { t0: fit.t0, ..irf };
    let model = convolved_model(&h.bin_edges(), &fit.components, fit.baseline, &fitted_irf);
    write_residuals(
        &mut run,
        "time_ns,counts,model,residual",
        centers
            .iter()
            .zip(&h.counts)
            .zip(&model)
            .map(|((&t, &c), &m)| [t, c as f64, m, c as f64 - m]),
    )?;
    println!(
        "{}",
        serde_json::json!({
            "components": fit.components,
            "tau_mean": fit.tau_mean,
            "t0": fit.t0,
            "reduced_chi2": fit.reduced_chi2,
            "status": fit.status,
        })
    );
    finish(run, fit.status)
}
