use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use super::histogram::DecayHistogram;
use super::model::{convolved_bin, tau_mean, Component, IrfModel};
use crate::error::{Error, Result};
use crate::inference::lsq::{least_squares, FitOptions, FitProblem, FitStatus};
use crate::inference::IDENTIFIABILITY_LIMIT;

/// Smallest total count accepted by [`fit_decay`].
pub const MIN_TOTAL_COUNTS: u64 = 1000;

/// How the starting point of [`fit_decay`] is chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum InitStrategy {
    /// Log-linear fit of the tail, residual peeling for the fast component,
    /// then linear least squares for amplitudes and baseline.
    TailPeel,
    /// Explicit starting lifetimes (ns), one per component; amplitudes and
    /// baseline are still solved linearly.
    Lifetimes(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFitOptions {
    pub n_components: usize,
    pub init: InitStrategy,
    /// Fit the IRF center instead of holding it at `irf.t0`.
    pub free_t0: bool,
    pub lsq: FitOptions,
}

impl DecayFitOptions {
    pub fn new(n_components: usize) -> Self {
        Self {
            n_components,
            init: InitStrategy::TailPeel,
            free_t0: false,
            lsq: FitOptions {
                max_iterations: 200,
                ..Default::default()
            },
        }
    }
}

/// Reconvolution fit of a decay histogram.
#[derive(Debug, Clone, Serialize)]
pub struct MultiExpFit {
    /// Sorted by ascending lifetime.
    pub components: Vec<Component>,
    /// 1σ of `(amplitude, lifetime)` per component, same order.
    pub component_uncertainties: Vec<(f64, f64)>,
    /// Counts per bin.
    pub baseline: f64,
    pub baseline_uncertainty: f64,
    pub t0: f64,
    pub tau_mean: f64,
    /// Σ (c - m)² / max(c, 1).
    pub chi2: f64,
    pub dof: usize,
    pub reduced_chi2: f64,
    /// Parameter names in covariance order: `a1, tau1, ..., baseline[, t0]`.
    pub names: Vec<String>,
    /// Row-major.
    pub covariance: Vec<f64>,
    pub condition_number: f64,
    /// Ill-conditioned covariance, typical of degenerate lifetimes.
    pub degenerate: bool,
    pub at_bound: Vec<bool>,
    pub status: FitStatus,
    pub iterations: usize,
    /// Data minus model per bin.
    pub residuals: Vec<f64>,
}

impl MultiExpFit {
    pub fn converged(&self) -> bool {
        self.status != FitStatus::MaxIter
    }
}

struct Layout {
    n: usize,
    free_t0: bool,
    irf: IrfModel,
}

impl Layout {
    fn components(&self, theta: &[f64]) -> Vec<Component> {
        (0..self.n)
            .map(|i| Component::new(theta[2 * i], theta[2 * i + 1]))
            .collect()
    }

    fn baseline(&self, theta: &[f64]) -> f64 {
        theta[2 * self.n]
    }

    fn irf(&self, theta: &[f64]) -> IrfModel {
        if self.free_t0 {
            IrfModel {
                t0: theta[2 * self.n + 1],
                ..self.irf
            }
        } else {
            self.irf
        }
    }

    fn model(&self, edges: &[f64], theta: &[f64]) -> Vec<f64> {
        let irf = self.irf(theta);
        let comps = self.components(theta);
        let b = self.baseline(theta);
        edges
            .windows(2)
            .map(|w| {
                b + comps
                    .iter()
                    .map(|c| c.amplitude * convolved_bin(w[0], w[1], c.lifetime, &irf))
                    .sum::<f64>()
            })
            .collect()
    }

    /// Model Jacobian: exact in the amplitudes and the baseline, central
    /// differences of the bin integral in each lifetime and in `t0`.
    fn jacobian(&self, edges: &[f64], theta: &[f64]) -> DMatrix<f64> {
        const REL: f64 = 1e-4;
        let irf = self.irf(theta);
        let comps = self.components(theta);
        let m = edges.len() - 1;
        let mut j = DMatrix::zeros(m, theta.len());
        let dt = REL * irf.sigma();
        let early = IrfModel {
            t0: irf.t0 - dt,
            ..irf
        };
        let late = IrfModel {
            t0: irf.t0 + dt,
            ..irf
        };
        for k in 0..m {
            let (t1, t2) = (edges[k], edges[k + 1]);
            for (i, c) in comps.iter().enumerate() {
                let h = REL * c.lifetime;
                j[(k, 2 * i)] = convolved_bin(t1, t2, c.lifetime, &irf);
                j[(k, 2 * i + 1)] = c.amplitude
                    * (convolved_bin(t1, t2, c.lifetime + h, &irf)
                        - convolved_bin(t1, t2, c.lifetime - h, &irf))
                    / (2.0 * h);
                if self.free_t0 {
                    j[(k, 2 * self.n + 1)] += c.amplitude
                        * (convolved_bin(t1, t2, c.lifetime, &late)
                            - convolved_bin(t1, t2, c.lifetime, &early))
                        / (2.0 * dt);
                }
            }
            j[(k, 2 * self.n)] = 1.0;
        }
        j
    }
}

/// Weighted least-squares reconvolution fit with Poisson weights
/// `1 / max(count, 1)`.
///
/// Running out of iterations is not an error: the result carries
/// `status = MaxIter` with every diagnostic filled in.
pub fn fit_decay(
    h: &DecayHistogram,
    irf: &IrfModel,
    options: &DecayFitOptions,
) -> Result<MultiExpFit> {
    irf.validate()?;
    let n = options.n_components;
    if !(1..=2).contains(&n) {
        return Err(Error::Domain(format!(
            "n_components must be 1 or 2, got {n}"
        )));
    }
    let total = h.total();
    if total < MIN_TOTAL_COUNTS {
        return Err(Error::FitFailure(format!(
            "{total} counts; at least {MIN_TOTAL_COUNTS} are required"
        )));
    }
    let edges = h.bin_edges();
    let counts: Vec<f64> = h.counts.iter().map(|&c| c as f64).collect();
    let window = edges[edges.len() - 1] - edges[0];
    let tau_lo = 0.1 * h.bin_width;
    let tau_hi = window;

    let taus = match &options.init {
        InitStrategy::TailPeel => tail_peel(h, irf, n),
        InitStrategy::Lifetimes(t) if t.len() == n => t.clone(),
        InitStrategy::Lifetimes(t) => {
            return Err(Error::Domain(format!(
                "{} starting lifetimes for {n} components",
                t.len()
            )))
        }
    };
    let taus: Vec<f64> = taus
        .iter()
        .map(|t| t.clamp(tau_lo * 2.0, tau_hi * 0.5))
        .collect();
    let (amps, baseline) = linear_amplitudes(&edges, &counts, &taus, irf);

    let mut names = Vec::new();
    let mut init = Vec::new();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for i in 0..n {
        names.push(format!("a{}", i + 1));
        init.push(amps[i]);
        lower.push(0.0);
        upper.push(f64::INFINITY);
        names.push(format!("tau{}", i + 1));
        init.push(taus[i]);
        lower.push(tau_lo);
        upper.push(tau_hi);
    }
    names.push("baseline".into());
    init.push(baseline);
    lower.push(0.0);
    upper.push(f64::INFINITY);
    if options.free_t0 {
        names.push("t0".into());
        init.push(irf.t0.clamp(edges[0], edges[edges.len() - 1]));
        lower.push(edges[0]);
        upper.push(edges[edges.len() - 1]);
    }
    let layout = Layout {
        n,
        free_t0: options.free_t0,
        irf: *irf,
    };
    let residuals = |theta: &[f64]| -> Option<Vec<f64>> {
        Some(
            layout
                .model(&edges, theta)
                .iter()
                .zip(&counts)
                .map(|(m, c)| m - c)
                .collect(),
        )
    };
    let weights: Vec<f64> = counts.iter().map(|c| 1.0 / c.max(1.0)).collect();
    let problem = FitProblem::new(&names, &init, residuals)
        .with_bounds(&lower, &upper)
        .with_weights(weights)
        .with_jacobian(|theta: &[f64]| Some(layout.jacobian(&edges, theta)));
    let fit = least_squares(&problem, &options.lsq)?;

    // sort components by lifetime, permuting the covariance to match
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| fit.values[2 * i + 1].total_cmp(&fit.values[2 * j + 1]));
    let mut perm: Vec<usize> = order.iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect();
    perm.extend(2 * n..fit.values.len());
    let k = perm.len();
    let cov = fit.covariance_matrix();
    let mut covariance = Vec::with_capacity(k * k);
    for &r in &perm {
        for &c in &perm {
            covariance.push(cov[(r, c)]);
        }
    }
    let values: Vec<f64> = perm.iter().map(|&i| fit.values[i]).collect();
    let sd: Vec<f64> = perm.iter().map(|&i| fit.uncertainties[i]).collect();
    let components = layout.components(&values);
    let tau_mean = tau_mean(&components).unwrap_or(f64::NAN);
    Ok(MultiExpFit {
        component_uncertainties: (0..n).map(|i| (sd[2 * i], sd[2 * i + 1])).collect(),
        components,
        baseline: values[2 * n],
        baseline_uncertainty: sd[2 * n],
        t0: layout.irf(&values).t0,
        tau_mean,
        chi2: fit.chi2,
        dof: fit.dof,
        reduced_chi2: fit.reduced_chi2,
        names: fit.names.clone(),
        covariance,
        condition_number: fit.condition_number,
        degenerate: !(fit.condition_number < IDENTIFIABILITY_LIMIT),
        at_bound: perm.iter().map(|&i| fit.at_bound[i]).collect(),
        status: fit.status,
        iterations: fit.iterations,
        residuals: fit.residuals.iter().map(|r| -r).collect(),
    })
}

/// Deterministic starting lifetimes: a weighted log-linear fit of the late
/// tail gives the slow lifetime; for two components the same fit on the
/// early residual after removing the slow exponential gives the fast one.
fn tail_peel(h: &DecayHistogram, irf: &IrfModel, n: usize) -> Vec<f64> {
    let t = h.bin_centers();
    let c: Vec<f64> = h.counts.iter().map(|&v| v as f64).collect();
    let k_peak = c
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let t_start = t[k_peak] + 3.0 * irf.sigma();
    let peak = c[k_peak];
    let floor = (peak * 1e-3).max(5.0);
    let usable: Vec<usize> = (0..t.len())
        .filter(|&k| t[k] >= t_start && c[k] >= floor)
        .collect();
    let fallback = 0.25 * (t[t.len() - 1] - t[0]) / n as f64;
    if usable.len() < 4 {
        return (0..n).map(|i| fallback * (i + 1) as f64).collect();
    }
    let tail: &[usize] = if n == 1 {
        &usable
    } else {
        &usable[usable.len() / 2..]
    };
    let Some((slope, intercept)) = log_linear(tail.iter().map(|&k| (t[k], c[k]))) else {
        return (0..n).map(|i| fallback * (i + 1) as f64).collect();
    };
    let tau_slow = if slope < 0.0 { -1.0 / slope } else { fallback };
    if n == 1 {
        return vec![tau_slow];
    }
    let early: Vec<(f64, f64)> = usable[..usable.len() / 2]
        .iter()
        .map(|&k| (t[k], c[k] - (intercept + slope * t[k]).exp()))
        .filter(|(_, r)| *r >= floor)
        .collect();
    let tau_fast = match log_linear(early.into_iter()) {
        Some((s, _)) if s < 0.0 && -1.0 / s < tau_slow => -1.0 / s,
        _ => 0.25 * tau_slow,
    };
    vec![tau_fast, tau_slow]
}

/// Weighted (by count) linear regression of `ln(c)` on `t`.
fn log_linear(points: impl Iterator<Item = (f64, f64)>) -> Option<(f64, f64)> {
    let (mut sw, mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut m = 0;
    for (t, c) in points {
        if c <= 0.0 {
            continue;
        }
        let (w, y) = (c, c.ln());
        sw += w;
        st += w * t;
        sy += w * y;
        stt += w * t * t;
        sty += w * t * y;
        m += 1;
    }
    let det = sw * stt - st * st;
    if m < 3 || det.abs() < 1e-300 {
        return None;
    }
    let slope = (sw * sty - st * sy) / det;
    Some((slope, (sy - slope * st) / sw))
}

/// Amplitudes and baseline for fixed lifetimes by weighted linear least
/// squares; negative solutions are clipped to zero.
fn linear_amplitudes(
    edges: &[f64],
    counts: &[f64],
    taus: &[f64],
    irf: &IrfModel,
) -> (Vec<f64>, f64) {
    let m = counts.len();
    let n = taus.len();
    let mut a = DMatrix::zeros(m, n + 1);
    let mut y = DVector::zeros(m);
    for k in 0..m {
        let w = 1.0 / counts[k].max(1.0).sqrt();
        for (i, &tau) in taus.iter().enumerate() {
            a[(k, i)] = w * convolved_bin(edges[k], edges[k + 1], tau, irf);
        }
        a[(k, n)] = w;
        y[k] = w * counts[k];
    }
    let solution = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(n + 1));
    let amps = (0..n).map(|i| solution[i].max(1e-6)).collect();
    (amps, solution[n].max(0.0))
}

/// Extra-sum-of-squares F test of a one- against a two-component fit of
/// the same histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelComparison {
    pub f_statistic: f64,
    /// Probability of an F at least this large if one component suffices.
    pub p_value: f64,
}

impl ModelComparison {
    /// `true` when the second component is not justified at `alpha`.
    pub fn one_component_suffices(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

pub fn compare_fits(one: &MultiExpFit, two: &MultiExpFit) -> Result<ModelComparison> {
    let extra = two.names.len().saturating_sub(one.names.len());
    if extra == 0 || two.dof == 0 {
        return Err(Error::Domain(
            "fits must be nested with the larger one second".into(),
        ));
    }
    let f = ((one.chi2 - two.chi2).max(0.0) / extra as f64) / (two.chi2 / two.dof as f64);
    let dist = FisherSnedecor::new(extra as f64, two.dof as f64)
        .map_err(|e| Error::Domain(e.to_string()))?;
    Ok(ModelComparison {
        f_statistic: f,
        p_value: 1.0 - dist.cdf(f),
    })
}
