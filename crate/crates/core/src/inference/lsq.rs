//! Bounded Levenberg-Marquardt least squares with Marquardt diagonal
//! scaling, finite-difference Jacobians and covariance estimates.
//!
//! The objective is `½ Σ wᵢ rᵢ(p)²`. Bounds are enforced by projecting every
//! trial point onto the box. A residual function may return `None` (or
//! non-finite values) to mark a parameter vector as infeasible; such trial
//! steps are rejected and the damping is increased.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

type ResidualFn<'a> = dyn Fn(&[f64]) -> Option<Vec<f64>> + 'a;
type JacobianFn<'a> = dyn Fn(&[f64]) -> Option<DMatrix<f64>> + 'a;

/// A nonlinear least-squares problem.
pub struct FitProblem<'a> {
    names: Vec<String>,
    initial: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    weights: Option<Vec<f64>>,
    residuals: Box<ResidualFn<'a>>,
    jacobian: Option<Box<JacobianFn<'a>>>,
}

impl<'a> FitProblem<'a> {
    pub fn new<S, F>(names: &[S], initial: &[f64], residuals: F) -> Self
    where
        S: AsRef<str>,
        F: Fn(&[f64]) -> Option<Vec<f64>> + 'a,
    {
        let n = initial.len();
        Self {
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
            initial: initial.to_vec(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            weights: None,
            residuals: Box::new(residuals),
            jacobian: None,
        }
    }

    pub fn with_bounds(mut self, lower: &[f64], upper: &[f64]) -> Self {
        self.lower = lower.to_vec();
        self.upper = upper.to_vec();
        self
    }

    /// Per-residual weights `wᵢ` (inverse variances).
    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    /// Analytic Jacobian of the unweighted residuals.
    pub fn with_jacobian<J>(mut self, jacobian: J) -> Self
    where
        J: Fn(&[f64]) -> Option<DMatrix<f64>> + 'a,
    {
        self.jacobian = Some(Box::new(jacobian));
        self
    }

    pub fn n_params(&self) -> usize {
        self.initial.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn check(&self) -> Result<()> {
        let n = self.initial.len();
        if n == 0 {
            return Err(Error::FitFailure("no free parameters".into()));
        }
        if self.names.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::FitFailure(
                "names, bounds and initial values differ in length".into(),
            ));
        }
        for i in 0..n {
            let (lo, x, hi) = (self.lower[i], self.initial[i], self.upper[i]);
            if !(lo <= x && x <= hi) || !x.is_finite() {
                return Err(Error::FitFailure(format!(
                    "parameter {} = {x} violates bounds [{lo}, {hi}]",
                    self.names[i]
                )));
            }
        }
        Ok(())
    }

    /// Weighted residuals `√wᵢ · rᵢ`, or `None` when infeasible.
    fn weighted(&self, p: &[f64]) -> Option<DVector<f64>> {
        let r = (self.residuals)(p)?;
        if r.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut r = DVector::from_vec(r);
        if let Some(w) = &self.weights {
            if w.len() != r.len() {
                return None;
            }
            for (ri, wi) in r.iter_mut().zip(w) {
                *ri *= wi.sqrt();
            }
        }
        Some(r)
    }

    fn weighted_jacobian(&self, p: &[f64], r0: &DVector<f64>, step: f64) -> Option<DMatrix<f64>> {
        match &self.jacobian {
            Some(jac) => {
                let mut j = jac(p)?;
                if j.nrows() != r0.len() || j.ncols() != p.len() {
                    return None;
                }
                if let Some(w) = &self.weights {
                    for (i, wi) in w.iter().enumerate() {
                        let s = wi.sqrt();
                        j.row_mut(i).scale_mut(s);
                    }
                }
                Some(j)
            }
            None => forward_difference(|x| self.weighted(x), p, r0, step, &self.upper),
        }
    }
}

/// Forward-difference Jacobian with relative step `step·|pⱼ|` (or `step`
/// when `pⱼ = 0`); steps that would cross `upper` are taken backwards.
pub fn forward_difference<F>(
    f: F,
    p: &[f64],
    f0: &DVector<f64>,
    step: f64,
    upper: &[f64],
) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Option<DVector<f64>>,
{
    let m = f0.len();
    let n = p.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut x = p.to_vec();
    for j in 0..n {
        let mut h = step * p[j].abs();
        if h == 0.0 {
            h = step;
        }
        if p[j] + h > upper[j] {
            h = -h;
        }
        x[j] = p[j] + h;
        let h_actual = x[j] - p[j];
        let fj = f(&x)?;
        x[j] = p[j];
        for i in 0..m {
            jac[(i, j)] = (fj[i] - f0[i]) / h_actual;
        }
    }
    Some(jac)
}

/// Central-difference Jacobian, `O(h²)` accurate; used to verify the
/// forward-difference path.
pub fn central_difference<F>(f: F, p: &[f64], step: f64) -> Option<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Option<DVector<f64>>,
{
    let f0 = f(p)?;
    let (m, n) = (f0.len(), p.len());
    let mut jac = DMatrix::zeros(m, n);
    let mut x = p.to_vec();
    for j in 0..n {
        let mut h = step * p[j].abs();
        if h == 0.0 {
            h = step;
        }
        x[j] = p[j] + h;
        let plus = f(&x)?;
        x[j] = p[j] - h;
        let minus = f(&x)?;
        x[j] = p[j];
        for i in 0..m {
            jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Some(jac)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub cost_tolerance: f64,
    /// Stop when the scaled gradient (cosine between residual vector and
    /// every Jacobian column) falls below this value.
    pub gradient_tolerance: f64,
    /// Stop when the step is smaller than this relative to the parameters.
    pub step_tolerance: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
    pub initial_damping: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            cost_tolerance: 1e-10,
            gradient_tolerance: 1e-10,
            step_tolerance: 1e-14,
            fd_step: 1e-6,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitStatus {
    Converged,
    MaxIter,
    Singular,
}

/// Estimates, uncertainties and diagnostics of a least-squares fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// 1σ, from the chi-square-scaled inverse normal matrix.
    pub uncertainties: Vec<f64>,
    /// Row-major, `n × n`.
    pub covariance: Vec<f64>,
    /// `Σ wᵢ rᵢ²` at the solution.
    pub chi2: f64,
    pub dof: usize,
    /// `chi2 / dof` (`chi2` itself when there are no degrees of freedom).
    pub reduced_chi2: f64,
    pub status: FitStatus,
    pub iterations: usize,
    pub evaluations: usize,
    /// Unweighted residuals at the solution.
    pub residuals: Vec<f64>,
    pub at_bound: Vec<bool>,
    /// Ratio of extreme singular values of the weighted normal matrix.
    pub condition_number: f64,
    /// Cost `½ Σ wᵢ rᵢ²` after the initial point and every accepted step.
    pub cost_trace: Vec<f64>,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.uncertainties[i])
    }

    pub fn covariance_matrix(&self) -> DMatrix<f64> {
        let n = self.values.len();
        DMatrix::from_row_slice(n, n, &self.covariance)
    }

    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }
}

/// Minimizes the weighted sum of squares of `problem`.
///
/// Fails only when the residuals are infeasible at the initial point or the
/// problem is malformed; numerical trouble is reported through
/// [`FitResult::status`].
pub fn least_squares(problem: &FitProblem<'_>, options: &FitOptions) -> Result<FitResult> {
    problem.check()?;
    let n = problem.n_params();
    let mut p = problem.initial.clone();
    let mut evaluations = 1;
    let mut r = problem
        .weighted(&p)
        .ok_or_else(|| Error::FitFailure("residuals not finite at the initial point".into()))?;
    if r.len() < n {
        return Err(Error::FitFailure(format!(
            "{} residuals for {n} parameters",
            r.len()
        )));
    }
    let mut cost = 0.5 * r.norm_squared();
    let mut trace = vec![cost];
    let mut lambda = options.initial_damping;
    let mut status = FitStatus::MaxIter;
    let mut iterations = 0;
    let mut jac: Option<DMatrix<f64>> = None;

    if cost == 0.0 {
        status = FitStatus::Converged;
    } else {
        'outer: while iterations < options.max_iterations {
            let j = problem
                .weighted_jacobian(&p, &r, options.fd_step)
                .ok_or_else(|| Error::FitFailure("Jacobian evaluation failed".into()))?;
            evaluations += if problem.jacobian.is_some() { 0 } else { n };
            let mut g = j.tr_mul(&r);
            let mut a = j.tr_mul(&j);
            // parameters held at a bound by the descent direction stay fixed
            // for this iteration
            let active: Vec<bool> = (0..n)
                .map(|k| {
                    let tol = 1e-12 * (1.0 + p[k].abs());
                    (p[k] <= problem.lower[k] + tol && g[k] > 0.0)
                        || (p[k] >= problem.upper[k] - tol && g[k] < 0.0)
                })
                .collect();
            for k in (0..n).filter(|&k| active[k]) {
                g[k] = 0.0;
                for i in 0..n {
                    a[(k, i)] = 0.0;
                    a[(i, k)] = 0.0;
                }
                a[(k, k)] = 1.0;
            }

            if scaled_gradient(&j, &g, &r) <= options.gradient_tolerance {
                status = FitStatus::Converged;
                jac = Some(j);
                break;
            }
            iterations += 1;

            let max_diag = a.diagonal().max();
            let diag: Vec<f64> = a
                .diagonal()
                .iter()
                .map(|&d| d.max(1e-12 * max_diag).max(f64::MIN_POSITIVE))
                .collect();

            loop {
                let mut m = a.clone();
                for k in 0..n {
                    m[(k, k)] += lambda * diag[k];
                }
                let Some(chol) = m.cholesky() else {
                    lambda *= 10.0;
                    if lambda > 1e20 {
                        status = FitStatus::Singular;
                        jac = Some(j);
                        break 'outer;
                    }
                    continue;
                };
                let delta = chol.solve(&(-&g));
                let trial: Vec<f64> = (0..n)
                    .map(|k| (p[k] + delta[k]).clamp(problem.lower[k], problem.upper[k]))
                    .collect();
                let step_norm = trial
                    .iter()
                    .zip(&p)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let p_norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                if step_norm <= options.step_tolerance * (p_norm + options.step_tolerance) {
                    status = FitStatus::Converged;
                    jac = Some(j);
                    break 'outer;
                }

                evaluations += 1;
                let accepted = problem.weighted(&trial).and_then(|rt| {
                    let ct = 0.5 * rt.norm_squared();
                    (ct < cost).then_some((rt, ct))
                });
                match accepted {
                    Some((rt, ct)) => {
                        let relative = (cost - ct) / cost;
                        p = trial;
                        r = rt;
                        cost = ct;
                        trace.push(cost);
                        lambda = (lambda / 10.0).max(1e-15);
                        if relative <= options.cost_tolerance || cost == 0.0 {
                            status = FitStatus::Converged;
                            break 'outer;
                        }
                        break;
                    }
                    None => {
                        lambda *= 10.0;
                        if lambda > 1e16 {
                            // no descent direction left at this resolution
                            status = FitStatus::Converged;
                            jac = Some(j);
                            break 'outer;
                        }
                    }
                }
            }
        }
    }

    let j = match jac {
        Some(j) => j,
        None => problem
            .weighted_jacobian(&p, &r, options.fd_step)
            .ok_or_else(|| Error::FitFailure("Jacobian evaluation failed".into()))?,
    };
    let m = r.len();
    let chi2 = 2.0 * cost;
    let dof = m - n;
    let reduced_chi2 = if dof > 0 { chi2 / dof as f64 } else { chi2 };

    // (JᵀJ)⁺ = V S⁻² Vᵀ from the SVD of J, which avoids squaring its
    // condition number before the decomposition
    let svd = j.clone().svd(false, true);
    let singular = &svd.singular_values;
    let s_max = singular.max();
    let s_min = singular.min();
    let condition_number = if s_min > 0.0 {
        (s_max / s_min).powi(2)
    } else {
        f64::INFINITY
    };
    if !(s_max > 0.0) || condition_number > 1e16 {
        status = FitStatus::Singular;
    }
    let v_t = svd.v_t.expect("requested");
    let mut inverse = DMatrix::zeros(n, n);
    for (k, &s) in singular.iter().enumerate() {
        if s > s_max * 1e-8 {
            let v = v_t.row(k).transpose();
            inverse += (&v * v.transpose()) / (s * s);
        }
    }
    let covariance = inverse * reduced_chi2;
    let uncertainties = (0..n).map(|k| covariance[(k, k)].max(0.0).sqrt()).collect();
    let at_bound = (0..n)
        .map(|k| {
            let tol = 1e-12 * (1.0 + p[k].abs());
            (p[k] - problem.lower[k]).abs() <= tol || (problem.upper[k] - p[k]).abs() <= tol
        })
        .collect();
    let residuals = (problem.residuals)(&p).unwrap_or_default();

    Ok(FitResult {
        names: problem.names.clone(),
        values: p,
        uncertainties,
        covariance: covariance.transpose().iter().copied().collect(),
        chi2,
        dof,
        reduced_chi2,
        status,
        iterations,
        evaluations,
        residuals,
        at_bound,
        condition_number,
        cost_trace: trace,
    })
}

fn scaled_gradient(j: &DMatrix<f64>, g: &DVector<f64>, r: &DVector<f64>) -> f64 {
    let r_norm = r.norm();
    if r_norm == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for (k, col) in j.column_iter().enumerate() {
        let c = col.norm();
        if c > 0.0 {
            worst = worst.max(g[k].abs() / (c * r_norm));
        }
    }
    worst
}
