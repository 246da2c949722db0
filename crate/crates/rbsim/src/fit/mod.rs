//! Weighted nonlinear least-squares fits for the analysis layer.
//!
//! Every model ships an analytic Jacobian and a data-driven initial guess
//! (log-linearization for decays, the integral method for exponentials, an
//! oversampled periodogram for oscillations), so fits converge without
//! user-supplied starting points. Parameter errors come from the inverse
//! normal matrix; when no error bars are supplied the fit falls back to unit
//! weights and rescales the covariance by the reduced chi-square, recording a
//! `unit_weights` flag.

mod lm;

use crate::rng::Stream;
use crate::{Error, Result};
use lm::{LmProblem, Transform};
use nalgebra::{Matrix3, Vector3};
use std::f64::consts::TAU;

/// The closed-form models the fitter knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `y = 1/2 + (1/2)(1 - d_if)(1 - d)^x` — benchmarking fidelity decay.
    RbDecay,
    /// `y = c + a exp(-(x - x0)^2 / (2 w^2))`.
    Gaussian,
    /// `y = c + a exp(-x / tau)`.
    Exponential,
    /// `y = c + a cos(2π f x + phi)`.
    Sinusoid,
    /// `y = c + a cos(2π f x + phi) exp(-x / tau)`.
    DampedSinusoid,
    /// `y = c + a cos(2π f x + phi) exp(-x^2 / (2 tau^2))`.
    GaussianDampedSinusoid,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::RbDecay => "rb",
            ModelKind::Gaussian => "gaussian",
            ModelKind::Exponential => "exponential",
            ModelKind::Sinusoid => "sinusoid",
            ModelKind::DampedSinusoid => "damped_sinusoid",
            ModelKind::GaussianDampedSinusoid => "gaussian_damped_sinusoid",
        }
    }

    pub fn from_name(name: &str) -> Option<ModelKind> {
        match name {
            "rb" | "rb_decay" => Some(ModelKind::RbDecay),
            "gaussian" => Some(ModelKind::Gaussian),
            "exponential" => Some(ModelKind::Exponential),
            "sinusoid" => Some(ModelKind::Sinusoid),
            "damped_sinusoid" => Some(ModelKind::DampedSinusoid),
            "gaussian_damped_sinusoid" => Some(ModelKind::GaussianDampedSinusoid),
            _ => None,
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            ModelKind::RbDecay => &["d_if", "d"],
            ModelKind::Gaussian => &["c", "a", "x0", "w"],
            ModelKind::Exponential => &["c", "a", "tau"],
            ModelKind::Sinusoid => &["c", "a", "freq", "phi"],
            ModelKind::DampedSinusoid | ModelKind::GaussianDampedSinusoid => {
                &["c", "a", "freq", "phi", "tau"]
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.param_names().len()
    }
}

/// Knobs for the iterative solver.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { max_iterations: 200 }
    }
}

/// Converged fit: best-fit parameters with their one-sigma errors and the
/// goodness-of-fit bookkeeping.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FitReport {
    pub model: String,
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub param_errors: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub n_points: usize,
    pub iterations: usize,
    pub flags: Vec<String>,
}

impl FitReport {
    pub fn param(&self, name: &str) -> Option<f64> {
        let i = self.param_names.iter().position(|n| n == name)?;
        Some(self.params[i])
    }

    pub fn param_error(&self, name: &str) -> Option<f64> {
        let i = self.param_names.iter().position(|n| n == name)?;
        Some(self.param_errors[i])
    }
}

/// Fidelity-decay fit with the decay parameters exposed by name.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DecayFit {
    pub report: FitReport,
}

impl DecayFit {
    /// Leading infidelity (sequence-independent loss).
    pub fn d_if(&self) -> f64 {
        self.report.params[0]
    }

    /// Per-step depolarization probability.
    pub fn d(&self) -> f64 {
        self.report.params[1]
    }

    /// Average error per step, `d / 2`.
    pub fn e_g(&self) -> f64 {
        self.d() / 2.0
    }

    pub fn d_if_err(&self) -> f64 {
        self.report.param_errors[0]
    }

    pub fn d_err(&self) -> f64 {
        self.report.param_errors[1]
    }

    pub fn e_g_err(&self) -> f64 {
        self.d_err() / 2.0
    }
}

pub fn fit_rb_decay(lengths: &[f64], y: &[f64], sem: Option<&[f64]>) -> Result<DecayFit> {
    fit_model(ModelKind::RbDecay, lengths, y, sem, &FitOptions::default())
        .map(|report| DecayFit { report })
}

pub fn fit_gaussian(x: &[f64], y: &[f64], sem: Option<&[f64]>) -> Result<FitReport> {
    fit_model(ModelKind::Gaussian, x, y, sem, &FitOptions::default())
}

pub fn fit_exponential(x: &[f64], y: &[f64], sem: Option<&[f64]>) -> Result<FitReport> {
    fit_model(ModelKind::Exponential, x, y, sem, &FitOptions::default())
}

pub fn fit_sinusoid(x: &[f64], y: &[f64], sem: Option<&[f64]>) -> Result<FitReport> {
    fit_model(ModelKind::Sinusoid, x, y, sem, &FitOptions::default())
}

pub fn fit_damped_sinusoid(x: &[f64], y: &[f64], sem: Option<&[f64]>) -> Result<FitReport> {
    fit_model(ModelKind::DampedSinusoid, x, y, sem, &FitOptions::default())
}

pub fn fit_gaussian_damped_sinusoid(
    x: &[f64],
    y: &[f64],
    sem: Option<&[f64]>,
) -> Result<FitReport> {
    fit_model(ModelKind::GaussianDampedSinusoid, x, y, sem, &FitOptions::default())
}

/// Fits the model named on the command line; see [`ModelKind::from_name`].
pub fn fit_by_name(name: &str, x: &[f64], y: &[f64], sem: Option<&[f64]>) -> Result<FitReport> {
    let kind = ModelKind::from_name(name).ok_or_else(|| {
        Error::invalid_input(format!(
            "unknown fit model '{name}' (expected one of: rb, gaussian, exponential, \
             sinusoid, damped_sinusoid, gaussian_damped_sinusoid)"
        ))
    })?;
    fit_model(kind, x, y, sem, &FitOptions::default())
}

pub fn fit_model(
    kind: ModelKind,
    x: &[f64],
    y: &[f64],
    sem: Option<&[f64]>,
    options: &FitOptions,
) -> Result<FitReport> {
    validate_inputs(kind, x, y, sem)?;
    let (weights, unit_weights) = resolve_weights(x.len(), sem);
    match kind {
        ModelKind::RbDecay => run_fit(
            kind,
            x,
            y,
            weights,
            unit_weights,
            options,
            vec![Transform::Logit { lo: -0.5, hi: 1.0 }, Transform::Logit { lo: -0.5, hi: 1.0 }],
            guess_rb(x, y),
            rb_value,
            rb_jacobian,
        ),
        ModelKind::Gaussian => run_fit(
            kind,
            x,
            y,
            weights,
            unit_weights,
            options,
            vec![Transform::Identity, Transform::Identity, Transform::Identity, Transform::Log],
            guess_gaussian(x, y),
            gaussian_value,
            gaussian_jacobian,
        ),
        ModelKind::Exponential => run_fit(
            kind,
            x,
            y,
            weights,
            unit_weights,
            options,
            vec![Transform::Identity, Transform::Identity, Transform::Log],
            guess_exponential(x, y)?,
            exponential_value,
            exponential_jacobian,
        ),
        ModelKind::Sinusoid => run_fit(
            kind,
            x,
            y,
            weights,
            unit_weights,
            options,
            vec![Transform::Identity, Transform::Identity, Transform::Log, Transform::Identity],
            guess_sinusoid(x, y)?,
            sinusoid_value,
            sinusoid_jacobian,
        ),
        ModelKind::DampedSinusoid => run_fit(
            kind,
            x,
            y,
            weights,
            unit_weights,
            options,
            vec![
                Transform::Identity,
                Transform::Identity,
                Transform::Log,
                Transform::Identity,
                Transform::Log,
            ],
            guess_damped_sinusoid(x, y, false)?,
            damped_sinusoid_value,
            damped_sinusoid_jacobian,
        ),
        ModelKind::GaussianDampedSinusoid => run_fit(
            kind,
            x,
            y,
            weights,
            unit_weights,
            options,
            vec![
                Transform::Identity,
                Transform::Identity,
                Transform::Log,
                Transform::Identity,
                Transform::Log,
            ],
            guess_damped_sinusoid(x, y, true)?,
            gaussian_damped_sinusoid_value,
            gaussian_damped_sinusoid_jacobian,
        ),
    }
}

/// Percentile bootstrap interval over per-length ensembles of sequence
/// fidelities: each resample redraws every length's values with replacement,
/// refits the decay, and the 2.5/97.5 percentiles of the refit parameters
/// form the interval.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BootstrapCi {
    pub d_if_lo: f64,
    pub d_if_hi: f64,
    pub d_lo: f64,
    pub d_hi: f64,
    pub e_g_lo: f64,
    pub e_g_hi: f64,
    pub resamples: usize,
}

pub fn bootstrap_decay_ci(
    lengths: &[f64],
    per_length: &[Vec<f64>],
    resamples: usize,
    seed: u64,
) -> Result<BootstrapCi> {
    if lengths.len() != per_length.len() {
        return Err(Error::invalid_input(format!(
            "bootstrap: {} lengths but {} value groups",
            lengths.len(),
            per_length.len()
        )));
    }
    if per_length.iter().any(|v| v.is_empty()) {
        return Err(Error::invalid_input("bootstrap: empty value group"));
    }
    if resamples < 8 {
        return Err(Error::invalid_input("bootstrap: need at least 8 resamples"));
    }

    let mut d_if_draws = Vec::with_capacity(resamples);
    let mut d_draws = Vec::with_capacity(resamples);
    let mut means = vec![0.0; lengths.len()];
    let mut sems = vec![0.0; lengths.len()];
    for r in 0..resamples {
        let mut rng = Stream::new(seed, "bootstrap", &[r as u64]);
        for (slot, values) in per_length.iter().enumerate() {
            let n = values.len();
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let v = values[rng.index(n as u64) as usize];
                sum += v;
                sum_sq += v * v;
            }
            let mean = sum / n as f64;
            means[slot] = mean;
            sems[slot] = if n > 1 {
                (((sum_sq - n as f64 * mean * mean) / (n as f64 - 1.0)).max(0.0) / n as f64).sqrt()
            } else {
                0.0
            };
        }
        if let Ok(fit) = fit_rb_decay(lengths, &means, Some(&sems)) {
            d_if_draws.push(fit.d_if());
            d_draws.push(fit.d());
        }
    }

    let needed = (resamples / 2).max(2);
    if d_draws.len() < needed {
        return Err(Error::invalid_input(format!(
            "bootstrap: only {}/{} resample fits converged",
            d_draws.len(),
            resamples
        )));
    }
    let (d_if_lo, d_if_hi) = percentile_interval(&mut d_if_draws);
    let (d_lo, d_hi) = percentile_interval(&mut d_draws);
    Ok(BootstrapCi {
        d_if_lo,
        d_if_hi,
        d_lo,
        d_hi,
        e_g_lo: d_lo / 2.0,
        e_g_hi: d_hi / 2.0,
        resamples: d_draws.len(),
    })
}

fn percentile_interval(draws: &mut [f64]) -> (f64, f64) {
    draws.sort_by(|a, b| a.partial_cmp(b).expect("finite fit parameters"));
    let m = draws.len();
    let at = |q: f64| draws[((m - 1) as f64 * q).round() as usize];
    (at(0.025), at(0.975))
}

fn validate_inputs(kind: ModelKind, x: &[f64], y: &[f64], sem: Option<&[f64]>) -> Result<()> {
    let name = kind.name();
    if x.len() != y.len() {
        return Err(Error::invalid_input(format!(
            "{name}: {} x values but {} y values",
            x.len(),
            y.len()
        )));
    }
    if let Some(s) = sem {
        if s.len() != y.len() {
            return Err(Error::invalid_input(format!(
                "{name}: {} error bars for {} points",
                s.len(),
                y.len()
            )));
        }
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid_input(format!("{name}: non-finite data point")));
    }
    let needed = kind.param_count() + 1;
    if x.len() < needed {
        return Err(Error::invalid_input(format!(
            "{name}: {} points cannot constrain {} parameters (need at least {needed})",
            x.len(),
            kind.param_count()
        )));
    }
    Ok(())
}

/// Error bars become `1/sem^2` weights; absent or degenerate bars (any zero,
/// negative, or non-finite entry) fall back to unit weights.
fn resolve_weights(n: usize, sem: Option<&[f64]>) -> (Vec<f64>, bool) {
    match sem {
        Some(s) if s.iter().all(|v| v.is_finite() && *v > 0.0) => {
            (s.iter().map(|v| 1.0 / (v * v)).collect(), false)
        }
        _ => (vec![1.0; n], true),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_fit<F, J>(
    kind: ModelKind,
    x: &[f64],
    y: &[f64],
    weights: Vec<f64>,
    unit_weights: bool,
    options: &FitOptions,
    transforms: Vec<Transform>,
    guess: Vec<f64>,
    value: F,
    jacobian: J,
) -> Result<FitReport>
where
    F: Fn(f64, &[f64]) -> f64,
    J: Fn(f64, &[f64], &mut [f64]),
{
    let problem = LmProblem {
        model: kind.name(),
        x,
        y,
        weights,
        unit_weights,
        transforms,
        guess,
        max_iterations: options.max_iterations,
    };
    let solution = lm::solve(&problem, value, jacobian)?;
    Ok(FitReport {
        model: kind.name().to_string(),
        param_names: kind.param_names().iter().map(|s| s.to_string()).collect(),
        params: solution.params,
        param_errors: solution.param_errors,
        covariance: solution.covariance,
        chi2: solution.chi2,
        dof: solution.dof,
        n_points: x.len(),
        iterations: solution.iterations,
        flags: solution.flags,
    })
}

// --- model values and Jacobians (external parameters) ---

fn rb_value(l: f64, p: &[f64]) -> f64 {
    0.5 + 0.5 * (1.0 - p[0]) * (1.0 - p[1]).powf(l)
}

fn rb_jacobian(l: f64, p: &[f64], out: &mut [f64]) {
    let base = 1.0 - p[1];
    out[0] = -0.5 * base.powf(l);
    out[1] = -0.5 * (1.0 - p[0]) * l * base.powf(l - 1.0);
}

fn gaussian_value(x: f64, p: &[f64]) -> f64 {
    let (c, a, x0, w) = (p[0], p[1], p[2], p[3]);
    c + a * (-(x - x0) * (x - x0) / (2.0 * w * w)).exp()
}

fn gaussian_jacobian(x: f64, p: &[f64], out: &mut [f64]) {
    let (a, x0, w) = (p[1], p[2], p[3]);
    let u = x - x0;
    let e = (-u * u / (2.0 * w * w)).exp();
    out[0] = 1.0;
    out[1] = e;
    out[2] = a * e * u / (w * w);
    out[3] = a * e * u * u / (w * w * w);
}

fn exponential_value(x: f64, p: &[f64]) -> f64 {
    p[0] + p[1] * (-x / p[2]).exp()
}

fn exponential_jacobian(x: f64, p: &[f64], out: &mut [f64]) {
    let (a, tau) = (p[1], p[2]);
    let e = (-x / tau).exp();
    out[0] = 1.0;
    out[1] = e;
    out[2] = a * e * x / (tau * tau);
}

fn sinusoid_value(x: f64, p: &[f64]) -> f64 {
    p[0] + p[1] * (TAU * p[2] * x + p[3]).cos()
}

fn sinusoid_jacobian(x: f64, p: &[f64], out: &mut [f64]) {
    let theta = TAU * p[2] * x + p[3];
    let (sin, cos) = theta.sin_cos();
    out[0] = 1.0;
    out[1] = cos;
    out[2] = -p[1] * sin * TAU * x;
    out[3] = -p[1] * sin;
}

fn damped_sinusoid_value(x: f64, p: &[f64]) -> f64 {
    let theta = TAU * p[2] * x + p[3];
    p[0] + p[1] * theta.cos() * (-x / p[4]).exp()
}

fn damped_sinusoid_jacobian(x: f64, p: &[f64], out: &mut [f64]) {
    let (a, tau) = (p[1], p[4]);
    let theta = TAU * p[2] * x + p[3];
    let (sin, cos) = theta.sin_cos();
    let e = (-x / tau).exp();
    out[0] = 1.0;
    out[1] = cos * e;
    out[2] = -a * sin * e * TAU * x;
    out[3] = -a * sin * e;
    out[4] = a * cos * e * x / (tau * tau);
}

fn gaussian_damped_sinusoid_value(x: f64, p: &[f64]) -> f64 {
    let theta = TAU * p[2] * x + p[3];
    p[0] + p[1] * theta.cos() * (-x * x / (2.0 * p[4] * p[4])).exp()
}

fn gaussian_damped_sinusoid_jacobian(x: f64, p: &[f64], out: &mut [f64]) {
    let (a, tau) = (p[1], p[4]);
    let theta = TAU * p[2] * x + p[3];
    let (sin, cos) = theta.sin_cos();
    let e = (-x * x / (2.0 * tau * tau)).exp();
    out[0] = 1.0;
    out[1] = cos * e;
    out[2] = -a * sin * e * TAU * x;
    out[3] = -a * sin * e;
    out[4] = a * cos * e * x * x / (tau * tau * tau);
}

// --- initial guesses ---

/// Log-linearizes `ln(2(y - 1/2)) = ln(1 - d_if) + x ln(1 - d)` over the
/// points that sit measurably above the asymptote and regresses a line.
fn guess_rb(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut n = 0.0;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (&l, &f) in x.iter().zip(y) {
        let above = f - 0.5;
        if above <= 1e-12 {
            continue;
        }
        let z = (2.0 * above).ln();
        n += 1.0;
        sx += l;
        sy += z;
        sxx += l * l;
        sxy += l * z;
    }
    let denom = n * sxx - sx * sx;
    let (slope, intercept) = if n >= 2.0 && denom.abs() > 1e-30 {
        let slope = (n * sxy - sx * sy) / denom;
        ((slope), (sy - slope * sx) / n)
    } else {
        (-1e-4, 0.0)
    };
    let clamp = |v: f64| if v.is_finite() { v.clamp(-0.45, 0.98) } else { 1e-3 };
    vec![clamp(1.0 - intercept.exp()), clamp(1.0 - slope.exp())]
}

fn sorted_pairs(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite x"));
    (
        order.iter().map(|&i| x[i]).collect(),
        order.iter().map(|&i| y[i]).collect(),
    )
}

/// Baseline from the edges, amplitude and center from the extremum, width
/// from the measured full width at half the amplitude.
fn guess_gaussian(x: &[f64], y: &[f64]) -> Vec<f64> {
    let (xs, ys) = sorted_pairs(x, y);
    let n = xs.len();
    let c0 = 0.5 * (ys[0] + ys[n - 1]);
    let mut i_ext = 0;
    for (i, &v) in ys.iter().enumerate() {
        if (v - c0).abs() > (ys[i_ext] - c0).abs() {
            i_ext = i;
        }
    }
    let a0 = ys[i_ext] - c0;
    let span = (xs[n - 1] - xs[0]).abs().max(1e-300);
    let half = a0.abs() / 2.0;
    let mut lo = i_ext;
    let mut hi = i_ext;
    for (i, &v) in ys.iter().enumerate() {
        if (v - c0).abs() >= half {
            lo = lo.min(i);
            hi = hi.max(i);
        }
    }
    let mut fwhm = xs[hi] - xs[lo];
    if !(fwhm > 0.0) {
        fwhm = span / 6.0;
    }
    let w0 = (fwhm / 2.3548).max(span / (2.0 * n as f64));
    vec![c0, a0, xs[i_ext], w0]
}

/// Integral (cumulative-sum) linearization: `y` is linear in `(1, x, S)`
/// with `S` the running trapezoid integral of `y`, which pins `tau` even
/// when the grid covers only the first few percent of the decay.
fn guess_exponential(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let (xs, ys) = sorted_pairs(x, y);
    let n = xs.len();
    let span = (xs[n - 1] - xs[0]).abs();
    if span <= 0.0 {
        return Err(Error::invalid_input("exponential: all x values coincide"));
    }
    let mut s = vec![0.0; n];
    for i in 1..n {
        s[i] = s[i - 1] + 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    }
    let mut m = Matrix3::zeros();
    let mut v = Vector3::zeros();
    for i in 0..n {
        let shifted = xs[i] - xs[0];
        let basis = Vector3::new(1.0, shifted, s[i]);
        m += basis * basis.transpose();
        v += basis * ys[i];
    }
    let fallback = || {
        let low = ys.iter().cloned().fold(f64::INFINITY, f64::min);
        vec![low, ys[0] - low, span]
    };
    let Some(beta) = m.lu().solve(&v) else {
        return Ok(fallback());
    };
    let tau = -1.0 / beta[2];
    if !tau.is_finite() || tau <= 0.0 {
        return Ok(fallback());
    }
    let tau = tau.clamp(span * 1e-6, span * 1e8);
    let c0 = beta[1] * tau;
    let a0 = (beta[0] - c0) * (xs[0] / tau).exp();
    if !(c0.is_finite() && a0.is_finite()) {
        return Ok(fallback());
    }
    Ok(vec![c0, a0, tau])
}

/// Frequency from the peak of a periodogram oversampled eightfold past the
/// natural `1/span` resolution; amplitude and phase from the complex sum at
/// that frequency.
fn sinusoid_periodogram(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let n = x.len();
    let c0 = y.iter().sum::<f64>() / n as f64;
    let x_min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = x_max - x_min;
    if span <= 0.0 {
        return Err(Error::invalid_input("sinusoid: all x values coincide"));
    }
    let mut best = (0.0, 0.0, 0.0); // (power, re, im)
    let mut best_freq = 1.0 / span;
    for j in 1..=(4 * n) {
        let freq = j as f64 / (8.0 * span);
        let (mut re, mut im) = (0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(y) {
            let theta = TAU * freq * xi;
            let (sin, cos) = theta.sin_cos();
            re += (yi - c0) * cos;
            im -= (yi - c0) * sin;
        }
        let power = re * re + im * im;
        if power > best.0 {
            best = (power, re, im);
            best_freq = freq;
        }
    }
    let a0 = (2.0 * best.0.sqrt() / n as f64).max(1e-12);
    let phi0 = best.2.atan2(best.1);
    Ok((c0, a0, best_freq, phi0))
}

fn guess_sinusoid(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let (c0, a0, f0, phi0) = sinusoid_periodogram(x, y)?;
    Ok(vec![c0, a0, f0, phi0])
}

/// Periodogram seed plus an envelope time from the RMS ratio of the two
/// halves of the scan.
fn guess_damped_sinusoid(x: &[f64], y: &[f64], gaussian_envelope: bool) -> Result<Vec<f64>> {
    let (c0, a0, f0, phi0) = sinusoid_periodogram(x, y)?;
    let (xs, ys) = sorted_pairs(x, y);
    let n = xs.len();
    let mid = n / 2;
    let rms = |xv: &[f64], yv: &[f64]| {
        let t = xv.iter().sum::<f64>() / xv.len() as f64;
        let p = yv.iter().map(|v| (v - c0) * (v - c0)).sum::<f64>() / yv.len() as f64;
        (t, p.sqrt())
    };
    let (t1, r1) = rms(&xs[..mid], &ys[..mid]);
    let (t2, r2) = rms(&xs[mid..], &ys[mid..]);
    let span = xs[n - 1] - xs[0];
    let ratio = if r1 > 0.0 { r2 / r1 } else { 1.0 };
    let tau0 = if ratio > 1e-6 && ratio < 0.999 {
        if gaussian_envelope {
            ((t2 * t2 - t1 * t1) / (-2.0 * ratio.ln())).abs().sqrt()
        } else {
            -(t2 - t1) / ratio.ln()
        }
    } else {
        span
    };
    let tau0 = if tau0.is_finite() && tau0 > 0.0 { tau0 } else { span };
    Ok(vec![c0, a0, f0, phi0, tau0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_method_seeds_tau_accurately_on_a_short_grid() {
        let x: Vec<f64> = (0..9).map(|i| i as f64 * 0.25e-3).collect();
        let y: Vec<f64> = x.iter().map(|&t| 0.5 + 0.42 * (-t / 0.347).exp()).collect();
        let guess = guess_exponential(&x, &y).unwrap();
        assert!((guess[2] - 0.347).abs() / 0.347 < 0.02, "tau seed: {}", guess[2]);
    }

    #[test]
    fn periodogram_locates_the_frequency_within_a_grid_bin() {
        let x: Vec<f64> = (0..64).map(|i| i as f64 * 1e-4).collect();
        let y: Vec<f64> = x.iter().map(|&t| 0.5 + 0.3 * (TAU * 1234.0 * t).cos()).collect();
        let (_, _, f0, _) = sinusoid_periodogram(&x, &y).unwrap();
        let bin = 1.0 / (8.0 * (x[63] - x[0]));
        assert!((f0 - 1234.0).abs() <= bin, "frequency seed: {f0}");
    }

    #[test]
    fn model_names_round_trip() {
        for kind in [
            ModelKind::RbDecay,
            ModelKind::Gaussian,
            ModelKind::Exponential,
            ModelKind::Sinusoid,
            ModelKind::DampedSinusoid,
            ModelKind::GaussianDampedSinusoid,
        ] {
            assert_eq!(ModelKind::from_name(kind.name()), Some(kind));
            assert_eq!(kind.param_names().len(), kind.param_count());
        }
        assert_eq!(ModelKind::from_name("nope"), None);
    }
}
