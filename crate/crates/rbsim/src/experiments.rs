//! Experiment drivers built on the schedule compiler and the noisy
//! single-shot simulator: benchmarking decay runs, detuned fringe scans,
//! spin-echo amplitude scans, calibration sweeps, hold-time decays, and the
//! disorder refocusing study.
//!
//! Every stochastic stream is keyed by the master seed, a role tag, and the
//! job indices, so a dataset is a pure function of its configuration:
//! bit-identical however jobs are scheduled across workers. Jobs are run in
//! parallel and collected in index order.

use crate::bloch::PulseSpec;
use crate::fit::{fit_exponential, fit_rb_decay, fit_sinusoid, DecayFit, FitReport};
use crate::noise::{sample_atom, AtomInstance, NoiseConfig};
use crate::rng::Stream;
use crate::sequences::{
    build_sequence_set, compile, compute_recovery, ideal_trace, CompiledSchedule, RbSequenceSet,
    Slot, TimingConfig, DEFAULT_TRUNCATIONS,
};
use crate::sim::{run_job, DialSettings};
use crate::{Error, Result};
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

/// Shared experiment setup: pulse timing, the noise stack, the number of
/// atoms averaged per data point, and the master seed from which every
/// random stream derives.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub timing: TimingConfig,
    pub noise: NoiseConfig,
    pub ensemble_size: usize,
    pub master_seed: u64,
    /// Finite measurement statistics: when set, each reported fidelity is a
    /// seeded binomial sample of that many shots instead of the exact
    /// outcome probability.
    pub shots: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            timing: TimingConfig::default(),
            noise: NoiseConfig::default(),
            ensemble_size: 200,
            master_seed: 0,
            shots: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.timing.validate()?;
        self.noise.validate()?;
        if self.ensemble_size == 0 {
            return Err(Error::invalid_input("ensemble_size must be at least 1"));
        }
        if self.shots == Some(0) {
            return Err(Error::invalid_input("shots must be at least 1 when set"));
        }
        Ok(())
    }

    /// The atom ensemble is shared across all jobs of a run: atom `k` is
    /// drawn from the stream keyed (seed, "atom", [k]).
    fn atoms(&self) -> Vec<AtomInstance> {
        (0..self.ensemble_size)
            .map(|k| sample_atom(&self.noise, self.master_seed, k as u64))
            .collect()
    }
}

/// The benchmarking plan: how many gate streams, how many randomization
/// streams, and the truncation ladder.
#[derive(Debug, Clone)]
pub struct RbPlan {
    pub n_cg: usize,
    pub n_pr: usize,
    pub truncations: Vec<usize>,
}

impl Default for RbPlan {
    fn default() -> Self {
        RbPlan { n_cg: 4, n_pr: 8, truncations: DEFAULT_TRUNCATIONS.to_vec() }
    }
}

/// Scan plan for sweeps and hold-time runs: a fixed truncation measured
/// over `n_cg * n_pr` sequences at every grid point.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub n_cg: usize,
    pub n_pr: usize,
    pub truncation: usize,
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan { n_cg: 4, n_pr: 4, truncation: 500 }
    }
}

/// One benchmarking data point: the expected-outcome probability for one
/// (gate stream, randomization stream, truncation) job, averaged over the
/// atom ensemble, with the standard error of that mean.
#[derive(Debug, Clone)]
pub struct RbRow {
    pub cg_id: usize,
    pub pr_id: usize,
    pub truncation: usize,
    pub fidelity: f64,
    pub fidelity_sem: f64,
}

#[derive(Debug, Clone)]
pub struct RbDataset {
    pub rows: Vec<RbRow>,
    pub master_seed: u64,
    pub ensemble_size: usize,
}

impl RbDataset {
    /// Truncations with the mean fidelity over sequences at each one and
    /// the standard error of that mean.
    pub fn aggregate(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (lengths, groups) = self.per_length_values();
        let mut means = Vec::with_capacity(groups.len());
        let mut sems = Vec::with_capacity(groups.len());
        for group in &groups {
            let (m, s) = mean_sem(group);
            means.push(m);
            sems.push(s);
        }
        (lengths, means, sems)
    }

    /// Per-truncation sequence fidelities, for resampling methods.
    pub fn per_length_values(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut lengths: Vec<usize> = self.rows.iter().map(|r| r.truncation).collect();
        lengths.sort_unstable();
        lengths.dedup();
        let groups = lengths
            .iter()
            .map(|&l| {
                self.rows
                    .iter()
                    .filter(|r| r.truncation == l)
                    .map(|r| r.fidelity)
                    .collect()
            })
            .collect();
        (lengths.iter().map(|&l| l as f64).collect(), groups)
    }

    /// Fit the fidelity decay over the aggregated truncation means,
    /// weighted by the spread over sequences where it is resolvable.
    pub fn fit(&self) -> Result<DecayFit> {
        let (lengths, means, sems) = self.aggregate();
        fit_rb_decay(&lengths, &means, Some(&sems))
    }
}

/// One scan point: the grid value, the mean signal, and its standard error.
#[derive(Debug, Clone)]
pub struct ScanRow {
    pub scan_value: f64,
    pub mean: f64,
    pub sem: f64,
}

#[derive(Debug, Clone)]
pub struct ScanDataset {
    pub rows: Vec<ScanRow>,
}

impl ScanDataset {
    pub fn columns(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            self.rows.iter().map(|r| r.scan_value).collect(),
            self.rows.iter().map(|r| r.mean).collect(),
            self.rows.iter().map(|r| r.sem).collect(),
        )
    }
}

/// Echo fringe amplitude at one total delay `T`, from a sinusoid fit over
/// the fringe scan. A failed fit (vanishing fringe) reports amplitude 0
/// with the flag set.
#[derive(Debug, Clone)]
pub struct EchoAmplitude {
    pub total_time: f64,
    pub amplitude: f64,
    pub amplitude_err: f64,
    pub fit_failed: bool,
}

#[derive(Debug, Clone)]
pub struct EchoDataset {
    pub amplitudes: Vec<EchoAmplitude>,
    /// Raw fringe scans, one `(T, scan over delta t)` pair per delay.
    pub fringes: Vec<(f64, ScanDataset)>,
}

/// Hold-time scan row: the added per-gap hold, the resulting wall-clock
/// sequence duration, and the mean fidelity over sequences.
#[derive(Debug, Clone)]
pub struct HoldRow {
    pub t_hold: f64,
    pub total_time: f64,
    pub mean: f64,
    pub sem: f64,
}

#[derive(Debug, Clone)]
pub struct HoldTimeDataset {
    pub rows: Vec<HoldRow>,
    /// Exponential decay fit of fidelity against total sequence time;
    /// `None` when the fit does not converge (flat data).
    pub fit: Option<FitReport>,
}

/// Disorder-only benchmarking run quantifying how much static detuning
/// spread survives the randomization's refocusing.
#[derive(Debug, Clone)]
pub struct RefocusingStudy {
    pub dataset: RbDataset,
    pub fit: DecayFit,
}

/// Compile one benchmarking job: exact ideal trace, seeded recovery drawn
/// from the stream keyed (seed, "recovery", [cg, pr, l]), timed schedule.
pub fn compile_rb_job(
    set: &RbSequenceSet,
    cg_id: usize,
    pr_id: usize,
    l: usize,
    timing: &TimingConfig,
) -> Result<CompiledSchedule> {
    let cg = &set.cg_streams[cg_id];
    let pr = &set.pr_streams[pr_id];
    let ideal = ideal_trace(cg, pr, l);
    let mut rng =
        Stream::new(set.master_seed, "recovery", &[cg_id as u64, pr_id as u64, l as u64]);
    let recovery = compute_recovery(ideal, &mut rng)?;
    Ok(compile(cg, pr, l, &recovery, timing))
}

/// Run the full benchmarking grid: every (gate stream, randomization
/// stream, truncation) job, each averaged over the atom ensemble. Shot
/// streams are keyed (seed, "pulse_amp"/"scatter", [cg, pr, l, atom]).
pub fn run_rb(config: &ExperimentConfig, plan: &RbPlan) -> Result<RbDataset> {
    config.validate()?;
    let set = build_sequence_set(plan.n_cg, plan.n_pr, &plan.truncations, config.master_seed)?;
    rb_over_dial(config, &set, DialSettings::default())
}

fn rb_over_dial(
    config: &ExperimentConfig,
    set: &RbSequenceSet,
    dial: DialSettings,
) -> Result<RbDataset> {
    let atoms = config.atoms();
    let mut jobs = Vec::with_capacity(set.job_count());
    for i in 0..set.cg_streams.len() {
        for j in 0..set.pr_streams.len() {
            for &l in &set.truncations {
                jobs.push((i, j, l));
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|&(i, j, l)| -> Result<RbRow> {
            let schedule = compile_rb_job(set, i, j, l, &config.timing)?;
            let key = [i as u64, j as u64, l as u64];
            let per_atom: Vec<f64> = atoms
                .iter()
                .enumerate()
                .map(|(k, &atom)| {
                    run_job(
                        &schedule,
                        &config.timing,
                        &config.noise,
                        dial,
                        atom,
                        config.master_seed,
                        [key[0], key[1], key[2], k as u64],
                    )
                })
                .collect();
            let (mean, sem) = mean_sem(&per_atom);
            let (fidelity, fidelity_sem) =
                apply_shots(mean, sem, config.shots, config.master_seed, &key);
            Ok(RbRow { cg_id: i, pr_id: j, truncation: l, fidelity, fidelity_sem })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RbDataset { rows, master_seed: config.master_seed, ensemble_size: config.ensemble_size })
}

/// Two-pulse fringe experiment: a half turn, a free wait of `delay`, and a
/// second half turn about the same axis. The detuning acts during the wait
/// (the drive stays resonant), so without noise the signal is exactly
/// `(1 - cos(detuning * delay)) / 2`.
pub fn run_ramsey(
    config: &ExperimentConfig,
    detuning: f64,
    delays: &[f64],
) -> Result<ScanDataset> {
    config.validate()?;
    validate_grid(delays, "delay", true)?;
    let atoms = config.atoms();
    let dial = DialSettings { wait_detuning: detuning, ..DialSettings::default() };
    let rows = delays
        .par_iter()
        .enumerate()
        .map(|(idx, &t)| {
            let schedule = two_pulse_schedule(t, &config.timing);
            point_row(config, &atoms, &schedule, dial, t, [idx as u64, 0, 0])
        })
        .collect();
    Ok(ScanDataset { rows })
}

/// Echo experiment: half turn, wait `T/2`, full flip, wait `T/2 + dt`,
/// half turn. For each total delay `T` the fringe over the `dt` scan is fit
/// with a free sinusoid and its amplitude reported; the central flip
/// cancels any static detuning accumulated in the two half-delays, so only
/// time-dependent dephasing decays the amplitude.
pub fn run_spin_echo(
    config: &ExperimentConfig,
    t_grid: &[f64],
    dt_grid: &[f64],
    detuning: f64,
) -> Result<EchoDataset> {
    config.validate()?;
    validate_grid(t_grid, "total delay", true)?;
    validate_grid(dt_grid, "fringe delay", true)?;
    if dt_grid.len() < 5 {
        return Err(Error::invalid_input(
            "fringe delay grid needs at least 5 points for the sinusoid fit",
        ));
    }
    let atoms = config.atoms();
    let dial = DialSettings { wait_detuning: detuning, ..DialSettings::default() };

    let mut jobs = Vec::with_capacity(t_grid.len() * dt_grid.len());
    for (ti, &t) in t_grid.iter().enumerate() {
        for (di, &dt) in dt_grid.iter().enumerate() {
            jobs.push((ti, t, di, dt));
        }
    }
    let points: Vec<ScanRow> = jobs
        .par_iter()
        .map(|&(ti, t, di, dt)| {
            let schedule = echo_schedule(t, dt, &config.timing);
            point_row(config, &atoms, &schedule, dial, dt, [ti as u64, di as u64, 0])
        })
        .collect();

    let mut amplitudes = Vec::with_capacity(t_grid.len());
    let mut fringes = Vec::with_capacity(t_grid.len());
    for (ti, &t) in t_grid.iter().enumerate() {
        let rows: Vec<ScanRow> =
            points[ti * dt_grid.len()..(ti + 1) * dt_grid.len()].to_vec();
        let scan = ScanDataset { rows };
        let (x, y, _sem) = scan.columns();
        // Unit weights: near zero separation every atom sees identical pulses,
        // so the ensemble spread collapses and inverse-variance weights would
        // be dominated by a few quasi-deterministic points.
        let amplitude = match fit_sinusoid(&x, &y, None) {
            Ok(report) => EchoAmplitude {
                total_time: t,
                amplitude: report.param("a").unwrap_or(0.0).abs(),
                amplitude_err: report.param_error("a").unwrap_or(0.0),
                fit_failed: false,
            },
            Err(Error::FitNonConvergence { .. }) => EchoAmplitude {
                total_time: t,
                amplitude: 0.0,
                amplitude_err: 0.0,
                fit_failed: true,
            },
            Err(e) => return Err(e),
        };
        amplitudes.push(amplitude);
        fringes.push((t, scan));
    }
    Ok(EchoDataset { amplitudes, fringes })
}

/// Benchmarking fidelity at a fixed truncation versus a carrier-detuning
/// offset. Each grid point averages `n_cg * n_pr` sequences; the quoted
/// error is the spread over sequences.
pub fn run_detuning_sweep(
    config: &ExperimentConfig,
    grid: &[f64],
    plan: &SweepPlan,
) -> Result<ScanDataset> {
    sweep_over(config, grid, plan, false, |g| DialSettings {
        carrier_offset: g,
        ..DialSettings::default()
    })
}

/// Benchmarking fidelity at a fixed truncation versus an added per-quarter-
/// turn duration offset (full turns stretch by twice the offset).
pub fn run_duration_sweep(
    config: &ExperimentConfig,
    grid: &[f64],
    plan: &SweepPlan,
) -> Result<ScanDataset> {
    sweep_over(config, grid, plan, false, |g| DialSettings {
        extra_duration_offset: g,
        ..DialSettings::default()
    })
}

fn sweep_over(
    config: &ExperimentConfig,
    grid: &[f64],
    plan: &SweepPlan,
    nonneg: bool,
    dial_for: impl Fn(f64) -> DialSettings + Sync,
) -> Result<ScanDataset> {
    config.validate()?;
    validate_grid(grid, "sweep", nonneg)?;
    let set =
        build_sequence_set(plan.n_cg, plan.n_pr, &[plan.truncation], config.master_seed)?;
    let schedules = compile_plan(&set, plan, &config.timing)?;
    let atoms = config.atoms();

    let mut jobs = Vec::with_capacity(grid.len() * plan.n_cg * plan.n_pr);
    for (g, &value) in grid.iter().enumerate() {
        for i in 0..plan.n_cg {
            for j in 0..plan.n_pr {
                jobs.push((g, value, i, j));
            }
        }
    }
    let per_seq: Vec<f64> = jobs
        .par_iter()
        .map(|&(g, value, i, j)| {
            let dial = dial_for(value);
            sequence_fidelity(config, &atoms, &schedules[i][j], dial, [i as u64, j as u64, g as u64])
        })
        .collect();

    let n_seq = plan.n_cg * plan.n_pr;
    let rows = grid
        .iter()
        .enumerate()
        .map(|(g, &value)| {
            let (mean, sem) = mean_sem(&per_seq[g * n_seq..(g + 1) * n_seq]);
            ScanRow { scan_value: value, mean, sem }
        })
        .collect();
    Ok(ScanDataset { rows })
}

/// Benchmarking fidelity at a fixed truncation versus an added hold between
/// consecutive slots, with an exponential fit against the resulting total
/// sequence duration.
pub fn run_hold_time(
    config: &ExperimentConfig,
    holds: &[f64],
    plan: &SweepPlan,
) -> Result<HoldTimeDataset> {
    config.validate()?;
    validate_grid(holds, "hold", true)?;
    let set =
        build_sequence_set(plan.n_cg, plan.n_pr, &[plan.truncation], config.master_seed)?;
    let atoms = config.atoms();

    let mut compiled = Vec::with_capacity(holds.len());
    for &h in holds {
        let timing = TimingConfig { t_hold: h, ..config.timing };
        compiled.push(compile_plan(&set, plan, &timing)?);
    }

    let mut jobs = Vec::with_capacity(holds.len() * plan.n_cg * plan.n_pr);
    for g in 0..holds.len() {
        for i in 0..plan.n_cg {
            for j in 0..plan.n_pr {
                jobs.push((g, i, j));
            }
        }
    }
    let per_seq: Vec<f64> = jobs
        .par_iter()
        .map(|&(g, i, j)| {
            sequence_fidelity(
                config,
                &atoms,
                &compiled[g][i][j],
                DialSettings::default(),
                [i as u64, j as u64, g as u64],
            )
        })
        .collect();

    let n_seq = plan.n_cg * plan.n_pr;
    let rows: Vec<HoldRow> = holds
        .iter()
        .enumerate()
        .map(|(g, &h)| {
            let (mean, sem) = mean_sem(&per_seq[g * n_seq..(g + 1) * n_seq]);
            HoldRow { t_hold: h, total_time: compiled[g][0][0].total_duration, mean, sem }
        })
        .collect();

    let x: Vec<f64> = rows.iter().map(|r| r.total_time).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    // Unit weights: with purely deterministic noise channels the sequence
    // spread at zero hold collapses, and inverse-variance weighting would pin
    // the fit to that one point.
    let fit = fit_exponential(&x, &y, None).ok();
    Ok(HoldTimeDataset { rows, fit })
}

/// Benchmarking run with every channel except static detuning disorder
/// switched off, quantifying the per-step error the randomization fails to
/// refocus.
pub fn run_refocusing_study(
    config: &ExperimentConfig,
    plan: &RbPlan,
) -> Result<RefocusingStudy> {
    let noise = NoiseConfig {
        static_detuning_sigma: config.noise.static_detuning_sigma,
        ..NoiseConfig::default()
    };
    let isolated = ExperimentConfig { noise, shots: None, ..config.clone() };
    let dataset = run_rb(&isolated, plan)?;
    let fit = dataset.fit()?;
    Ok(RefocusingStudy { dataset, fit })
}

// --- shared helpers --------------------------------------------------------

fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Replace an exact probability by a seeded binomial sample when finite
/// shot statistics are requested.
fn apply_shots(mean: f64, sem: f64, shots: Option<u64>, seed: u64, key: &[u64]) -> (f64, f64) {
    match shots {
        None => (mean, sem),
        Some(s) => {
            let mut rng = Stream::new(seed, "shots", key);
            let mut count = 0u64;
            for _ in 0..s {
                if rng.uniform() < mean {
                    count += 1;
                }
            }
            let p = count as f64 / s as f64;
            (p, (p * (1.0 - p) / s as f64).sqrt())
        }
    }
}

/// Ensemble mean of one compiled sequence under a dial; shot streams keyed
/// by [key..., atom].
fn sequence_fidelity(
    config: &ExperimentConfig,
    atoms: &[AtomInstance],
    schedule: &CompiledSchedule,
    dial: DialSettings,
    key: [u64; 3],
) -> f64 {
    let per_atom: Vec<f64> = atoms
        .iter()
        .enumerate()
        .map(|(k, &atom)| {
            run_job(
                schedule,
                &config.timing,
                &config.noise,
                dial,
                atom,
                config.master_seed,
                [key[0], key[1], key[2], k as u64],
            )
        })
        .collect();
    let (mean, _) = mean_sem(&per_atom);
    let (sampled, _) = apply_shots(mean, 0.0, config.shots, config.master_seed, &key);
    sampled
}

/// Ensemble mean and spread for a standalone (non-benchmarking) schedule.
fn point_row(
    config: &ExperimentConfig,
    atoms: &[AtomInstance],
    schedule: &CompiledSchedule,
    dial: DialSettings,
    scan_value: f64,
    key: [u64; 3],
) -> ScanRow {
    let per_atom: Vec<f64> = atoms
        .iter()
        .enumerate()
        .map(|(k, &atom)| {
            run_job(
                schedule,
                &config.timing,
                &config.noise,
                dial,
                atom,
                config.master_seed,
                [key[0], key[1], key[2], k as u64],
            )
        })
        .collect();
    let (mean, sem) = mean_sem(&per_atom);
    let (mean, sem) = apply_shots(mean, sem, config.shots, config.master_seed, &key);
    ScanRow { scan_value, mean, sem }
}

fn compile_plan(
    set: &RbSequenceSet,
    plan: &SweepPlan,
    timing: &TimingConfig,
) -> Result<Vec<Vec<CompiledSchedule>>> {
    (0..plan.n_cg)
        .map(|i| {
            (0..plan.n_pr)
                .map(|j| compile_rb_job(set, i, j, plan.truncation, timing))
                .collect()
        })
        .collect()
}

fn validate_grid(grid: &[f64], what: &str, nonneg: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid_input(format!("{what} grid must not be empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid_input(format!("{what} grid contains a non-finite value")));
    }
    if nonneg && grid[0] < 0.0 {
        return Err(Error::invalid_input(format!("{what} grid must be non-negative")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid_input(format!("{what} grid must be strictly ascending")));
    }
    Ok(())
}

fn quarter_pulse(timing: &TimingConfig) -> Slot {
    Slot::Pulse(PulseSpec {
        rabi_rate: FRAC_PI_2 / timing.t_half_pi,
        phase: 0.0,
        duration: timing.t_half_pi,
        detuning: 0.0,
    })
}

fn flip_pulse(timing: &TimingConfig) -> Slot {
    Slot::Pulse(PulseSpec {
        rabi_rate: PI / timing.t_pi,
        phase: 0.0,
        duration: timing.t_pi,
        detuning: 0.0,
    })
}

fn assemble(slots: Vec<Slot>) -> CompiledSchedule {
    let total_duration = slots.iter().map(Slot::duration).sum();
    CompiledSchedule { slots, hold_between: 0.0, total_duration, expected_outcome: 0 }
}

fn two_pulse_schedule(delay: f64, timing: &TimingConfig) -> CompiledSchedule {
    assemble(vec![
        quarter_pulse(timing),
        Slot::Wait { duration: delay },
        quarter_pulse(timing),
    ])
}

fn echo_schedule(t: f64, dt: f64, timing: &TimingConfig) -> CompiledSchedule {
    assemble(vec![
        quarter_pulse(timing),
        Slot::Wait { duration: 0.5 * t },
        flip_pulse(timing),
        Slot::Wait { duration: 0.5 * t + dt },
        quarter_pulse(timing),
    ])
}
