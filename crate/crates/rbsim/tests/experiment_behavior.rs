//! End-to-end experiment checks against independently computed
//! expectations: exact closed forms for pure-channel runs, gaussian
//! ensemble averages for disorder, refocusing identities for the echo,
//! scaling laws for standard errors and perturbative disorder, and
//! bit-level determinism across worker counts.

mod common;

use common::*;
use rbsim::experiments::{
    run_detuning_sweep, run_duration_sweep, run_hold_time, run_ramsey, run_rb,
    run_refocusing_study, run_spin_echo, ExperimentConfig, RbPlan, SweepPlan,
};
use rbsim::noise::{NoiseConfig, ScatteringMode};
use std::f64::consts::TAU;

const T_HALF: f64 = 31.05e-6;
const T_PI: f64 = 62.1e-6;

fn quiet_config(ensemble: usize) -> ExperimentConfig {
    ExperimentConfig { ensemble_size: ensemble, ..ExperimentConfig::default() }
}

#[test]
fn noiseless_rb_is_exact() {
    let config = quiet_config(3);
    let plan = RbPlan { n_cg: 2, n_pr: 2, truncations: vec![1, 2, 3, 5, 8] };
    let data = run_rb(&config, &plan).unwrap();
    assert_eq!(data.rows.len(), 2 * 2 * 5);
    for row in &data.rows {
        assert!(
            (row.fidelity - 1.0).abs() < 1e-9,
            "noiseless fidelity at (cg {}, pr {}, l {}): {}",
            row.cg_id,
            row.pr_id,
            row.truncation,
            row.fidelity
        );
        assert!(row.fidelity_sem.abs() < 1e-12, "no spread without noise");
    }
}

#[test]
fn pure_depolarization_matches_the_closed_form_decay() {
    // A depolarizing channel commutes with every rotation, so the exact
    // ensemble-mean fidelity only depends on elapsed time: slots plus the
    // state-prep and readout flips. Rate chosen to give d = 2.7e-4 over
    // one randomization + gate period.
    let d_target = 2.7e-4;
    let period = T_PI + T_HALF;
    let rate = -(1.0f64 - d_target).ln() / period;
    let config = ExperimentConfig {
        noise: NoiseConfig { depolarizing_rate: rate, ..NoiseConfig::default() },
        ensemble_size: 2,
        ..ExperimentConfig::default()
    };
    let plan = RbPlan { n_cg: 2, n_pr: 2, truncations: vec![1, 2, 3, 5, 8] };
    let data = run_rb(&config, &plan).unwrap();
    // Constant overhead: recovery block (pi, pi/2, pi) plus prep and
    // readout flips of t_pi each.
    let overhead = 2.0 * T_PI + T_HALF + 2.0 * T_PI;
    for row in &data.rows {
        let elapsed = row.truncation as f64 * period + overhead;
        let expected = 0.5 + 0.5 * (-rate * elapsed).exp();
        assert_close(
            row.fidelity,
            expected,
            1e-12,
            &format!("closed-form depolarized fidelity at l = {}", row.truncation),
        );
    }
    let fit = data.fit().unwrap();
    assert_close(fit.d(), d_target, 1e-9, "fitted per-step decay equals the channel step");
}

#[test]
fn ramsey_noiseless_fringe_matches_the_closed_form() {
    let config = quiet_config(1);
    let detuning = TAU * 1000.0;
    let delays: Vec<f64> = (0..31).map(|i| i as f64 * 13.5e-3 / 30.0).collect();
    let scan = run_ramsey(&config, detuning, &delays).unwrap();
    assert_eq!(scan.rows.len(), delays.len());
    for row in &scan.rows {
        let expected = 0.5 * (1.0 - (detuning * row.scan_value).cos());
        assert_close(row.mean, expected, 1e-9, "two-pulse fringe closed form");
    }
}

#[test]
fn ramsey_disorder_envelope_recovers_the_inhomogeneous_coherence_time() {
    // Gaussian static detunings average the fringe to
    // cos(delta t) exp(-sigma^2 t^2 / 2): the fitted gaussian envelope
    // time is 1/sigma.
    let sigma = 40.0;
    let config = ExperimentConfig {
        noise: NoiseConfig { static_detuning_sigma: sigma, ..NoiseConfig::default() },
        ensemble_size: 4000,
        ..ExperimentConfig::default()
    };
    let detuning = TAU * 1000.0;
    let delays: Vec<f64> = (0..46).map(|i| i as f64 * 0.3e-3).collect();
    let scan = run_ramsey(&config, detuning, &delays).unwrap();
    let (x, y, _sem) = scan.columns();
    // Unit weights: at zero delay all atoms coincide, so ensemble standard
    // errors span many decades and would swamp the fit with the first points.
    let fit = rbsim::fit::fit_gaussian_damped_sinusoid(&x, &y, None).unwrap();
    let freq = fit.param("freq").unwrap();
    let tau = fit.param("tau").unwrap();
    assert!((freq - 1000.0).abs() < 2.0, "fringe frequency: {freq} Hz");
    let expected_tau = 1.0 / sigma;
    assert!(
        (tau - expected_tau).abs() < 0.1 * expected_tau,
        "envelope time {tau} vs 1/sigma = {expected_tau}"
    );
}

#[test]
fn echo_amplitude_is_flat_under_static_disorder() {
    // The central flip refocuses any static detuning, so the fringe
    // amplitude must not decay with the total delay.
    let config = ExperimentConfig {
        noise: NoiseConfig { static_detuning_sigma: 40.0, ..NoiseConfig::default() },
        ensemble_size: 128,
        ..ExperimentConfig::default()
    };
    let t_grid = [0.0, 0.1, 0.3];
    let dts: Vec<f64> = (0..16).map(|i| i as f64 * 1.5e-3 / 15.0).collect();
    let echo = run_spin_echo(&config, &t_grid, &dts, TAU * 1000.0).unwrap();
    assert_eq!(echo.amplitudes.len(), 3);
    assert_eq!(echo.fringes.len(), 3);
    let amps: Vec<f64> = echo.amplitudes.iter().map(|a| a.amplitude).collect();
    for (a, &t) in echo.amplitudes.iter().zip(&t_grid) {
        assert!(!a.fit_failed, "fringe fit at T = {t}");
        assert!(a.amplitude > 0.48 && a.amplitude < 0.505, "refocused amplitude: {}", a.amplitude);
    }
    let spread = amps.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - amps.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 0.01, "amplitude spread across T: {spread}");
}

#[test]
fn echo_amplitude_decays_at_the_markovian_rate() {
    // With only the Markovian channel on, the echo cannot refocus anything
    // and the amplitude decays as exp(-T/t2) exactly (the delta-t droop is
    // a T-independent factor).
    let t2 = 0.28;
    let config = ExperimentConfig {
        noise: NoiseConfig { t2, ..NoiseConfig::default() },
        ensemble_size: 1,
        ..ExperimentConfig::default()
    };
    let t_grid = [0.0, 0.07, 0.14, 0.28, 0.42];
    let dts: Vec<f64> = (0..16).map(|i| i as f64 * 1.5e-3 / 15.0).collect();
    let echo = run_spin_echo(&config, &t_grid, &dts, TAU * 1000.0).unwrap();
    let x: Vec<f64> = echo.amplitudes.iter().map(|a| a.total_time).collect();
    let y: Vec<f64> = echo.amplitudes.iter().map(|a| a.amplitude).collect();
    let fit = rbsim::fit::fit_exponential(&x, &y, None).unwrap();
    let tau = fit.param("tau").unwrap();
    assert!((tau - t2).abs() < 0.05 * t2, "echo decay time {tau} vs t2 = {t2}");
}

#[test]
fn hold_time_zero_matches_the_plain_rb_point() {
    // Deterministic channels make every draw stream irrelevant, so the
    // zero-hold scan point and the plain benchmarking run at the same
    // truncation must agree exactly.
    let config = ExperimentConfig {
        noise: NoiseConfig { t2: 0.28, ..NoiseConfig::default() },
        ensemble_size: 2,
        ..ExperimentConfig::default()
    };
    let rb = run_rb(&config, &RbPlan { n_cg: 2, n_pr: 2, truncations: vec![500] }).unwrap();
    let (_, rb_means, _) = rb.aggregate();
    let hold = run_hold_time(
        &config,
        &[0.0, 1.0e-3],
        &SweepPlan { n_cg: 2, n_pr: 2, truncation: 500 },
    )
    .unwrap();
    assert_close(hold.rows[0].mean, rb_means[0], 1e-12, "zero hold equals the plain run");
    assert!(hold.rows[1].mean < hold.rows[0].mean, "dephasing grows with added hold");
}

#[test]
fn hold_time_rows_report_slot_aware_total_durations() {
    let config = ExperimentConfig {
        noise: NoiseConfig { t2: 0.28, ..NoiseConfig::default() },
        ensemble_size: 1,
        ..ExperimentConfig::default()
    };
    let plan = SweepPlan { n_cg: 1, n_pr: 1, truncation: 13 };
    let holds = [0.0, 1.0e-3];
    let data = run_hold_time(&config, &holds, &plan).unwrap();
    // 2l+3 slots leave 2l+2 gaps for the added hold.
    let slots_time = 13.0 * (T_PI + T_HALF) + 2.0 * T_PI + T_HALF;
    for (row, &h) in data.rows.iter().zip(&holds) {
        assert_close(row.t_hold, h, 0.0, "hold column echoes the grid");
        assert_close(
            row.total_time,
            slots_time + (2.0 * 13.0 + 2.0) * h,
            1e-12,
            "total duration accounts for every inter-slot gap",
        );
    }
}

#[test]
fn hold_time_decays_slowly_when_only_refocusable_disorder_is_present() {
    // Static detunings dephase freely during the inserted gaps, but the
    // randomized pulse train keeps flipping the accumulated phase, so only a
    // residual random walk survives.  Unrefocused, sigma = 40 rad/s wipes out
    // all contrast beyond ~1/sigma = 25 ms; the sequences here span 47 ms to
    // 2.05 s of wall time, so anything far above 0.5 proves refocusing, and
    // the fitted decay constant must sit on the seconds scale.
    let sigma = 40.0;
    let config = ExperimentConfig {
        noise: NoiseConfig { static_detuning_sigma: sigma, ..NoiseConfig::default() },
        ensemble_size: 64,
        ..ExperimentConfig::default()
    };
    let holds: Vec<f64> = (0..5).map(|i| i as f64 * 0.5e-3).collect();
    let data = run_hold_time(&config, &holds, &SweepPlan { n_cg: 2, n_pr: 2, truncation: 500 })
        .unwrap();
    let means: Vec<f64> = data.rows.iter().map(|r| r.mean).collect();
    let total: Vec<f64> = data.rows.iter().map(|r| r.total_time).collect();
    for (&m, &t) in means.iter().zip(&total) {
        let unrefocused = 0.5 + 0.5 * (-0.5 * sigma * sigma * t * t).exp();
        assert!(m > 0.7, "contrast survives far past 1/sigma: {m} at T = {t} s");
        assert!(m > unrefocused + 0.2, "beats free dephasing at T = {t} s: {m}");
    }
    assert!(
        means.first().unwrap() > means.last().unwrap(),
        "residual random-walk dephasing still decays with hold time"
    );
    let fit = data.fit.as_ref().expect("decaying hold-time data fits an exponential");
    let tau = fit.param("tau").unwrap();
    assert!(tau > 1.0, "refocused decay constant on the seconds scale: {tau} s");
}

#[test]
fn detuning_sweep_is_invariant_under_carrier_shifts() {
    // A systematic detuning and the swept carrier offset enter the
    // Hamiltonian as one sum, so sweeping a shifted grid against an equal
    // and opposite systematic reproduces the unshifted sweep exactly.
    let shift = TAU * 50.0;
    let base_grid: Vec<f64> = (-2..=2).map(|i| TAU * 50.0 * i as f64).collect();
    let plan = SweepPlan { n_cg: 2, n_pr: 2, truncation: 89 };

    let plain = run_detuning_sweep(&quiet_config(1), &base_grid, &plan).unwrap();
    let shifted_grid: Vec<f64> = base_grid.iter().map(|g| g - shift).collect();
    let config = ExperimentConfig {
        noise: NoiseConfig { systematic_detuning: shift, ..NoiseConfig::default() },
        ensemble_size: 1,
        ..ExperimentConfig::default()
    };
    let shifted = run_detuning_sweep(&config, &shifted_grid, &plan).unwrap();

    for (a, b) in plain.rows.iter().zip(shifted.rows.iter()) {
        assert_close(b.mean, a.mean, 1e-12, "sweep point under carrier shift");
    }
    let center = &plain.rows[2];
    assert_close(center.mean, 1.0, 1e-12, "resonant gates are perfect");
    for row in &plain.rows {
        assert!(row.mean <= center.mean + 1e-12, "fidelity peaks on resonance");
    }
}

#[test]
fn duration_sweep_peaks_at_zero_and_collapses_at_gross_miscalibration() {
    // An offset of a full t_half turns every gate into a flip and every
    // flip into a do-nothing full turn; sequences then end far from the
    // expected pole on average.
    let plan = SweepPlan { n_cg: 4, n_pr: 8, truncation: 21 };
    let scan = run_duration_sweep(&quiet_config(1), &[0.0, T_HALF], &plan).unwrap();
    assert_close(scan.rows[0].mean, 1.0, 1e-12, "calibrated durations are perfect");
    let gross = scan.rows[1].mean;
    assert!(
        gross > 0.15 && gross < 0.85,
        "grossly miscalibrated sequences should score near chance: {gross}"
    );
}

#[test]
fn standard_errors_shrink_with_the_square_root_of_the_ensemble() {
    let plan = RbPlan { n_cg: 1, n_pr: 1, truncations: vec![8] };
    let mut logs = Vec::new();
    for &n in &[50usize, 200, 800, 3200] {
        let config = ExperimentConfig {
            noise: NoiseConfig { amplitude_noise_sigma: 0.05, ..NoiseConfig::default() },
            ensemble_size: n,
            ..ExperimentConfig::default()
        };
        let data = run_rb(&config, &plan).unwrap();
        assert!(data.rows[0].fidelity_sem > 0.0);
        logs.push(((n as f64).ln(), data.rows[0].fidelity_sem.ln()));
    }
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!(
        (-0.65..=-0.35).contains(&slope),
        "SEM scaling exponent vs ensemble size: {slope}"
    );
}

#[test]
fn results_are_bit_identical_across_worker_counts() {
    let config = ExperimentConfig {
        noise: NoiseConfig {
            t2: 0.28,
            static_detuning_sigma: 40.0,
            amplitude_noise_sigma: 0.01,
            depolarizing_rate: 0.2,
            scattering_mode: ScatteringMode::Trajectory,
            ..NoiseConfig::default()
        },
        ensemble_size: 16,
        ..ExperimentConfig::default()
    };
    let plan = RbPlan { n_cg: 2, n_pr: 2, truncations: vec![1, 5, 13] };

    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_rb(&config, &plan).unwrap());
    let several = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| run_rb(&config, &plan).unwrap());

    assert_eq!(single.rows.len(), several.rows.len());
    for (a, b) in single.rows.iter().zip(several.rows.iter()) {
        assert_eq!(a.fidelity.to_bits(), b.fidelity.to_bits(), "fidelity bits differ");
        assert_eq!(a.fidelity_sem.to_bits(), b.fidelity_sem.to_bits(), "sem bits differ");
    }
}

#[test]
fn shot_sampling_is_quantized_deterministic_and_unbiased() {
    let shots = 200u64;
    let rate = 8.0;
    let config = ExperimentConfig {
        noise: NoiseConfig { depolarizing_rate: rate, ..NoiseConfig::default() },
        ensemble_size: 1,
        shots: Some(shots),
        ..ExperimentConfig::default()
    };
    let plan = RbPlan { n_cg: 1, n_pr: 8, truncations: vec![34] };
    let first = run_rb(&config, &plan).unwrap();
    let second = run_rb(&config, &plan).unwrap();

    let elapsed = 34.0 * (T_PI + T_HALF) + 2.0 * T_PI + T_HALF + 2.0 * T_PI;
    let p = 0.5 + 0.5 * (-rate * elapsed).exp();
    let mut sum = 0.0;
    for (a, b) in first.rows.iter().zip(second.rows.iter()) {
        assert_eq!(a.fidelity.to_bits(), b.fidelity.to_bits(), "shot draws are seeded");
        let counts = a.fidelity * shots as f64;
        assert!((counts - counts.round()).abs() < 1e-9, "fidelity is a count fraction");
        sum += a.fidelity;
    }
    let mean = sum / first.rows.len() as f64;
    let sigma = (p * (1.0 - p) / (shots as f64 * first.rows.len() as f64)).sqrt();
    assert!(
        (mean - p).abs() < 4.0 * sigma,
        "shot mean {mean} vs channel value {p} (sigma {sigma})"
    );
}

#[test]
fn refocusing_study_reports_zero_error_without_disorder_and_scales_quadratically() {
    let study = run_refocusing_study(
        &quiet_config(4),
        &RbPlan { n_cg: 2, n_pr: 2, truncations: vec![1, 2, 3, 5, 8] },
    )
    .unwrap();
    assert!(study.fit.e_g().abs() < 1e-8, "no disorder, no per-gate error: {}", study.fit.e_g());

    // Perturbative check: at l = 1 the infidelity from static disorder is
    // quadratic in sigma, so doubling sigma quadruples it. The same atom
    // stream underlies both runs, scaled, so the ratio is clean.
    let plan = RbPlan { n_cg: 1, n_pr: 1, truncations: vec![1] };
    let infidelity = |sigma: f64| {
        let config = ExperimentConfig {
            noise: NoiseConfig { static_detuning_sigma: sigma, ..NoiseConfig::default() },
            ensemble_size: 512,
            ..ExperimentConfig::default()
        };
        1.0 - run_rb(&config, &plan).unwrap().rows[0].fidelity
    };
    let ratio = infidelity(80.0) / infidelity(40.0);
    assert!((3.8..=4.2).contains(&ratio), "quadratic disorder scaling, ratio {ratio}");
}

#[test]
fn grids_are_validated() {
    let config = quiet_config(1);
    assert!(run_ramsey(&config, TAU * 1000.0, &[]).is_err(), "empty delay grid");
    assert!(
        run_ramsey(&config, TAU * 1000.0, &[1e-3, 1e-3]).is_err(),
        "non-monotone delay grid"
    );
    let plan = SweepPlan { n_cg: 1, n_pr: 1, truncation: 5 };
    assert!(run_detuning_sweep(&config, &[], &plan).is_err(), "empty sweep grid");
    assert!(run_hold_time(&config, &[-1.0e-3, 0.0], &plan).is_err(), "negative hold");
    let zero_atoms = ExperimentConfig { ensemble_size: 0, ..ExperimentConfig::default() };
    assert!(run_rb(&zero_atoms, &RbPlan::default()).is_err(), "empty ensemble");
}
