//! Noise model: configuration, per-atom disorder sampling, and the
//! elementary channels applied during simulation.
//!
//! Channels act on Bloch vectors:
//!
//! * **Dephasing** with coherence time `t2` contracts the transverse
//!   components by `exp(-dt / t2)` and leaves z alone. It does not commute
//!   with drive rotations, so pulse evolution interleaves it symmetrically
//!   (see the simulator).
//! * **Depolarization** at `depolarizing_rate` contracts the whole vector
//!   by `exp(-rate * dt)`, pulling the state toward the fully mixed point.
//!   It commutes with every rotation, so it can be applied once per slot.
//!   [`ScatteringMode::Trajectory`] realizes the same channel as discrete
//!   jumps to the mixed state, useful for cross-checking the deterministic
//!   form.
//! * **Static disorder**: each atom draws a fixed detuning from a gaussian
//!   of width `static_detuning_sigma` and a fixed drive-amplitude factor
//!   `1 + eps` with `eps` gaussian of width `amplitude_inhomogeneity_sigma`.
//! * **Systematic detuning** offsets every atom identically.
//! * **Pulse errors**: `duration_offset` stretches each pulse in proportion
//!   to its nominal angle (a full flip gains twice the offset of a quarter
//!   turn); `amplitude_noise_sigma` scales each pulse's drive rate by an
//!   independent gaussian factor.
//! * **Readout flips**: a symmetric flip probability `spam_flip_prob`
//!   rescales the measured z component by `1 - 2 q`.

use crate::bloch::{BlochState, PulseSpec};
use crate::rng::Stream;
use crate::{Error, Result};

/// How the depolarizing channel is realized during simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatteringMode {
    /// Deterministic contraction of the Bloch vector (the channel average).
    Channel,
    /// Stochastic jumps to the fully mixed state with probability
    /// `1 - exp(-rate * dt)` per step.
    Trajectory,
}

/// All noise knobs. The default is completely noiseless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// Markovian transverse coherence time in seconds; `INFINITY` disables.
    pub t2: f64,
    /// Spread of per-atom static detunings, rad/s.
    pub static_detuning_sigma: f64,
    /// Common detuning of the drive from every qubit, rad/s.
    pub systematic_detuning: f64,
    /// Added duration per quarter-turn-equivalent of nominal angle, seconds.
    pub duration_offset: f64,
    /// Fractional per-pulse drive-rate jitter (gaussian sigma).
    pub amplitude_noise_sigma: f64,
    /// Fractional per-atom drive-rate spread (gaussian sigma).
    pub amplitude_inhomogeneity_sigma: f64,
    /// Depolarization rate toward the fully mixed state, 1/s.
    pub depolarizing_rate: f64,
    /// Symmetric state-preparation-and-measurement flip probability.
    pub spam_flip_prob: f64,
    /// Substeps for interleaving dephasing with pulse rotations.
    pub pulse_substeps: usize,
    /// Deterministic channel or stochastic trajectories for depolarization.
    pub scattering_mode: ScatteringMode,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            t2: f64::INFINITY,
            static_detuning_sigma: 0.0,
            systematic_detuning: 0.0,
            duration_offset: 0.0,
            amplitude_noise_sigma: 0.0,
            amplitude_inhomogeneity_sigma: 0.0,
            depolarizing_rate: 0.0,
            spam_flip_prob: 0.0,
            pulse_substeps: 1,
            scattering_mode: ScatteringMode::Channel,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t2 > 0.0) {
            return Err(Error::invalid_config(format!(
                "t2 must be positive (or infinite to disable), got {}",
                self.t2
            )));
        }
        for (name, v) in [
            ("static_detuning_sigma", self.static_detuning_sigma),
            ("amplitude_noise_sigma", self.amplitude_noise_sigma),
            ("amplitude_inhomogeneity_sigma", self.amplitude_inhomogeneity_sigma),
            ("depolarizing_rate", self.depolarizing_rate),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid_config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if !self.systematic_detuning.is_finite() || !self.duration_offset.is_finite() {
            return Err(Error::invalid_config(
                "systematic_detuning and duration_offset must be finite",
            ));
        }
        if !(0.0..=0.5).contains(&self.spam_flip_prob) {
            return Err(Error::invalid_config(format!(
                "spam_flip_prob must lie in [0, 0.5], got {}",
                self.spam_flip_prob
            )));
        }
        if self.pulse_substeps == 0 {
            return Err(Error::invalid_config("pulse_substeps must be at least 1"));
        }
        Ok(())
    }
}

/// The frozen disorder realization of one atom in the ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomInstance {
    /// Static detuning of this atom, rad/s.
    pub static_detuning: f64,
    /// Static drive-rate factor of this atom (1 means nominal).
    pub amplitude_factor: f64,
}

/// Draw the disorder realization of atom `atom_index` from the stream keyed
/// (`master_seed`, "atom", [atom_index]). Always consumes exactly two
/// normal draws — one per disorder knob — so the realization of one knob
/// never depends on whether the other is enabled.
pub fn sample_atom(cfg: &NoiseConfig, master_seed: u64, atom_index: u64) -> AtomInstance {
    let mut rng = Stream::new(master_seed, "atom", &[atom_index]);
    let detuning_draw = rng.normal();
    let amplitude_draw = rng.normal();
    AtomInstance {
        static_detuning: cfg.static_detuning_sigma * detuning_draw,
        amplitude_factor: (1.0 + cfg.amplitude_inhomogeneity_sigma * amplitude_draw).max(0.0),
    }
}

/// Transverse dephasing over `dt` seconds with coherence time `t2`.
pub fn dephase(state: BlochState, dt: f64, t2: f64) -> BlochState {
    if dt == 0.0 || t2.is_infinite() {
        return state;
    }
    let k = (-dt / t2).exp();
    BlochState::new(state.bx * k, state.by * k, state.bz)
}

/// Uniform contraction toward the fully mixed state over `dt` seconds.
pub fn depolarize(state: BlochState, dt: f64, rate: f64) -> BlochState {
    if rate == 0.0 || dt == 0.0 {
        return state;
    }
    let k = (-rate * dt).exp();
    BlochState::new(state.bx * k, state.by * k, state.bz * k)
}

/// Trajectory realization of [`depolarize`]: with probability
/// `1 - exp(-rate * dt)` the state jumps to the fully mixed point,
/// otherwise it is left untouched. Always consumes exactly one draw.
pub fn depolarize_jump(state: BlochState, dt: f64, rate: f64, rng: &mut Stream) -> BlochState {
    let p_jump = 1.0 - (-rate * dt).exp();
    if rng.uniform() < p_jump {
        BlochState::new(0.0, 0.0, 0.0)
    } else {
        state
    }
}

/// Apply per-shot pulse distortions: stretch the duration by
/// `duration_shift` (clamped at zero), scale the drive rate by
/// `amplitude_factor` (clamped at zero), and add `extra_detuning` to the
/// pulse's detuning. Phase is never touched.
pub fn effective_pulse(
    nominal: &PulseSpec,
    duration_shift: f64,
    amplitude_factor: f64,
    extra_detuning: f64,
) -> PulseSpec {
    PulseSpec {
        rabi_rate: (nominal.rabi_rate * amplitude_factor).max(0.0),
        phase: nominal.phase,
        duration: (nominal.duration + duration_shift).max(0.0),
        detuning: nominal.detuning + extra_detuning,
    }
}

/// Contrast factor of a measurement with symmetric flip probability `q`:
/// the measured z component is the true one times `1 - 2 q`.
pub fn readout_contrast(q: f64) -> f64 {
    1.0 - 2.0 * q
}
