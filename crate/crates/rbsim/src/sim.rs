//! Slot-by-slot simulation of compiled schedules on noisy atoms.
//!
//! Evolution rules per slot kind:
//!
//! * `Pulse`: the nominal pulse is stretched by the duration offset scaled
//!   with its nominal angle (a full flip gains twice the offset of a
//!   quarter turn), its drive rate is scaled by the atom's amplitude factor
//!   and an optional per-pulse jitter draw, and its detuning becomes the
//!   pulse-group detuning. Dephasing does not commute with driven rotation,
//!   so the pulse is split into `pulse_substeps` equal rotations with half
//!   the substep's dephasing applied before and after each (symmetric
//!   splitting). Depolarization commutes with rotations and is applied once
//!   over the stretched duration.
//! * `FrameIdle`: a silent stand-in for a pulse. It stretches exactly like
//!   the pulse it replaces, precesses at minus the pulse-group detuning,
//!   dephases, and depolarizes. Precession and dephasing commute, so no
//!   splitting is needed.
//! * `Wait`: pure free evolution of fixed duration (never stretched),
//!   precessing at minus the wait-group detuning.
//!
//! Holds between consecutive slots (`hold_between`) evolve like `Wait`
//! slots of the hold duration, skipped entirely when the hold is zero.
//!
//! Detuning groups: pulses and frame idles see `systematic + static +
//! carrier_offset`; waits and holds see `systematic + static +
//! wait_detuning`. The dials let experiments move the drive carrier (which
//! shifts every pulse) or scan an effective free-evolution detuning
//! (Ramsey/echo fringes) independently.
//!
//! Draw contract per job: one amplitude stream keyed
//! (`master_seed`, "pulse_amp", key) and one trajectory stream keyed
//! (`master_seed`, "scatter", key). Each simulated pulse draws one
//! amplitude factor iff `amplitude_noise_sigma > 0`, in schedule order with
//! the preparation flip first and the readout flip last. In trajectory
//! scattering mode every slot, every nonzero hold, and both analysis flips
//! draw one jump decision in the same order.

use crate::bloch::{detuned_rotation_map, z_rotation_map, BlochState, PulseSpec};
use crate::noise::{
    dephase, depolarize, depolarize_jump, effective_pulse, readout_contrast, AtomInstance,
    NoiseConfig, ScatteringMode,
};
use crate::rng::Stream;
use crate::sequences::{CompiledSchedule, Slot, TimingConfig};
use std::f64::consts::{FRAC_PI_2, PI};

/// Experiment-level detuning and duration dials, all zero by default.
/// Units: rad/s for the detunings, seconds per quarter-turn-equivalent for
/// the duration offset (it adds to the noise model's `duration_offset`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DialSettings {
    /// Shift of the drive carrier; detunes every pulse and frame idle.
    pub carrier_offset: f64,
    /// Extra detuning during waits and holds only.
    pub wait_detuning: f64,
    /// Extra pulse stretching on top of the noise model's offset.
    pub extra_duration_offset: f64,
}

/// Everything fixed for the duration of one simulated job.
#[derive(Debug, Clone, Copy)]
pub struct ShotContext<'a> {
    pub noise: &'a NoiseConfig,
    pub atom: AtomInstance,
    pub dial: DialSettings,
}

impl ShotContext<'_> {
    fn pulse_group_detuning(&self) -> f64 {
        self.noise.systematic_detuning + self.atom.static_detuning + self.dial.carrier_offset
    }

    fn wait_group_detuning(&self) -> f64 {
        self.noise.systematic_detuning + self.atom.static_detuning + self.dial.wait_detuning
    }

    fn duration_shift(&self, nominal_angle: f64) -> f64 {
        (self.noise.duration_offset + self.dial.extra_duration_offset)
            * (nominal_angle / FRAC_PI_2)
    }

    fn apply_depolarization(
        &self,
        state: BlochState,
        dt: f64,
        scatter: &mut Stream,
    ) -> BlochState {
        match self.noise.scattering_mode {
            ScatteringMode::Channel => depolarize(state, dt, self.noise.depolarizing_rate),
            ScatteringMode::Trajectory => {
                depolarize_jump(state, dt, self.noise.depolarizing_rate, scatter)
            }
        }
    }
}

/// Evolve a state through one noisy pulse.
pub fn evolve_pulse(
    state: BlochState,
    nominal: &PulseSpec,
    ctx: &ShotContext,
    amp: &mut Stream,
    scatter: &mut Stream,
) -> BlochState {
    let eps = if ctx.noise.amplitude_noise_sigma > 0.0 {
        ctx.noise.amplitude_noise_sigma * amp.normal()
    } else {
        0.0
    };
    let factor = ctx.atom.amplitude_factor * (1.0 + eps);
    let pulse = effective_pulse(
        nominal,
        ctx.duration_shift(nominal.nominal_angle()),
        factor,
        ctx.pulse_group_detuning(),
    );

    let mut state = state;
    if pulse.duration > 0.0 {
        let n = ctx.noise.pulse_substeps;
        let sub = PulseSpec { duration: pulse.duration / n as f64, ..pulse };
        let map = detuned_rotation_map(&sub);
        let half = 0.5 * sub.duration;
        for _ in 0..n {
            state = dephase(state, half, ctx.noise.t2);
            state = map.apply(state);
            state = dephase(state, half, ctx.noise.t2);
        }
    }
    ctx.apply_depolarization(state, pulse.duration, scatter)
}

fn evolve_free(
    state: BlochState,
    duration: f64,
    detuning: f64,
    ctx: &ShotContext,
    scatter: &mut Stream,
) -> BlochState {
    let mut state = state;
    if duration > 0.0 {
        if detuning != 0.0 {
            state = z_rotation_map(-detuning * duration).apply(state);
        }
        state = dephase(state, duration, ctx.noise.t2);
    }
    ctx.apply_depolarization(state, duration, scatter)
}

/// Evolve a state through a frame idle (a stretched silent pulse slot).
pub fn evolve_idle(
    state: BlochState,
    duration: f64,
    nominal_angle: f64,
    ctx: &ShotContext,
    scatter: &mut Stream,
) -> BlochState {
    let stretched = (duration + ctx.duration_shift(nominal_angle)).max(0.0);
    evolve_free(state, stretched, ctx.pulse_group_detuning(), ctx, scatter)
}

/// Evolve a state through a wait of fixed duration.
pub fn evolve_wait(
    state: BlochState,
    duration: f64,
    ctx: &ShotContext,
    scatter: &mut Stream,
) -> BlochState {
    evolve_free(state, duration, ctx.wait_group_detuning(), ctx, scatter)
}

/// Run a full schedule, inserting the hold between consecutive slots.
pub fn run_schedule(
    initial: BlochState,
    schedule: &CompiledSchedule,
    ctx: &ShotContext,
    amp: &mut Stream,
    scatter: &mut Stream,
) -> BlochState {
    let mut state = initial;
    for (i, slot) in schedule.slots.iter().enumerate() {
        state = match slot {
            Slot::Pulse(p) => evolve_pulse(state, p, ctx, amp, scatter),
            Slot::FrameIdle { duration, nominal_angle } => {
                evolve_idle(state, *duration, *nominal_angle, ctx, scatter)
            }
            Slot::Wait { duration } => evolve_wait(state, *duration, ctx, scatter),
        };
        if i + 1 < schedule.slots.len() && schedule.hold_between > 0.0 {
            state = evolve_wait(state, schedule.hold_between, ctx, scatter);
        }
    }
    state
}

/// Simulate one job end to end and return the probability that the
/// measurement matches the schedule's expected outcome.
///
/// State preparation transfers population with a flip of duration
/// `t_prep` simulated on its own sphere from the far pole; its final z
/// component becomes the qubit's initial polarization (transverse
/// components are discarded, modeling incoherent preparation). Readout
/// symmetrically simulates a `t_readout` flip from the near pole; its
/// transfer efficiency scales the measured z component, as does the
/// symmetric flip probability. Zero-duration analysis flips are treated as
/// perfect and consume no draws.
pub fn run_job(
    schedule: &CompiledSchedule,
    timing: &TimingConfig,
    noise: &NoiseConfig,
    dial: DialSettings,
    atom: AtomInstance,
    master_seed: u64,
    key: [u64; 4],
) -> f64 {
    let ctx = ShotContext { noise, atom, dial };
    let mut amp = Stream::new(master_seed, "pulse_amp", &key);
    let mut scatter = Stream::new(master_seed, "scatter", &key);

    let init_bz = if timing.t_prep > 0.0 {
        let prep = PulseSpec {
            rabi_rate: PI / timing.t_prep,
            phase: 0.0,
            duration: timing.t_prep,
            detuning: 0.0,
        };
        evolve_pulse(BlochState::new(0.0, 0.0, -1.0), &prep, &ctx, &mut amp, &mut scatter).bz
    } else {
        1.0
    };

    let state = run_schedule(
        BlochState::new(0.0, 0.0, init_bz),
        schedule,
        &ctx,
        &mut amp,
        &mut scatter,
    );

    let eta = if timing.t_readout > 0.0 {
        let read = PulseSpec {
            rabi_rate: PI / timing.t_readout,
            phase: 0.0,
            duration: timing.t_readout,
            detuning: 0.0,
        };
        -evolve_pulse(BlochState::new(0.0, 0.0, 1.0), &read, &ctx, &mut amp, &mut scatter).bz
    } else {
        1.0
    };

    let bz_meas = state.bz * eta * readout_contrast(noise.spam_flip_prob);
    let pole_sign = if schedule.expected_outcome == 0 { 1.0 } else { -1.0 };
    0.5 * (1.0 + pole_sign * bz_meas)
}
