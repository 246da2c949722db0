//! Sequence construction for randomized benchmarking.
//!
//! A benchmarking sequence interleaves `l` randomization flips with `l`
//! quarter-turn gates, then appends a three-slot recovery block (flip,
//! quarter turn, flip) that steers the ideal state onto a z eigenstate.
//! This module owns the operation alphabets, their deterministic sampling,
//! exact integer tracking of the ideal state, the recovery solver, and
//! compilation into a timed pulse schedule.
//!
//! Compilation replaces z flips by frame changes: the slot is kept as a
//! silent `FrameIdle` of the same duration and every later pulse has its
//! phase advanced by pi. Identity flips and omitted recovery pulses also
//! compile to `FrameIdle` so the slot grid never changes. The schedule
//! therefore always holds exactly `2 l + 3` slots.

use crate::bloch::{BlochState, PulseSpec};
use crate::rng::Stream;
use crate::{Error, Result};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// The standard truncation ladder: near-geometric spacing from a single
/// step out to 995, giving evenly spaced points on a log axis.
pub const DEFAULT_TRUNCATIONS: [usize; 15] =
    [1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 145, 235, 380, 615, 995];

/// Axis of a randomization flip. `I` idles, the others are pi rotations
/// about the named Bloch axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// A randomization slot: a pi flip about `pauli` (or an idle for `I`).
///
/// `sign` is the sense of the drive: a negative sign shifts the pulse phase
/// by pi. For a pi rotation both senses move every state identically, so
/// the sign only matters for the emitted waveform, not the ideal action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrOp {
    pub pauli: Pauli,
    pub sign: i8,
}

/// Equatorial drive axis of a quarter-turn gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DriveAxis {
    X,
    Y,
}

/// A computational slot: a rotation by `sign * pi/2` about `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CgOp {
    pub axis: DriveAxis,
    pub sign: i8,
}

/// Recovery block appended after the truncated random body. The quarter
/// turn is omitted (`pulse: None`) when the state sits on a pole after the
/// leading flip; the slot still exists in the compiled schedule as an idle.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryBlock {
    pub pre_pr: PrOp,
    pub pulse: Option<CgOp>,
    pub post_pr: PrOp,
    /// 0 if the sequence ideally ends on +z, 1 for -z.
    pub expected_outcome: u8,
}

/// The random material shared by every job of a benchmarking run: one gate
/// stream and one randomization stream per index, all long enough for the
/// largest truncation.
#[derive(Debug, Clone)]
pub struct RbSequenceSet {
    pub cg_streams: Vec<Vec<CgOp>>,
    pub pr_streams: Vec<Vec<PrOp>>,
    pub truncations: Vec<usize>,
    pub master_seed: u64,
}

impl RbSequenceSet {
    /// Number of (gate stream, randomization stream, truncation) jobs.
    pub fn job_count(&self) -> usize {
        self.cg_streams.len() * self.pr_streams.len() * self.truncations.len()
    }
}

/// Pulse durations and spacing for compiled schedules, in seconds.
///
/// `t_prep` and `t_readout` are the durations of the state-preparation and
/// analysis flips that bracket a schedule at simulation time; they are not
/// part of the compiled slot list. `t_hold` is inserted between every pair
/// of consecutive slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingConfig {
    pub t_half_pi: f64,
    pub t_pi: f64,
    pub t_hold: f64,
    pub t_prep: f64,
    pub t_readout: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            t_half_pi: 31.05e-6,
            t_pi: 62.1e-6,
            t_hold: 0.0,
            t_prep: 62.1e-6,
            t_readout: 62.1e-6,
        }
    }
}

impl TimingConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_half_pi", self.t_half_pi),
            ("t_pi", self.t_pi),
            ("t_hold", self.t_hold),
            ("t_prep", self.t_prep),
            ("t_readout", self.t_readout),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid_input(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.t_half_pi <= 0.0 {
            return Err(Error::invalid_input("t_half_pi must be positive"));
        }
        if (self.t_pi - 2.0 * self.t_half_pi).abs() > 1e-12 * self.t_pi.max(1e-30) {
            return Err(Error::invalid_input(format!(
                "t_pi must be exactly twice t_half_pi (got t_pi = {}, t_half_pi = {})",
                self.t_pi, self.t_half_pi
            )));
        }
        Ok(())
    }
}

/// One slot of a compiled schedule. `FrameIdle` is a silent slot standing
/// in for a pulse of `nominal_angle` (it stretches with pulse-duration
/// errors); `Wait` is pure free evolution that never stretches.
#[derive(Debug, Clone, PartialEq)]
pub enum Slot {
    Pulse(PulseSpec),
    FrameIdle { duration: f64, nominal_angle: f64 },
    Wait { duration: f64 },
}

impl Slot {
    pub fn duration(&self) -> f64 {
        match self {
            Slot::Pulse(p) => p.duration,
            Slot::FrameIdle { duration, .. } => *duration,
            Slot::Wait { duration } => *duration,
        }
    }
}

/// A fully timed schedule: the slot list, the hold inserted between each
/// pair of consecutive slots, the total wall-clock duration including
/// holds, and the ideal measurement outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledSchedule {
    pub slots: Vec<Slot>,
    pub hold_between: f64,
    pub total_duration: f64,
    pub expected_outcome: u8,
}

/// Draw one randomization slot: all four axes and both drive senses with
/// equal weight. Consumes exactly one stream value.
pub fn sample_pr(rng: &mut Stream) -> PrOp {
    let v = rng.index(8);
    let pauli = match v % 4 {
        0 => Pauli::I,
        1 => Pauli::X,
        2 => Pauli::Y,
        _ => Pauli::Z,
    };
    PrOp { pauli, sign: if v < 4 { 1 } else { -1 } }
}

/// Draw one computational gate: both axes and both senses with equal
/// weight. Consumes exactly one stream value.
pub fn sample_cg(rng: &mut Stream) -> CgOp {
    let v = rng.index(4);
    CgOp {
        axis: if v % 2 == 0 { DriveAxis::X } else { DriveAxis::Y },
        sign: if v < 2 { 1 } else { -1 },
    }
}

/// Build the shared sequence material for a run. Gate stream `i` is drawn
/// from the stream keyed (`master_seed`, "cg_stream", [i]); randomization
/// stream `j` from (`master_seed`, "pr_stream", [j]).
pub fn build_sequence_set(
    n_cg: usize,
    n_pr: usize,
    truncations: &[usize],
    master_seed: u64,
) -> Result<RbSequenceSet> {
    if n_cg == 0 || n_pr == 0 {
        return Err(Error::invalid_input("need at least one gate and one randomization stream"));
    }
    if truncations.is_empty() {
        return Err(Error::invalid_input("truncation list must not be empty"));
    }
    if truncations[0] == 0 {
        return Err(Error::invalid_input("truncations must be positive"));
    }
    if truncations.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid_input("truncations must be strictly ascending"));
    }
    let max_l = *truncations.last().unwrap();

    let cg_streams = (0..n_cg)
        .map(|i| {
            let mut rng = Stream::new(master_seed, "cg_stream", &[i as u64]);
            (0..max_l).map(|_| sample_cg(&mut rng)).collect()
        })
        .collect();
    let pr_streams = (0..n_pr)
        .map(|j| {
            let mut rng = Stream::new(master_seed, "pr_stream", &[j as u64]);
            (0..max_l).map(|_| sample_pr(&mut rng)).collect()
        })
        .collect();

    Ok(RbSequenceSet {
        cg_streams,
        pr_streams,
        truncations: truncations.to_vec(),
        master_seed,
    })
}

// --- exact ideal-state tracking -------------------------------------------
//
// Under the sequence alphabet the ideal state always sits on a signed
// coordinate axis, so it is tracked as an integer vector with components
// in {-1, 0, 1}. Quarter turns about the coordinate axis `a` by k quarter
// circles follow from the rotation formula with cos/sin in {-1, 0, 1}:
//   k = 1:  v' = (a.v) a + a x v
//   k = 2:  v' = 2 (a.v) a - v
//   k = 3:  v' = (a.v) a - a x v

type Cardinal = [i8; 3];

fn axis_vector(axis: usize) -> Cardinal {
    let mut a = [0i8; 3];
    a[axis] = 1;
    a
}

fn dot(a: Cardinal, b: Cardinal) -> i8 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Cardinal, b: Cardinal) -> Cardinal {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn rotate_cardinal(axis: usize, quarters: i32, v: Cardinal) -> Cardinal {
    let a = axis_vector(axis);
    let d = dot(a, v);
    let c = cross(a, v);
    match quarters.rem_euclid(4) {
        0 => v,
        1 => [d * a[0] + c[0], d * a[1] + c[1], d * a[2] + c[2]],
        2 => [2 * d * a[0] - v[0], 2 * d * a[1] - v[1], 2 * d * a[2] - v[2]],
        _ => [d * a[0] - c[0], d * a[1] - c[1], d * a[2] - c[2]],
    }
}

fn apply_pr(v: Cardinal, op: &PrOp) -> Cardinal {
    match op.pauli {
        Pauli::I => v,
        Pauli::X => rotate_cardinal(0, 2, v),
        Pauli::Y => rotate_cardinal(1, 2, v),
        Pauli::Z => rotate_cardinal(2, 2, v),
    }
}

fn apply_cg(v: Cardinal, op: &CgOp) -> Cardinal {
    let axis = match op.axis {
        DriveAxis::X => 0,
        DriveAxis::Y => 1,
    };
    rotate_cardinal(axis, op.sign as i32, v)
}

fn cardinal_to_state(v: Cardinal) -> BlochState {
    BlochState::new(v[0] as f64, v[1] as f64, v[2] as f64)
}

fn cardinal_from_state(b: BlochState) -> Result<Cardinal> {
    let mut v = [0i8; 3];
    for (i, comp) in [b.bx, b.by, b.bz].into_iter().enumerate() {
        v[i] = if (comp - 1.0).abs() < 1e-9 {
            1
        } else if (comp + 1.0).abs() < 1e-9 {
            -1
        } else if comp.abs() < 1e-9 {
            0
        } else {
            return Err(Error::invalid_input(format!(
                "state ({}, {}, {}) is not on a signed coordinate axis",
                b.bx, b.by, b.bz
            )));
        };
    }
    if v.iter().map(|c| c.abs() as i32).sum::<i32>() != 1 {
        return Err(Error::invalid_input(format!(
            "state ({}, {}, {}) is not on a signed coordinate axis",
            b.bx, b.by, b.bz
        )));
    }
    Ok(v)
}

/// Ideal state after the first `l` (randomization, gate) pairs, starting
/// from +z. Exact: the state is tracked with integer arithmetic.
pub fn ideal_trace(cg_stream: &[CgOp], pr_stream: &[PrOp], l: usize) -> BlochState {
    assert!(
        l <= cg_stream.len() && l <= pr_stream.len(),
        "truncation {l} exceeds stream length"
    );
    let mut v: Cardinal = [0, 0, 1];
    for i in 0..l {
        v = apply_pr(v, &pr_stream[i]);
        v = apply_cg(v, &cg_stream[i]);
    }
    cardinal_to_state(v)
}

/// Build a recovery block from already-drawn randomizations and a drawn
/// quarter-turn sense. The quarter turn's axis is the solved one: the
/// unique equatorial axis whose `pulse_sign * pi/2` rotation carries the
/// flipped state to a pole, or `None` if it already sits on a pole.
pub fn recovery_from_draws(
    ideal_pre: BlochState,
    pre_pr: PrOp,
    pulse_sign: i8,
    post_pr: PrOp,
) -> Result<RecoveryBlock> {
    if pulse_sign != 1 && pulse_sign != -1 {
        return Err(Error::invalid_input("pulse sign must be +1 or -1"));
    }
    let v0 = cardinal_from_state(ideal_pre)?;
    let v1 = apply_pr(v0, &pre_pr);

    let pulse = if v1[2] != 0 {
        None
    } else {
        [DriveAxis::X, DriveAxis::Y]
            .into_iter()
            .map(|axis| CgOp { axis, sign: pulse_sign })
            .find(|op| apply_cg(v1, op)[2] != 0)
    };
    debug_assert!(v1[2] != 0 || pulse.is_some(), "equatorial states always have a solving axis");

    let v2 = match &pulse {
        Some(op) => apply_cg(v1, op),
        None => v1,
    };
    let v3 = apply_pr(v2, &post_pr);
    debug_assert!(v3[2] != 0, "recovery must end on a pole");

    Ok(RecoveryBlock {
        pre_pr,
        pulse,
        post_pr,
        expected_outcome: if v3[2] > 0 { 0 } else { 1 },
    })
}

/// Draw and solve the recovery block for a sequence whose ideal state
/// before recovery is `ideal_pre`. Always consumes exactly three stream
/// values (leading flip, quarter-turn sense, trailing flip), even when the
/// quarter turn ends up omitted, so stream alignment is independent of the
/// state.
pub fn compute_recovery(ideal_pre: BlochState, rng: &mut Stream) -> Result<RecoveryBlock> {
    let pre_pr = sample_pr(rng);
    let pulse_sign = if rng.index(2) == 0 { 1 } else { -1 };
    let post_pr = sample_pr(rng);
    recovery_from_draws(ideal_pre, pre_pr, pulse_sign, post_pr)
}

fn axis_phase(axis: DriveAxis) -> f64 {
    match axis {
        DriveAxis::X => 0.0,
        DriveAxis::Y => FRAC_PI_2,
    }
}

fn sign_phase(sign: i8) -> f64 {
    if sign < 0 { PI } else { 0.0 }
}

/// Compile a truncated sequence plus its recovery block into a timed
/// schedule. Pulses are emitted resonant (`detuning` 0); noise models
/// adjust them at simulation time.
pub fn compile(
    cg_stream: &[CgOp],
    pr_stream: &[PrOp],
    l: usize,
    recovery: &RecoveryBlock,
    timing: &TimingConfig,
) -> CompiledSchedule {
    assert!(
        l <= cg_stream.len() && l <= pr_stream.len(),
        "truncation {l} exceeds stream length"
    );
    let flip_rabi = PI / timing.t_pi;
    let gate_rabi = FRAC_PI_2 / timing.t_half_pi;
    let mut frame = 0.0f64;
    let mut slots = Vec::with_capacity(2 * l + 3);

    let push_pr = |op: &PrOp, frame: &mut f64, slots: &mut Vec<Slot>| match op.pauli {
        Pauli::I => slots.push(Slot::FrameIdle { duration: timing.t_pi, nominal_angle: PI }),
        Pauli::Z => {
            *frame = (*frame + PI).rem_euclid(TAU);
            slots.push(Slot::FrameIdle { duration: timing.t_pi, nominal_angle: PI });
        }
        Pauli::X | Pauli::Y => {
            let base = if op.pauli == Pauli::X { 0.0 } else { FRAC_PI_2 };
            slots.push(Slot::Pulse(PulseSpec {
                rabi_rate: flip_rabi,
                phase: (base + sign_phase(op.sign) + *frame).rem_euclid(TAU),
                duration: timing.t_pi,
                detuning: 0.0,
            }));
        }
    };
    let push_cg = |op: &CgOp, frame: &f64, slots: &mut Vec<Slot>| {
        slots.push(Slot::Pulse(PulseSpec {
            rabi_rate: gate_rabi,
            phase: (axis_phase(op.axis) + sign_phase(op.sign) + *frame).rem_euclid(TAU),
            duration: timing.t_half_pi,
            detuning: 0.0,
        }));
    };

    for i in 0..l {
        push_pr(&pr_stream[i], &mut frame, &mut slots);
        push_cg(&cg_stream[i], &frame, &mut slots);
    }
    push_pr(&recovery.pre_pr, &mut frame, &mut slots);
    match &recovery.pulse {
        Some(op) => push_cg(op, &frame, &mut slots),
        None => slots.push(Slot::FrameIdle {
            duration: timing.t_half_pi,
            nominal_angle: FRAC_PI_2,
        }),
    }
    push_pr(&recovery.post_pr, &mut frame, &mut slots);

    let total_duration = schedule_duration(&slots, timing.t_hold);
    CompiledSchedule {
        slots,
        hold_between: timing.t_hold,
        total_duration,
        expected_outcome: recovery.expected_outcome,
    }
}

fn schedule_duration(slots: &[Slot], hold: f64) -> f64 {
    let mut total = 0.0;
    for slot in slots {
        total += slot.duration();
    }
    if slots.len() > 1 {
        total += (slots.len() - 1) as f64 * hold;
    }
    total
}

/// Render a schedule as plain text: three header lines, then one slot per
/// line as `kind phase rate_or_angle duration`. Pulse lines carry the
/// drive rate in rad/s (bit-exact round trip); idle lines carry the
/// nominal angle in rad; wait lines carry 0. Pulse detunings are not
/// serialized (schedules are written pre-noise, always resonant).
pub fn schedule_to_text(schedule: &CompiledSchedule) -> String {
    let mut out = String::new();
    out.push_str("# schedule v1\n");
    out.push_str(&format!("# expected_outcome {}\n", schedule.expected_outcome));
    out.push_str(&format!("# hold_s {}\n", schedule.hold_between));
    for slot in &schedule.slots {
        match slot {
            Slot::Pulse(p) => {
                out.push_str(&format!("pulse {} {} {}\n", p.phase, p.rabi_rate, p.duration));
            }
            Slot::FrameIdle { duration, nominal_angle } => {
                out.push_str(&format!("idle 0 {nominal_angle} {duration}\n"));
            }
            Slot::Wait { duration } => {
                out.push_str(&format!("wait 0 0 {duration}\n"));
            }
        }
    }
    out
}

/// Parse the text form produced by [`schedule_to_text`].
pub fn schedule_from_text(text: &str) -> Result<CompiledSchedule> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "# schedule v1" {
        return Err(Error::invalid_input(format!("unsupported schedule header: {header:?}")));
    }
    let outcome_line = lines.next().unwrap_or("");
    let expected_outcome: u8 = outcome_line
        .strip_prefix("# expected_outcome ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::invalid_input(format!("bad expected_outcome line: {outcome_line:?}")))?;
    if expected_outcome > 1 {
        return Err(Error::invalid_input("expected_outcome must be 0 or 1"));
    }
    let hold_line = lines.next().unwrap_or("");
    let hold_between: f64 = hold_line
        .strip_prefix("# hold_s ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::invalid_input(format!("bad hold_s line: {hold_line:?}")))?;

    let mut slots = Vec::new();
    for line in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::invalid_input(format!("slot line needs 4 fields: {line:?}")));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::invalid_input(format!("bad number {s:?} in slot line {line:?}")))
        };
        let phase = parse(fields[1])?;
        let value = parse(fields[2])?;
        let duration = parse(fields[3])?;
        if !duration.is_finite() || duration < 0.0 {
            return Err(Error::invalid_input(format!("bad duration in slot line {line:?}")));
        }
        match fields[0] {
            "pulse" => slots.push(Slot::Pulse(PulseSpec {
                rabi_rate: value,
                phase,
                duration,
                detuning: 0.0,
            })),
            "idle" => slots.push(Slot::FrameIdle { duration, nominal_angle: value }),
            "wait" => slots.push(Slot::Wait { duration }),
            other => return Err(Error::invalid_input(format!("unknown slot kind {other:?}"))),
        }
    }
    if slots.is_empty() {
        return Err(Error::invalid_input("schedule has no slots"));
    }
    let total_duration = schedule_duration(&slots, hold_between);
    Ok(CompiledSchedule {
        slots,
        hold_between,
        total_duration,
        expected_outcome,
    })
}
