//! Exact single-qubit dynamics on the Bloch sphere.
//!
//! States are real 3-vectors (mixed states lie inside the unit ball), and
//! every operation — resonant or detuned square pulses, free precession,
//! noise channels — is an affine map on that vector. The drive Hamiltonian
//! convention, fixed once for the whole crate, is
//!
//! ```text
//! H = (rabi/2) (cos(phase) sx + sin(phase) sy) - (detuning/2) sz,
//! detuning = drive frequency - qubit frequency,  U = exp(-i H t),
//! ```
//!
//! which makes a pulse a right-handed rotation by `sqrt(rabi^2+detuning^2)*t`
//! about the tilted axis `(rabi cos(phase), rabi sin(phase), -detuning)`,
//! and free evolution under detuning `d` a rotation by `-d*t` about z.
//! Gates with a negative sense are realized as `phase + pi` with a positive
//! angle, the way a phase-switched synthesizer produces them.

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

/// Bloch vector of a (possibly mixed) single-qubit state.
///
/// `bz = +1` is the qubit ground-manifold reference state whose population
/// the readout reports; `bz = -1` is the other z eigenstate; (0,0,0) is the
/// fully depolarized state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochState {
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
}

impl BlochState {
    pub const fn new(bx: f64, by: f64, bz: f64) -> Self {
        BlochState { bx, by, bz }
    }

    /// z eigenstate indexed by measurement outcome: 0 -> +z, 1 -> -z.
    pub const fn pole(outcome: u8) -> Self {
        if outcome == 0 {
            BlochState::new(0.0, 0.0, 1.0)
        } else {
            BlochState::new(0.0, 0.0, -1.0)
        }
    }

    pub fn vector(&self) -> Vector3<f64> {
        Vector3::new(self.bx, self.by, self.bz)
    }

    pub fn from_vector(v: Vector3<f64>) -> Self {
        BlochState::new(v.x, v.y, v.z)
    }

    pub fn norm(&self) -> f64 {
        self.vector().norm()
    }

    /// Physical states fit inside the unit ball (pure states on its surface).
    pub fn is_physical(&self) -> bool {
        self.norm() <= 1.0 + 1e-12
    }
}

/// One square drive pulse: constant Rabi rate and phase over `duration`,
/// with `detuning` = drive minus qubit angular frequency. All quantities are
/// SI (rad/s, s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSpec {
    pub rabi_rate: f64,
    pub phase: f64,
    pub duration: f64,
    pub detuning: f64,
}

impl PulseSpec {
    /// Rotation angle the pulse would produce on resonance.
    pub fn nominal_angle(&self) -> f64 {
        self.rabi_rate * self.duration
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi_rate >= 0.0 && self.rabi_rate.is_finite()) {
            return Err(Error::invalid_input("pulse rabi_rate must be finite and >= 0"));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid_input("pulse duration must be finite and >= 0"));
        }
        if !self.phase.is_finite() || !self.detuning.is_finite() {
            return Err(Error::invalid_input("pulse phase and detuning must be finite"));
        }
        Ok(())
    }
}

/// Affine map `b -> linear*b + offset` on Bloch vectors. All maps produced
/// by this module are rotations (orthogonal, zero offset); noise channels
/// use the same representation for contractions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineBlochMap {
    pub linear: Matrix3<f64>,
    pub offset: Vector3<f64>,
}

impl AffineBlochMap {
    pub fn identity() -> Self {
        AffineBlochMap {
            linear: Matrix3::identity(),
            offset: Vector3::zeros(),
        }
    }

    pub fn apply(&self, state: BlochState) -> BlochState {
        BlochState::from_vector(self.linear * state.vector() + self.offset)
    }

    /// `self.compose(&inner)` applies `inner` first, then `self`.
    pub fn compose(&self, inner: &AffineBlochMap) -> AffineBlochMap {
        AffineBlochMap {
            linear: self.linear * inner.linear,
            offset: self.linear * inner.offset + self.offset,
        }
    }
}

/// Rodrigues rotation by `angle` about the unit axis `axis`.
pub fn rotation_about(axis: Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    let cross = Matrix3::new(
        0.0, -axis.z, axis.y,
        axis.z, 0.0, -axis.x,
        -axis.y, axis.x, 0.0,
    );
    Matrix3::identity() * c + cross * s + axis * axis.transpose() * (1.0 - c)
}

/// Resonant rotation by `angle` about the equatorial axis at `phase`
/// (`(cos(phase), sin(phase), 0)`).
pub fn rotation_map(phase: f64, angle: f64) -> AffineBlochMap {
    let axis = Vector3::new(phase.cos(), phase.sin(), 0.0);
    AffineBlochMap {
        linear: rotation_about(axis, angle),
        offset: Vector3::zeros(),
    }
}

/// Generalized Rabi rotation of a detuned square pulse: angle
/// `sqrt(rabi^2 + detuning^2) * duration` about the tilted axis
/// `(rabi cos(phase), rabi sin(phase), -detuning)` (normalized). Reduces to
/// [`rotation_map`] on resonance and to free precession (`-detuning *
/// duration` about z) with the drive off.
pub fn detuned_rotation_map(pulse: &PulseSpec) -> AffineBlochMap {
    let gen_rabi = pulse.rabi_rate.hypot(pulse.detuning);
    let angle = gen_rabi * pulse.duration;
    if angle == 0.0 {
        return AffineBlochMap::identity();
    }
    let axis = Vector3::new(
        pulse.rabi_rate * pulse.phase.cos() / gen_rabi,
        pulse.rabi_rate * pulse.phase.sin() / gen_rabi,
        -pulse.detuning / gen_rabi,
    );
    AffineBlochMap {
        linear: rotation_about(axis, angle),
        offset: Vector3::zeros(),
    }
}

/// Rotation about +z by `angle` (frame changes, free precession).
pub fn z_rotation_map(angle: f64) -> AffineBlochMap {
    AffineBlochMap {
        linear: rotation_about(Vector3::new(0.0, 0.0, 1.0), angle),
        offset: Vector3::zeros(),
    }
}

/// Populations of the two z eigenstates: `(p0, p1) = ((1+bz)/2, (1-bz)/2)`.
pub fn z_populations(state: BlochState) -> (f64, f64) {
    (0.5 * (1.0 + state.bz), 0.5 * (1.0 - state.bz))
}

/// Overlap of `state` with the pure state `ideal`:
/// `F = (1 + b . b_ideal) / 2`. The ideal state must be unit length.
pub fn state_fidelity(state: BlochState, ideal: BlochState) -> Result<f64> {
    if (ideal.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid_input(format!(
            "ideal state must be pure (unit Bloch vector); |b| = {}",
            ideal.norm()
        )));
    }
    Ok(0.5 * (1.0 + state.vector().dot(&ideal.vector())))
}
