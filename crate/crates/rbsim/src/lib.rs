//! Simulator for single-qubit randomized benchmarking on a driven two-level
//! system, built around three layers:
//!
//! * exact Bloch-vector dynamics for resonant and detuned square pulses
//!   ([`bloch`]), with noise channels for Markovian dephasing, static
//!   ensemble disorder, systematic detuning, pulse-duration and amplitude
//!   errors, depolarization, and readout flips ([`noise`]);
//! * randomized-benchmarking sequence generation with Pauli-frame tracking,
//!   calculated recovery pulses, and compilation to timed pulse schedules
//!   ([`sequences`]), plus orchestration of the full experiment set —
//!   benchmarking decays, Ramsey fringes, spin echo, detuning/duration
//!   sweeps, hold-time scans, and the refocusing study ([`experiments`]);
//! * weighted nonlinear least-squares fitting of the resulting datasets
//!   (decay law, gaussians, exponentials, sinusoids) with parameter
//!   covariances and bootstrap cross-checks ([`fit`]).
//!
//! Everything is deterministic: random draws come from explicitly keyed
//! counter streams ([`rng`]), so a master seed reproduces every dataset
//! byte for byte regardless of worker count.

pub mod bloch;
pub mod config;
pub mod experiments;
pub mod fit;
pub mod noise;
pub mod output;
pub mod rng;
pub mod sequences;
pub mod sim;
pub mod suite;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A state, pulse, or map argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A configuration file or section failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// An input CSV did not match the documented layout.
    #[error("malformed CSV: {0}")]
    CsvFormat(String),
    /// The optimizer did not reach the convergence tolerances.
    #[error("fit did not converge: model {model}, {iterations} iterations, best chi2 {best_chi2:.6e}")]
    FitNonConvergence {
        model: String,
        iterations: usize,
        best_chi2: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}
