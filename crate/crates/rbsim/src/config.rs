//! Run-configuration files: a strict, unit-annotated text layer over the
//! simulator's native structs.
//!
//! Files are TOML (JSON is accepted too, so an emitted metadata sidecar can
//! be replayed directly). Every physical key carries its unit in its name —
//! detunings are written in Hz and converted to rad/s here, never inside the
//! simulator. Unknown keys are rejected outright. A value of `0` disables
//! the coherence channels (`t2_s`, `t2_star_s`), since the disabled state is
//! an infinite time constant, which plain text handles poorly.
//!
//! `t2_star_s` follows the ensemble-contrast convention
//! `exp(-t^2 / (2 tau^2))`: the per-atom static-detuning spread is
//! `sigma = 1 / t2_star_s` rad/s.

use crate::experiments::{ExperimentConfig, RbPlan, SweepPlan};
use crate::noise::{NoiseConfig, ScatteringMode};
use crate::sequences::TimingConfig;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::Path;

/// A scan grid: either explicit values or a uniform `start + i * step` span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values(Vec<f64>),
    Linear { start: f64, step: f64, count: usize },
}

impl GridSpec {
    pub fn resolve(&self) -> Result<Vec<f64>> {
        let values = match self {
            GridSpec::Values(v) => v.clone(),
            GridSpec::Linear { start, step, count } => {
                if *count == 0 {
                    return Err(Error::invalid_config("grid count must be at least 1"));
                }
                (0..*count).map(|i| start + i as f64 * step).collect()
            }
        };
        if values.is_empty() {
            return Err(Error::invalid_config("grid must hold at least one value"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_config("grid values must be finite"));
        }
        Ok(values)
    }
}

/// File-side name for [`ScatteringMode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatteringModeName {
    Channel,
    Trajectory,
}

impl From<ScatteringModeName> for ScatteringMode {
    fn from(name: ScatteringModeName) -> Self {
        match name {
            ScatteringModeName::Channel => ScatteringMode::Channel,
            ScatteringModeName::Trajectory => ScatteringMode::Trajectory,
        }
    }
}

/// `[timing]` — pulse-schedule durations, all in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimingSection {
    pub t_half_pi_s: f64,
    pub t_pi_s: f64,
    pub t_hold_s: f64,
    pub t_prep_s: f64,
    pub t_readout_s: f64,
}

impl Default for TimingSection {
    fn default() -> Self {
        let t = TimingConfig::default();
        TimingSection {
            t_half_pi_s: t.t_half_pi,
            t_pi_s: t.t_pi,
            t_hold_s: t.t_hold,
            t_prep_s: t.t_prep,
            t_readout_s: t.t_readout,
        }
    }
}

/// `[noise]` — every channel off by default; `0` disables the time-constant
/// channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Markovian transverse coherence time, seconds; 0 disables.
    pub t2_s: f64,
    /// Ensemble dephasing time, seconds; 0 disables. Sets the static
    /// detuning spread to its reciprocal.
    pub t2_star_s: f64,
    /// Common drive-frequency offset, Hz.
    pub systematic_detuning_hz: f64,
    /// Added duration per quarter turn of nominal angle, seconds.
    pub pulse_duration_offset_s: f64,
    /// Fractional per-pulse drive-rate jitter (gaussian sigma).
    pub amplitude_noise_sigma: f64,
    /// Fractional per-atom drive-rate spread (gaussian sigma).
    pub amplitude_inhomogeneity_sigma: f64,
    /// Depolarization toward the fully mixed state, 1/s.
    pub depolarizing_rate_per_s: f64,
    /// Symmetric preparation/readout flip probability.
    pub spam_flip_prob: f64,
    /// Substeps interleaving dephasing with pulse rotation.
    pub pulse_substeps: usize,
    /// `"channel"` (deterministic contraction) or `"trajectory"` (jumps).
    pub scattering_mode: ScatteringModeName,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            t2_s: 0.0,
            t2_star_s: 0.0,
            systematic_detuning_hz: 0.0,
            pulse_duration_offset_s: 0.0,
            amplitude_noise_sigma: 0.0,
            amplitude_inhomogeneity_sigma: 0.0,
            depolarizing_rate_per_s: 0.0,
            spam_flip_prob: 0.0,
            pulse_substeps: 1,
            scattering_mode: ScatteringModeName::Channel,
        }
    }
}

/// `[run]` — seeding, ensemble statistics, and worker count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub ensemble_size: usize,
    /// Finite measurement statistics per data point; omit for exact
    /// probabilities.
    pub shots: Option<u64>,
    /// Worker threads; omit to use every core. Results never depend on it.
    pub workers: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 1, ensemble_size: 200, shots: None, workers: None }
    }
}

/// `[rb]` and `[refocus]` — benchmarking plan shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSection {
    pub n_cg: usize,
    pub n_pr: usize,
    /// Truncation ladder; omit for the standard one.
    pub truncations: Option<Vec<usize>>,
}

impl Default for PlanSection {
    fn default() -> Self {
        PlanSection { n_cg: 4, n_pr: 8, truncations: None }
    }
}

/// `[ramsey]` — two-pulse fringe scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RamseySection {
    pub detuning_hz: f64,
    pub delays_s: GridSpec,
}

impl Default for RamseySection {
    fn default() -> Self {
        RamseySection {
            detuning_hz: 1000.0,
            delays_s: GridSpec::Linear { start: 0.0, step: 0.3e-3, count: 46 },
        }
    }
}

/// `[echo]` — flip-refocused fringe scans over total delay `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EchoSection {
    pub detuning_hz: f64,
    pub t_totals_s: GridSpec,
    pub dt_scan_s: GridSpec,
}

impl Default for EchoSection {
    fn default() -> Self {
        EchoSection {
            detuning_hz: 1000.0,
            t_totals_s: GridSpec::Values(vec![0.0, 0.07, 0.14, 0.21, 0.28, 0.42]),
            dt_scan_s: GridSpec::Linear { start: 0.0, step: 1e-4, count: 16 },
        }
    }
}

/// Shared shape of the sweep and hold-time sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub n_cg: usize,
    pub n_pr: usize,
    pub truncation: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { n_cg: 4, n_pr: 4, truncation: 500 }
    }
}

/// `[sweep_detuning]` — fidelity vs drive-frequency offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetuningSweepSection {
    pub offsets_hz: GridSpec,
    #[serde(flatten)]
    pub plan: SweepSection,
}

impl Default for DetuningSweepSection {
    fn default() -> Self {
        DetuningSweepSection {
            offsets_hz: GridSpec::Linear { start: -400.0, step: 40.0, count: 21 },
            plan: SweepSection::default(),
        }
    }
}

/// `[sweep_duration]` — fidelity vs pulse-duration offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DurationSweepSection {
    pub offsets_s: GridSpec,
    #[serde(flatten)]
    pub plan: SweepSection,
}

impl Default for DurationSweepSection {
    fn default() -> Self {
        DurationSweepSection {
            offsets_s: GridSpec::Linear { start: -3e-6, step: 0.3e-6, count: 21 },
            plan: SweepSection::default(),
        }
    }
}

/// `[hold_time]` — fidelity vs inserted inter-slot gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoldSection {
    pub holds_s: GridSpec,
    #[serde(flatten)]
    pub plan: SweepSection,
}

impl Default for HoldSection {
    fn default() -> Self {
        HoldSection {
            holds_s: GridSpec::Linear { start: 0.0, step: 0.25e-3, count: 9 },
            plan: SweepSection::default(),
        }
    }
}

/// Command-line overrides folded into the config before anything is run or
/// echoed, so an emitted sidecar replays without flags.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub ensemble: Option<usize>,
    pub shots: Option<u64>,
    pub workers: Option<usize>,
}

/// A whole run-configuration file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Which experiment this file describes; commands refuse a mismatch.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    /// Where artifacts go; the command line may override it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub run: RunSection,
    pub timing: TimingSection,
    pub noise: NoiseSection,
    pub rb: PlanSection,
    pub refocus: PlanSection,
    pub ramsey: RamseySection,
    pub echo: EchoSection,
    pub sweep_detuning: DetuningSweepSection,
    pub sweep_duration: DurationSweepSection,
    pub hold_time: HoldSection,
}

/// Resolved `[ramsey]` parameters, in simulator units.
#[derive(Debug, Clone)]
pub struct RamseyParams {
    /// rad/s
    pub detuning: f64,
    /// seconds
    pub delays: Vec<f64>,
}

/// Resolved `[echo]` parameters, in simulator units.
#[derive(Debug, Clone)]
pub struct EchoParams {
    /// rad/s
    pub detuning: f64,
    /// seconds
    pub t_totals: Vec<f64>,
    /// seconds
    pub dt_scan: Vec<f64>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid_config(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid_config(e.to_string()))
    }

    /// Reads a file, picking the parser by extension (`.json`, else TOML).
    /// A metadata sidecar written by the output layer is accepted too: its
    /// embedded `config` object is loaded, so a run replays from its sidecar.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let parsed = if path.extension().and_then(|e| e.to_str()) == Some("json") {
            match serde_json::from_str::<serde_json::Value>(&text) {
                Ok(value) if value.get("config").is_some() && value.get("command").is_some() => {
                    serde_json::from_value(value["config"].clone())
                        .map_err(|e| Error::invalid_config(e.to_string()))
                }
                _ => Self::from_json_str(&text),
            }
        } else {
            Self::from_toml_str(&text)
        };
        parsed.map_err(|e| match e {
            Error::InvalidConfig(msg) => {
                Error::invalid_config(format!("{}: {msg}", path.display()))
            }
            other => other,
        })
    }

    /// The benchmark system this code models: 0.28 s transverse coherence,
    /// 25 ms ensemble dephasing, 0.2 1/s scattering, 0.9% readout flips, on
    /// the default 31.05/62.1 microsecond pulse timing.
    pub fn paper_defaults() -> Self {
        RunConfig {
            noise: NoiseSection {
                t2_s: 0.28,
                t2_star_s: 0.025,
                depolarizing_rate_per_s: 0.2,
                spam_flip_prob: 0.009,
                ..NoiseSection::default()
            },
            ..RunConfig::default()
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::invalid_config(e.to_string()))
    }

    pub fn to_json_value(&self) -> Result<serde_json::Value> {
        serde_json::to_value(self).map_err(|e| Error::invalid_config(e.to_string()))
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.run.seed = seed;
        }
        if let Some(ensemble) = o.ensemble {
            self.run.ensemble_size = ensemble;
        }
        if let Some(shots) = o.shots {
            self.run.shots = Some(shots);
        }
        if let Some(workers) = o.workers {
            self.run.workers = Some(workers);
        }
    }

    pub fn timing(&self) -> TimingConfig {
        TimingConfig {
            t_half_pi: self.timing.t_half_pi_s,
            t_pi: self.timing.t_pi_s,
            t_hold: self.timing.t_hold_s,
            t_prep: self.timing.t_prep_s,
            t_readout: self.timing.t_readout_s,
        }
    }

    pub fn noise(&self) -> Result<NoiseConfig> {
        let n = &self.noise;
        if !n.t2_star_s.is_finite() || n.t2_star_s < 0.0 {
            return Err(Error::invalid_config(format!(
                "noise.t2_star_s must be finite and non-negative, got {}",
                n.t2_star_s
            )));
        }
        let resolved = NoiseConfig {
            t2: if n.t2_s == 0.0 { f64::INFINITY } else { n.t2_s },
            static_detuning_sigma: if n.t2_star_s == 0.0 { 0.0 } else { 1.0 / n.t2_star_s },
            systematic_detuning: TAU * n.systematic_detuning_hz,
            duration_offset: n.pulse_duration_offset_s,
            amplitude_noise_sigma: n.amplitude_noise_sigma,
            amplitude_inhomogeneity_sigma: n.amplitude_inhomogeneity_sigma,
            depolarizing_rate: n.depolarizing_rate_per_s,
            spam_flip_prob: n.spam_flip_prob,
            pulse_substeps: n.pulse_substeps,
            scattering_mode: n.scattering_mode.into(),
        };
        resolved.validate()?;
        Ok(resolved)
    }

    /// The validated simulator configuration for this file.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let config = ExperimentConfig {
            timing: self.timing(),
            noise: self.noise()?,
            ensemble_size: self.run.ensemble_size,
            master_seed: self.run.seed,
            shots: self.run.shots,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn rb_plan(&self) -> RbPlan {
        plan_from(&self.rb)
    }

    pub fn refocus_plan(&self) -> RbPlan {
        plan_from(&self.refocus)
    }

    pub fn ramsey_params(&self) -> Result<RamseyParams> {
        Ok(RamseyParams {
            detuning: TAU * self.ramsey.detuning_hz,
            delays: self.ramsey.delays_s.resolve()?,
        })
    }

    pub fn echo_params(&self) -> Result<EchoParams> {
        Ok(EchoParams {
            detuning: TAU * self.echo.detuning_hz,
            t_totals: self.echo.t_totals_s.resolve()?,
            dt_scan: self.echo.dt_scan_s.resolve()?,
        })
    }

    /// Sweep grid in rad/s plus the sequence plan.
    pub fn detuning_sweep_params(&self) -> Result<(Vec<f64>, SweepPlan)> {
        let grid = self
            .sweep_detuning
            .offsets_hz
            .resolve()?
            .into_iter()
            .map(|hz| TAU * hz)
            .collect();
        Ok((grid, sweep_plan_from(&self.sweep_detuning.plan)))
    }

    /// Sweep grid in seconds plus the sequence plan.
    pub fn duration_sweep_params(&self) -> Result<(Vec<f64>, SweepPlan)> {
        Ok((
            self.sweep_duration.offsets_s.resolve()?,
            sweep_plan_from(&self.sweep_duration.plan),
        ))
    }

    /// Hold grid in seconds plus the sequence plan.
    pub fn hold_params(&self) -> Result<(Vec<f64>, SweepPlan)> {
        Ok((self.hold_time.holds_s.resolve()?, sweep_plan_from(&self.hold_time.plan)))
    }
}

fn plan_from(section: &PlanSection) -> RbPlan {
    let defaults = RbPlan::default();
    RbPlan {
        n_cg: section.n_cg,
        n_pr: section.n_pr,
        truncations: section.truncations.clone().unwrap_or(defaults.truncations),
    }
}

fn sweep_plan_from(section: &SweepSection) -> SweepPlan {
    SweepPlan { n_cg: section.n_cg, n_pr: section.n_pr, truncation: section.truncation }
}
