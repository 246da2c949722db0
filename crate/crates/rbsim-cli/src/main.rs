//! `rbsim` command line: loads a run configuration, dispatches one of the
//! packaged experiments, and writes its artifacts — dataset CSV, plot
//! columns, fit JSON, and a metadata sidecar that replays the run. Also
//! exposes standalone curve fitting over external CSV data and the frozen
//! reproduction suite.
//!
//! Exit codes: 0 success; 2 configuration or input-CSV errors; 3 fit
//! non-convergence (datasets are still written); 1 anything else.

use clap::{Args, Parser, Subcommand};
use rbsim::config::{Overrides, RunConfig};
use rbsim::experiments::{
    run_detuning_sweep, run_duration_sweep, run_hold_time, run_ramsey, run_rb,
    run_refocusing_study, run_spin_echo, ExperimentConfig, ScanDataset,
};
use rbsim::fit::{
    fit_exponential, fit_gaussian, fit_gaussian_damped_sinusoid, fit_model, DecayFit, FitOptions,
    FitReport, ModelKind,
};
use rbsim::output::{
    decay_fit_json, read_xy_csv, sidecar, write_echo_amplitudes, write_echo_fringes,
    write_hold_time, write_json, write_rb_plot, write_rb_results, write_scan,
};
use rbsim::suite::{run_all, summary_json, summary_table};
use rbsim::Error;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Source revision baked in by the build script, falling back to the crate
/// version in builds without git metadata.
const VERSION: &str = match option_env!("RBSIM_GIT_VERSION") {
    Some(v) => v,
    None => env!("CARGO_PKG_VERSION"),
};

#[derive(Parser)]
#[command(name = "rbsim", version = VERSION, about = "Single-qubit randomized-benchmarking simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full benchmarking decay over every (gate draw, randomization draw,
    /// truncation) job; fits the two-parameter decay law.
    Rb(RunArgs),
    /// Two-pulse detuned fringe scan against pulse separation.
    Ramsey(RunArgs),
    /// Detuned echo: fringe amplitude against total delay, flip in the middle.
    Echo(RunArgs),
    /// Benchmarking fidelity at fixed truncation against carrier detuning.
    SweepDetuning(RunArgs),
    /// Benchmarking fidelity at fixed truncation against a per-quarter-turn
    /// pulse-duration offset.
    SweepDuration(RunArgs),
    /// Benchmarking fidelity against idle gaps inserted between every pulse.
    HoldTime(RunArgs),
    /// Benchmarking with every channel off except static disorder: measures
    /// the error floor the randomization fails to refocus.
    Refocus(RunArgs),
    /// Fit a named model to the x,y[,yerr] columns of a CSV file.
    Fit(FitArgs),
    /// Run the frozen reproduction checks and write the summary.
    PaperSuite(SuiteArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (TOML or JSON, or a metadata sidecar written by a
    /// previous run), or the literal `paper_defaults` for the packaged
    /// benchmark-system preset.
    #[arg(long, default_value = "paper_defaults")]
    config: String,
    /// Output directory for artifacts (default: the config's `output_dir`,
    /// else the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Override for the number of sampled atoms.
    #[arg(long)]
    ensemble: Option<usize>,
    /// Override for finite measurement shots per point (default: exact
    /// probabilities).
    #[arg(long)]
    shots: Option<u64>,
    /// Worker-thread count; results are byte-identical for any value.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct FitArgs {
    /// Model name: rb, gaussian, exponential, sinusoid, damped_sinusoid, or
    /// gaussian_damped_sinusoid.
    #[arg(long)]
    model: String,
    /// Input CSV with a header row and x,y[,yerr] columns in that order.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output JSON path (default: print the report to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Iteration budget for the optimizer.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct SuiteArgs {
    /// Master seed fed to every check.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Directory for `suite_summary.json`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// A failure to report: carries the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidInput(_) | Error::InvalidConfig(_) | Error::CsvFormat(_) => 2,
            Error::FitNonConvergence { .. } => 3,
            Error::Io(_) => 1,
        };
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Rb(a) => with_config("rb", &a, cmd_rb),
        Command::Ramsey(a) => with_config("ramsey", &a, cmd_ramsey),
        Command::Echo(a) => with_config("echo", &a, cmd_echo),
        Command::SweepDetuning(a) => with_config("sweep-detuning", &a, cmd_sweep_detuning),
        Command::SweepDuration(a) => with_config("sweep-duration", &a, cmd_sweep_duration),
        Command::HoldTime(a) => with_config("hold-time", &a, cmd_hold_time),
        Command::Refocus(a) => with_config("refocus", &a, cmd_refocus),
        Command::Fit(a) => cmd_fit(&a),
        Command::PaperSuite(a) => cmd_suite(&a),
    }
}

/// Shared experiment preamble: load the config, refuse a config written for
/// a different experiment, bake in command-line overrides (so the emitted
/// sidecar replays without flags), create the output directory, write the
/// sidecar, then run the command body.
fn with_config(
    name: &str,
    args: &RunArgs,
    body: fn(&RunConfig, &ExperimentConfig, &Path) -> Result<(), Failure>,
) -> Result<(), Failure> {
    let mut config = load_config(&args.config)?;
    if let Some(stated) = &config.experiment {
        if stated != name {
            return Err(Failure::new(
                2,
                format!("configuration is for experiment '{stated}' but the command is '{name}'"),
            ));
        }
    }
    config.apply_overrides(&Overrides {
        seed: args.seed,
        ensemble: args.ensemble,
        shots: args.shots,
        workers: args.workers,
    });
    config.experiment = Some(name.to_string());
    if let Some(out) = &args.out {
        config.output_dir = Some(out.display().to_string());
    }

    let out = PathBuf::from(config.output_dir.as_deref().unwrap_or("."));
    std::fs::create_dir_all(&out)
        .map_err(|e| Failure::new(1, format!("creating {}: {e}", out.display())))?;
    if let Some(n) = config.run.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::new(1, format!("thread pool: {e}")))?;
    }

    let experiment = config.experiment()?;
    let meta = out.join(format!("{}_meta.json", name.replace('-', "_")));
    write_json(&meta, &sidecar(name, &config, VERSION)?)?;
    println!("wrote {}", meta.display());
    body(&config, &experiment, &out)
}

fn load_config(spec: &str) -> Result<RunConfig, Failure> {
    if spec == "paper_defaults" {
        return Ok(RunConfig::paper_defaults());
    }
    RunConfig::load(Path::new(spec)).map_err(|e| match e {
        // A missing or unreadable config file is a configuration error.
        Error::Io(io) => Failure::new(2, format!("config {spec}: {io}")),
        other => other.into(),
    })
}

fn report_json(report: &FitReport) -> Result<serde_json::Value, Failure> {
    serde_json::to_value(report).map_err(|e| Failure::new(1, format!("json serialization: {e}")))
}

fn write_artifact(path: &Path, value: &serde_json::Value) -> Result<(), Failure> {
    write_json(path, value)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_rb(config: &RunConfig, experiment: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let dataset = run_rb(experiment, &config.rb_plan())?;
    let results = out.join("rb_results.csv");
    write_rb_results(&results, &dataset)?;
    println!("wrote {}", results.display());
    let plot = out.join("rb_plot.csv");
    write_rb_plot(&plot, &dataset)?;
    println!("wrote {}", plot.display());

    let fit = dataset.fit()?;
    write_artifact(&out.join("rb_fit.json"), &decay_fit_json(&fit))?;
    print_decay(&fit);
    Ok(())
}

fn cmd_refocus(config: &RunConfig, experiment: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let study = run_refocusing_study(experiment, &config.refocus_plan())?;
    let results = out.join("refocus_results.csv");
    write_rb_results(&results, &study.dataset)?;
    println!("wrote {}", results.display());
    let plot = out.join("refocus_plot.csv");
    write_rb_plot(&plot, &study.dataset)?;
    println!("wrote {}", plot.display());

    write_artifact(&out.join("refocus_fit.json"), &decay_fit_json(&study.fit))?;
    print_decay(&study.fit);
    Ok(())
}

fn print_decay(fit: &DecayFit) {
    println!(
        "d_if = {:.4e} +- {:.4e}   d = {:.4e} +- {:.4e}   e_g = {:.4e} +- {:.4e}",
        fit.d_if(),
        fit.d_if_err(),
        fit.d(),
        fit.d_err(),
        fit.e_g(),
        fit.e_g_err()
    );
}

fn cmd_ramsey(config: &RunConfig, experiment: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let params = config.ramsey_params()?;
    let scan = run_ramsey(experiment, params.detuning, &params.delays)?;
    let csv = out.join("ramsey.csv");
    write_scan(&csv, &scan, ["delay_s", "p0", "p0_sem"], 1.0)?;
    println!("wrote {}", csv.display());

    // Unit weights: ensemble spread collapses at zero delay, so
    // inverse-variance weighting would be dominated by that one point.
    let (x, y, _) = scan.columns();
    let fit = fit_gaussian_damped_sinusoid(&x, &y, None)?;
    write_artifact(&out.join("ramsey_fit.json"), &report_json(&fit)?)?;
    println!(
        "fringe frequency = {:.4} Hz   decay time = {:.4e} s",
        fit.param("freq").unwrap_or(f64::NAN),
        fit.param("tau").unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_echo(config: &RunConfig, experiment: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let params = config.echo_params()?;
    let data = run_spin_echo(experiment, &params.t_totals, &params.dt_scan, params.detuning)?;
    let amplitudes = out.join("echo_amplitudes.csv");
    write_echo_amplitudes(&amplitudes, &data)?;
    println!("wrote {}", amplitudes.display());
    let fringes = out.join("echo_fringes.csv");
    write_echo_fringes(&fringes, &data)?;
    println!("wrote {}", fringes.display());

    let good: Vec<_> = data.amplitudes.iter().filter(|a| !a.fit_failed).collect();
    let x: Vec<f64> = good.iter().map(|a| a.total_time).collect();
    let y: Vec<f64> = good.iter().map(|a| a.amplitude).collect();
    let fit = fit_exponential(&x, &y, None)?;
    write_artifact(&out.join("echo_fit.json"), &report_json(&fit)?)?;
    println!("echo decay time = {:.4e} s", fit.param("tau").unwrap_or(f64::NAN));
    Ok(())
}

fn cmd_sweep_detuning(
    config: &RunConfig,
    experiment: &ExperimentConfig,
    out: &Path,
) -> Result<(), Failure> {
    let (grid, plan) = config.detuning_sweep_params()?;
    let scan = run_detuning_sweep(experiment, &grid, &plan)?;
    sweep_artifacts(
        &scan,
        &out.join("sweep_detuning.csv"),
        &out.join("sweep_detuning_fit.json"),
        ["detuning_hz", "fidelity", "fidelity_sem"],
        1.0 / TAU,
        "Hz",
    )
}

fn cmd_sweep_duration(
    config: &RunConfig,
    experiment: &ExperimentConfig,
    out: &Path,
) -> Result<(), Failure> {
    let (grid, plan) = config.duration_sweep_params()?;
    let scan = run_duration_sweep(experiment, &grid, &plan)?;
    sweep_artifacts(
        &scan,
        &out.join("sweep_duration.csv"),
        &out.join("sweep_duration_fit.json"),
        ["duration_offset_s", "fidelity", "fidelity_sem"],
        1.0,
        "s",
    )
}

/// Writes a sweep dataset and a gaussian resonance fit in the same x units
/// as the CSV, so refitting the file reproduces the shipped parameters.
fn sweep_artifacts(
    scan: &ScanDataset,
    csv: &Path,
    fit_path: &Path,
    headers: [&str; 3],
    x_scale: f64,
    unit: &str,
) -> Result<(), Failure> {
    write_scan(csv, scan, headers, x_scale)?;
    println!("wrote {}", csv.display());

    let x: Vec<f64> = scan.rows.iter().map(|r| r.scan_value * x_scale).collect();
    let y: Vec<f64> = scan.rows.iter().map(|r| r.mean).collect();
    let fit = fit_gaussian(&x, &y, None)?;
    write_artifact(fit_path, &report_json(&fit)?)?;
    println!(
        "resonance peak = {:.4e} {unit}   width = {:.4e} {unit}",
        fit.param("x0").unwrap_or(f64::NAN),
        fit.param("w").unwrap_or(f64::NAN).abs()
    );
    Ok(())
}

fn cmd_hold_time(config: &RunConfig, experiment: &ExperimentConfig, out: &Path) -> Result<(), Failure> {
    let (holds, plan) = config.hold_params()?;
    let data = run_hold_time(experiment, &holds, &plan)?;
    let csv = out.join("hold_time.csv");
    write_hold_time(&csv, &data)?;
    println!("wrote {}", csv.display());

    match &data.fit {
        Some(fit) => {
            write_artifact(&out.join("hold_time_fit.json"), &report_json(fit)?)?;
            println!("decay constant = {:.4e} s", fit.param("tau").unwrap_or(f64::NAN));
            Ok(())
        }
        None => Err(Failure::new(3, "hold-time decay fit did not converge; dataset written")),
    }
}

fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let kind = ModelKind::from_name(&args.model).ok_or_else(|| {
        Failure::new(
            2,
            format!(
                "unknown fit model '{}' (expected rb, gaussian, exponential, sinusoid, \
                 damped_sinusoid, or gaussian_damped_sinusoid)",
                args.model
            ),
        )
    })?;
    let data = read_xy_csv(&args.input)?;
    let options = FitOptions {
        max_iterations: args.max_iter.unwrap_or(FitOptions::default().max_iterations),
    };
    let report = fit_model(kind, &data.x, &data.y, data.yerr.as_deref(), &options)?;
    let value = if kind == ModelKind::RbDecay {
        decay_fit_json(&DecayFit { report })
    } else {
        report_json(&report)?
    };
    match &args.out {
        Some(path) => write_artifact(path, &value),
        None => {
            let mut text = serde_json::to_string_pretty(&value)
                .map_err(|e| Failure::new(1, format!("json serialization: {e}")))?;
            text.push('\n');
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_suite(args: &SuiteArgs) -> Result<(), Failure> {
    let checks = run_all(args.seed);
    print!("{}", summary_table(&checks));
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::new(1, format!("creating {}: {e}", args.out.display())))?;
    let path = args.out.join("suite_summary.json");
    write_json(&path, &summary_json(&checks))?;
    println!("wrote {}", path.display());
    if checks.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(Failure::new(1, "reproduction suite: at least one check failed"))
    }
}
