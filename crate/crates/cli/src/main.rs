//! Command-line front end: one verb per experiment plus plumbing verbs for
//! synthesis, single recoveries, plotting, and manifest replay.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use larmorcs::{
    basis_pursuit, build_schedule, derive_seed, dft, draw_indices, emit_svg, measure, replay,
    run_dynamic_range, run_multi_frequency, run_single_frequency, synthesize, Error,
    ExperimentConfig, MeasurementOperator, MeasurementRecord, PlotKind, RunManifest,
    SensingMode, SolverOptions, SWEEP_LEVELS, SWEEP_TAU0,
};

#[derive(Parser)]
#[command(name = "larmorcs", version, about = "Compressed-sensing recovery of Larmor precession records")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of a loaded experiment config.
#[derive(Args, Clone)]
struct Overrides {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Trials-per-level override.
    #[arg(long)]
    trials: Option<usize>,
    /// Sensing mode override: time | spectral.
    #[arg(long)]
    mode: Option<String>,
    /// Solver tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Schedule depth override (number of halvings K).
    #[arg(long)]
    levels: Option<usize>,
}

impl Overrides {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(trials) = self.trials {
            config.trials = trials;
        }
        if let Some(mode) = &self.mode {
            config.sensing_mode = SensingMode::from_str(mode)?;
        }
        if let Some(tol) = self.tol {
            config.solver.tolerance = tol;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(levels) = self.levels {
            config.max_level = levels;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the configured signal; write series.json and spectrum.json.
    Synth {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Recover one spectrum, either from stored operator/record JSON or from
    /// a config at a chosen level.
    Recover {
        /// Operator JSON (with --record).
        #[arg(long, requires = "record", conflicts_with = "config")]
        operator: Option<PathBuf>,
        /// Measurement record JSON (with --operator).
        #[arg(long, requires = "operator")]
        record: Option<PathBuf>,
        /// Experiment config JSON (alternative to --operator/--record).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Schedule level to sample when using --config (default: deepest).
        #[arg(long)]
        level: Option<usize>,
        /// Trial index for seed derivation when using --config.
        #[arg(long, default_value_t = 0)]
        trial: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        /// Output directory for operator/record/result JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single-frequency precision-scaling experiment.
    Scale {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Multi-frequency precision-scaling experiment.
    ScaleMulti {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Dynamic-range sweep over the accumulation-time grid.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Render a CSV artifact as SVG.
    Plot {
        /// Input CSV path.
        #[arg(long)]
        csv: PathBuf,
        /// Plot kind: scaling | sweep | phase.
        #[arg(long)]
        kind: String,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a manifest and byte-compare its CSV/SVG artifacts.
    Replay {
        /// Manifest JSON from a previous run.
        #[arg(long)]
        manifest: PathBuf,
        /// Scratch directory for the re-run (default: <manifest dir>/replay).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Minimal stderr logger; level from LARMORCS_LOG (error|warn|info|debug).
struct StderrLogger {
    level: log::LevelFilter,
}

impl log::Log for StderrLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= self.level
    }

    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            eprintln!("{}: {}", record.level().to_string().to_lowercase(), record.args());
        }
    }

    fn flush(&self) {}
}

fn init_logger() {
    let level = match std::env::var("LARMORCS_LOG").as_deref() {
        Ok("error") => log::LevelFilter::Error,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        Ok("off") => log::LevelFilter::Off,
        _ => log::LevelFilter::Warn,
    };
    let logger = Box::new(StderrLogger { level });
    if log::set_boxed_logger(logger).is_ok() {
        log::set_max_level(level);
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 2,
        Error::AllLevelsFailed(_) => 3,
        _ => 1,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text)?;
    Ok(())
}

fn cmd_synth(overrides: &Overrides) -> Result<(), Error> {
    let config = overrides.load()?;
    let series = synthesize(&config.signal)?;
    let spectrum = dft(&series)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let series_path = config.output_dir.join("series.json");
    let spectrum_path = config.output_dir.join("spectrum.json");
    write_json(&series_path, &series)?;
    write_json(&spectrum_path, &spectrum)?;
    println!(
        "synthesized {} samples ({} components) -> {}, {}",
        series.samples.len(),
        config.signal.components.len(),
        series_path.display(),
        spectrum_path.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_recover(
    operator: Option<&Path>,
    record: Option<&Path>,
    config: Option<&Path>,
    level: Option<usize>,
    trial: u64,
    seed: Option<u64>,
    mode: Option<&str>,
    tol: Option<f64>,
    out: Option<&Path>,
) -> Result<(), Error> {
    let mut solver = SolverOptions::default();
    if let Some(tol) = tol {
        solver.tolerance = tol;
    }
    let (op, rec, out_dir) = match (operator, record, config) {
        (Some(op_path), Some(rec_path), None) => {
            let raw: MeasurementOperator = read_json(op_path)?;
            // Reconstruct through the validating constructor.
            let op = MeasurementOperator::new(raw.mode, raw.n_points, raw.level, raw.indices)?;
            let rec: MeasurementRecord = read_json(rec_path)?;
            (op, rec, out.map(Path::to_path_buf))
        }
        (None, None, Some(config_path)) => {
            let mut config = ExperimentConfig::load(config_path)?;
            if let Some(seed) = seed {
                config.master_seed = seed;
            }
            if let Some(mode) = mode {
                config.sensing_mode = SensingMode::from_str(mode)?;
            }
            let schedule = build_schedule(config.signal.n_points, config.max_level)?;
            let level = level.unwrap_or(config.max_level);
            let n_k = *schedule.levels.get(level).ok_or_else(|| {
                Error::Config(format!(
                    "level {level} is outside the schedule 0..={}",
                    config.max_level
                ))
            })?;
            let series = synthesize(&config.signal)?;
            let indices = draw_indices(
                config.signal.n_points,
                n_k,
                derive_seed(config.master_seed, level as u64, trial),
            )?;
            let op = MeasurementOperator::new(config.sensing_mode, config.signal.n_points, level, indices)?;
            let rec = measure(&series, &op)?;
            solver = config.solver;
            if let Some(tol) = tol {
                solver.tolerance = tol;
            }
            (op, rec, Some(out.map(Path::to_path_buf).unwrap_or_else(|| config.output_dir.clone())))
        }
        _ => {
            return Err(Error::Config(
                "recover needs either --operator with --record, or --config".into(),
            ))
        }
    };
    let result = basis_pursuit(&op, &rec, &solver)?;
    println!(
        "level {} ({} of {} samples): residual {:.6e}, l1 {:.6e}, {} iterations, converged={}",
        op.level,
        op.indices.len(),
        op.n_points,
        result.residual_norm,
        result.l1_value,
        result.iterations,
        result.converged
    );
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir)?;
        write_json(&dir.join("operator.json"), &op)?;
        write_json(&dir.join("record.json"), &rec)?;
        write_json(&dir.join("result.json"), &result)?;
        println!("wrote operator.json, record.json, result.json in {}", dir.display());
    }
    Ok(())
}

fn print_scaling_summary(manifest: &RunManifest) {
    match manifest.fitted_exponent {
        Some(e) => println!("fitted exponent: {e:.4}"),
        None => println!("fitted exponent: not available (fewer than 3 usable levels)"),
    }
    if let (Some(k), Some(frac)) = (manifest.max_gain_level, manifest.max_gain_fraction) {
        println!(
            "max-gain level: k={k} (n_k = {} of {} samples, {:.1}%)",
            manifest.schedule[k],
            manifest.config.signal.n_points,
            frac * 100.0
        );
    }
    if let Some(peaks) = &manifest.detected_peaks {
        println!("full-sampling peaks: {peaks:?}");
    }
    for artifact in &manifest.artifacts {
        println!("wrote {}", artifact.display());
    }
}

fn cmd_replay(manifest_path: &Path, out: Option<&Path>) -> Result<bool, Error> {
    let manifest = RunManifest::load(manifest_path)?;
    let scratch = out.map(Path::to_path_buf).unwrap_or_else(|| {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("replay")
    });
    let results = replay(&manifest, &scratch)?;
    let mut all_same = true;
    for (path, same) in &results {
        println!("{}: {}", path.display(), if *same { "identical" } else { "DIFFERS" });
        all_same &= *same;
    }
    Ok(all_same)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Synth { overrides } => {
            cmd_synth(&overrides)?;
            Ok(0)
        }
        Command::Recover {
            operator,
            record,
            config,
            level,
            trial,
            seed,
            mode,
            tol,
            out,
        } => {
            cmd_recover(
                operator.as_deref(),
                record.as_deref(),
                config.as_deref(),
                level,
                trial,
                seed,
                mode.as_deref(),
                tol,
                out.as_deref(),
            )?;
            Ok(0)
        }
        Command::Scale { overrides } => {
            let config = overrides.load()?;
            let manifest = run_single_frequency(&config)?;
            print_scaling_summary(&manifest);
            Ok(0)
        }
        Command::ScaleMulti { overrides } => {
            let config = overrides.load()?;
            let manifest = run_multi_frequency(&config)?;
            print_scaling_summary(&manifest);
            Ok(0)
        }
        Command::Sweep { overrides } => {
            let config = overrides.load()?;
            let manifest = run_dynamic_range(&config, &SWEEP_TAU0, &SWEEP_LEVELS)?;
            println!("sensitivity gain: {:.3}", manifest.sweep_gain.unwrap_or(f64::NAN));
            for artifact in &manifest.artifacts {
                println!("wrote {}", artifact.display());
            }
            Ok(0)
        }
        Command::Plot { csv, kind, out } => {
            let kind = PlotKind::from_str(&kind)?;
            emit_svg(&csv, kind, &out)?;
            println!("wrote {}", out.display());
            Ok(0)
        }
        Command::Replay { manifest, out } => {
            let all_same = cmd_replay(&manifest, out.as_deref())?;
            Ok(if all_same { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    init_logger();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; usage mistakes are
            // configuration errors (exit 1), not clap's default exit 2.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
