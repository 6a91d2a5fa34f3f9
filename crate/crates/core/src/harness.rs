//! End-to-end experiment orchestration.
//!
//! Each run loads an [`ExperimentConfig`], walks the sampling schedule level
//! by level with fresh per-(level, trial) seeds, recovers spectra, aggregates
//! residuals into a scaling report, and writes CSV/SVG artifacts plus a JSON
//! manifest. The manifest's config snapshot replays to byte-identical CSVs.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    detect_peaks, precision_point, scaling_report, sensitivity_sweep, standard_baseline,
    PrecisionPoint, ScalingReport, SensitivitySweep, PEAK_THRESHOLD_DEFAULT, RESIDUAL_FLOOR,
};
use crate::plot::{emit_svg, PlotKind, PHASE_HEADER, SCALING_HEADER, SWEEP_HEADER};
use crate::recovery::{basis_pursuit, SolverOptions};
use crate::sensing::{build_schedule, derive_seed, draw_indices, measure, MeasurementOperator, SensingMode};
use crate::signal::{synthesize, LarmorConfig, Spectrum, TimeSeries};

/// Accumulation times for the dynamic-range sweep, shortest first.
pub const SWEEP_TAU0: [f64; 5] = [0.036, 0.072, 0.144, 0.288, 0.576];

/// Schedule depth paired index-wise with [`SWEEP_TAU0`]: halving tau0 buys
/// one extra bit of dynamic range.
pub const SWEEP_LEVELS: [usize; 5] = [14, 13, 12, 11, 10];

/// Seed-splitting offset separating sweep rows from scaling levels.
const SWEEP_SEED_OFFSET: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub signal: LarmorConfig,
    #[serde(default = "default_mode")]
    pub sensing_mode: SensingMode,
    pub max_level: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_mode() -> SensingMode {
    SensingMode::TimeDomain
}

fn default_trials() -> usize {
    50
}

fn default_seed() -> u64 {
    42
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.solver.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        build_schedule(self.signal.n_points, self.max_level)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }
}

/// Per-level aggregate written into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub n_k: usize,
    pub trials: usize,
    pub converged: usize,
    pub sigma_b: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub mean_iterations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub schedule: Vec<usize>,
    pub levels: Vec<LevelSummary>,
    pub fitted_exponent: Option<f64>,
    pub fit_intercept: Option<f64>,
    pub max_gain_level: Option<usize>,
    /// Fraction n_k / N at the max-gain level.
    pub max_gain_fraction: Option<f64>,
    /// Bins of detected peaks at full sampling (multi-frequency runs).
    pub detected_peaks: Option<Vec<usize>>,
    pub sweep_gain: Option<f64>,
    pub artifacts: Vec<PathBuf>,
    pub stage_seconds: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Raw per-level results before aggregation.
struct LevelOutcome {
    residuals: Vec<f64>,
    converged: usize,
    iterations: usize,
    /// Trial-averaged |coefficient| over the full spectrum.
    mean_abs: Vec<f64>,
}

fn run_level(
    series: &TimeSeries,
    config: &ExperimentConfig,
    level: usize,
    n_k: usize,
    master_seed: u64,
) -> Result<LevelOutcome> {
    let n = config.signal.n_points;
    let mut residuals = Vec::with_capacity(config.trials);
    let mut converged = 0;
    let mut iterations = 0;
    let mut mean_abs = vec![0.0f64; n];
    for trial in 0..config.trials {
        let seed = derive_seed(master_seed, level as u64, trial as u64);
        let indices = draw_indices(n, n_k, seed)?;
        let operator = MeasurementOperator::new(config.sensing_mode, n, level, indices)?;
        let record = measure(series, &operator)?;
        let out = basis_pursuit(&operator, &record, &config.solver)?;
        residuals.push(out.residual_norm);
        converged += out.converged as usize;
        iterations += out.iterations;
        for (acc, c) in mean_abs.iter_mut().zip(&out.estimate.coefficients) {
            *acc += c.norm();
        }
    }
    for acc in mean_abs.iter_mut() {
        *acc /= config.trials as f64;
    }
    Ok(LevelOutcome {
        residuals,
        converged,
        iterations,
        mean_abs,
    })
}

struct ScalingOutcome {
    schedule: Vec<usize>,
    points: Vec<PrecisionPoint>,
    summaries: Vec<LevelSummary>,
    mean_abs_per_level: Vec<Vec<f64>>,
}

fn execute_levels(config: &ExperimentConfig, master_seed: u64) -> Result<ScalingOutcome> {
    let schedule = build_schedule(config.signal.n_points, config.max_level)?;
    let series = synthesize(&config.signal)?;
    let mut points = Vec::new();
    let mut summaries = Vec::new();
    let mut mean_abs_per_level = Vec::new();
    for (level, &n_k) in schedule.levels.iter().enumerate() {
        let outcome = run_level(&series, config, level, n_k, master_seed)?;
        let point = precision_point(level, n_k, config.signal.tau0, &outcome.residuals)?;
        if outcome.converged < config.trials {
            log::info!(
                "level {level}: {}/{} trials converged (budget-limited residuals are expected at sparse levels)",
                outcome.converged,
                config.trials
            );
        }
        summaries.push(LevelSummary {
            level,
            n_k,
            trials: config.trials,
            converged: outcome.converged,
            sigma_b: point.sigma_b,
            precision: point.precision,
            sensitivity: point.sensitivity,
            mean_iterations: outcome.iterations as f64 / config.trials as f64,
        });
        points.push(point);
        mean_abs_per_level.push(outcome.mean_abs);
    }
    Ok(ScalingOutcome {
        schedule: schedule.levels,
        points,
        summaries,
        mean_abs_per_level,
    })
}

fn write_scaling_csv(path: &Path, report: &ScalingReport, schedule: &[usize]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{SCALING_HEADER}")?;
    for (i, p) in report.points.iter().enumerate() {
        writeln!(
            file,
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            p.level,
            schedule[i],
            p.resources,
            p.sigma_b,
            p.precision,
            p.sensitivity,
            report.heisenberg_reference[i],
            report.shotnoise_reference[i],
        )?;
    }
    Ok(())
}

fn write_phase_csv(path: &Path, schedule: &[usize], mean_abs_per_level: &[Vec<f64>]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{PHASE_HEADER}")?;
    for (level, mags) in mean_abs_per_level.iter().enumerate() {
        let half = mags.len() / 2;
        let max = mags[..half].iter().cloned().fold(0.0f64, f64::max);
        for (bin, &m) in mags[..half].iter().enumerate() {
            let norm = if max > 0.0 { m / max } else { 0.0 };
            writeln!(
                file,
                "{level},{},{bin},{:.12e},{:.12e}",
                schedule[level], m, norm
            )?;
        }
    }
    Ok(())
}

fn write_sweep_csv(path: &Path, sweep: &SensitivitySweep) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{SWEEP_HEADER}")?;
    for i in 0..sweep.tau0_values.len() {
        let tau0 = sweep.tau0_values[i];
        writeln!(
            file,
            "{:.12e},{:.12e},{:.12e},{:.12e}",
            tau0,
            1.0 / tau0,
            sweep.cs_sensitivity[i],
            sweep.std_sensitivity[i],
        )?;
    }
    Ok(())
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    std::fs::write(path, text)?;
    Ok(())
}

fn run_scaling(config: &ExperimentConfig, experiment: &str) -> Result<RunManifest> {
    config.validate()?;
    let out_dir = &config.output_dir;
    std::fs::create_dir_all(out_dir)?;
    let mut stage_seconds = BTreeMap::new();

    let t0 = Instant::now();
    let outcome = execute_levels(config, config.master_seed)?;
    stage_seconds.insert("solve".to_string(), t0.elapsed().as_secs_f64());

    let t1 = Instant::now();
    let report = scaling_report(outcome.points.clone(), RESIDUAL_FLOOR)?;
    let detected_peaks = if experiment == "multi_frequency" {
        let full = outcome.mean_abs_per_level.last().unwrap();
        let spectrum = Spectrum {
            coefficients: full.iter().map(|&m| Complex64::new(m, 0.0)).collect(),
            delta_omega: 1.0 / config.signal.n_points as f64,
        };
        let peaks = detect_peaks(&spectrum, PEAK_THRESHOLD_DEFAULT)?;
        let bins: Vec<usize> = peaks.iter().map(|p| p.0).collect();
        let mut expected: Vec<usize> =
            config.signal.components.iter().map(|c| c.omega_bin).collect();
        expected.sort_unstable();
        if bins != expected {
            log::warn!(
                "full-sampling peaks {bins:?} do not match configured bins {expected:?}"
            );
        }
        Some(bins)
    } else {
        None
    };
    stage_seconds.insert("aggregate".to_string(), t1.elapsed().as_secs_f64());

    let t2 = Instant::now();
    let scaling_csv = out_dir.join("scaling.csv");
    let phase_csv = out_dir.join("phase.csv");
    write_scaling_csv(&scaling_csv, &report, &outcome.schedule)?;
    write_phase_csv(&phase_csv, &outcome.schedule, &outcome.mean_abs_per_level)?;
    let scaling_svg = out_dir.join("scaling.svg");
    let phase_svg = out_dir.join("phase.svg");
    emit_svg(&scaling_csv, PlotKind::Scaling, &scaling_svg)?;
    emit_svg(&phase_csv, PlotKind::Phase, &phase_svg)?;
    stage_seconds.insert("render".to_string(), t2.elapsed().as_secs_f64());

    let max_gain_fraction = report
        .max_gain_level
        .map(|k| outcome.schedule[k] as f64 / config.signal.n_points as f64);
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: experiment.to_string(),
        config: config.clone(),
        schedule: outcome.schedule,
        levels: outcome.summaries,
        fitted_exponent: report.fitted_exponent,
        fit_intercept: report.fit_intercept,
        max_gain_level: report.max_gain_level,
        max_gain_fraction,
        detected_peaks,
        sweep_gain: None,
        artifacts: vec![scaling_csv, phase_csv, scaling_svg, phase_svg],
        stage_seconds,
    };
    write_manifest(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Scaling experiment for a one-component signal.
pub fn run_single_frequency(config: &ExperimentConfig) -> Result<RunManifest> {
    if config.signal.components.len() != 1 {
        return Err(Error::Config(format!(
            "single-frequency run requires exactly one component, got {}",
            config.signal.components.len()
        )));
    }
    run_scaling(config, "single_frequency")
}

/// Scaling experiment for a multi-component signal, with full-sampling peak
/// verification recorded in the manifest.
pub fn run_multi_frequency(config: &ExperimentConfig) -> Result<RunManifest> {
    if config.signal.components.len() < 2 {
        return Err(Error::Config(format!(
            "multi-frequency run requires at least two components, got {}",
            config.signal.components.len()
        )));
    }
    run_scaling(config, "multi_frequency")
}

/// Dynamic-range sweep: one scaling run per (tau0, K) pair, comparing the
/// best-level sensitivity against the anchored standard baseline.
pub fn run_dynamic_range(
    config: &ExperimentConfig,
    tau0_values: &[f64],
    k_values: &[usize],
) -> Result<RunManifest> {
    config.validate()?;
    if tau0_values.is_empty() || tau0_values.len() != k_values.len() {
        return Err(Error::Config(format!(
            "sweep needs equal-length nonempty lists, got {} tau0 and {} K values",
            tau0_values.len(),
            k_values.len()
        )));
    }
    for &t in tau0_values {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("tau0 values must be positive, got {t}")));
        }
    }
    let out_dir = &config.output_dir;
    std::fs::create_dir_all(out_dir)?;
    let mut stage_seconds = BTreeMap::new();

    let mut rows: Vec<(f64, usize)> = tau0_values
        .iter()
        .cloned()
        .zip(k_values.iter().cloned())
        .collect();
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let t0 = Instant::now();
    let mut tau0_sorted = Vec::with_capacity(rows.len());
    let mut cs = Vec::with_capacity(rows.len());
    let mut std_ = Vec::with_capacity(rows.len());
    for (row_index, &(tau0, k)) in rows.iter().enumerate() {
        let mut row_config = config.clone();
        row_config.signal.tau0 = tau0;
        row_config.max_level = k;
        let row_seed = derive_seed(config.master_seed, SWEEP_SEED_OFFSET + row_index as u64, 0);
        let outcome = execute_levels(&row_config, row_seed)?;
        let usable: Vec<&PrecisionPoint> = outcome
            .points
            .iter()
            .filter(|p| p.sigma_b > RESIDUAL_FLOOR && p.precision > 0.0)
            .collect();
        if usable.is_empty() {
            return Err(Error::AllLevelsFailed(format!(
                "sweep row tau0={tau0}: no level produced a residual above the solver floor"
            )));
        }
        let anchor = usable.iter().min_by_key(|p| p.level).unwrap();
        let best = usable
            .iter()
            .min_by(|a, b| a.precision.partial_cmp(&b.precision).unwrap())
            .unwrap();
        let c = crate::metrics::anchor_constant(tau0, anchor.precision)?;
        // Baseline sensitivity sqrt(sigma_std^2 T) is T-independent; evaluate
        // the sigma curve at the best level's resources for the record.
        let delta_b_std = standard_baseline(tau0, best.resources, c)? * best.resources.sqrt();
        tau0_sorted.push(tau0);
        cs.push(best.sensitivity);
        std_.push(delta_b_std);
        log::info!(
            "sweep row tau0={tau0}: best level {} of {k}, gain {:.2}",
            best.level,
            delta_b_std / best.sensitivity
        );
    }
    stage_seconds.insert("solve".to_string(), t0.elapsed().as_secs_f64());

    let t1 = Instant::now();
    let sweep = sensitivity_sweep(tau0_sorted, cs, std_)?;
    let sweep_csv = out_dir.join("sweep.csv");
    write_sweep_csv(&sweep_csv, &sweep)?;
    let sweep_svg = out_dir.join("sweep.svg");
    emit_svg(&sweep_csv, PlotKind::Sweep, &sweep_svg)?;
    stage_seconds.insert("render".to_string(), t1.elapsed().as_secs_f64());

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: "dynamic_range".to_string(),
        config: config.clone(),
        schedule: rows.iter().map(|&(_, k)| k).collect(),
        levels: Vec::new(),
        fitted_exponent: None,
        fit_intercept: None,
        max_gain_level: None,
        max_gain_fraction: None,
        detected_peaks: None,
        sweep_gain: Some(sweep.gain),
        artifacts: vec![sweep_csv, sweep_svg],
        stage_seconds,
    };
    write_manifest(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Re-runs a manifest's experiment into `scratch_dir` and byte-compares each
/// CSV/SVG artifact with the original. Returns (artifact, identical) pairs.
pub fn replay(manifest: &RunManifest, scratch_dir: &Path) -> Result<Vec<(PathBuf, bool)>> {
    let mut config = manifest.config.clone();
    config.output_dir = scratch_dir.to_path_buf();
    let rerun = match manifest.experiment.as_str() {
        "single_frequency" => run_single_frequency(&config)?,
        "multi_frequency" => run_multi_frequency(&config)?,
        "dynamic_range" => run_dynamic_range(&config, &SWEEP_TAU0, &SWEEP_LEVELS)?,
        other => {
            return Err(Error::Config(format!(
                "manifest names unknown experiment '{other}'"
            )))
        }
    };
    let mut results = Vec::new();
    for (old, new) in manifest.artifacts.iter().zip(&rerun.artifacts) {
        let old_bytes = std::fs::read(old)?;
        let new_bytes = std::fs::read(new)?;
        results.push((old.clone(), old_bytes == new_bytes));
    }
    Ok(results)
}
