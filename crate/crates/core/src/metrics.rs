//! Figures of merit for sampling-level experiments.
//!
//! Each schedule level k is summarized by a [`PrecisionPoint`]: the RMS
//! constraint residual over seeded trials, the dimensionless resource count
//! T = n_k * tau0, the precision sigma_b^2 * T, and the sensitivity
//! sqrt(sigma_b^2 * T). A [`ScalingReport`] collects the per-level points
//! together with a log-log exponent fit and two anchored reference curves,
//! one falling as 1/T and one as 1/sqrt(T) on the precision axis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Spectrum;

/// Levels whose RMS residual sits at or below this value are treated as
/// solver-floor artifacts: excluded from exponent fits, reference anchoring,
/// and gain selection, but still reported in CSV output.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Default relative threshold for [`detect_peaks`]: half of the maximum
/// half-spectrum magnitude.
pub const PEAK_THRESHOLD_DEFAULT: f64 = 0.5;

/// Aggregate figure of merit for one sampling level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPoint {
    pub level: usize,
    /// T = n_k * tau0.
    pub resources: f64,
    /// RMS of per-trial residual norms ||A f - w||.
    pub sigma_b: f64,
    /// sigma_b^2 * T.
    pub precision: f64,
    /// sqrt(sigma_b^2 * T).
    pub sensitivity: f64,
}

/// Per-level points plus fit and reference curves for one scaling run.
///
/// `fitted_exponent` and `fit_intercept` are `None` when fewer than three
/// non-floor levels with distinct resources survive; the run is still
/// reportable. Reference vectors align index-wise with `points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub points: Vec<PrecisionPoint>,
    pub fitted_exponent: Option<f64>,
    pub fit_intercept: Option<f64>,
    pub heisenberg_reference: Vec<f64>,
    pub shotnoise_reference: Vec<f64>,
    /// Level maximizing (shotnoise reference - precision) over non-floor levels.
    pub max_gain_level: Option<usize>,
}

/// Sensitivity comparison across an accumulation-time sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySweep {
    pub tau0_values: Vec<f64>,
    pub cs_sensitivity: Vec<f64>,
    pub std_sensitivity: Vec<f64>,
    /// Geometric mean of per-row std/cs ratios.
    pub gain: f64,
}

/// Aggregates one level's trial residuals into a [`PrecisionPoint`].
pub fn precision_point(
    level: usize,
    n_k: usize,
    tau0: f64,
    trial_residuals: &[f64],
) -> Result<PrecisionPoint> {
    if trial_residuals.is_empty() {
        return Err(Error::Domain(
            "precision point requires at least one trial residual".into(),
        ));
    }
    if n_k == 0 || !(tau0 > 0.0) || !tau0.is_finite() {
        return Err(Error::Domain(format!(
            "resources n_k * tau0 must be positive, got n_k={n_k}, tau0={tau0}"
        )));
    }
    for (i, &r) in trial_residuals.iter().enumerate() {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::Domain(format!(
                "trial residual {i} is {r}, expected finite and >= 0"
            )));
        }
    }
    let resources = n_k as f64 * tau0;
    let mean_sq =
        trial_residuals.iter().map(|r| r * r).sum::<f64>() / trial_residuals.len() as f64;
    let sigma_b = mean_sq.sqrt();
    let precision = sigma_b * sigma_b * resources;
    Ok(PrecisionPoint {
        level,
        resources,
        sigma_b,
        precision,
        sensitivity: precision.sqrt(),
    })
}

/// Ordinary least squares of log(precision) on log(resources).
///
/// Points with non-positive precision are excluded with a warning. Fewer
/// than three surviving points with distinct resources is an
/// insufficient-data error. Returns (slope, intercept).
pub fn fit_exponent(points: &[PrecisionPoint]) -> Result<(f64, f64)> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for p in points {
        if p.precision > 0.0 && p.precision.is_finite() {
            xs.push(p.resources.ln());
            ys.push(p.precision.ln());
        } else {
            log::warn!(
                "excluding level {} from exponent fit: precision {} is not positive",
                p.level,
                p.precision
            );
        }
    }
    let mut distinct: Vec<f64> = xs.clone();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "exponent fit needs >= 3 points with distinct resources, have {}",
            distinct.len()
        )));
    }
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    Ok((slope, intercept))
}

/// Reference precision curves through the anchor point's precision value:
/// heisenberg(T) = p* T*/T and shotnoise(T) = p* sqrt(T*/T), evaluated at
/// every point's resources.
pub fn reference_curves(
    points: &[PrecisionPoint],
    anchor_level: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let anchor = points
        .iter()
        .find(|p| p.level == anchor_level)
        .ok_or_else(|| {
            Error::Domain(format!("anchor level {anchor_level} is not among the points"))
        })?;
    let p_star = anchor.precision;
    let t_star = anchor.resources;
    let heisenberg = points.iter().map(|p| p_star * t_star / p.resources).collect();
    let shotnoise = points
        .iter()
        .map(|p| p_star * (t_star / p.resources).sqrt())
        .collect();
    Ok((heisenberg, shotnoise))
}

/// Builds a [`ScalingReport`] from per-level points.
///
/// Levels at the residual floor are excluded from the exponent fit and the
/// gain selection but stay in the report: a run whose only level recovers
/// exactly (full sampling) is a success with the fit omitted, not a failure.
/// References anchor at the lowest level above the floor, falling back to
/// the lowest level with positive precision. An empty point list errors
/// with `AllLevelsFailed`.
pub fn scaling_report(points: Vec<PrecisionPoint>, residual_floor: f64) -> Result<ScalingReport> {
    if points.is_empty() {
        return Err(Error::AllLevelsFailed(
            "the run produced no precision points".into(),
        ));
    }
    let usable: Vec<PrecisionPoint> = points
        .iter()
        .filter(|p| p.sigma_b > residual_floor && p.precision > 0.0)
        .cloned()
        .collect();
    let anchor_level = usable
        .iter()
        .min_by_key(|p| p.level)
        .or_else(|| points.iter().filter(|p| p.precision > 0.0).min_by_key(|p| p.level))
        .map(|p| p.level);
    let (heisenberg_reference, shotnoise_reference) = match anchor_level {
        Some(level) => reference_curves(&points, level)?,
        // Every precision is zero; the anchored curves are identically zero.
        None => (vec![0.0; points.len()], vec![0.0; points.len()]),
    };
    let (fitted_exponent, fit_intercept) = match fit_exponent(&usable) {
        Ok((slope, intercept)) => (Some(slope), Some(intercept)),
        Err(Error::InsufficientData(msg)) => {
            log::warn!("exponent fit skipped: {msg}");
            (None, None)
        }
        Err(e) => return Err(e),
    };
    let max_gain_level = points
        .iter()
        .zip(&shotnoise_reference)
        .filter(|(p, _)| p.sigma_b > residual_floor && p.precision > 0.0)
        .max_by(|(pa, sa), (pb, sb)| {
            let ga = *sa - pa.precision;
            let gb = *sb - pb.precision;
            ga.partial_cmp(&gb).unwrap()
        })
        .map(|(p, _)| p.level);
    Ok(ScalingReport {
        points,
        fitted_exponent,
        fit_intercept,
        heisenberg_reference,
        shotnoise_reference,
        max_gain_level,
    })
}

/// Strict local maxima of the half-spectrum magnitude above a relative
/// threshold. Returns (bin, magnitude) pairs sorted by bin; the mirrored
/// upper half [N/2, N) is never reported.
pub fn detect_peaks(spectrum: &Spectrum, rel_threshold: f64) -> Result<Vec<(usize, f64)>> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::Domain(format!(
            "relative threshold must lie in (0, 1), got {rel_threshold}"
        )));
    }
    let n = spectrum.coefficients.len();
    let half = n / 2;
    let mag = |c: &Complex64| c.norm();
    let max_mag = spectrum.coefficients[1..half.max(1)]
        .iter()
        .map(mag)
        .fold(0.0f64, f64::max);
    if max_mag == 0.0 {
        return Ok(Vec::new());
    }
    let cut = rel_threshold * max_mag;
    let mut peaks = Vec::new();
    for bin in 1..half {
        let m = mag(&spectrum.coefficients[bin]);
        if m <= cut {
            continue;
        }
        let left = mag(&spectrum.coefficients[bin - 1]);
        let right = if bin + 1 < n {
            mag(&spectrum.coefficients[bin + 1])
        } else {
            0.0
        };
        if m > left && m > right {
            peaks.push((bin, m));
        }
    }
    Ok(peaks)
}

/// Anchor constant for the standard baseline: with c = sqrt(tau0 * p0) the
/// baseline precision c^2/tau0 equals the compressed run's precision p0 at
/// the anchor level, so both curves share an origin.
pub fn anchor_constant(tau0: f64, anchor_precision: f64) -> Result<f64> {
    if !(tau0 > 0.0) || !(anchor_precision >= 0.0) {
        return Err(Error::Domain(format!(
            "anchor constant needs tau0 > 0 and precision >= 0, got {tau0}, {anchor_precision}"
        )));
    }
    Ok((tau0 * anchor_precision).sqrt())
}

/// Sensitivity of n = T/tau0 independent standard measurements: c / sqrt(tau0 * T).
pub fn standard_baseline(tau0: f64, resources: f64, anchor: f64) -> Result<f64> {
    if !(tau0 > 0.0) || !(resources > 0.0) {
        return Err(Error::Domain(format!(
            "standard baseline needs tau0 > 0 and T > 0, got tau0={tau0}, T={resources}"
        )));
    }
    Ok(anchor / (tau0 * resources).sqrt())
}

/// Combines aligned per-tau0 sensitivities into a [`SensitivitySweep`].
/// Gain is the geometric mean of std/cs ratios; identical curves give 1.
pub fn sensitivity_sweep(
    tau0_values: Vec<f64>,
    cs_sensitivity: Vec<f64>,
    std_sensitivity: Vec<f64>,
) -> Result<SensitivitySweep> {
    if tau0_values.is_empty()
        || tau0_values.len() != cs_sensitivity.len()
        || tau0_values.len() != std_sensitivity.len()
    {
        return Err(Error::Domain(format!(
            "sweep lists must be nonempty and aligned: {} tau0, {} cs, {} std",
            tau0_values.len(),
            cs_sensitivity.len(),
            std_sensitivity.len()
        )));
    }
    for &t in &tau0_values {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("tau0 values must be positive, got {t}")));
        }
    }
    for (cs, std) in cs_sensitivity.iter().zip(&std_sensitivity) {
        if !(*cs > 0.0) || !(*std > 0.0) {
            return Err(Error::Domain(format!(
                "sensitivities must be positive, got cs={cs}, std={std}"
            )));
        }
    }
    let log_sum: f64 = cs_sensitivity
        .iter()
        .zip(&std_sensitivity)
        .map(|(cs, std)| (std / cs).ln())
        .sum();
    let gain = (log_sum / tau0_values.len() as f64).exp();
    Ok(SensitivitySweep {
        tau0_values,
        cs_sensitivity,
        std_sensitivity,
        gain,
    })
}
