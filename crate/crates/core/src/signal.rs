//! Signal synthesis and the paired time/frequency representations.
//!
//! All computation is dimensionless: frequencies are integer bins (cycles per
//! record), time is sample index times `tau0`. `accumulation_time_bound` is
//! the single entry point that touches physical units.
//!
//! Transform convention: forward `c[m] = sum_t s[t] exp(-2*pi*i*m*t/N)`, the
//! factor 1/N sits on the inverse. A unit-amplitude sinusoid at bin w then
//! shows two peaks of magnitude N/2, at w and N-w.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative imaginary residue above which `idft` refuses to discard the
/// imaginary part of its output.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// One sinusoidal component: `amplitude * sin(2*pi*omega_bin*t/N + phase_offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LarmorComponent {
    /// Frequency index in cycles per full record; must satisfy 0 < bin < N/2.
    pub omega_bin: usize,
    pub amplitude: f64,
    /// Radians.
    pub phase_offset: f64,
}

/// Declarative description of a single- or multi-component precession signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LarmorConfig {
    pub components: Vec<LarmorComponent>,
    /// Record length N.
    pub n_points: usize,
    /// Accumulation time per sample; sets the maximal detectable frequency 1/tau0.
    pub tau0: f64,
}

impl LarmorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::Config(format!(
                "n_points must be at least 2, got {}",
                self.n_points
            )));
        }
        if !(self.tau0 > 0.0) || !self.tau0.is_finite() {
            return Err(Error::Config(format!("tau0 must be positive, got {}", self.tau0)));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.components {
            if c.omega_bin == 0 || 2 * c.omega_bin >= self.n_points {
                return Err(Error::Config(format!(
                    "omega_bin {} outside open interval (0, {}/2)",
                    c.omega_bin, self.n_points
                )));
            }
            if !c.amplitude.is_finite() || c.amplitude < 0.0 {
                return Err(Error::Config(format!(
                    "amplitude must be finite and non-negative, got {}",
                    c.amplitude
                )));
            }
            if !c.phase_offset.is_finite() {
                return Err(Error::Config("phase_offset must be finite".into()));
            }
            if !seen.insert(c.omega_bin) {
                return Err(Error::Config(format!("duplicate omega_bin {}", c.omega_bin)));
            }
        }
        Ok(())
    }
}

/// Real-valued record of N samples spaced `tau0` apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub samples: Vec<f64>,
    pub tau0: f64,
}

/// Complex spectral coefficients of one record.
///
/// When the spectrum came from a real series, conjugate symmetry holds:
/// `c[m] = conj(c[(N - m) % N])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    #[serde(with = "complex_pairs")]
    pub coefficients: Vec<Complex64>,
    /// Spectral resolution 1/N, dimensionless.
    pub delta_omega: f64,
}

impl Spectrum {
    pub fn n_points(&self) -> usize {
        self.coefficients.len()
    }
}

/// Serializes complex vectors as `[[re, im], ...]`, the on-disk format shared
/// by spectra, measurement records, and recovery results.
pub(crate) mod complex_pairs {
    use num_complex::Complex64;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for c in v {
            seq.serialize_element(&[c.re, c.im])?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Complex64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().map(|p| Complex64::new(p[0], p[1])).collect())
    }
}

/// Reusable FFT pair for one record length. Forward is unnormalized, inverse
/// carries the 1/N factor, matching the crate-wide transform convention.
pub(crate) struct DftPlan {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl DftPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        DftPlan {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn forward(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }
}

/// Evaluates the configured sum of sinusoids at every sample index.
pub fn synthesize(config: &LarmorConfig) -> Result<TimeSeries> {
    config.validate()?;
    let n = config.n_points;
    let mut samples = vec![0.0; n];
    for c in &config.components {
        let w = 2.0 * std::f64::consts::PI * c.omega_bin as f64 / n as f64;
        for (t, s) in samples.iter_mut().enumerate() {
            *s += c.amplitude * (w * t as f64 + c.phase_offset).sin();
        }
    }
    Ok(TimeSeries { samples, tau0: config.tau0 })
}

/// Forward transform of a real record.
pub fn dft(series: &TimeSeries) -> Result<Spectrum> {
    let n = series.samples.len();
    if n == 0 {
        return Err(Error::Dimension("cannot transform an empty series".into()));
    }
    let mut buf: Vec<Complex64> = series
        .samples
        .iter()
        .map(|&s| Complex64::new(s, 0.0))
        .collect();
    DftPlan::new(n).forward(&mut buf);
    Ok(Spectrum { coefficients: buf, delta_omega: 1.0 / n as f64 })
}

/// Inverse transform back to a real record.
///
/// The imaginary part of the inverse is checked against `SYMMETRY_TOLERANCE`
/// (relative l2) and then discarded; a violation means the spectrum was not
/// conjugate-symmetric. `tau0` is supplied by the caller because a bare
/// spectrum does not carry the sample spacing.
pub fn idft(spectrum: &Spectrum, tau0: f64) -> Result<TimeSeries> {
    let n = spectrum.coefficients.len();
    if n == 0 {
        return Err(Error::Dimension("cannot transform an empty spectrum".into()));
    }
    let mut buf = spectrum.coefficients.clone();
    DftPlan::new(n).inverse(&mut buf);
    let imag_sq: f64 = buf.iter().map(|c| c.im * c.im).sum();
    let total_sq: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    let residue = if total_sq > 0.0 { (imag_sq / total_sq).sqrt() } else { 0.0 };
    if residue > SYMMETRY_TOLERANCE {
        return Err(Error::SymmetryViolation { residue, tolerance: SYMMETRY_TOLERANCE });
    }
    Ok(TimeSeries { samples: buf.iter().map(|c| c.re).collect(), tau0 })
}

/// Longest admissible accumulation time for an unambiguous phase over the
/// field range [-delta_b_max, delta_b_max): pi / (2 * gamma * delta_b_max).
pub fn accumulation_time_bound(gamma: f64, delta_b_max: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
    }
    if !(delta_b_max > 0.0) || !delta_b_max.is_finite() {
        return Err(Error::Domain(format!(
            "delta_b_max must be positive, got {delta_b_max}"
        )));
    }
    Ok(std::f64::consts::PI / (2.0 * gamma * delta_b_max))
}
