//! Exponential sampling schedules, random row-subsampling operators, and the
//! measurement step that turns a signal into constraint data for recovery.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{complex_pairs, dft, DftPlan, Spectrum, TimeSeries};

/// Sample counts per level, n_k = max(1, round(N * 2^(k-K))) for k = 0..K.
///
/// The rounding rule keeps counts integral and nonzero while preserving the
/// doubling structure; the top level always uses all N points. Levels are
/// non-decreasing, not strictly increasing, because small k clamp to 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingSchedule {
    pub n_points: usize,
    pub max_level: usize,
    pub levels: Vec<usize>,
}

impl SamplingSchedule {
    pub fn n_at(&self, level: usize) -> Result<usize> {
        self.levels.get(level).copied().ok_or_else(|| {
            Error::Domain(format!("level {} outside schedule 0..={}", level, self.max_level))
        })
    }
}

/// Where the random rows act: on the time-domain record (row selection
/// composed with the inverse transform) or directly on spectral coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SensingMode {
    TimeDomain,
    SpectralDomain,
}

impl SensingMode {
    fn tag(self) -> u8 {
        match self {
            SensingMode::TimeDomain => 0,
            SensingMode::SpectralDomain => 1,
        }
    }
}

impl std::str::FromStr for SensingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "time" | "time_domain" => Ok(SensingMode::TimeDomain),
            "spectral" | "spectral_domain" => Ok(SensingMode::SpectralDomain),
            other => Err(Error::Config(format!(
                "unknown sensing mode '{other}', expected 'time' or 'spectral'"
            ))),
        }
    }
}

impl std::fmt::Display for SensingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SensingMode::TimeDomain => write!(f, "time"),
            SensingMode::SpectralDomain => write!(f, "spectral"),
        }
    }
}

/// A sensing mode plus a sorted random index set of size n_k; represents one
/// row-subsampled operator instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementOperator {
    pub mode: SensingMode,
    pub n_points: usize,
    pub level: usize,
    pub indices: Vec<usize>,
}

impl MeasurementOperator {
    pub fn new(mode: SensingMode, n_points: usize, level: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Config("operator needs at least one index".into()));
        }
        let sorted = indices.windows(2).all(|w| w[0] < w[1]);
        if !sorted {
            return Err(Error::Config("indices must be sorted and distinct".into()));
        }
        if *indices.last().unwrap() >= n_points {
            return Err(Error::Config(format!(
                "index {} out of range for n_points {}",
                indices.last().unwrap(),
                n_points
            )));
        }
        Ok(MeasurementOperator { mode, n_points, level, indices })
    }

    /// FNV-1a over (mode, N, level, indices); binds records to operators.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |byte: u8| {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        };
        eat(self.mode.tag());
        for b in (self.n_points as u64).to_le_bytes() {
            eat(b);
        }
        for b in (self.level as u64).to_le_bytes() {
            eat(b);
        }
        for &i in &self.indices {
            for b in (i as u64).to_le_bytes() {
                eat(b);
            }
        }
        h
    }
}

/// Measured values at the operator's indices, real in time mode (stored with
/// zero imaginary part) and complex in spectral mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    #[serde(with = "complex_pairs")]
    pub values: Vec<Complex64>,
    #[serde(rename = "fingerprint")]
    pub operator_fingerprint: u64,
}

/// Builds the exponential schedule. K = 0 degenerates to the single
/// full-sampling level [N].
pub fn build_schedule(n_points: usize, max_level: usize) -> Result<SamplingSchedule> {
    if n_points < 2 {
        return Err(Error::Config(format!("n_points must be at least 2, got {n_points}")));
    }
    let levels: Vec<usize> = (0..=max_level)
        .map(|k| {
            let raw = n_points as f64 * 2f64.powi(k as i32 - max_level as i32);
            (raw.round() as usize).max(1)
        })
        .collect();
    Ok(SamplingSchedule { n_points, max_level, levels })
}

/// Uniform random size-`count` subset of {0..N-1}, sorted ascending.
/// Partial Fisher-Yates over an index pool, deterministic given the seed.
pub fn draw_indices(n_points: usize, count: usize, seed: u64) -> Result<Vec<usize>> {
    if count == 0 || count > n_points {
        return Err(Error::Domain(format!(
            "count must be in 1..={n_points}, got {count}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..n_points).collect();
    for i in 0..count {
        let j = rng.gen_range(i..n_points);
        pool.swap(i, j);
    }
    let mut picked = pool[..count].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// Splitmix64 finalizer; full-period bijective mixer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Counter-based seed split: independent stream per (level, trial) pair under
/// one master seed. Used by every experiment loop so runs replay bit-exactly.
pub fn derive_seed(master: u64, level: u64, trial: u64) -> u64 {
    let a = splitmix64(master ^ 0xA0761D6478BD642F);
    let b = splitmix64(a ^ level.wrapping_mul(0xE7037ED1A0B428DB));
    splitmix64(b ^ trial.wrapping_mul(0x8EBC6AF09C88C6E3))
}

/// Applies the operator to a spectrum: row selection in spectral mode,
/// inverse transform then row selection in time mode. Complex in, complex
/// out, no symmetry requirement; the map is linear over complex scalars.
pub fn apply_operator(op: &MeasurementOperator, spectrum: &Spectrum) -> Result<Vec<Complex64>> {
    if spectrum.coefficients.len() != op.n_points {
        return Err(Error::Dimension(format!(
            "spectrum length {} does not match operator n_points {}",
            spectrum.coefficients.len(),
            op.n_points
        )));
    }
    match op.mode {
        SensingMode::SpectralDomain => {
            Ok(op.indices.iter().map(|&i| spectrum.coefficients[i]).collect())
        }
        SensingMode::TimeDomain => {
            let mut buf = spectrum.coefficients.clone();
            DftPlan::new(op.n_points).inverse(&mut buf);
            Ok(op.indices.iter().map(|&i| buf[i]).collect())
        }
    }
}

/// Samples the signal at the operator's indices (time mode) or its exact
/// spectrum at those indices (spectral mode). Measurements are noiseless.
pub fn measure(series: &TimeSeries, op: &MeasurementOperator) -> Result<MeasurementRecord> {
    if series.samples.len() != op.n_points {
        return Err(Error::Dimension(format!(
            "series length {} does not match operator n_points {}",
            series.samples.len(),
            op.n_points
        )));
    }
    let values = match op.mode {
        SensingMode::TimeDomain => op
            .indices
            .iter()
            .map(|&i| Complex64::new(series.samples[i], 0.0))
            .collect(),
        SensingMode::SpectralDomain => {
            let spec = dft(series)?;
            op.indices.iter().map(|&i| spec.coefficients[i]).collect()
        }
    };
    Ok(MeasurementRecord { values, operator_fingerprint: op.fingerprint() })
}
