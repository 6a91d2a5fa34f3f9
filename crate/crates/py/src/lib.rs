//! Python bindings over the synthesis, transform, sampling, and recovery
//! entry points. Values cross the boundary as plain Python structures:
//! samples as lists of floats, spectra as lists of complex, recovery results
//! as dicts.

use std::str::FromStr;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use larmorcs::{
    basis_pursuit, measure, InitialGuess, LarmorComponent, LarmorConfig, MeasurementOperator,
    MeasurementRecord, RecoveryResult, SensingMode, SolverOptions, Spectrum, TimeSeries,
};

fn to_py_err(e: larmorcs::Error) -> PyErr {
    match e {
        larmorcs::Error::Io(_) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn solver_options(tolerance: f64, max_iterations: usize, penalty: f64) -> SolverOptions {
    SolverOptions { tolerance, max_iterations, penalty, initial_guess: InitialGuess::Flat }
}

fn result_dict(py: Python<'_>, result: RecoveryResult) -> PyResult<Py<PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item("estimate", result.estimate.coefficients)?;
    dict.set_item("residual_norm", result.residual_norm)?;
    dict.set_item("l1_value", result.l1_value)?;
    dict.set_item("iterations", result.iterations)?;
    dict.set_item("converged", result.converged)?;
    Ok(dict.into())
}

fn solve(
    py: Python<'_>,
    op: MeasurementOperator,
    rec: MeasurementRecord,
    tolerance: f64,
    max_iterations: usize,
    penalty: f64,
) -> PyResult<Py<PyDict>> {
    let result = basis_pursuit(&op, &rec, &solver_options(tolerance, max_iterations, penalty))
        .map_err(to_py_err)?;
    result_dict(py, result)
}

/// Samples `sum_j amplitude_j * sin(2*pi*bin_j*t/N + phase_j)` at N points.
/// Components are (bin, amplitude, phase) tuples.
#[pyfunction]
#[pyo3(signature = (components, n_points, tau0=1.0))]
fn synthesize(components: Vec<(usize, f64, f64)>, n_points: usize, tau0: f64) -> PyResult<Vec<f64>> {
    let config = LarmorConfig {
        components: components
            .into_iter()
            .map(|(omega_bin, amplitude, phase_offset)| LarmorComponent {
                omega_bin,
                amplitude,
                phase_offset,
            })
            .collect(),
        n_points,
        tau0,
    };
    Ok(larmorcs::synthesize(&config).map_err(to_py_err)?.samples)
}

/// Forward transform, unnormalized: `c[m] = sum_t s[t] exp(-2*pi*i*m*t/N)`.
#[pyfunction]
#[pyo3(signature = (samples, tau0=1.0))]
fn dft(samples: Vec<f64>, tau0: f64) -> PyResult<Vec<Complex64>> {
    let series = TimeSeries { samples, tau0 };
    Ok(larmorcs::dft(&series).map_err(to_py_err)?.coefficients)
}

/// Inverse transform carrying the 1/N factor; input must be conjugate
/// symmetric so the output is real.
#[pyfunction]
#[pyo3(signature = (coefficients, tau0=1.0))]
fn idft(coefficients: Vec<Complex64>, tau0: f64) -> PyResult<Vec<f64>> {
    let n = coefficients.len();
    let spectrum = Spectrum { coefficients, delta_omega: 1.0 / n.max(1) as f64 };
    Ok(larmorcs::idft(&spectrum, tau0).map_err(to_py_err)?.samples)
}

/// Sample counts [n_0, ..., n_K] with n_k = max(1, round(N * 2^(k-K))).
#[pyfunction]
fn build_schedule(n_points: usize, max_level: usize) -> PyResult<Vec<usize>> {
    Ok(larmorcs::build_schedule(n_points, max_level).map_err(to_py_err)?.levels)
}

/// Sorted uniform random subset of 0..n_points, deterministic in the seed.
#[pyfunction]
fn draw_indices(n_points: usize, count: usize, seed: u64) -> PyResult<Vec<usize>> {
    larmorcs::draw_indices(n_points, count, seed).map_err(to_py_err)
}

/// Per-(level, trial) seed derived from the master seed.
#[pyfunction]
fn derive_seed(master: u64, level: u64, trial: u64) -> u64 {
    larmorcs::derive_seed(master, level, trial)
}

/// Measures the full series at `indices` in the given sensing mode, then
/// solves min ||f||_1 s.t. A f = w. Returns a dict with keys estimate,
/// residual_norm, l1_value, iterations, converged.
#[pyfunction]
#[pyo3(signature = (samples, indices, mode="time", tolerance=1e-6, max_iterations=20000, penalty=1.0, tau0=1.0))]
#[allow(clippy::too_many_arguments)]
fn recover(
    py: Python<'_>,
    samples: Vec<f64>,
    indices: Vec<usize>,
    mode: &str,
    tolerance: f64,
    max_iterations: usize,
    penalty: f64,
    tau0: f64,
) -> PyResult<Py<PyDict>> {
    let mode = SensingMode::from_str(mode).map_err(to_py_err)?;
    let series = TimeSeries { samples, tau0 };
    let op = MeasurementOperator::new(mode, series.samples.len(), 0, indices).map_err(to_py_err)?;
    let rec = measure(&series, &op).map_err(to_py_err)?;
    solve(py, op, rec, tolerance, max_iterations, penalty)
}

/// Like `recover`, but takes the already-measured values at `indices`
/// instead of the full series.
#[pyfunction]
#[pyo3(signature = (values, indices, n_points, mode="time", tolerance=1e-6, max_iterations=20000, penalty=1.0))]
#[allow(clippy::too_many_arguments)]
fn recover_measured(
    py: Python<'_>,
    values: Vec<Complex64>,
    indices: Vec<usize>,
    n_points: usize,
    mode: &str,
    tolerance: f64,
    max_iterations: usize,
    penalty: f64,
) -> PyResult<Py<PyDict>> {
    let mode = SensingMode::from_str(mode).map_err(to_py_err)?;
    let op = MeasurementOperator::new(mode, n_points, 0, indices).map_err(to_py_err)?;
    let rec = MeasurementRecord { values, operator_fingerprint: op.fingerprint() };
    solve(py, op, rec, tolerance, max_iterations, penalty)
}

/// Strict local maxima of the half-spectrum magnitude above
/// `rel_threshold * max`, as (bin, magnitude) pairs.
#[pyfunction]
#[pyo3(signature = (coefficients, rel_threshold=0.5))]
fn detect_peaks(coefficients: Vec<Complex64>, rel_threshold: f64) -> PyResult<Vec<(usize, f64)>> {
    let n = coefficients.len();
    let spectrum = Spectrum { coefficients, delta_omega: 1.0 / n.max(1) as f64 };
    larmorcs::detect_peaks(&spectrum, rel_threshold).map_err(to_py_err)
}

/// Longest accumulation time keeping the phase unambiguous over the field
/// range: pi / (2 * gamma * delta_b_max).
#[pyfunction]
fn accumulation_time_bound(gamma: f64, delta_b_max: f64) -> PyResult<f64> {
    larmorcs::accumulation_time_bound(gamma, delta_b_max).map_err(to_py_err)
}

#[pymodule]
fn larmorcs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(dft, m)?)?;
    m.add_function(wrap_pyfunction!(idft, m)?)?;
    m.add_function(wrap_pyfunction!(build_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(draw_indices, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(recover, m)?)?;
    m.add_function(wrap_pyfunction!(recover_measured, m)?)?;
    m.add_function(wrap_pyfunction!(detect_peaks, m)?)?;
    m.add_function(wrap_pyfunction!(accumulation_time_bound, m)?)?;
    Ok(())
}
