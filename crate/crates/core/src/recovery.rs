//! Equality-constrained l1 minimization over complex spectral coefficients:
//! minimize ||f||_1 subject to A f = w, with A a row-subsampled operator
//! from the sensing module.
//!
//! The solver is an alternating-direction splitting with two proximal steps:
//! exact projection onto the affine constraint set, and complex
//! soft-thresholding (`shrink`). Both sensing modes have orthogonal rows
//! (A A^H proportional to the identity), so the projection needs no
//! factorization, just two transforms per iteration in time mode and a row
//! overwrite in spectral mode. The modulus-l1 objective is kept complex
//! throughout; shrink scales magnitudes and preserves phases, which keeps
//! conjugate bin pairs coherent.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::{apply_operator, MeasurementOperator, MeasurementRecord, SensingMode};
use crate::signal::{DftPlan, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum InitialGuess {
    /// Uniform vector with every entry 1/N, unit l1 mass.
    Flat,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative feasibility and dual-change threshold.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Augmented-Lagrangian weight rho; the shrink threshold is 1/rho.
    pub penalty: f64,
    pub initial_guess: InitialGuess,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-6,
            max_iterations: 20000,
            penalty: 1.0,
            initial_guess: InitialGuess::Flat,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if !(self.penalty > 0.0) || !self.penalty.is_finite() {
            return Err(Error::Config(format!("penalty must be positive, got {}", self.penalty)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub estimate: Spectrum,
    /// Euclidean norm of the constraint violation of the returned estimate.
    pub residual_norm: f64,
    pub l1_value: f64,
    pub iterations: usize,
    /// True when the feasibility and dual-change thresholds were met before
    /// the iteration cap. Running out of budget is a reportable state, not an
    /// error: under-sampled levels are evaluated on purpose.
    pub converged: bool,
}

/// Proximal operator of the complex modulus: scales |z| down by kappa,
/// clamping at zero, phase untouched.
pub fn shrink(z: Complex64, kappa: f64) -> Complex64 {
    debug_assert!(kappa >= 0.0);
    let r = z.norm();
    if r <= kappa {
        Complex64::new(0.0, 0.0)
    } else {
        z * (1.0 - kappa / r)
    }
}

fn l2(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn l1(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).sum()
}

/// Projects `v` onto {x : A x = b}, writing the result in place.
///
/// Spectral mode: overwrite the selected rows with b. Time mode: rows of
/// A = R F^-1 are orthogonal with A A^H = I/N, so the least-norm correction
/// is v + N A^H (b - A v), which reduces to one inverse and one forward
/// transform around a padded residual.
fn project_affine(
    op: &MeasurementOperator,
    b: &[Complex64],
    plan: &mut DftPlan,
    v: &mut [Complex64],
    work: &mut [Complex64],
) {
    match op.mode {
        SensingMode::SpectralDomain => {
            for (j, &i) in op.indices.iter().enumerate() {
                v[i] = b[j];
            }
        }
        SensingMode::TimeDomain => {
            work.copy_from_slice(v);
            plan.inverse(work);
            let mut pad = vec![Complex64::new(0.0, 0.0); v.len()];
            for (j, &i) in op.indices.iter().enumerate() {
                pad[i] = b[j] - work[i];
            }
            plan.forward(&mut pad);
            for (x, p) in v.iter_mut().zip(&pad) {
                *x += p;
            }
        }
    }
}

/// Solves minimize ||f||_1 subject to A f = w for the given operator and
/// record. Deterministic: identical inputs yield bit-identical iterates.
pub fn basis_pursuit(
    op: &MeasurementOperator,
    record: &MeasurementRecord,
    options: &SolverOptions,
) -> Result<RecoveryResult> {
    options.validate()?;
    let expected = op.fingerprint();
    if record.operator_fingerprint != expected {
        return Err(Error::Binding { operator: expected, record: record.operator_fingerprint });
    }
    if record.values.len() != op.indices.len() {
        return Err(Error::Dimension(format!(
            "record has {} values for {} indices",
            record.values.len(),
            op.indices.len()
        )));
    }

    let n = op.n_points;
    let b = &record.values;
    let b_norm = l2(b);
    let delta_omega = 1.0 / n as f64;

    // zero data admits the zero vector, the exact global optimum
    if b_norm == 0.0 {
        return Ok(RecoveryResult {
            estimate: Spectrum { coefficients: vec![Complex64::new(0.0, 0.0); n], delta_omega },
            residual_norm: 0.0,
            l1_value: 0.0,
            iterations: 0,
            converged: true,
        });
    }

    let mut plan = DftPlan::new(n);
    let kappa = 1.0 / options.penalty;
    let feas_scale = b_norm.max(1.0);

    let mut z = match options.initial_guess {
        InitialGuess::Flat => vec![Complex64::new(1.0 / n as f64, 0.0); n],
        InitialGuess::Zero => vec![Complex64::new(0.0, 0.0); n],
    };
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut work = vec![Complex64::new(0.0, 0.0); n];

    let mut iterations = 0;
    let mut converged = false;

    for iter in 1..=options.max_iterations {
        iterations = iter;

        for i in 0..n {
            x[i] = z[i] - u[i];
        }
        project_affine(op, b, &mut plan, &mut x, &mut work);

        let mut dual_sq = 0.0;
        let mut primal_sq = 0.0;
        let mut z_sq = 0.0;
        for i in 0..n {
            let prev = z[i];
            let znew = shrink(x[i] + u[i], kappa);
            dual_sq += (znew - prev).norm_sqr();
            z[i] = znew;
            u[i] += x[i] - znew;
            primal_sq += (x[i] - znew).norm_sqr();
            z_sq += znew.norm_sqr();
        }
        let dual = options.penalty * dual_sq.sqrt();
        let primal = primal_sq.sqrt();
        let z_scale = z_sq.sqrt().max(1.0);

        if primal <= options.tolerance * z_scale && dual <= options.tolerance * z_scale {
            let feas = residual_of(op, &z, b, &mut plan, &mut work);
            if feas <= options.tolerance * feas_scale {
                converged = true;
                break;
            }
        }
    }

    let residual_norm = residual_of(op, &z, b, &mut plan, &mut work);
    let l1_value = l1(&z);
    Ok(RecoveryResult {
        estimate: Spectrum { coefficients: z, delta_omega },
        residual_norm,
        l1_value,
        iterations,
        converged,
    })
}

fn residual_of(
    op: &MeasurementOperator,
    f: &[Complex64],
    b: &[Complex64],
    plan: &mut DftPlan,
    work: &mut [Complex64],
) -> f64 {
    let mut acc = 0.0;
    match op.mode {
        SensingMode::SpectralDomain => {
            for (j, &i) in op.indices.iter().enumerate() {
                acc += (f[i] - b[j]).norm_sqr();
            }
        }
        SensingMode::TimeDomain => {
            work.copy_from_slice(f);
            plan.inverse(work);
            for (j, &i) in op.indices.iter().enumerate() {
                acc += (work[i] - b[j]).norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Constraint violation ||A f_est - w||_2 of an estimate against a record.
pub fn residual(
    op: &MeasurementOperator,
    estimate: &Spectrum,
    record: &MeasurementRecord,
) -> Result<f64> {
    let expected = op.fingerprint();
    if record.operator_fingerprint != expected {
        return Err(Error::Binding { operator: expected, record: record.operator_fingerprint });
    }
    if record.values.len() != op.indices.len() {
        return Err(Error::Dimension(format!(
            "record has {} values for {} indices",
            record.values.len(),
            op.indices.len()
        )));
    }
    let predicted = apply_operator(op, estimate)?;
    let acc: f64 = predicted
        .iter()
        .zip(&record.values)
        .map(|(p, w)| (p - w).norm_sqr())
        .sum();
    Ok(acc.sqrt())
}
