//! Desk-scale compressive-sensing recovery of Larmor precession signals.
//!
//! The crate synthesizes sparse sinusoidal records, subsamples them through
//! random row-selection operators at exponentially growing sample counts,
//! recovers spectra by equality-constrained l1 basis pursuit, and aggregates
//! residuals into precision-scaling and sensitivity figures of merit.

pub mod error;
pub mod harness;
pub mod metrics;
pub mod plot;
pub mod recovery;
pub mod sensing;
pub mod signal;

pub use error::{Error, Result};
pub use harness::{
    replay, run_dynamic_range, run_multi_frequency, run_single_frequency, ExperimentConfig,
    LevelSummary, RunManifest, SWEEP_LEVELS, SWEEP_TAU0,
};
pub use metrics::{
    anchor_constant, detect_peaks, fit_exponent, precision_point, reference_curves,
    scaling_report, sensitivity_sweep, standard_baseline, PrecisionPoint, ScalingReport,
    SensitivitySweep, PEAK_THRESHOLD_DEFAULT, RESIDUAL_FLOOR,
};
pub use plot::{emit_svg, render_svg, PlotKind, PHASE_HEADER, SCALING_HEADER, SWEEP_HEADER};
pub use recovery::{basis_pursuit, residual, shrink, InitialGuess, RecoveryResult, SolverOptions};
pub use sensing::{
    apply_operator, build_schedule, derive_seed, draw_indices, measure, MeasurementOperator,
    MeasurementRecord, SamplingSchedule, SensingMode,
};
pub use signal::{
    accumulation_time_bound, dft, idft, synthesize, LarmorComponent, LarmorConfig, Spectrum,
    TimeSeries, SYMMETRY_TOLERANCE,
};
