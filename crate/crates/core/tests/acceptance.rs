//! Acceptance gate: one checkable statement per shipped claim, printed as a
//! single pass/fail line each. The target runs without the default test
//! harness so the lines always reach stdout; any failure exits nonzero.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use larmorcs::{
    apply_operator, basis_pursuit, build_schedule, derive_seed, dft, draw_indices, fit_exponent,
    idft, measure, replay, run_dynamic_range, run_multi_frequency, run_single_frequency, shrink,
    synthesize, ExperimentConfig, InitialGuess, LarmorComponent, LarmorConfig,
    MeasurementOperator, RunManifest, SensingMode, SolverOptions, SWEEP_LEVELS, SWEEP_TAU0,
};

/// Comparison points for the reported max-gain level; equality is reported,
/// never asserted.
const REFERENCE_MAX_GAIN_LEVEL_SINGLE: usize = 7;
const REFERENCE_MAX_GAIN_LEVEL_MULTI: usize = 5;

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load_config(name: &str, out_dir: &Path) -> Result<ExperimentConfig, String> {
    let mut config = ExperimentConfig::load(&config_dir().join(name))
        .map_err(|e| format!("loading {name}: {e}"))?;
    config.output_dir = out_dir.to_path_buf();
    Ok(config)
}

fn rel_l2(actual: &[Complex64], reference: &[Complex64]) -> f64 {
    let err: f64 = actual
        .iter()
        .zip(reference)
        .map(|(a, r)| (a - r).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let scale: f64 = reference.iter().map(|r| r.norm_sqr()).sum::<f64>().sqrt();
    err / scale
}

/// Exact recovery at half sampling: 100 seeded trials, relative l2 error
/// under 1e-4 in both domains for at least 99 of them.
fn criterion_1(tmp: &Path) -> Result<String, String> {
    let config = load_config("single_freq.json", tmp)?;
    let signal = config.signal;
    if signal.n_points != 600 {
        return Err(format!("fixture must have 600 points, got {}", signal.n_points));
    }
    let series = synthesize(&signal).map_err(|e| e.to_string())?;
    let truth = dft(&series).map_err(|e| e.to_string())?;
    let full_indices: Vec<usize> = (0..signal.n_points).collect();
    let full_op =
        MeasurementOperator::new(SensingMode::TimeDomain, signal.n_points, 0, full_indices)
            .map_err(|e| e.to_string())?;
    let true_samples: Vec<Complex64> =
        series.samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    let opts = SolverOptions {
        tolerance: 1e-8,
        max_iterations: 20_000,
        penalty: 1.0,
        initial_guess: InitialGuess::Flat,
    };
    let mut passes = 0usize;
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let indices = draw_indices(signal.n_points, 300, derive_seed(config.master_seed, 9, trial))
            .map_err(|e| e.to_string())?;
        let op = MeasurementOperator::new(SensingMode::TimeDomain, signal.n_points, 9, indices)
            .map_err(|e| e.to_string())?;
        let rec = measure(&series, &op).map_err(|e| e.to_string())?;
        let result = basis_pursuit(&op, &rec, &opts).map_err(|e| e.to_string())?;
        let spectral_err = rel_l2(&result.estimate.coefficients, &truth.coefficients);
        let reconstructed =
            apply_operator(&full_op, &result.estimate).map_err(|e| e.to_string())?;
        let time_err = rel_l2(&reconstructed, &true_samples);
        let err = spectral_err.max(time_err);
        worst = worst.max(err);
        if spectral_err < 1e-4 && time_err < 1e-4 {
            passes += 1;
        }
    }
    if passes < 99 {
        return Err(format!("only {passes}/100 trials recovered below 1e-4 (worst {worst:.2e})"));
    }
    Ok(format!(
        "recovery from 300 of 600 samples: {passes}/100 trials under 1e-4 in both domains (worst {worst:.1e})"
    ))
}

/// Single-frequency precision scaling: fitted exponent within [-1.25, -0.75].
fn criterion_2(tmp: &Path) -> Result<(String, RunManifest), String> {
    let config = load_config("single_freq.json", &tmp.join("single"))?;
    if config.max_level != 10 || config.trials < 50 {
        return Err(format!(
            "fixture must run K=10 with at least 50 trials, got K={} trials={}",
            config.max_level, config.trials
        ));
    }
    let manifest = run_single_frequency(&config).map_err(|e| e.to_string())?;
    let exponent = manifest
        .fitted_exponent
        .ok_or("run produced no fitted exponent")?;
    if !(-1.25..=-0.75).contains(&exponent) {
        return Err(format!("fitted exponent {exponent:.4} outside [-1.25, -0.75]"));
    }
    Ok((
        format!("single-tone precision exponent {exponent:.4} within [-1.25, -0.75] over {} trials/level", config.trials),
        manifest,
    ))
}

/// Multi-frequency scaling: exponent within [-1.1, -0.6] and full-sampling
/// peak detection returns exactly the configured bins.
fn criterion_3(tmp: &Path) -> Result<(String, RunManifest), String> {
    let config = load_config("multi_freq.json", &tmp.join("multi"))?;
    let mut expected: Vec<usize> = config.signal.components.iter().map(|c| c.omega_bin).collect();
    expected.sort_unstable();
    if expected.len() != 3 {
        return Err(format!("fixture must have three components, got {}", expected.len()));
    }
    let manifest = run_multi_frequency(&config).map_err(|e| e.to_string())?;
    let exponent = manifest
        .fitted_exponent
        .ok_or("run produced no fitted exponent")?;
    if !(-1.1..=-0.6).contains(&exponent) {
        return Err(format!("fitted exponent {exponent:.4} outside [-1.1, -0.6]"));
    }
    let peaks = manifest
        .detected_peaks
        .clone()
        .ok_or("run recorded no detected peaks")?;
    if peaks != expected {
        return Err(format!("detected peaks {peaks:?}, expected {expected:?}"));
    }
    Ok((
        format!("three-tone exponent {exponent:.4} within [-1.1, -0.6], full-sampling peaks {peaks:?}"),
        manifest,
    ))
}

/// Dynamic-range sweep: CS-over-baseline sensitivity gain at least 3.
fn criterion_4(tmp: &Path) -> Result<String, String> {
    assert_eq!(SWEEP_TAU0, [0.036, 0.072, 0.144, 0.288, 0.576]);
    assert_eq!(SWEEP_LEVELS, [14, 13, 12, 11, 10]);
    let config = load_config("single_freq.json", &tmp.join("sweep"))?;
    let manifest =
        run_dynamic_range(&config, &SWEEP_TAU0, &SWEEP_LEVELS).map_err(|e| e.to_string())?;
    let gain = manifest.sweep_gain.ok_or("sweep recorded no gain")?;
    if gain < 3.0 {
        return Err(format!("sensitivity gain {gain:.3} below 3"));
    }
    Ok(format!(
        "sensitivity gain {gain:.1}x over the fixed-rate baseline across {} accumulation times",
        SWEEP_TAU0.len()
    ))
}

fn random_instance(rng: &mut ChaCha8Rng) -> (LarmorConfig, usize) {
    let n_points = [8usize, 12, 16, 20, 24, 28, 32][rng.gen_range(0..7)];
    let max_bin = (n_points - 1) / 2;
    let s = rng.gen_range(1..=3usize.min(max_bin));
    let mut bins: Vec<usize> = (1..=max_bin).collect();
    for i in 0..s {
        let j = rng.gen_range(i..bins.len());
        bins.swap(i, j);
    }
    let components = bins[..s]
        .iter()
        .map(|&b| LarmorComponent {
            omega_bin: b,
            amplitude: rng.gen_range(0.5..2.0),
            phase_offset: rng.gen_range(0.0..std::f64::consts::TAU),
        })
        .collect();
    let config = LarmorConfig { components, n_points, tau0: 1.0 };
    let n_samples = rng.gen_range((n_points / 4).max(2)..=n_points);
    (config, n_samples)
}

/// l1 optimum via an independent real-embedded cone program: variables
/// [re; im; t] in R^(3N), minimize sum(t) subject to equality rows pinning
/// A f = w and one second-order cone (t_m, re_m, im_m) per coefficient.
fn socp_l1(op: &MeasurementOperator, w: &[Complex64]) -> Result<f64, String> {
    let n_points = op.n_points;
    let n_meas = op.indices.len();
    let n_var = 3 * n_points;
    let n_eq = 2 * n_meas;

    let mut ti: Vec<usize> = Vec::new();
    let mut tj: Vec<usize> = Vec::new();
    let mut tv: Vec<f64> = Vec::new();
    let mut b = vec![0.0f64; n_eq + 3 * n_points];

    match op.mode {
        SensingMode::SpectralDomain => {
            for (j, &i) in op.indices.iter().enumerate() {
                ti.push(2 * j);
                tj.push(i);
                tv.push(1.0);
                ti.push(2 * j + 1);
                tj.push(n_points + i);
                tv.push(1.0);
            }
        }
        SensingMode::TimeDomain => {
            let inv_n = 1.0 / n_points as f64;
            for (j, &t) in op.indices.iter().enumerate() {
                for m in 0..n_points {
                    let theta = std::f64::consts::TAU * (m * t) as f64 / n_points as f64;
                    let (sin, cos) = theta.sin_cos();
                    ti.push(2 * j);
                    tj.push(m);
                    tv.push(cos * inv_n);
                    ti.push(2 * j);
                    tj.push(n_points + m);
                    tv.push(-sin * inv_n);
                    ti.push(2 * j + 1);
                    tj.push(m);
                    tv.push(sin * inv_n);
                    ti.push(2 * j + 1);
                    tj.push(n_points + m);
                    tv.push(cos * inv_n);
                }
            }
        }
    }
    for (j, val) in w.iter().enumerate() {
        b[2 * j] = val.re;
        b[2 * j + 1] = val.im;
    }
    for m in 0..n_points {
        let base = n_eq + 3 * m;
        ti.push(base);
        tj.push(2 * n_points + m);
        tv.push(-1.0);
        ti.push(base + 1);
        tj.push(m);
        tv.push(-1.0);
        ti.push(base + 2);
        tj.push(n_points + m);
        tv.push(-1.0);
    }

    let a = CscMatrix::new_from_triplets(n_eq + 3 * n_points, n_var, ti, tj, tv);
    let p = CscMatrix::new_from_triplets(n_var, n_var, vec![], vec![], vec![]);
    let mut q = vec![0.0; n_var];
    q[2 * n_points..].fill(1.0);

    let mut cones = vec![SupportedConeT::ZeroConeT(n_eq)];
    cones.extend(std::iter::repeat(SupportedConeT::SecondOrderConeT(3)).take(n_points));

    let settings = DefaultSettings {
        verbose: false,
        tol_gap_abs: 1e-10,
        tol_gap_rel: 1e-10,
        tol_feas: 1e-10,
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
        .map_err(|e| format!("reference solver setup: {e}"))?;
    solver.solve();
    if solver.solution.status != SolverStatus::Solved {
        return Err(format!("reference solver status {:?}", solver.solution.status));
    }
    Ok(solver.solution.obj_val)
}

/// Solver oracle equivalence: ADMM l1 values match the cone-program optimum
/// within 1e-5 on 200 random instances, each solved in both sensing modes.
fn criterion_5() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0751);
    let opts = SolverOptions {
        tolerance: 1e-8,
        max_iterations: 400_000,
        penalty: 1.0,
        initial_guess: InitialGuess::Flat,
    };
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    for i in 0..200u64 {
        let (config, n_samples) = random_instance(&mut rng);
        let series = synthesize(&config).map_err(|e| e.to_string())?;
        let indices =
            draw_indices(config.n_points, n_samples, 0xACCE5 + i).map_err(|e| e.to_string())?;
        for mode in [SensingMode::TimeDomain, SensingMode::SpectralDomain] {
            let op = MeasurementOperator::new(mode, config.n_points, 0, indices.clone())
                .map_err(|e| e.to_string())?;
            let rec = measure(&series, &op).map_err(|e| e.to_string())?;
            let admm = basis_pursuit(&op, &rec, &opts).map_err(|e| e.to_string())?;
            if !admm.converged {
                return Err(format!(
                    "splitting solver failed to converge at N={} n={n_samples} mode={mode}",
                    config.n_points
                ));
            }
            let oracle = socp_l1(&op, &rec.values)?;
            let gap = (admm.l1_value - oracle).abs();
            if gap > 1e-5 {
                return Err(format!(
                    "l1 gap {gap:.3e} above 1e-5 at N={} n={n_samples} mode={mode}",
                    config.n_points
                ));
            }
            worst = worst.max(gap);
            pairs += 1;
        }
    }
    Ok(format!(
        "l1 agreement with the cone-program reference on {pairs} instance/mode pairs (worst gap {worst:.1e})"
    ))
}

fn check(label: &str, ok: bool) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(format!("identity failed: {label}"))
    }
}

/// Representative identity checks, frozen to fixed inputs; the randomized
/// property suites over the same invariants run in the library tests.
fn criterion_6(tmp: &Path) -> Result<String, String> {
    // transform inverse pair and Parseval at 1e-9
    let config = LarmorConfig {
        components: vec![
            LarmorComponent { omega_bin: 3, amplitude: 1.2, phase_offset: 0.7 },
            LarmorComponent { omega_bin: 11, amplitude: 0.4, phase_offset: 2.9 },
            LarmorComponent { omega_bin: 29, amplitude: 2.0, phase_offset: 4.2 },
        ],
        n_points: 96,
        tau0: 0.25,
    };
    let series = synthesize(&config).map_err(|e| e.to_string())?;
    let spectrum = dft(&series).map_err(|e| e.to_string())?;
    let back = idft(&spectrum, series.tau0).map_err(|e| e.to_string())?;
    let round_err: f64 = series
        .samples
        .iter()
        .zip(&back.samples)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        / series.samples.iter().map(|s| s * s).sum::<f64>().sqrt();
    check("dft/idft round trip within 1e-9", round_err < 1e-9)?;
    let time_energy: f64 = series.samples.iter().map(|s| s * s).sum();
    let spec_energy: f64 =
        spectrum.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() / config.n_points as f64;
    check(
        "Parseval within 1e-9",
        ((time_energy - spec_energy) / time_energy).abs() < 1e-9,
    )?;

    // operator linearity in both modes on random complex spectra
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC6);
    let n = 48usize;
    let draw = |rng: &mut ChaCha8Rng| {
        let coefficients =
            (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        larmorcs::Spectrum { coefficients, delta_omega: 1.0 / n as f64 }
    };
    let f = draw(&mut rng);
    let g = draw(&mut rng);
    let alpha = Complex64::new(0.8, -1.3);
    let beta = Complex64::new(-0.2, 0.45);
    let combined = larmorcs::Spectrum {
        coefficients: f
            .coefficients
            .iter()
            .zip(&g.coefficients)
            .map(|(a, b)| alpha * a + beta * b)
            .collect(),
        delta_omega: f.delta_omega,
    };
    for mode in [SensingMode::TimeDomain, SensingMode::SpectralDomain] {
        let indices = draw_indices(n, 17, 99).map_err(|e| e.to_string())?;
        let op = MeasurementOperator::new(mode, n, 0, indices).map_err(|e| e.to_string())?;
        let lhs = apply_operator(&op, &combined).map_err(|e| e.to_string())?;
        let af = apply_operator(&op, &f).map_err(|e| e.to_string())?;
        let ag = apply_operator(&op, &g).map_err(|e| e.to_string())?;
        let err = lhs
            .iter()
            .zip(af.iter().zip(&ag))
            .map(|(l, (a, b))| (l - (alpha * a + beta * b)).norm())
            .fold(0.0f64, f64::max);
        check("operator linearity within 1e-12", err < 1e-12)?;
    }

    // sampling schedule invariants, frozen vector first
    let schedule = build_schedule(600, 10).map_err(|e| e.to_string())?;
    check(
        "frozen schedule for N=600 K=10",
        schedule.levels == [1, 1, 2, 5, 9, 19, 38, 75, 150, 300, 600],
    )?;
    for (n_points, k) in [(64usize, 4usize), (100, 6), (37, 3)] {
        let s = build_schedule(n_points, k).map_err(|e| e.to_string())?;
        check("schedule ends at N", *s.levels.last().unwrap() == n_points)?;
        check("schedule is nondecreasing", s.levels.windows(2).all(|w| w[0] <= w[1]))?;
        check(
            "adjacent level ratio within [1, 3]",
            s.levels
                .windows(2)
                .all(|w| w[1] as f64 / w[0] as f64 >= 1.0 && w[1] as f64 / w[0] as f64 <= 3.0),
        )?;
    }

    // shrink closed forms
    let z = Complex64::new(3.0, 4.0);
    check("shrink with zero threshold is identity", shrink(z, 0.0) == z)?;
    check(
        "shrink zeroes small inputs",
        shrink(Complex64::new(0.3, -0.4), 0.5) == Complex64::new(0.0, 0.0),
    )?;
    check(
        "shrink reduces the modulus by exactly kappa",
        (shrink(z, 1.0) - Complex64::new(2.4, 3.2)).norm() < 1e-14,
    )?;
    let shrunk = shrink(z, 2.0);
    check(
        "shrink preserves phase",
        (shrunk.arg() - z.arg()).abs() < 1e-15,
    )?;

    // exponent fit exactness on a planted power law
    let planted: Vec<larmorcs::PrecisionPoint> = [1.0f64, 2.0, 5.0, 9.0, 19.0, 38.0, 75.0]
        .iter()
        .enumerate()
        .map(|(level, &t)| {
            let precision = 7.3 * t.powf(-1.234);
            larmorcs::PrecisionPoint {
                level,
                resources: t,
                sigma_b: (precision / t).sqrt(),
                precision,
                sensitivity: precision.sqrt(),
            }
        })
        .collect();
    let (slope, _) = fit_exponent(&planted).map_err(|e| e.to_string())?;
    check("planted exponent recovered within 1e-9", (slope + 1.234).abs() < 1e-9)?;

    // bit-exact replay of a small seeded run
    let config = ExperimentConfig {
        signal: LarmorConfig {
            components: vec![LarmorComponent { omega_bin: 5, amplitude: 1.0, phase_offset: 0.0 }],
            n_points: 64,
            tau0: 1.0,
        },
        sensing_mode: SensingMode::TimeDomain,
        max_level: 3,
        trials: 3,
        solver: SolverOptions {
            tolerance: 1e-6,
            max_iterations: 300,
            penalty: 0.1,
            initial_guess: InitialGuess::Flat,
        },
        master_seed: 7,
        output_dir: tmp.join("determinism"),
    };
    let manifest = run_single_frequency(&config).map_err(|e| e.to_string())?;
    let comparisons = replay(&manifest, &tmp.join("determinism_replay")).map_err(|e| e.to_string())?;
    check("replay produced comparisons", !comparisons.is_empty())?;
    check(
        "bit-exact replay under the fixed master seed",
        comparisons.iter().all(|(_, same)| *same),
    )?;

    Ok("transform, operator, schedule, shrink, fit, and replay identities hold on frozen inputs".into())
}

/// Resource-reduction sanity: the max-gain level uses under 100% of N; the
/// comparison with the reference levels is reported, never asserted.
fn criterion_7(
    single: Option<&RunManifest>,
    multi: Option<&RunManifest>,
) -> Result<String, String> {
    let single = single.ok_or("single-frequency run unavailable")?;
    let multi = multi.ok_or("multi-frequency run unavailable")?;
    let mut notes = Vec::new();
    for (name, manifest, reference) in [
        ("single", single, REFERENCE_MAX_GAIN_LEVEL_SINGLE),
        ("multi", multi, REFERENCE_MAX_GAIN_LEVEL_MULTI),
    ] {
        let level = manifest.max_gain_level.ok_or(format!("{name} run has no max-gain level"))?;
        let fraction =
            manifest.max_gain_fraction.ok_or(format!("{name} run has no max-gain fraction"))?;
        if fraction >= 1.0 {
            return Err(format!(
                "{name} max-gain level k={level} uses {:.0}% of N",
                fraction * 100.0
            ));
        }
        notes.push(format!(
            "{name} k={level} ({:.1}% of N, reference k={reference}: {})",
            fraction * 100.0,
            if level == reference { "match" } else { "differs" }
        ));
    }
    Ok(format!("max-gain levels below full sampling; {}", notes.join("; ")))
}

struct Outcome {
    number: u32,
    passed: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn run_criterion<F>(number: u32, budget_secs: u64, f: F) -> Outcome
where
    F: FnOnce() -> Result<String, String>,
{
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_secs);
    match result {
        Ok(detail) if elapsed <= budget => {
            Outcome { number, passed: true, detail, elapsed, budget }
        }
        Ok(detail) => Outcome {
            number,
            passed: false,
            detail: format!("{detail}; exceeded {budget_secs}s budget"),
            elapsed,
            budget,
        },
        Err(reason) => Outcome { number, passed: false, detail: reason, elapsed, budget },
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("scratch directory");
    let tmp = tmp.path();
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));

    let mut single_manifest: Option<RunManifest> = None;
    let mut multi_manifest: Option<RunManifest> = None;

    let mut outcomes = Vec::new();
    outcomes.push(run_criterion(1, 120, || criterion_1(tmp)));
    outcomes.push(run_criterion(2, 900, || {
        criterion_2(tmp).map(|(detail, manifest)| {
            single_manifest = Some(manifest);
            detail
        })
    }));
    outcomes.push(run_criterion(3, 1200, || {
        criterion_3(tmp).map(|(detail, manifest)| {
            multi_manifest = Some(manifest);
            detail
        })
    }));
    outcomes.push(run_criterion(4, 1800, || criterion_4(tmp)));
    outcomes.push(run_criterion(5, 300, criterion_5));
    outcomes.push(run_criterion(6, 120, || criterion_6(tmp)));
    outcomes.push(run_criterion(7, 60, || {
        criterion_7(single_manifest.as_ref(), multi_manifest.as_ref())
    }));

    std::panic::set_hook(hook);

    let mut failed = 0;
    for o in &outcomes {
        println!(
            "criterion {} {} ({:.2}s of {}s budget) {}",
            o.number,
            if o.passed { "PASS" } else { "FAIL" },
            o.elapsed.as_secs_f64(),
            o.budget.as_secs(),
            o.detail
        );
        if !o.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        outcomes.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
