//! Calibration sweep for the experiment solver budget.
//!
//! The reconstruction floor of the scaling experiments is set by the solver
//! iteration cap and penalty, so those defaults are frozen from data rather
//! than guessed. This binary scans (max_iterations, penalty) over the frozen
//! N=600 schedule, printing per-level residuals, the fitted log-log exponent
//! of sigma^2*T vs T, and monotonicity diagnostics for the single- and
//! three-component fixtures.
//!
//! Run with `cargo run -p larmorcs --example calibrate -- [--trials n]`.

use larmorcs::{
    basis_pursuit, build_schedule, derive_seed, draw_indices, measure, synthesize, InitialGuess,
    LarmorComponent, LarmorConfig, MeasurementOperator, SensingMode, SolverOptions,
};

const FLOOR: f64 = 1e-12;

fn fixture(bins: &[usize]) -> LarmorConfig {
    LarmorConfig {
        components: bins
            .iter()
            .map(|&b| LarmorComponent { omega_bin: b, amplitude: 1.0, phase_offset: 0.0 })
            .collect(),
        n_points: 600,
        tau0: 1.0,
    }
}

fn run_levels(
    config: &LarmorConfig,
    max_level: usize,
    trials: usize,
    seed: u64,
    opts: &SolverOptions,
) -> Vec<(usize, f64, usize)> {
    let series = synthesize(config).unwrap();
    let schedule = build_schedule(config.n_points, max_level).unwrap();
    let mut stats = Vec::new();
    for (level, &n) in schedule.levels.iter().enumerate() {
        let mut sq_sum = 0.0;
        let mut converged = 0;
        for trial in 0..trials {
            let s = derive_seed(seed, level as u64, trial as u64);
            let idx = draw_indices(config.n_points, n, s).unwrap();
            let op =
                MeasurementOperator::new(SensingMode::TimeDomain, config.n_points, level, idx)
                    .unwrap();
            let rec = measure(&series, &op).unwrap();
            let out = basis_pursuit(&op, &rec, opts).unwrap();
            converged += out.converged as usize;
            sq_sum += out.residual_norm * out.residual_norm;
        }
        stats.push((n, (sq_sum / trials as f64).sqrt(), converged));
    }
    stats
}

fn fit(stats: &[(usize, f64, usize)], tau0: f64) -> Option<(f64, usize)> {
    let pts: Vec<(f64, f64)> = stats
        .iter()
        .filter(|s| s.1 > FLOOR)
        .map(|s| {
            let t = s.0 as f64 * tau0;
            (t.ln(), (s.1 * s.1 * t).ln())
        })
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Some((slope, pts.len()))
}

fn monotone_violations(stats: &[(usize, f64, usize)]) -> (usize, f64) {
    let mut count = 0;
    let mut worst = 1.0f64;
    for w in stats.windows(2) {
        if w[1].0 > w[0].0 && w[0].1 > FLOOR {
            let ratio = w[1].1 / w[0].1;
            if ratio > 1.0 {
                count += 1;
                worst = worst.max(ratio);
            }
        }
    }
    (count, worst)
}

fn report(label: &str, config: &LarmorConfig, trials: usize, opts: &SolverOptions) {
    let stats = run_levels(config, 10, trials, 42, opts);
    let sigmas: Vec<String> = stats.iter().map(|s| format!("{:.1e}", s.1)).collect();
    let head = match fit(&stats, config.tau0) {
        Some((slope, used)) => format!("exp {slope:+.3} ({used} lv)"),
        None => "exp n/a".to_string(),
    };
    let (viol, worst) = monotone_violations(&stats);
    println!(
        "{label} M={:<5} rho={:<6} tol={:<6.0e} {head:18} viol={viol} worst={worst:.2} sig=[{}]",
        opts.max_iterations,
        opts.penalty,
        opts.tolerance,
        sigmas.join(" ")
    );
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let trials: usize = args
        .iter()
        .position(|a| a == "--trials")
        .and_then(|i| args.get(i + 1))
        .and_then(|v| v.parse().ok())
        .unwrap_or(16);

    let single = fixture(&[10]);
    let multi = fixture(&[10, 37, 83]);

    for &(m, rho) in &[
        (90usize, 0.018f64),
        (90, 0.02),
        (90, 0.022),
        (100, 0.018),
        (100, 0.02),
        (100, 0.022),
        (110, 0.018),
        (110, 0.02),
        (110, 0.022),
    ] {
        let opts = SolverOptions {
            tolerance: 1e-4,
            max_iterations: m,
            penalty: rho,
            initial_guess: InitialGuess::Flat,
        };
        report("single", &single, trials, &opts);
    }
    println!();
    for &(m, rho) in &[
        (36usize, 0.012f64),
        (36, 0.015),
        (36, 0.018),
        (40, 0.012),
        (40, 0.015),
        (40, 0.018),
        (44, 0.012),
        (44, 0.015),
        (44, 0.018),
        (48, 0.015),
        (56, 0.015),
    ] {
        let opts = SolverOptions {
            tolerance: 1e-6,
            max_iterations: m,
            penalty: rho,
            initial_guess: InitialGuess::Flat,
        };
        report("multi ", &multi, trials, &opts);
    }
}
