//! More samples never hurt: on the committed three-tone fixture the RMS
//! residual is non-increasing across every schedule step that strictly
//! increases the sample count. Levels already at the solver floor are
//! excluded; below 1e-12 the ordering is rounding jitter, not signal.

use std::path::Path;

use larmorcs::{run_multi_frequency, ExperimentConfig, RESIDUAL_FLOOR};

#[test]
fn rms_residual_is_monotone_in_sample_count_on_the_three_tone_fixture() {
    let config_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/multi_freq.json");
    let mut config = ExperimentConfig::load(&config_path).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    config.output_dir = tmp.path().to_path_buf();
    assert_eq!(config.trials, 50);
    assert_eq!(config.max_level, 10);

    let manifest = run_multi_frequency(&config).unwrap();
    assert_eq!(manifest.levels.len(), 11);
    for pair in manifest.levels.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        if hi.n_k > lo.n_k && lo.sigma_b > RESIDUAL_FLOOR {
            assert!(
                hi.sigma_b <= lo.sigma_b,
                "residual rose from {:.3e} (n={}) to {:.3e} (n={})",
                lo.sigma_b,
                lo.n_k,
                hi.sigma_b,
                hi.n_k
            );
        }
    }
}
