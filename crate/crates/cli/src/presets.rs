//! Figure-recipe presets: the experiment matrix behind each reference
//! figure, with desk-scale Monte Carlo budgets. Budgets and the seed can
//! be overridden per run.

use stbc_core::harness::{CodeChoice, ExperimentConfig, Receiver};
use stbc_core::{Error, Result};

pub const PRESET_NAMES: &[(&str, &str)] = &[
    (
        "fig2",
        "OSTBC / QOSTBC / SVD-precoded QOSTBC, 4x1 4-QAM, exhaustive ML with perfect CSI",
    ),
    (
        "fig2-mmse",
        "same three systems with pilot-based MMSE channel estimates at the receiver",
    ),
    (
        "fig3",
        "precoded QOSTBC 4x1: ML perfect CSI vs ML with MMSE estimates vs PT-RBF decoder",
    ),
    (
        "fig4",
        "PT-RBF with precoding, 4x1 vs 32x1, repetition bands (mean/variance/min/max)",
    ),
    (
        "fig5",
        "PT-RBF NMSE convergence traces: 4x1 and 32x1, with and without precoding",
    ),
    ("fig7a", "decoded constellation dump, PT-RBF 4x1 at 20 dB"),
    ("fig7b", "decoded constellation dump, PT-RBF 32x1 at 20 dB"),
];

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut g = Vec::new();
    let mut x = lo;
    while x <= hi + 1e-9 {
        g.push(x);
        x += step;
    }
    g
}

fn ml_config(label: &str, code: CodeChoice, precoding: bool, receiver: Receiver) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(label, code, 4, 1, receiver);
    cfg.precoding = precoding;
    cfg.ebn0_grid = grid(0.0, 24.0, 2.0);
    cfg.min_frames = 10_000;
    cfg.min_bit_errors = 200;
    cfg.frame_cap = 2_000_000;
    cfg
}

fn nn_config(label: &str, ntx: usize, precoding: bool) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(label, CodeChoice::Qostbc, ntx, 1, Receiver::Ptrbf);
    cfg.precoding = precoding;
    cfg.ebn0_grid = grid(0.0, 12.0, 2.0);
    cfg.min_frames = 4_000;
    cfg.min_bit_errors = 150;
    cfg.frame_cap = 80_000;
    cfg.repetitions = 3;
    cfg
}

/// Expand a preset name into its list of experiment configurations.
pub fn preset(name: &str) -> Result<Vec<ExperimentConfig>> {
    let configs = match name {
        "fig2" => vec![
            ml_config("ostbc4x1_ml", CodeChoice::OstbcRateHalf, false, Receiver::MlPerfect),
            ml_config("qostbc4x1_ml", CodeChoice::Qostbc, false, Receiver::MlPerfect),
            ml_config("qostbc4x1_svd_ml", CodeChoice::Qostbc, true, Receiver::MlPerfect),
        ],
        "fig2-mmse" => vec![
            ml_config("ostbc4x1_mmse", CodeChoice::OstbcRateHalf, false, Receiver::MlMmse),
            ml_config("qostbc4x1_mmse", CodeChoice::Qostbc, false, Receiver::MlMmse),
            ml_config("qostbc4x1_svd_mmse", CodeChoice::Qostbc, true, Receiver::MlMmse),
        ],
        "fig3" => {
            let mut perfect = ml_config("qostbc4x1_svd_ml", CodeChoice::Qostbc, true, Receiver::MlPerfect);
            perfect.ebn0_grid = grid(0.0, 12.0, 2.0);
            let mut mmse = ml_config("qostbc4x1_svd_mmse", CodeChoice::Qostbc, true, Receiver::MlMmse);
            mmse.ebn0_grid = grid(0.0, 12.0, 2.0);
            vec![perfect, mmse, nn_config("qostbc4x1_svd_ptrbf", 4, true)]
        }
        "fig4" => {
            let mut small = nn_config("ptrbf4x1_svd", 4, true);
            let mut large = nn_config("ptrbf32x1_svd", 32, true);
            for cfg in [&mut small, &mut large] {
                cfg.ebn0_grid = grid(0.0, 12.0, 4.0);
                cfg.repetitions = 10;
                cfg.min_frames = 2_000;
                cfg.min_bit_errors = 50;
                cfg.frame_cap = 20_000;
            }
            vec![small, large]
        }
        "fig5" => {
            let mut configs = Vec::new();
            for (ntx, precoding) in [(4usize, true), (4, false), (32, true), (32, false)] {
                let label = format!(
                    "nmse{}x1_{}",
                    ntx,
                    if precoding { "svd" } else { "nosvd" }
                );
                let mut cfg = nn_config(&label, ntx, precoding);
                cfg.ebn0_grid = vec![8.0];
                cfg.repetitions = 10;
                cfg.min_frames = 500;
                cfg.min_bit_errors = 0;
                cfg.frame_cap = 500;
                configs.push(cfg);
            }
            configs
        }
        "fig7a" => {
            let mut cfg = nn_config("const4x1_svd", 4, true);
            cfg.ebn0_grid = vec![20.0];
            cfg.repetitions = 1;
            cfg.min_frames = 600;
            cfg.min_bit_errors = 0;
            cfg.frame_cap = 600;
            vec![cfg]
        }
        "fig7b" => {
            let mut cfg = nn_config("const32x1_svd", 32, true);
            cfg.ebn0_grid = vec![20.0];
            cfg.repetitions = 1;
            cfg.min_frames = 100;
            cfg.min_bit_errors = 0;
            cfg.frame_cap = 100;
            vec![cfg]
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown preset `{name}`; available: {}",
                PRESET_NAMES
                    .iter()
                    .map(|(n, _)| *n)
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    };
    Ok(configs)
}
