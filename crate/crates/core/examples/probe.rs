//! Quick BER/timing probe used while tuning experiment budgets.

use std::time::Instant;

use stbc_core::harness::{run_ber_sweep, CodeChoice, ExperimentConfig, Receiver};

fn main() {
    let grid: Vec<f64> = vec![8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0];
    for (label, code, ntx, precoding) in [
        ("ostbc", CodeChoice::OstbcRateHalf, 4usize, false),
        ("qostbc", CodeChoice::Qostbc, 4, false),
        ("qostbc_svd", CodeChoice::Qostbc, 4, true),
    ] {
        let mut cfg = ExperimentConfig::new(label, code, ntx, 1, Receiver::MlPerfect);
        cfg.precoding = precoding;
        cfg.ebn0_grid = grid.clone();
        cfg.min_frames = 10_000;
        cfg.min_bit_errors = 800;
        cfg.frame_cap = 1_500_000;
        let t0 = Instant::now();
        let records = run_ber_sweep(&cfg).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        println!("== {label} ({dt:.1} s total)");
        for r in &records {
            println!(
                "  {:5.1} dB  ber {:10.3e}  frames {:>9}  errors {:>7}",
                r.ebn0_db, r.ber_mean, r.frames, r.bit_errors
            );
        }
    }
}
