//! Probe for the neural decoder experiments: NN vs MMSE-ML curves and the
//! 4x1 / 32x1 contrast.

use std::time::Instant;

use stbc_core::harness::{
    run_ber_sweep, run_nn_experiment, CodeChoice, ExperimentConfig, Receiver,
};

fn main() {
    let grid: Vec<f64> = (0..=6).map(|i| 2.0 * i as f64).collect();

    let mut mmse = ExperimentConfig::new("mmse", CodeChoice::Qostbc, 4, 1, Receiver::MlMmse);
    mmse.precoding = true;
    mmse.ebn0_grid = grid.clone();
    mmse.min_frames = 10_000;
    mmse.min_bit_errors = 400;
    mmse.frame_cap = 400_000;
    let t0 = Instant::now();
    let recs = run_ber_sweep(&mmse).unwrap();
    println!("== ml_mmse precoded 4x1 ({:.1} s)", t0.elapsed().as_secs_f64());
    for r in &recs {
        println!(
            "  {:5.1} dB  ber {:10.3e}  frames {:>8}  errors {:>6}",
            r.ebn0_db, r.ber_mean, r.frames, r.bit_errors
        );
    }

    let mut nn = ExperimentConfig::new("nn", CodeChoice::Qostbc, 4, 1, Receiver::Ptrbf);
    nn.precoding = true;
    nn.ebn0_grid = grid.clone();
    nn.min_frames = 4_000;
    nn.min_bit_errors = 150;
    nn.frame_cap = 60_000;
    nn.repetitions = 2;
    let t0 = Instant::now();
    let out = run_nn_experiment(&nn).unwrap();
    println!("== ptrbf precoded 4x1 ({:.1} s)", t0.elapsed().as_secs_f64());
    for r in &out.ber {
        println!(
            "  {:5.1} dB  ber {:10.3e}  frames {:>8}  errors {:>6}",
            r.ebn0_db, r.ber_mean, r.frames, r.bit_errors
        );
    }
    for t in &out.nmse {
        let first = &t.records[0];
        let last = t.records.last().unwrap();
        println!(
            "  rep {}: train {:.2} -> {:.2} dB, val {:.2} -> {:.2} dB",
            t.repetition,
            10.0 * first.train_nmse.log10(),
            10.0 * last.train_nmse.log10(),
            10.0 * first.val_nmse.log10(),
            10.0 * last.val_nmse.log10(),
        );
    }

    // 4x1 vs 32x1 at a common mid-grid point.
    for ntx in [4usize, 32] {
        let mut cfg = ExperimentConfig::new("band", CodeChoice::Qostbc, ntx, 1, Receiver::Ptrbf);
        cfg.precoding = true;
        cfg.ebn0_grid = vec![8.0];
        cfg.min_frames = 2_000;
        cfg.min_bit_errors = 30;
        cfg.frame_cap = 20_000;
        cfg.repetitions = 10;
        let t0 = Instant::now();
        let out = run_nn_experiment(&cfg).unwrap();
        let r = &out.ber[0];
        println!(
            "== ptrbf {ntx}x1 @8dB ({:.1} s): mean {:.3e} var {:.3e} min {:.3e} max {:.3e} errs {}",
            t0.elapsed().as_secs_f64(),
            r.ber_mean,
            r.ber_variance,
            r.ber_min,
            r.ber_max,
            r.bit_errors
        );
        let finals: Vec<f64> = out
            .nmse
            .iter()
            .map(|t| 10.0 * t.records.last().unwrap().val_nmse.log10())
            .collect();
        println!("   final val NMSE (dB) per rep: {finals:?}");
    }
}
