//! Desk-scale training runs for the neural decoder: the network must learn
//! to invert a fixed channel from supervised pilot frames.

use num_complex::Complex64;
use stbc_core::channel::{draw_channel, transmit, SnrPoint};
use stbc_core::modem::build_qam;
use stbc_core::precode::Precoder;
use stbc_core::ptrbf::{vectorize_block, LearningRates, PtRbfDecoder, PtRbfNetwork, Topology};
use stbc_core::rng::substream;
use stbc_core::stbc::{build_alamouti, build_qostbc, StbcCode};

struct Trained {
    decoder: PtRbfDecoder,
    accuracy: f64,
    mean_raw_distance: f64,
}

/// Train on one channel realization and evaluate on held-out frames.
fn train_and_eval(
    seed: u64,
    code: &StbcCode,
    neurons: usize,
    snr: SnrPoint,
    precoding: bool,
    train_frames: usize,
    epochs: usize,
    eval_frames: usize,
) -> Trained {
    let qam = build_qam(4).unwrap();
    let ns = code.symbols_per_block();
    let ntx = code.ntx();
    let scale = 1.0 / (ntx as f64).sqrt();

    let mut rng_channel = substream(seed, "channel", &[]);
    let mut rng_data = substream(seed, "data", &[]);
    let mut rng_noise = substream(seed, "noise", &[]);
    let mut rng_init = substream(seed, "nn-init", &[]);

    let h = draw_channel(&mut rng_channel, ntx, 1);
    let precoder = if precoding {
        Precoder::from_channel(&h).unwrap()
    } else {
        Precoder::disabled()
    };

    let frame = |rng_data: &mut _, rng_noise: &mut _| {
        let labels: Vec<usize> = (0..ns)
            .map(|_| rand::Rng::gen_range(rng_data, 0..4))
            .collect();
        let symbols: Vec<Complex64> = labels.iter().map(|&l| qam.point(l)).collect();
        let x = precoder
            .apply_tx(&code.encode(&symbols).unwrap().scale_re(scale))
            .unwrap();
        let y = transmit(&h, &x, &snr, rng_noise).unwrap();
        let y_rx = precoder.apply_rx(&y).unwrap();
        (labels, symbols, vectorize_block(&y_rx))
    };

    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for _ in 0..train_frames {
        let (_, symbols, v) = frame(&mut rng_data, &mut rng_noise);
        inputs.push(v);
        targets.push(symbols);
    }
    let mean_power = inputs
        .iter()
        .map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        / train_frames as f64;
    let input_scale = mean_power.sqrt();
    for v in inputs.iter_mut() {
        for z in v.iter_mut() {
            *z /= input_scale;
        }
    }

    let topology = Topology::single_layer(code.slots(), neurons, ns);
    let mut net = PtRbfNetwork::init(&mut rng_init, &topology, LearningRates::reference()).unwrap();
    net.set_centers_from_samples(&inputs[..neurons.min(inputs.len())])
        .unwrap();
    for _ in 0..epochs {
        for (x, d) in inputs.iter().zip(&targets) {
            net.train_step(x, d).unwrap();
        }
    }

    let decoder = PtRbfDecoder { net, input_scale };
    let mut correct = 0usize;
    let mut total = 0usize;
    let mut dist = 0.0;
    for _ in 0..eval_frames {
        let (labels, _, v) = frame(&mut rng_data, &mut rng_noise);
        let y_mat = stbc_core::linalg::CMat::from_rows(&[v
            .iter()
            .map(|&z| z * input_scale)
            .collect::<Vec<_>>()])
        .unwrap();
        let decoded = decoder.decode_frame(&y_mat, &qam).unwrap();
        for (t, r) in labels.iter().zip(&decoded.labels) {
            if t == r {
                correct += 1;
            }
            total += 1;
        }
        for (&raw, &l) in decoded.raw.iter().zip(&labels) {
            dist += (raw - qam.point(l)).norm();
        }
    }
    Trained {
        decoder,
        accuracy: correct as f64 / total as f64,
        mean_raw_distance: dist / total as f64,
    }
}

#[test]
fn test_learns_noiseless_alamouti() {
    // Noiseless fixed channel: the trained net must recover the
    // transmitted symbols on at least 99% of 1000 held-out frames.
    let code = build_alamouti();
    let out = train_and_eval(
        11,
        &code,
        50,
        SnrPoint::noiseless(),
        false,
        2000,
        10,
        1000,
    );
    assert!(
        out.accuracy >= 0.99,
        "held-out symbol accuracy {:.4}",
        out.accuracy
    );
}

#[test]
fn test_outputs_cluster_near_constellation_at_high_snr() {
    // Precoded 4x1 at Eb/N0 = 20 dB: raw outputs must sit closer to the
    // true points than half the minimum constellation distance (sqrt(2)/2
    // for unit-energy 4-QAM).
    let code = build_qostbc(2).unwrap();
    let snr = SnrPoint::new(20.0, 4, 1.0);
    let out = train_and_eval(13, &code, 50, snr, true, 2000, 10, 500);
    let half_min_distance = 2.0f64.sqrt() / 2.0;
    assert!(
        out.mean_raw_distance < half_min_distance,
        "mean raw distance {:.4} vs half dmin {:.4}",
        out.mean_raw_distance,
        half_min_distance
    );
    assert!(out.accuracy > 0.99, "accuracy {:.4}", out.accuracy);
    // Keep the decoder alive so the struct field is exercised.
    assert_eq!(out.decoder.net.output_width(), 4);
}
