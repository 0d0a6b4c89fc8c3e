//! Probe: does the 32x1 network train under different loss/rate scalings?

use num_complex::Complex64;
use stbc_core::channel::{draw_channel, transmit, SnrPoint};
use stbc_core::modem::build_qam;
use stbc_core::precode::Precoder;
use stbc_core::ptrbf::{vectorize_block, LearningRates, PtRbfNetwork, Topology};
use stbc_core::rng::substream;
use stbc_core::stbc::build_qostbc;

use rand::Rng;

fn main() {
    for (ntx, neurons) in [(4usize, 50usize), (32, 100)] {
        for scale_rates in [1.0f64, ntx as f64, 4.0 * ntx as f64] {
            run(ntx, neurons, scale_rates);
        }
    }
}

fn run(ntx: usize, neurons: usize, rate_scale: f64) {
    let n = ntx.trailing_zeros();
    let code = build_qostbc(n).unwrap();
    let qam = build_qam(4).unwrap();
    let ns = code.symbols_per_block();
    let scale = 1.0 / (ntx as f64).sqrt();
    let snr = SnrPoint::new(8.0, 4, 1.0);

    let mut rng_c = substream(5, "channel", &[ntx as u64]);
    let mut rng_d = substream(5, "data", &[ntx as u64]);
    let mut rng_n = substream(5, "noise", &[ntx as u64]);
    let mut rng_i = substream(5, "nn-init", &[ntx as u64]);

    let h = draw_channel(&mut rng_c, ntx, 1);
    let precoder = Precoder::from_channel(&h).unwrap();

    let t_train = 2000;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for _ in 0..t_train {
        let symbols: Vec<Complex64> = (0..ns).map(|_| qam.point(rng_d.gen_range(0..4))).collect();
        let x = precoder
            .apply_tx(&code.encode(&symbols).unwrap().scale_re(scale))
            .unwrap();
        let y = transmit(&h, &x, &snr, &mut rng_n).unwrap();
        inputs.push(vectorize_block(&precoder.apply_rx(&y).unwrap()));
        targets.push(symbols);
    }
    let mean_power = inputs
        .iter()
        .map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        / t_train as f64;
    let input_scale = mean_power.sqrt();
    for v in inputs.iter_mut() {
        for z in v.iter_mut() {
            *z /= input_scale;
        }
    }

    let base = LearningRates::reference();
    let rates = LearningRates {
        weights: base.weights * rate_scale,
        bias: base.bias * rate_scale,
        centers: base.centers * rate_scale,
        variances: base.variances * rate_scale,
    };
    let topo = Topology::single_layer(code.slots(), neurons, ns);
    let mut net = PtRbfNetwork::init(&mut rng_i, &topo, rates).unwrap();
    net.set_centers_from_samples(&inputs[..neurons.min(inputs.len())])
        .unwrap();

    print!("{ntx}x1 rate_scale {rate_scale:>5.0}: NMSE(dB)");
    for epoch in 0..10 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, d) in inputs.iter().zip(&targets) {
            match net.train_step(x, d) {
                Ok(loss) => {
                    num += loss * ns as f64;
                    den += ns as f64;
                }
                Err(e) => {
                    println!("  epoch {epoch}: FAILED {e}");
                    return;
                }
            }
        }
        print!(" {:6.2}", 10.0 * (num / den).log10());
    }
    println!();
}
