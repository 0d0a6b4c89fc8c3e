//! Complex-valued phase-transmittance RBF network with split-complex SGD.
//!
//! Each layer computes `y = W phi + b`, where the m-th kernel is
//! `phi_m = exp(-Re(v_m)) + j exp(-Im(v_m))` and its input is
//! `v_m = ||Re(u) - Re(gamma_m)||^2 / Re(sigma_m)
//!        + j ||Im(u) - Im(gamma_m)||^2 / Im(sigma_m)`
//! for the layer input `u`. The kernel treats the real and imaginary
//! channels separately, which preserves phase information through the
//! Gaussian nonlinearity.
//!
//! Training is online stochastic gradient descent on the split-complex
//! squared error `J = sum(Re(e)^2 + Im(e)^2)` over the output vector.
//! Summing rather than averaging across outputs keeps the per-output
//! gradient scale independent of the output width, which is what the
//! reference learning rates are tuned for (with a mean loss the wide
//! configurations stall at those rates). Gradients are taken
//! with respect to the real and imaginary parts of every parameter
//! independently (chain rule per channel); the analytic expressions are
//! verified against central finite differences in the test suite. Each
//! parameter group (weights, biases, centers, variances) has its own
//! learning rate.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::modem::Constellation;

/// Lower bound on the real and imaginary parts of every kernel variance,
/// re-imposed after each update.
pub const SIGMA_MIN: f64 = 1e-4;

/// Global gradient-norm clip applied per training step.
pub const GRAD_CLIP: f64 = 1e3;

const CHECKPOINT_HEADER: &str = "ptrbf-checkpoint v1";

/// Per-group learning rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRates {
    pub weights: f64,
    pub bias: f64,
    pub centers: f64,
    pub variances: f64,
}

impl LearningRates {
    /// The reference rates used by all experiment presets.
    pub fn reference() -> LearningRates {
        LearningRates {
            weights: 2.5e-3,
            bias: 2.5e-3,
            centers: 1.5e-3,
            variances: 2.5e-3,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.weights, self.bias, self.centers, self.variances];
        if all.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        Ok(())
    }
}

/// Kernel count and output width of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub neurons: usize,
    pub outputs: usize,
}

/// Network shape: input width plus one shape per layer; the final layer's
/// output width is the network output width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub inputs: usize,
    pub layers: Vec<LayerShape>,
}

impl Topology {
    /// Single hidden layer, the configuration used by the presets.
    pub fn single_layer(inputs: usize, neurons: usize, outputs: usize) -> Topology {
        Topology {
            inputs,
            layers: vec![LayerShape { neurons, outputs }],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.inputs == 0 || self.layers.is_empty() {
            return Err(Error::Config("empty network topology".into()));
        }
        if self
            .layers
            .iter()
            .any(|l| l.neurons == 0 || l.outputs == 0)
        {
            return Err(Error::Config("zero-width layer".into()));
        }
        Ok(())
    }
}

/// One PT-RBF layer: weights `w` (outputs x neurons), bias, center matrix
/// `gamma` (neurons x previous-width, one center vector per row) and
/// complex variances (one per neuron).
#[derive(Debug, Clone, PartialEq)]
pub struct PtRbfLayer {
    pub w: CMat,
    pub b: Vec<Complex64>,
    pub gamma: CMat,
    pub sigma: Vec<Complex64>,
}

impl PtRbfLayer {
    fn neurons(&self) -> usize {
        self.gamma.rows()
    }

    fn input_width(&self) -> usize {
        self.gamma.cols()
    }

    fn outputs(&self) -> usize {
        self.w.rows()
    }
}

/// The m-th Gaussian kernel value for a kernel input `v`.
#[inline]
pub fn kernel(v: Complex64) -> Complex64 {
    Complex64::new((-v.re).exp(), (-v.im).exp())
}

/// Kernel input: squared real/imaginary distances to the center, each
/// divided by the matching part of the variance.
pub fn kernel_input(y_prev: &[Complex64], gamma_m: &[Complex64], sigma_m: Complex64) -> Complex64 {
    debug_assert_eq!(y_prev.len(), gamma_m.len());
    let mut dr = 0.0;
    let mut di = 0.0;
    for (y, g) in y_prev.iter().zip(gamma_m) {
        let er = y.re - g.re;
        let ei = y.im - g.im;
        dr += er * er;
        di += ei * ei;
    }
    Complex64::new(dr / sigma_m.re, di / sigma_m.im)
}

/// Activations retained for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Per layer: input vector, kernel inputs, kernel values, output vector.
    layers: Vec<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)>,
}

impl ForwardCache {
    pub fn output(&self) -> &[Complex64] {
        &self.layers.last().expect("at least one layer").3
    }
}

/// Per-layer gradients of the split-complex loss; real and imaginary parts
/// of each entry hold the partials with respect to the matching parameter
/// parts.
#[derive(Debug, Clone)]
pub struct LayerGradients {
    pub w: CMat,
    pub b: Vec<Complex64>,
    pub gamma: CMat,
    pub sigma: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PtRbfNetwork {
    pub layers: Vec<PtRbfLayer>,
    pub rates: LearningRates,
    n_inp: usize,
    n_out: usize,
}

impl PtRbfNetwork {
    /// Random initialization: `W`, `b` entries CN(0, 1/neurons) per layer,
    /// centers CN(0,1) per entry, variances `1 + j`.
    pub fn init<R: Rng + ?Sized>(
        rng: &mut R,
        topology: &Topology,
        rates: LearningRates,
    ) -> Result<PtRbfNetwork> {
        topology.validate()?;
        rates.validate()?;
        let mut layers = Vec::with_capacity(topology.layers.len());
        let mut prev = topology.inputs;
        for shape in &topology.layers {
            let scale = 1.0 / shape.neurons as f64;
            let w = CMat::from_fn(shape.outputs, shape.neurons, |_, _| {
                crate::rng::complex_normal(rng, scale)
            });
            let b = (0..shape.outputs)
                .map(|_| crate::rng::complex_normal(rng, scale))
                .collect();
            let gamma = CMat::from_fn(shape.neurons, prev, |_, _| {
                crate::rng::complex_normal(rng, 1.0)
            });
            let sigma = vec![Complex64::new(1.0, 1.0); shape.neurons];
            layers.push(PtRbfLayer { w, b, gamma, sigma });
            prev = shape.outputs;
        }
        Ok(PtRbfNetwork {
            layers,
            rates,
            n_inp: topology.inputs,
            n_out: prev,
        })
    }

    pub fn input_width(&self) -> usize {
        self.n_inp
    }

    pub fn output_width(&self) -> usize {
        self.n_out
    }

    /// Replace the first layer's centers with training inputs (cycled if
    /// fewer samples than neurons).
    pub fn set_centers_from_samples(&mut self, samples: &[Vec<Complex64>]) -> Result<()> {
        if samples.is_empty() {
            return Err(Error::Usage("no samples for center init".into()));
        }
        let layer = &mut self.layers[0];
        if samples[0].len() != layer.input_width() {
            return Err(Error::Shape(format!(
                "sample width {} does not match input width {}",
                samples[0].len(),
                layer.input_width()
            )));
        }
        for m in 0..layer.neurons() {
            let s = &samples[m % samples.len()];
            for i in 0..layer.input_width() {
                layer.gamma.set(m, i, s[i]);
            }
        }
        Ok(())
    }

    /// Forward pass retaining per-layer activations.
    pub fn forward(&self, x: &[Complex64]) -> Result<ForwardCache> {
        if x.len() != self.n_inp {
            return Err(Error::Shape(format!(
                "input width {} does not match network input {}",
                x.len(),
                self.n_inp
            )));
        }
        let mut cache = Vec::with_capacity(self.layers.len());
        let mut u = x.to_vec();
        for layer in &self.layers {
            let neurons = layer.neurons();
            let mut v = Vec::with_capacity(neurons);
            let mut phi = Vec::with_capacity(neurons);
            for m in 0..neurons {
                let gamma_row = &layer.gamma.data()[m * layer.input_width()..(m + 1) * layer.input_width()];
                let vm = kernel_input(&u, gamma_row, layer.sigma[m]);
                v.push(vm);
                phi.push(kernel(vm));
            }
            let mut y = layer.b.clone();
            for (k, yk) in y.iter_mut().enumerate() {
                let wrow = &layer.w.data()[k * neurons..(k + 1) * neurons];
                for (wm, pm) in wrow.iter().zip(&phi) {
                    *yk += wm * pm;
                }
            }
            cache.push((u, v, phi, y.clone()));
            u = y;
        }
        Ok(ForwardCache { layers: cache })
    }

    /// Forward pass returning only the output vector.
    pub fn output(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        Ok(self.forward(x)?.output().to_vec())
    }

    /// Split-complex squared error against a target.
    pub fn loss(&self, x: &[Complex64], target: &[Complex64]) -> Result<f64> {
        let out = self.output(x)?;
        split_mse(&out, target)
    }

    /// Loss and analytic gradients for one sample, by backpropagation
    /// through the kernel equations on the real and imaginary channels.
    pub fn gradients(
        &self,
        x: &[Complex64],
        target: &[Complex64],
    ) -> Result<(f64, Vec<LayerGradients>)> {
        if target.len() != self.n_out {
            return Err(Error::Shape(format!(
                "target width {} does not match network output {}",
                target.len(),
                self.n_out
            )));
        }
        let cache = self.forward(x)?;
        let out = cache.output();
        let loss = split_mse(out, target)?;

        // dJ/dRe(y) + j dJ/dIm(y) at the output layer.
        let mut gy: Vec<Complex64> = out
            .iter()
            .zip(target)
            .map(|(&y, &d)| (y - d) * 2.0)
            .collect();

        let mut grads = vec![None; self.layers.len()];
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let (u, v, phi, _) = &cache.layers[l];
            let neurons = layer.neurons();
            let width = layer.input_width();

            let mut gw = CMat::zeros(layer.outputs(), neurons);
            let gb = gy.clone();
            // gW[k][m] = gy[k] * conj(phi[m]); gphi[m] = sum_k conj(W[k][m]) gy[k]
            let mut gphi = vec![Complex64::new(0.0, 0.0); neurons];
            for k in 0..layer.outputs() {
                let g = gy[k];
                for m in 0..neurons {
                    gw.set(k, m, g * phi[m].conj());
                    gphi[m] += layer.w.get(k, m).conj() * g;
                }
            }

            let mut ggamma = CMat::zeros(neurons, width);
            let mut gsigma = vec![Complex64::new(0.0, 0.0); neurons];
            let mut gu = vec![Complex64::new(0.0, 0.0); width];
            for m in 0..neurons {
                // Re(phi) depends only on Re(v) and vice versa:
                // dJ/dRe(v) = -dJ/dRe(phi) * Re(phi).
                let gv = Complex64::new(-gphi[m].re * phi[m].re, -gphi[m].im * phi[m].im);
                let sig = layer.sigma[m];
                // Recover the squared distances from v = D / sigma.
                let dr = v[m].re * sig.re;
                let di = v[m].im * sig.im;
                gsigma[m] = Complex64::new(
                    -gv.re * dr / (sig.re * sig.re),
                    -gv.im * di / (sig.im * sig.im),
                );
                let cr = 2.0 * gv.re / sig.re;
                let ci = 2.0 * gv.im / sig.im;
                for i in 0..width {
                    let g = layer.gamma.get(m, i);
                    let er = u[i].re - g.re;
                    let ei = u[i].im - g.im;
                    ggamma.set(m, i, Complex64::new(-cr * er, -ci * ei));
                    gu[i] += Complex64::new(cr * er, ci * ei);
                }
            }

            grads[l] = Some(LayerGradients {
                w: gw,
                b: gb,
                gamma: ggamma,
                sigma: gsigma,
            });
            gy = gu;
        }

        Ok((
            loss,
            grads.into_iter().map(|g| g.expect("filled")).collect(),
        ))
    }

    /// One online SGD step; returns the pre-update loss.
    ///
    /// The global gradient norm is clipped at `GRAD_CLIP` and variances are
    /// clamped to `SIGMA_MIN` per part after the update.
    pub fn train_step(&mut self, x: &[Complex64], target: &[Complex64]) -> Result<f64> {
        let (loss, mut grads) = self.gradients(x, target)?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite training loss {loss}")));
        }
        let mut norm_sq = 0.0;
        for g in &grads {
            norm_sq += g.w.frobenius_norm().powi(2);
            norm_sq += g.gamma.frobenius_norm().powi(2);
            norm_sq += g.b.iter().map(|z| z.norm_sqr()).sum::<f64>();
            norm_sq += g.sigma.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let norm = norm_sq.sqrt();
        if !norm.is_finite() {
            return Err(Error::Numeric("non-finite gradients".into()));
        }
        if norm > GRAD_CLIP {
            let s = Complex64::new(GRAD_CLIP / norm, 0.0);
            for g in grads.iter_mut() {
                g.w = g.w.scale(s);
                g.gamma = g.gamma.scale(s);
                g.b.iter_mut().for_each(|z| *z *= s);
                g.sigma.iter_mut().for_each(|z| *z *= s);
            }
        }
        let rates = self.rates;
        for (layer, g) in self.layers.iter_mut().zip(&grads) {
            for k in 0..layer.w.rows() {
                for m in 0..layer.w.cols() {
                    let v = layer.w.get(k, m) - g.w.get(k, m) * rates.weights;
                    layer.w.set(k, m, v);
                }
            }
            for (bk, gk) in layer.b.iter_mut().zip(&g.b) {
                *bk -= *gk * rates.bias;
            }
            for m in 0..layer.gamma.rows() {
                for i in 0..layer.gamma.cols() {
                    let v = layer.gamma.get(m, i) - g.gamma.get(m, i) * rates.centers;
                    layer.gamma.set(m, i, v);
                }
            }
            for (sm, gm) in layer.sigma.iter_mut().zip(&g.sigma) {
                let updated = *sm - *gm * rates.variances;
                *sm = Complex64::new(updated.re.max(SIGMA_MIN), updated.im.max(SIGMA_MIN));
            }
        }
        Ok(loss)
    }

    /// Versioned text checkpoint; floats carry 17 significant digits so the
    /// round trip is bit-exact.
    pub fn to_checkpoint_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{CHECKPOINT_HEADER}");
        let _ = writeln!(
            s,
            "rates {} {} {} {}",
            fmt_f64(self.rates.weights),
            fmt_f64(self.rates.bias),
            fmt_f64(self.rates.centers),
            fmt_f64(self.rates.variances)
        );
        let _ = writeln!(s, "inputs {}", self.n_inp);
        let _ = writeln!(s, "layers {}", self.layers.len());
        for (idx, layer) in self.layers.iter().enumerate() {
            let _ = writeln!(
                s,
                "layer {idx} neurons {} outputs {} prev {}",
                layer.neurons(),
                layer.outputs(),
                layer.input_width()
            );
            let _ = writeln!(s, "w {}", fmt_complex_slice(layer.w.data()));
            let _ = writeln!(s, "b {}", fmt_complex_slice(&layer.b));
            let _ = writeln!(s, "gamma {}", fmt_complex_slice(layer.gamma.data()));
            let _ = writeln!(s, "sigma {}", fmt_complex_slice(&layer.sigma));
        }
        s
    }

    pub fn from_checkpoint_str(text: &str) -> Result<PtRbfNetwork> {
        let mut lines = text.lines();
        let bad = |what: &str| Error::Config(format!("checkpoint: {what}"));
        if lines.next() != Some(CHECKPOINT_HEADER) {
            return Err(bad("unknown header or version"));
        }
        let rates_line = lines.next().ok_or_else(|| bad("missing rates"))?;
        let rv = parse_tagged_floats(rates_line, "rates", 4)?;
        let rates = LearningRates {
            weights: rv[0],
            bias: rv[1],
            centers: rv[2],
            variances: rv[3],
        };
        let n_inp = parse_tagged_usize(lines.next().ok_or_else(|| bad("missing inputs"))?, "inputs")?;
        let n_layers =
            parse_tagged_usize(lines.next().ok_or_else(|| bad("missing layers"))?, "layers")?;
        let mut layers = Vec::with_capacity(n_layers);
        let mut prev = n_inp;
        let mut n_out = 0;
        for idx in 0..n_layers {
            let head = lines.next().ok_or_else(|| bad("missing layer header"))?;
            let parts: Vec<&str> = head.split_whitespace().collect();
            if parts.len() != 8 || parts[0] != "layer" || parts[1] != idx.to_string() {
                return Err(bad("malformed layer header"));
            }
            let neurons: usize = parts[3].parse().map_err(|_| bad("neurons"))?;
            let outputs: usize = parts[5].parse().map_err(|_| bad("outputs"))?;
            let width: usize = parts[7].parse().map_err(|_| bad("prev width"))?;
            if width != prev {
                return Err(bad("layer width chain broken"));
            }
            let w = parse_complex_matrix(lines.next(), "w", outputs, neurons)?;
            let b = parse_complex_vector(lines.next(), "b", outputs)?;
            let gamma = parse_complex_matrix(lines.next(), "gamma", neurons, width)?;
            let sigma = parse_complex_vector(lines.next(), "sigma", neurons)?;
            layers.push(PtRbfLayer { w, b, gamma, sigma });
            prev = outputs;
            n_out = outputs;
        }
        Ok(PtRbfNetwork {
            layers,
            rates,
            n_inp,
            n_out,
        })
    }
}

/// `sum(Re(e)^2 + Im(e)^2)` with `e = target - y`.
fn split_mse(out: &[Complex64], target: &[Complex64]) -> Result<f64> {
    if out.len() != target.len() {
        return Err(Error::Shape("output/target width mismatch".into()));
    }
    Ok(out
        .iter()
        .zip(target)
        .map(|(&y, &d)| (d - y).norm_sqr())
        .sum::<f64>())
}

/// 17-significant-digit float rendering (bit-exact round trip).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_complex_slice(zs: &[Complex64]) -> String {
    let mut parts = Vec::with_capacity(zs.len() * 2);
    for z in zs {
        parts.push(fmt_f64(z.re));
        parts.push(fmt_f64(z.im));
    }
    parts.join(" ")
}

fn parse_tagged_floats(line: &str, tag: &str, count: usize) -> Result<Vec<f64>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(Error::Config(format!("checkpoint: expected `{tag}` line")));
    }
    let vals: Vec<f64> = parts
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Config(format!("checkpoint: bad float in `{tag}`")))
        })
        .collect::<Result<_>>()?;
    if vals.len() != count {
        return Err(Error::Config(format!(
            "checkpoint: `{tag}` expects {count} values, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn parse_tagged_usize(line: &str, tag: &str) -> Result<usize> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 2 || parts[0] != tag {
        return Err(Error::Config(format!("checkpoint: expected `{tag} <n>`")));
    }
    parts[1]
        .parse()
        .map_err(|_| Error::Config(format!("checkpoint: bad `{tag}` value")))
}

fn parse_complex_vector(line: Option<&str>, tag: &str, len: usize) -> Result<Vec<Complex64>> {
    let vals = parse_tagged_floats(
        line.ok_or_else(|| Error::Config(format!("checkpoint: missing `{tag}`")))?,
        tag,
        len * 2,
    )?;
    Ok(vals
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect())
}

fn parse_complex_matrix(line: Option<&str>, tag: &str, rows: usize, cols: usize) -> Result<CMat> {
    let flat = parse_complex_vector(line, tag, rows * cols)?;
    Ok(CMat::from_fn(rows, cols, |i, j| flat[i * cols + j]))
}

/// Row-major flattening of a received block into the network input vector.
pub fn vectorize_block(y: &CMat) -> Vec<Complex64> {
    y.data().to_vec()
}

/// A trained network plus the input power normalization fixed during its
/// pilot phase.
#[derive(Debug, Clone)]
pub struct PtRbfDecoder {
    pub net: PtRbfNetwork,
    pub input_scale: f64,
}

/// Decoder output for one frame.
#[derive(Debug, Clone)]
pub struct DecodedFrame {
    /// Constellation label per symbol slot (nearest point to each output).
    pub labels: Vec<usize>,
    /// The hard symbol decisions.
    pub symbols: Vec<Complex64>,
    /// Raw network outputs, for constellation dumps.
    pub raw: Vec<Complex64>,
}

impl PtRbfDecoder {
    /// Decode one received block: normalize, run the network, snap each
    /// output to the nearest constellation point.
    pub fn decode_frame(&self, y_rx: &CMat, constellation: &Constellation) -> Result<DecodedFrame> {
        let scale = if self.input_scale > 0.0 {
            1.0 / self.input_scale
        } else {
            1.0
        };
        let x: Vec<Complex64> = vectorize_block(y_rx).iter().map(|&z| z * scale).collect();
        let raw = self.net.output(&x)?;
        let labels: Vec<usize> = raw.iter().map(|&z| constellation.nearest(z)).collect();
        let symbols = labels.iter().map(|&l| constellation.point(l)).collect();
        Ok(DecodedFrame {
            labels,
            symbols,
            raw,
        })
    }
}

/// One epoch's error summary; NMSE is linear here and converted to dB at
/// export time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub epoch: usize,
    pub train_nmse: f64,
    pub val_nmse: f64,
}
