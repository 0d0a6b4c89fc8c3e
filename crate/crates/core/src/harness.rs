//! Monte Carlo experiment engine: BER sweeps, repetition bands, neural
//! decoder training runs, and result summaries.
//!
//! Determinism contract: every random draw comes from a substream keyed by
//! `(seed, stream, point index, repetition index, chunk-or-realization
//! index)`, and partial results are reduced in index order. Worker count
//! and scheduling therefore never change the output. ML frame batches are
//! split into fixed-size chunks so a single expensive SNR point still
//! spreads over workers; chunk planning depends only on already-reduced
//! counts.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{draw_channel, transmit, SnrPoint};
use crate::detect::{estimate_mmse, ml_decode, CandidateSet};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::modem::{build_qam, Constellation};
use crate::precode::Precoder;
use crate::ptrbf::{
    vectorize_block, LearningRates, PtRbfDecoder, PtRbfNetwork, Topology, TrainRecord,
};
use crate::rng::substream;
use crate::stbc::{build_alamouti, build_ostbc_rate_half, build_qostbc, StbcCode};

/// Frames per parallel work chunk in ML sweeps.
const CHUNK_FRAMES: u64 = 2048;
/// Safety factor when extrapolating how many more frames a point needs.
const BATCH_HEADROOM: f64 = 1.25;
/// Fixed seed for the public pilot symbol sequence (a protocol constant,
/// not part of the experiment seed).
const PILOT_SEED: u64 = 0x5354_4243_5049_4c54;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeChoice {
    Qostbc,
    OstbcRateHalf,
    Alamouti,
}

impl CodeChoice {
    pub fn name(&self) -> &'static str {
        match self {
            CodeChoice::Qostbc => "qostbc",
            CodeChoice::OstbcRateHalf => "ostbc_r12",
            CodeChoice::Alamouti => "alamouti",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Receiver {
    MlPerfect,
    MlMmse,
    Ptrbf,
}

impl Receiver {
    pub fn name(&self) -> &'static str {
        match self {
            Receiver::MlPerfect => "ml_perfect",
            Receiver::MlMmse => "ml_mmse",
            Receiver::Ptrbf => "ptrbf",
        }
    }
}

/// Neural decoder knobs. The paper-derived presets are one hidden layer of
/// 50 kernels for 4 transmit antennas and 100 for 32, with the reference
/// learning rates; the training protocol knobs are artifact defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct NnSettings {
    pub hidden_neurons: usize,
    pub train_frames: usize,
    pub epochs: usize,
    pub payload_frames_per_channel: usize,
    pub sample_init: bool,
    pub val_fraction: f64,
    pub dump_points: usize,
    pub rates: LearningRates,
}

impl NnSettings {
    pub fn default_for(ntx: usize) -> NnSettings {
        NnSettings {
            hidden_neurons: if ntx >= 32 { 100 } else { 50 },
            train_frames: 2000,
            epochs: 10,
            payload_frames_per_channel: 500,
            sample_init: true,
            val_fraction: 0.10,
            dump_points: 2000,
            rates: LearningRates::reference(),
        }
    }
}

/// One experiment: a (code, receiver, antenna, SNR grid) combination with
/// its Monte Carlo budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub label: String,
    pub ntx: usize,
    pub nrx: usize,
    pub modulation: usize,
    pub code: CodeChoice,
    pub precoding: bool,
    pub receiver: Receiver,
    pub ebn0_grid: Vec<f64>,
    pub min_frames: u64,
    pub min_bit_errors: u64,
    pub frame_cap: u64,
    pub repetitions: usize,
    pub seed: u64,
    /// Pilot blocks per frame for MMSE estimation.
    pub pilot_blocks: usize,
    /// Scale blocks by 1/sqrt(ntx) so total transmit power per slot is one.
    pub tx_normalization: bool,
    pub nn: NnSettings,
}

impl ExperimentConfig {
    pub fn new(
        label: &str,
        code: CodeChoice,
        ntx: usize,
        nrx: usize,
        receiver: Receiver,
    ) -> ExperimentConfig {
        ExperimentConfig {
            label: label.to_string(),
            ntx,
            nrx,
            modulation: 4,
            code,
            precoding: false,
            receiver,
            ebn0_grid: (0..=6).map(|i| 4.0 * i as f64).collect(),
            min_frames: 10_000,
            min_bit_errors: 200,
            frame_cap: 10_000_000,
            repetitions: 1,
            seed: 1,
            pilot_blocks: 2,
            tx_normalization: true,
            nn: NnSettings::default_for(ntx),
        }
    }

    pub fn build_code(&self) -> Result<StbcCode> {
        match self.code {
            CodeChoice::Alamouti => {
                if self.ntx != 2 {
                    return Err(Error::Config(format!(
                        "alamouti code needs ntx = 2, got {}",
                        self.ntx
                    )));
                }
                Ok(build_alamouti())
            }
            CodeChoice::Qostbc => {
                if !self.ntx.is_power_of_two() || self.ntx < 2 {
                    return Err(Error::Config(format!(
                        "qostbc needs ntx a power of two >= 2, got {}",
                        self.ntx
                    )));
                }
                build_qostbc(self.ntx.trailing_zeros())
            }
            CodeChoice::OstbcRateHalf => build_ostbc_rate_half(self.ntx),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.label.is_empty()
            || !self
                .label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(Error::Config(format!(
                "label `{}` must be non-empty and filename-safe",
                self.label
            )));
        }
        if self.nrx == 0 {
            return Err(Error::Config("nrx must be >= 1".into()));
        }
        let code = self.build_code()?;
        let constellation = build_qam(self.modulation)?;
        if self.ebn0_grid.is_empty() {
            return Err(Error::Config("ebn0_grid is empty".into()));
        }
        if self.ebn0_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("ebn0_grid must be strictly increasing".into()));
        }
        if self.min_frames == 0 {
            return Err(Error::Config("min_frames must be >= 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.frame_cap < self.min_frames {
            return Err(Error::Config("frame_cap below min_frames".into()));
        }
        match self.receiver {
            Receiver::MlPerfect | Receiver::MlMmse => {
                // Trip the candidate guard before any simulation.
                CandidateSet::new(code, constellation)?;
                if self.receiver == Receiver::MlMmse && self.pilot_blocks == 0 {
                    return Err(Error::Config("pilot_blocks must be >= 1 for ml_mmse".into()));
                }
            }
            Receiver::Ptrbf => {
                if self.nn.hidden_neurons == 0
                    || self.nn.train_frames < 2
                    || self.nn.epochs == 0
                    || self.nn.payload_frames_per_channel == 0
                {
                    return Err(Error::Config(
                        "neural decoder needs hidden_neurons/epochs/payload >= 1 and train_frames >= 2".into(),
                    ));
                }
                if !(self.nn.val_fraction > 0.0 && self.nn.val_fraction <= 0.5) {
                    return Err(Error::Config("val_fraction must be in (0, 0.5]".into()));
                }
            }
        }
        Ok(())
    }

    pub fn bits_per_frame(&self) -> Result<u64> {
        let code = self.build_code()?;
        Ok((code.symbols_per_block() * self.modulation.trailing_zeros() as usize) as u64)
    }

    fn tx_scale(&self) -> f64 {
        if self.tx_normalization {
            1.0 / (self.ntx as f64).sqrt()
        } else {
            1.0
        }
    }

    fn snr_point(&self, ebn0_db: f64, code: &StbcCode) -> SnrPoint {
        SnrPoint::new(ebn0_db, self.modulation, code.rate_value())
    }
}

/// Per-SNR-point statistics over repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub ebn0_db: f64,
    pub ber_mean: f64,
    pub ber_variance: f64,
    pub ber_min: f64,
    pub ber_max: f64,
    pub frames: u64,
    pub bit_errors: u64,
}

/// NMSE convergence trace of one repetition (recorded at the middle grid
/// point, first channel realization).
#[derive(Debug, Clone, PartialEq)]
pub struct RepTrace {
    pub repetition: usize,
    pub records: Vec<TrainRecord>,
}

/// One raw decoder output with the label it should have decoded to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstellationPoint {
    pub re: f64,
    pub im: f64,
    pub symbol_index: usize,
}

#[derive(Debug, Clone)]
pub struct NnRunOutput {
    pub ber: Vec<BerRecord>,
    pub nmse: Vec<RepTrace>,
    pub constellation: Vec<ConstellationPoint>,
    pub failed_repetitions: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    frames: u64,
    errors: u64,
}

/// Exhaustive-ML Monte Carlo sweep across the SNR grid.
pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    if cfg.receiver == Receiver::Ptrbf {
        return Err(Error::Usage(
            "run_ber_sweep is for ML receivers; use run_nn_experiment for ptrbf".into(),
        ));
    }
    let code = cfg.build_code()?;
    let constellation = build_qam(cfg.modulation)?;
    let cands = CandidateSet::new(code.clone(), constellation.clone())?;
    let pilots = if cfg.receiver == Receiver::MlMmse {
        Some(pilot_blocks(&code, &constellation, cfg.pilot_blocks)?)
    } else {
        None
    };
    let ctx = MlContext {
        cfg,
        code: &code,
        cands: &cands,
        pilots: pilots.as_deref(),
    };

    let jobs: Vec<(usize, usize)> = (0..cfg.ebn0_grid.len())
        .flat_map(|p| (0..cfg.repetitions).map(move |r| (p, r)))
        .collect();
    let per_rep: Vec<Counts> = jobs
        .par_iter()
        .map(|&(p, r)| run_ml_repetition(&ctx, p, r))
        .collect::<Result<_>>()?;

    Ok(aggregate_records(cfg, &per_rep)?)
}

struct MlContext<'a> {
    cfg: &'a ExperimentConfig,
    code: &'a StbcCode,
    cands: &'a CandidateSet,
    pilots: Option<&'a [PilotBlock]>,
}

/// A known pilot block: the raw coded block the receiver correlates
/// against.
struct PilotBlock {
    raw: CMat,
}

fn pilot_blocks(
    code: &StbcCode,
    constellation: &Constellation,
    count: usize,
) -> Result<Vec<PilotBlock>> {
    use rand::Rng;
    let mut rng = substream(PILOT_SEED, "pilot", &[]);
    let mut blocks = Vec::with_capacity(count);
    // Quasi-orthogonal blocks can be singular for unlucky symbol draws;
    // take the next block from the fixed stream that is full rank on its
    // own, so any pilot count spans all transmit antennas.
    'blocks: for _ in 0..count {
        for _attempt in 0..64 {
            let symbols: Vec<Complex64> = (0..code.symbols_per_block())
                .map(|_| constellation.point(rng.gen_range(0..constellation.order())))
                .collect();
            let raw = code.encode(&symbols)?;
            if crate::linalg::inverse(&raw.matmul(&raw.hermitian())?).is_ok() {
                blocks.push(PilotBlock { raw });
                continue 'blocks;
            }
        }
        return Err(Error::Estimation(
            "could not draw a full-rank pilot block".into(),
        ));
    }
    Ok(blocks)
}

fn run_ml_repetition(ctx: &MlContext, point_idx: usize, rep: usize) -> Result<Counts> {
    let cfg = ctx.cfg;
    let mut totals = Counts::default();
    let mut next_chunk = 0u64;
    loop {
        let planned = plan_batch(&totals, cfg);
        let n_chunks = planned.div_ceil(CHUNK_FRAMES);
        let descs: Vec<(u64, u64)> = (0..n_chunks)
            .map(|i| {
                let start = i * CHUNK_FRAMES;
                (next_chunk + i, CHUNK_FRAMES.min(planned - start))
            })
            .collect();
        let chunk_counts: Vec<Counts> = descs
            .par_iter()
            .map(|&(chunk_idx, frames)| simulate_ml_chunk(ctx, point_idx, rep, chunk_idx, frames))
            .collect::<Result<_>>()?;
        for c in chunk_counts {
            totals.frames += c.frames;
            totals.errors += c.errors;
        }
        next_chunk += n_chunks;
        if done(&totals, cfg) {
            return Ok(totals);
        }
    }
}

fn done(totals: &Counts, cfg: &ExperimentConfig) -> bool {
    (totals.frames >= cfg.min_frames && totals.errors >= cfg.min_bit_errors)
        || totals.frames >= cfg.frame_cap
}

/// How many more frames to schedule, from already-reduced counts only.
fn plan_batch(totals: &Counts, cfg: &ExperimentConfig) -> u64 {
    let remaining_cap = cfg.frame_cap - totals.frames;
    if totals.frames < cfg.min_frames {
        return (cfg.min_frames - totals.frames).min(remaining_cap);
    }
    let frames_per_error = totals.frames as f64 / totals.errors.max(1) as f64;
    let missing = cfg.min_bit_errors.saturating_sub(totals.errors);
    let need = (missing as f64 * frames_per_error * BATCH_HEADROOM).ceil() as u64;
    need.max(CHUNK_FRAMES).min(remaining_cap)
}

fn simulate_ml_chunk(
    ctx: &MlContext,
    point_idx: usize,
    rep: usize,
    chunk_idx: u64,
    frames: u64,
) -> Result<Counts> {
    use rand::Rng;
    let cfg = ctx.cfg;
    let key = [point_idx as u64, rep as u64, chunk_idx];
    let mut rng_channel = substream(cfg.seed, "channel", &key);
    let mut rng_data = substream(cfg.seed, "data", &key);
    let mut rng_noise = substream(cfg.seed, "noise", &key);

    let snr = cfg.snr_point(cfg.ebn0_grid[point_idx], ctx.code);
    let scale = cfg.tx_scale();
    let m = ctx.cands.constellation().order();
    let ns = ctx.code.symbols_per_block();

    let mut counts = Counts::default();
    let mut labels = vec![0usize; ns];
    for _ in 0..frames {
        let h = draw_channel(&mut rng_channel, cfg.ntx, cfg.nrx);
        let precoder = if cfg.precoding {
            Precoder::from_channel(&h)?
        } else {
            Precoder::disabled()
        };
        for l in labels.iter_mut() {
            *l = rng_data.gen_range(0..m);
        }
        let cand_idx = ctx.cands.index_of_labels(&labels);

        // Effective channel for the metric, in raw-block units.
        let heff = match (cfg.receiver, ctx.pilots) {
            (Receiver::MlPerfect, _) => match precoder.effective_channel(cfg.nrx, cfg.ntx) {
                Some(sigma) => sigma.scale_re(scale),
                None => h.h_transpose().scale_re(scale),
            },
            (Receiver::MlMmse, Some(pilots)) => {
                let mut pairs = Vec::with_capacity(pilots.len());
                for p in pilots {
                    let x_tx = precoder.apply_tx(&p.raw.scale_re(scale))?;
                    let y = transmit(&h, &x_tx, &snr, &mut rng_noise)?;
                    pairs.push((p.raw.clone(), precoder.apply_rx(&y)?));
                }
                estimate_mmse(&pairs, snr.noise_variance)?.effective()
            }
            (Receiver::MlMmse, None) | (Receiver::Ptrbf, _) => {
                return Err(Error::Usage("inconsistent receiver context".into()))
            }
        };

        let x_tx = precoder.apply_tx(&ctx.cands.block(cand_idx).scale_re(scale))?;
        let y = transmit(&h, &x_tx, &snr, &mut rng_noise)?;
        let y_rx = precoder.apply_rx(&y)?;
        let decision = ml_decode(&y_rx, &heff, ctx.cands)?;

        let decided = ctx.cands.labels(decision.candidate);
        for (&tx, &rx) in labels.iter().zip(decided) {
            counts.errors += ((tx ^ rx) as u64).count_ones() as u64;
        }
        counts.frames += 1;
    }
    Ok(counts)
}

fn aggregate_records(cfg: &ExperimentConfig, per_rep: &[Counts]) -> Result<Vec<BerRecord>> {
    let bits_per_frame = cfg.bits_per_frame()?;
    let mut out = Vec::with_capacity(cfg.ebn0_grid.len());
    for (p, &ebn0_db) in cfg.ebn0_grid.iter().enumerate() {
        let reps = &per_rep[p * cfg.repetitions..(p + 1) * cfg.repetitions];
        let bers: Vec<f64> = reps
            .iter()
            .map(|c| c.errors as f64 / (c.frames * bits_per_frame) as f64)
            .collect();
        out.push(make_record(ebn0_db, &bers, reps));
    }
    Ok(out)
}

fn make_record(ebn0_db: f64, bers: &[f64], reps: &[Counts]) -> BerRecord {
    let n = bers.len() as f64;
    let mean = bers.iter().sum::<f64>() / n;
    let variance = if bers.len() > 1 {
        bers.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    BerRecord {
        ebn0_db,
        ber_mean: mean,
        ber_variance: variance,
        ber_min: bers.iter().copied().fold(f64::INFINITY, f64::min),
        ber_max: bers.iter().copied().fold(0.0, f64::max),
        frames: reps.iter().map(|c| c.frames).sum(),
        bit_errors: reps.iter().map(|c| c.errors).sum(),
    }
}

struct NnRepOutput {
    counts: Counts,
    trace: Option<Vec<TrainRecord>>,
    dump: Vec<ConstellationPoint>,
    failed: bool,
}

/// Neural decoder experiment: per repetition and channel realization the
/// network is trained fresh on supervised pilot frames, then payload
/// frames are decoded with frozen weights until the stopping rule is met.
pub fn run_nn_experiment(cfg: &ExperimentConfig) -> Result<NnRunOutput> {
    cfg.validate()?;
    if cfg.receiver != Receiver::Ptrbf {
        return Err(Error::Usage("run_nn_experiment requires receiver = ptrbf".into()));
    }
    let code = cfg.build_code()?;
    let constellation = build_qam(cfg.modulation)?;
    let trace_point = cfg.ebn0_grid.len() / 2;

    let jobs: Vec<(usize, usize)> = (0..cfg.ebn0_grid.len())
        .flat_map(|p| (0..cfg.repetitions).map(move |r| (p, r)))
        .collect();
    let outputs: Vec<NnRepOutput> = jobs
        .par_iter()
        .map(|&(p, r)| run_nn_repetition(cfg, &code, &constellation, p, r, p == trace_point))
        .collect::<Result<_>>()?;

    let bits_per_frame = cfg.bits_per_frame()?;
    let mut ber = Vec::with_capacity(cfg.ebn0_grid.len());
    let mut nmse = Vec::new();
    let mut constellation_dump = Vec::new();
    let mut failed_repetitions = 0u64;
    for (p, &ebn0_db) in cfg.ebn0_grid.iter().enumerate() {
        let outs = &outputs[p * cfg.repetitions..(p + 1) * cfg.repetitions];
        let ok: Vec<&NnRepOutput> = outs.iter().filter(|o| !o.failed).collect();
        failed_repetitions += outs.iter().filter(|o| o.failed).count() as u64;
        if ok.is_empty() {
            return Err(Error::Numeric(format!(
                "all repetitions failed at Eb/N0 = {ebn0_db} dB"
            )));
        }
        let bers: Vec<f64> = ok
            .iter()
            .map(|o| o.counts.errors as f64 / (o.counts.frames * bits_per_frame) as f64)
            .collect();
        let counts: Vec<Counts> = ok.iter().map(|o| o.counts).collect();
        ber.push(make_record(ebn0_db, &bers, &counts));
        for (r, o) in outs.iter().enumerate() {
            if let Some(records) = &o.trace {
                nmse.push(RepTrace {
                    repetition: r,
                    records: records.clone(),
                });
            }
            constellation_dump.extend_from_slice(&o.dump);
        }
    }
    Ok(NnRunOutput {
        ber,
        nmse,
        constellation: constellation_dump,
        failed_repetitions,
    })
}

fn run_nn_repetition(
    cfg: &ExperimentConfig,
    code: &StbcCode,
    constellation: &Constellation,
    point_idx: usize,
    rep: usize,
    keep_trace: bool,
) -> Result<NnRepOutput> {
    use rand::Rng;
    let snr = cfg.snr_point(cfg.ebn0_grid[point_idx], code);
    let scale = cfg.tx_scale();
    let m = constellation.order();
    let ns = code.symbols_per_block();
    let n_inp = cfg.nrx * code.slots();
    let topology = Topology::single_layer(n_inp, cfg.nn.hidden_neurons, ns);

    let mut totals = Counts::default();
    let mut trace: Option<Vec<TrainRecord>> = None;
    let mut dump = Vec::new();
    let mut realization = 0u64;
    loop {
        let key = [point_idx as u64, rep as u64, realization];
        let mut rng_channel = substream(cfg.seed, "channel", &key);
        let mut rng_data = substream(cfg.seed, "data", &key);
        let mut rng_noise = substream(cfg.seed, "noise", &key);
        let mut rng_init = substream(cfg.seed, "nn-init", &key);

        let h = draw_channel(&mut rng_channel, cfg.ntx, cfg.nrx);
        let precoder = if cfg.precoding {
            Precoder::from_channel(&h)?
        } else {
            Precoder::disabled()
        };

        // Supervised pilot phase: known frames through the same channel.
        let t_train = cfg.nn.train_frames;
        let mut inputs = Vec::with_capacity(t_train);
        let mut targets = Vec::with_capacity(t_train);
        for _ in 0..t_train {
            let symbols: Vec<Complex64> = (0..ns)
                .map(|_| constellation.point(rng_data.gen_range(0..m)))
                .collect();
            let x_tx = precoder.apply_tx(&code.encode(&symbols)?.scale_re(scale))?;
            let y = transmit(&h, &x_tx, &snr, &mut rng_noise)?;
            inputs.push(vectorize_block(&precoder.apply_rx(&y)?));
            targets.push(symbols);
        }
        // Normalize to unit average power per frame over the pilot batch.
        let mean_power = inputs
            .iter()
            .map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / t_train as f64;
        let input_scale = if mean_power > 0.0 { mean_power.sqrt() } else { 1.0 };
        for v in inputs.iter_mut() {
            for z in v.iter_mut() {
                *z /= input_scale;
            }
        }

        let n_val = ((t_train as f64 * cfg.nn.val_fraction).round() as usize).clamp(1, t_train - 1);
        let n_train = t_train - n_val;

        let mut net = PtRbfNetwork::init(&mut rng_init, &topology, cfg.nn.rates)?;
        if cfg.nn.sample_init {
            net.set_centers_from_samples(&inputs[..n_train.min(cfg.nn.hidden_neurons).max(1)])?;
        }

        let mut records = Vec::with_capacity(cfg.nn.epochs);
        let mut training_failed = false;
        'epochs: for epoch in 0..cfg.nn.epochs {
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n_train {
                match net.train_step(&inputs[i], &targets[i]) {
                    Ok(loss) => {
                        num += loss;
                        den += targets[i].iter().map(|z| z.norm_sqr()).sum::<f64>();
                    }
                    Err(Error::Numeric(_)) => {
                        training_failed = true;
                        break 'epochs;
                    }
                    Err(e) => return Err(e),
                }
            }
            let mut vnum = 0.0;
            let mut vden = 0.0;
            for i in n_train..t_train {
                let out = net.output(&inputs[i])?;
                vnum += out
                    .iter()
                    .zip(&targets[i])
                    .map(|(y, d)| (d - y).norm_sqr())
                    .sum::<f64>();
                vden += targets[i].iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
            records.push(TrainRecord {
                epoch,
                train_nmse: num / den,
                val_nmse: vnum / vden,
            });
        }
        if training_failed {
            // Mark the whole repetition failed; the sweep continues.
            return Ok(NnRepOutput {
                counts: totals,
                trace: None,
                dump: Vec::new(),
                failed: true,
            });
        }
        if keep_trace && trace.is_none() {
            trace = Some(records);
        }

        // Payload phase with frozen weights.
        let decoder = PtRbfDecoder { net, input_scale };
        for _ in 0..cfg.nn.payload_frames_per_channel {
            let labels: Vec<usize> = (0..ns).map(|_| rng_data.gen_range(0..m)).collect();
            let symbols: Vec<Complex64> = labels.iter().map(|&l| constellation.point(l)).collect();
            let x_tx = precoder.apply_tx(&code.encode(&symbols)?.scale_re(scale))?;
            let y = transmit(&h, &x_tx, &snr, &mut rng_noise)?;
            let frame = decoder.decode_frame(&precoder.apply_rx(&y)?, constellation)?;

            let mut tx_bits = Vec::with_capacity(ns * constellation.bits_per_symbol());
            let mut rx_bits = Vec::with_capacity(ns * constellation.bits_per_symbol());
            for (&tx, &rx) in labels.iter().zip(&frame.labels) {
                constellation.push_label_bits(tx, &mut tx_bits);
                constellation.push_label_bits(rx, &mut rx_bits);
            }
            let (errs, _) = crate::detect::ber_count(&tx_bits, &rx_bits)?;
            totals.errors += errs;
            totals.frames += 1;

            if rep == 0 && keep_trace && dump.len() < cfg.nn.dump_points {
                for (k, &z) in frame.raw.iter().enumerate() {
                    if dump.len() >= cfg.nn.dump_points {
                        break;
                    }
                    dump.push(ConstellationPoint {
                        re: z.re,
                        im: z.im,
                        symbol_index: labels[k],
                    });
                }
            }
        }
        realization += 1;
        if done(&totals, cfg) {
            return Ok(NnRepOutput {
                counts: totals,
                trace,
                dump,
                failed: false,
            });
        }
    }
}

/// Fitted high-SNR decade slope: a least-squares line through the two
/// highest-SNR points whose records carry at least `min_errors` bit errors
/// (log10 BER against Eb/N0 decades). `None` if fewer than two qualify.
pub fn fit_decade_slope(records: &[BerRecord], min_errors: u64) -> Option<f64> {
    let eligible: Vec<&BerRecord> = records
        .iter()
        .filter(|r| r.ber_mean > 0.0 && r.bit_errors >= min_errors.max(1))
        .collect();
    if eligible.len() < 2 {
        return None;
    }
    let hi = eligible[eligible.len() - 1];
    let lo = eligible[eligible.len() - 2];
    let dx = (hi.ebn0_db - lo.ebn0_db) / 10.0;
    if dx <= 0.0 {
        return None;
    }
    Some((lo.ber_mean.log10() - hi.ber_mean.log10()) / dx)
}

/// Eb/N0 (dB) at which the curve crosses `target` BER, by log-linear
/// interpolation between grid points. Zero-BER records are floored at half
/// an error over their bit budget so the crossing stays defined.
pub fn ber_crossing(records: &[BerRecord], target: f64) -> Option<f64> {
    let floored = |r: &BerRecord| {
        if r.ber_mean > 0.0 {
            r.ber_mean
        } else {
            let bits = (r.frames.max(1)) as f64 * 8.0;
            0.5 / bits
        }
    };
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (ba, bb) = (floored(a), floored(b));
        if ba >= target && target >= bb {
            let la = ba.log10();
            let lb = bb.log10();
            if (la - lb).abs() < 1e-15 {
                return Some(a.ebn0_db);
            }
            let t = (la - target.log10()) / (la - lb);
            return Some(a.ebn0_db + t * (b.ebn0_db - a.ebn0_db));
        }
    }
    None
}

/// Summary table for one configuration's records.
#[derive(Debug, Clone)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub ebn0_db: f64,
    pub ber_mean: f64,
    pub band_width: f64,
    pub frames: u64,
    pub bit_errors: u64,
}

pub fn summarize(records: &[BerRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::Usage("summarize needs at least one record".into()));
    }
    Ok(Summary {
        rows: records
            .iter()
            .map(|r| SummaryRow {
                ebn0_db: r.ebn0_db,
                ber_mean: r.ber_mean,
                band_width: r.ber_max - r.ber_min,
                frames: r.frames,
                bit_errors: r.bit_errors,
            })
            .collect(),
        slope: fit_decade_slope(records, 1),
    })
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:>9} {:>13} {:>13} {:>12} {:>11}",
            "ebn0_db", "ber_mean", "band_width", "frames", "bit_errors"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>9.2} {:>13.4e} {:>13.4e} {:>12} {:>11}",
                r.ebn0_db, r.ber_mean, r.band_width, r.frames, r.bit_errors
            )?;
        }
        match self.slope {
            Some(s) => writeln!(f, "high-SNR decade slope: {s:.3}"),
            None => writeln!(f, "high-SNR decade slope: n/a"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(ebn0_db: f64, ber: f64) -> BerRecord {
        BerRecord {
            ebn0_db,
            ber_mean: ber,
            ber_variance: 0.0,
            ber_min: ber,
            ber_max: ber,
            frames: 1_000_000,
            bit_errors: (ber * 8.0e6) as u64,
        }
    }

    #[test]
    fn test_summarize_single_record_no_slope() {
        let s = summarize(&[record(10.0, 1e-3)]).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert!(s.slope.is_none());
    }

    #[test]
    fn test_summarize_empty_is_usage_error() {
        assert!(matches!(summarize(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn test_slope_decade_per_10db() {
        let recs = [record(10.0, 1e-2), record(20.0, 1e-3)];
        let s = fit_decade_slope(&recs, 1).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn test_slope_on_synthetic_diversity_two() {
        let recs: Vec<BerRecord> = (0..=5)
            .map(|i| {
                let x = 4.0 * i as f64;
                record(x, 10f64.powf(-x / 10.0 * 2.0))
            })
            .collect();
        let s = fit_decade_slope(&recs, 1).unwrap();
        assert!((s - 2.0).abs() < 1e-9, "slope {s}");
    }

    #[test]
    fn test_slope_skips_starved_points() {
        let mut starved = record(24.0, 1e-9);
        starved.bit_errors = 2;
        let recs = [record(12.0, 1e-3), record(16.0, 1e-4), starved];
        let s = fit_decade_slope(&recs, 25).unwrap();
        assert!((s - 2.5).abs() < 1e-9, "slope {s}");
    }

    #[test]
    fn test_crossing_interpolation() {
        let recs = [record(0.0, 1e-2), record(10.0, 1e-4)];
        let x = ber_crossing(&recs, 1e-3).unwrap();
        assert!((x - 5.0).abs() < 1e-9);
    }

    fn tiny_cfg(receiver: Receiver) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new("t", CodeChoice::Alamouti, 2, 1, receiver);
        cfg.ebn0_grid = vec![0.0, 8.0];
        cfg.min_frames = 400;
        cfg.min_bit_errors = 20;
        cfg.frame_cap = 3000;
        cfg.repetitions = 2;
        cfg
    }

    #[test]
    fn test_sweep_deterministic_and_stopping_sound() {
        let cfg = tiny_cfg(Receiver::MlPerfect);
        let a = run_ber_sweep(&cfg).unwrap();
        let b = run_ber_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert!(r.frames >= cfg.min_frames * cfg.repetitions as u64);
            assert!(r.ber_min <= r.ber_mean && r.ber_mean <= r.ber_max);
            // Per-point totals: each repetition met errors or hit the cap.
            assert!(
                r.bit_errors >= cfg.min_bit_errors * cfg.repetitions as u64
                    || r.frames == cfg.frame_cap * cfg.repetitions as u64
            );
        }
        assert!(a[1].ber_mean <= a[0].ber_mean);
    }

    #[test]
    fn test_noise_free_regime_zero_ber() {
        let mut cfg = tiny_cfg(Receiver::MlPerfect);
        cfg.ebn0_grid = vec![60.0];
        cfg.min_frames = 1000;
        cfg.frame_cap = 1000;
        cfg.repetitions = 1;
        let recs = run_ber_sweep(&cfg).unwrap();
        assert_eq!(recs[0].bit_errors, 0);
        assert_eq!(recs[0].ber_mean, 0.0);
        assert_eq!(recs[0].frames, 1000);
    }

    #[test]
    fn test_guard_trips_before_simulation() {
        let mut cfg = ExperimentConfig::new("big", CodeChoice::Qostbc, 32, 1, Receiver::MlPerfect);
        cfg.ebn0_grid = vec![0.0];
        assert!(matches!(run_ber_sweep(&cfg), Err(Error::Complexity(_))));
    }

    #[test]
    fn test_validate_rejects_bad_grid() {
        let mut cfg = tiny_cfg(Receiver::MlPerfect);
        cfg.ebn0_grid = vec![4.0, 4.0];
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.ebn0_grid = vec![];
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn test_mmse_receiver_runs() {
        let mut cfg = tiny_cfg(Receiver::MlMmse);
        cfg.ebn0_grid = vec![10.0];
        cfg.min_frames = 200;
        cfg.min_bit_errors = 5;
        cfg.frame_cap = 2000;
        cfg.repetitions = 1;
        let recs = run_ber_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].frames >= 200);
    }

    #[test]
    fn test_nn_smoke_run_and_determinism() {
        let mut cfg = ExperimentConfig::new("nn", CodeChoice::Alamouti, 2, 1, Receiver::Ptrbf);
        cfg.ebn0_grid = vec![14.0];
        cfg.min_frames = 60;
        cfg.min_bit_errors = 0;
        cfg.frame_cap = 60;
        cfg.repetitions = 1;
        cfg.precoding = true;
        cfg.nn.train_frames = 120;
        cfg.nn.epochs = 3;
        cfg.nn.payload_frames_per_channel = 60;
        cfg.nn.hidden_neurons = 16;
        let a = run_nn_experiment(&cfg).unwrap();
        let b = run_nn_experiment(&cfg).unwrap();
        assert_eq!(a.ber, b.ber);
        assert_eq!(a.nmse.len(), 1);
        assert_eq!(a.nmse[0].records.len(), 3);
        assert!(!a.constellation.is_empty());
        assert_eq!(a.failed_repetitions, 0);
    }
}
