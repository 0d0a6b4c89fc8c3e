//! Exhaustive maximum-likelihood block decoding and pilot-based MMSE
//! channel estimation.
//!
//! The ML decoder scans every candidate coded block `S~` (an odometer over
//! the per-symbol constellation labels, first symbol fastest) and returns
//! the one minimizing `||Y - Heff S~||_F^2`, where `Heff` is whatever
//! effective channel the configuration puts in front of the block: `H^T`,
//! an estimate of it, or the diagonalized channel after SVD combining.
//! A guard caps the candidate count at 65536; larger systems are the
//! neural decoder's job.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{inverse, CMat};
use crate::modem::Constellation;
use crate::stbc::StbcCode;

/// Candidate-space guard for the exhaustive decoder.
pub const ML_CANDIDATE_GUARD: usize = 65_536;

/// Pre-enumerated candidate blocks for one (code, constellation) pair.
///
/// Enumeration order is an odometer over symbol label indices with the
/// first symbol fastest; ties in the decoder metric resolve to the earliest
/// candidate in this order.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    code: StbcCode,
    constellation: Constellation,
    labels: Vec<Vec<usize>>,
    blocks: Vec<CMat>,
}

impl CandidateSet {
    pub fn new(code: StbcCode, constellation: Constellation) -> Result<CandidateSet> {
        let ns = code.symbols_per_block();
        let m = constellation.order();
        let bits = (m.trailing_zeros() as usize) * ns;
        if bits > ML_CANDIDATE_GUARD.trailing_zeros() as usize {
            return Err(Error::Complexity(format!(
                "{m}^{ns} candidate blocks exceed the {ML_CANDIDATE_GUARD} guard; \
                 use the neural decoder for systems this large"
            )));
        }
        let size = m.pow(ns as u32);
        let mut labels = Vec::with_capacity(size);
        let mut blocks = Vec::with_capacity(size);
        let mut symbols = vec![Complex64::new(0.0, 0.0); ns];
        for c in 0..size {
            let mut rem = c;
            let mut label = Vec::with_capacity(ns);
            for slot in symbols.iter_mut() {
                let l = rem % m;
                rem /= m;
                label.push(l);
                *slot = constellation.point(l);
            }
            blocks.push(code.encode(&symbols)?);
            labels.push(label);
        }
        Ok(CandidateSet {
            code,
            constellation,
            labels,
            blocks,
        })
    }

    pub fn size(&self) -> usize {
        self.blocks.len()
    }

    pub fn code(&self) -> &StbcCode {
        &self.code
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    /// Label indices of candidate `c`, one per symbol slot.
    pub fn labels(&self, c: usize) -> &[usize] {
        &self.labels[c]
    }

    /// The raw coded block of candidate `c`.
    pub fn block(&self, c: usize) -> &CMat {
        &self.blocks[c]
    }

    /// Candidate index transmitting exactly these label indices.
    pub fn index_of_labels(&self, labels: &[usize]) -> usize {
        let m = self.constellation.order();
        labels.iter().rev().fold(0, |acc, &l| acc * m + l)
    }

    /// Symbol values of candidate `c`.
    pub fn symbols(&self, c: usize) -> Vec<Complex64> {
        self.labels[c]
            .iter()
            .map(|&l| self.constellation.point(l))
            .collect()
    }
}

/// Result of one exhaustive search.
#[derive(Debug, Clone)]
pub struct MlDecision {
    pub candidate: usize,
    pub symbols: Vec<Complex64>,
    pub metric: f64,
}

/// Exhaustive ML decoding: argmin over candidates of `||y - heff S~||_F^2`.
///
/// The scan keeps a running best and abandons a candidate as soon as its
/// partial metric can no longer win; this does not change the selected
/// candidate or the tie rule.
pub fn ml_decode(y: &CMat, heff: &CMat, cand: &CandidateSet) -> Result<MlDecision> {
    if cand.size() > ML_CANDIDATE_GUARD {
        return Err(Error::Complexity(format!(
            "{} candidates exceed the {ML_CANDIDATE_GUARD} guard",
            cand.size()
        )));
    }
    let nrx = y.rows();
    let p = y.cols();
    let ntx = heff.cols();
    if heff.rows() != nrx {
        return Err(Error::Shape(format!(
            "effective channel is {}x{}, received block has {} rows",
            heff.rows(),
            ntx,
            nrx
        )));
    }
    if cand.block(0).rows() != ntx || cand.block(0).cols() != p {
        return Err(Error::Shape(format!(
            "candidate blocks are {}x{}, expected {}x{}",
            cand.block(0).rows(),
            cand.block(0).cols(),
            ntx,
            p
        )));
    }

    let hdata = heff.data();
    let ydata = y.data();
    let mut best = f64::INFINITY;
    let mut best_idx = 0usize;
    for (c, block) in cand.blocks.iter().enumerate() {
        let bdata = block.data();
        let mut acc = 0.0;
        'cols: for t in 0..p {
            for i in 0..nrx {
                let mut pred = Complex64::new(0.0, 0.0);
                let hrow = &hdata[i * ntx..(i + 1) * ntx];
                for (k, hv) in hrow.iter().enumerate() {
                    pred += hv * bdata[k * p + t];
                }
                let d = ydata[i * p + t] - pred;
                acc += d.norm_sqr();
            }
            if acc >= best {
                break 'cols;
            }
        }
        if acc < best {
            best = acc;
            best_idx = c;
        }
    }
    Ok(MlDecision {
        candidate: best_idx,
        symbols: cand.symbols(best_idx),
        metric: best,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimationMethod {
    Perfect,
    Mmse,
}

/// A channel estimate in transmit-side orientation (ntx x nrx), as the
/// system model defines `H`.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub h_hat: CMat,
    pub pilot_count: usize,
    pub method: EstimationMethod,
}

impl ChannelEstimate {
    /// The nrx x ntx matrix the decoder metric multiplies blocks with.
    pub fn effective(&self) -> CMat {
        self.h_hat.transpose()
    }
}

/// Linear MMSE channel estimate from known pilot blocks under a
/// unit-variance channel prior:
/// `Heff = Y_p X_p^H (X_p X_p^H + noise_variance I)^{-1}`.
///
/// `pilots` pairs the known transmitted block with the observed block; the
/// stacked pilot matrix must have full row rank.
pub fn estimate_mmse(pilots: &[(CMat, CMat)], noise_variance: f64) -> Result<ChannelEstimate> {
    if pilots.is_empty() {
        return Err(Error::Estimation("no pilot blocks".into()));
    }
    let ntx = pilots[0].0.rows();
    let nrx = pilots[0].1.rows();
    let total_slots: usize = pilots.iter().map(|(x, _)| x.cols()).sum();
    let mut xp = CMat::zeros(ntx, total_slots);
    let mut yp = CMat::zeros(nrx, total_slots);
    let mut col = 0;
    for (x, y) in pilots {
        if x.rows() != ntx || y.rows() != nrx || x.cols() != y.cols() {
            return Err(Error::Shape("inconsistent pilot block dimensions".into()));
        }
        for t in 0..x.cols() {
            for i in 0..ntx {
                xp.set(i, col, x.get(i, t));
            }
            for i in 0..nrx {
                yp.set(i, col, y.get(i, t));
            }
            col += 1;
        }
    }

    let gram = xp.matmul(&xp.hermitian())?;
    // Full row rank required: the unregularized Gram must be invertible.
    if inverse(&gram).is_err() {
        return Err(Error::Estimation(
            "pilot matrix is rank deficient; pilots must span all transmit antennas".into(),
        ));
    }
    let mut regularized = gram;
    for i in 0..ntx {
        let d = regularized.get(i, i) + Complex64::new(noise_variance, 0.0);
        regularized.set(i, i, d);
    }
    let heff = yp
        .matmul(&xp.hermitian())?
        .matmul(&inverse(&regularized)?)?;
    Ok(ChannelEstimate {
        h_hat: heff.transpose(),
        pilot_count: pilots.len(),
        method: EstimationMethod::Mmse,
    })
}

/// Hamming distance and length of two equal-length bit streams.
pub fn ber_count(tx_bits: &[u8], rx_bits: &[u8]) -> Result<(u64, u64)> {
    if tx_bits.len() != rx_bits.len() {
        return Err(Error::Shape(format!(
            "bit streams differ in length: {} vs {}",
            tx_bits.len(),
            rx_bits.len()
        )));
    }
    let errors = tx_bits
        .iter()
        .zip(rx_bits)
        .filter(|(a, b)| a != b)
        .count() as u64;
    Ok((errors, tx_bits.len() as u64))
}
