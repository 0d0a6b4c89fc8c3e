//! Quasi-static Rayleigh flat-fading MIMO channel with SNR-calibrated AWGN.
//!
//! The received block is `Y = H^T X + Z` with `H` an ntx-by-nrx matrix of
//! i.i.d. unit-variance circularly-symmetric complex Gaussians, constant
//! over one code block and independent across blocks. Noise is calibrated
//! from Eb/N0 per receive antenna: with the transmit power normalized to
//! one per time slot, `Eb = 1 / (log2(M) * R)` and the per-entry complex
//! noise variance is `Eb / 10^(EbN0_dB / 10)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::rng::complex_normal;

/// One quasi-static channel draw, `h` being ntx x nrx.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: CMat,
}

impl ChannelRealization {
    /// The nrx x ntx matrix seen by the receiver, `H^T`.
    pub fn h_transpose(&self) -> CMat {
        self.h.transpose()
    }
}

/// An Eb/N0 operating point with its derived per-entry noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    pub ebn0_db: f64,
    pub noise_variance: f64,
}

impl SnrPoint {
    /// Calibrate for a modulation order and code rate (unit total transmit
    /// power per slot).
    pub fn new(ebn0_db: f64, modulation_order: usize, rate: f64) -> SnrPoint {
        let bits = (modulation_order as f64).log2();
        let eb = 1.0 / (bits * rate);
        SnrPoint {
            ebn0_db,
            noise_variance: eb / 10f64.powf(ebn0_db / 10.0),
        }
    }

    /// A noiseless point, used by tests and oracles.
    pub fn noiseless() -> SnrPoint {
        SnrPoint {
            ebn0_db: f64::INFINITY,
            noise_variance: 0.0,
        }
    }
}

/// Draw an i.i.d. CN(0,1) channel; deterministic given the rng stream.
pub fn draw_channel<R: Rng + ?Sized>(rng: &mut R, ntx: usize, nrx: usize) -> ChannelRealization {
    ChannelRealization {
        h: CMat::from_fn(ntx, nrx, |_, _| complex_normal(rng, 1.0)),
    }
}

/// Propagate one coded block: `Y = H^T X + Z`.
pub fn transmit<R: Rng + ?Sized>(
    h: &ChannelRealization,
    x: &CMat,
    snr: &SnrPoint,
    rng: &mut R,
) -> Result<CMat> {
    if x.rows() != h.h.rows() {
        return Err(Error::Shape(format!(
            "block has {} antenna rows, channel expects {}",
            x.rows(),
            h.h.rows()
        )));
    }
    let mut y = h.h_transpose().matmul(x)?;
    if snr.noise_variance > 0.0 {
        for i in 0..y.rows() {
            for t in 0..y.cols() {
                let z = complex_normal(rng, snr.noise_variance);
                y.set(i, t, y.get(i, t) + z);
            }
        }
    }
    Ok(y)
}
