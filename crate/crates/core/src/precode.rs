//! SVD-based transmit precoding and receive combining.
//!
//! With `H^T = U Sigma V^H`, transmitting `X = V S` and left-multiplying the
//! received block by `U^H` turns the effective channel into the rectangular
//! diagonal `Sigma`, so the decoder metric reduces to `||Y - Sigma S~||^2`.
//! Perfect channel knowledge at the transmitter is assumed for `V`.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::{CMat, SvdFactors};

/// Precoding state for one channel realization. Disabled precoders pass
/// blocks through unchanged.
#[derive(Debug, Clone)]
pub struct Precoder {
    pub factors: Option<SvdFactors>,
    pub enabled: bool,
}

impl Precoder {
    /// Build from the current channel: factors of `H^T`.
    pub fn from_channel(h: &ChannelRealization) -> Result<Precoder> {
        Ok(Precoder {
            factors: Some(h.h_transpose().svd()?),
            enabled: true,
        })
    }

    pub fn disabled() -> Precoder {
        Precoder {
            factors: None,
            enabled: false,
        }
    }

    /// Transmit-side rotation `X = V S`; pass-through when disabled.
    pub fn apply_tx(&self, s_block: &CMat) -> Result<CMat> {
        match (&self.factors, self.enabled) {
            (Some(f), true) => {
                if f.v.cols() != s_block.rows() {
                    return Err(Error::Shape(format!(
                        "precoder is {}x{}, block has {} rows",
                        f.v.rows(),
                        f.v.cols(),
                        s_block.rows()
                    )));
                }
                f.v.matmul(s_block)
            }
            _ => Ok(s_block.clone()),
        }
    }

    /// Receive-side combining `U^H Y`; pass-through when disabled.
    pub fn apply_rx(&self, y: &CMat) -> Result<CMat> {
        match (&self.factors, self.enabled) {
            (Some(f), true) => {
                if f.u.rows() != y.rows() {
                    return Err(Error::Shape(format!(
                        "combiner is {}x{}, received block has {} rows",
                        f.u.rows(),
                        f.u.cols(),
                        y.rows()
                    )));
                }
                f.u.hermitian().matmul(y)
            }
            _ => Ok(y.clone()),
        }
    }

    /// The effective channel after combining: the top-left nrx x ntx block
    /// of `Sigma` (the only rows the receiver observes).
    pub fn effective_channel(&self, nrx: usize, ntx: usize) -> Option<CMat> {
        self.factors
            .as_ref()
            .filter(|_| self.enabled)
            .map(|f| f.sigma_block(nrx, ntx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channel, transmit, SnrPoint};
    use crate::linalg::unitarity_defect;
    use crate::rng::{complex_normal, substream};

    #[test]
    fn test_identity_channel_gives_identity_factors() {
        let h = ChannelRealization {
            h: CMat::identity(3),
        };
        let p = Precoder::from_channel(&h).unwrap();
        let f = p.factors.as_ref().unwrap();
        assert!(f.sigma.iter().all(|&s| (s - 1.0).abs() < 1e-12));
        assert!(f.u.sub(&CMat::identity(3)).unwrap().max_abs() < 1e-12);
        assert!(f.v.sub(&CMat::identity(3)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn test_reconstruction_holds() {
        let mut rng = substream(1, "precode", &[]);
        let h = draw_channel(&mut rng, 4, 2);
        let p = Precoder::from_channel(&h).unwrap();
        let f = p.factors.as_ref().unwrap();
        let err = f
            .reconstruct()
            .sub(&h.h_transpose())
            .unwrap()
            .frobenius_norm();
        assert!(err <= 1e-9 * h.h_transpose().frobenius_norm());
    }

    #[test]
    fn test_rank_one_channel_sigma() {
        let mut rng = substream(2, "precode", &[]);
        let h = draw_channel(&mut rng, 4, 1);
        let norm = h.h.frobenius_norm();
        let p = Precoder::from_channel(&h).unwrap();
        let f = p.factors.as_ref().unwrap();
        assert_eq!(f.sigma.len(), 1);
        assert!((f.sigma[0] - norm).abs() < 1e-12);
    }

    #[test]
    fn test_disabled_passthrough() {
        let p = Precoder::disabled();
        let mut rng = substream(3, "precode", &[]);
        let s = CMat::from_fn(4, 4, |_, _| complex_normal(&mut rng, 1.0));
        assert_eq!(p.apply_tx(&s).unwrap(), s);
        assert_eq!(p.apply_rx(&s).unwrap(), s);
        assert!(p.effective_channel(1, 4).is_none());
    }

    #[test]
    fn test_tx_preserves_power() {
        let mut rng = substream(4, "precode", &[]);
        let h = draw_channel(&mut rng, 4, 4);
        let p = Precoder::from_channel(&h).unwrap();
        let s = CMat::from_fn(4, 4, |_, _| complex_normal(&mut rng, 1.0));
        let x = p.apply_tx(&s).unwrap();
        assert!((x.frobenius_norm() - s.frobenius_norm()).abs() < 1e-10);
    }

    #[test]
    fn test_noiseless_end_to_end_diagonalizes() {
        for (seed, ntx, nrx) in [(5u64, 4usize, 1usize), (6, 4, 2), (7, 2, 2), (8, 4, 4)] {
            let mut rng = substream(seed, "precode", &[]);
            let h = draw_channel(&mut rng, ntx, nrx);
            let p = Precoder::from_channel(&h).unwrap();
            let s = CMat::from_fn(ntx, 4, |_, _| complex_normal(&mut rng, 1.0));
            let x = p.apply_tx(&s).unwrap();
            let y = transmit(&h, &x, &SnrPoint::noiseless(), &mut rng).unwrap();
            let combined = p.apply_rx(&y).unwrap();
            let expect = p
                .effective_channel(nrx, ntx)
                .unwrap()
                .matmul(&s)
                .unwrap();
            let err = combined.sub(&expect).unwrap().frobenius_norm();
            assert!(err <= 1e-9, "diagonalization error {err:.3e}");
        }
    }

    #[test]
    fn test_diagonalization_invariant() {
        // ||U^H H^T V - Sigma||_F <= 1e-9 over seeded channels.
        for seed in 0..24u64 {
            let mut rng = substream(seed, "precode-diag", &[]);
            let (ntx, nrx) = ([2usize, 4, 8][seed as usize % 3], 1 + (seed as usize % 3));
            let h = draw_channel(&mut rng, ntx, nrx);
            let p = Precoder::from_channel(&h).unwrap();
            let f = p.factors.as_ref().unwrap();
            let lhs = f
                .u
                .hermitian()
                .matmul(&h.h_transpose())
                .unwrap()
                .matmul(&f.v)
                .unwrap();
            let err = lhs
                .sub(&f.sigma_block(nrx, ntx))
                .unwrap()
                .frobenius_norm();
            assert!(err <= 1e-9, "defect {err:.3e} at seed {seed}");
            assert!(unitarity_defect(&f.u) <= 1e-10);
            assert!(unitarity_defect(&f.v) <= 1e-10);
        }
    }

    #[test]
    fn test_combining_preserves_noise_variance() {
        let mut rng = substream(9, "precode", &[]);
        let h = draw_channel(&mut rng, 2, 2);
        let p = Precoder::from_channel(&h).unwrap();
        let n = 20_000;
        let mut raw = 0.0;
        let mut combined = 0.0;
        for _ in 0..n {
            let z = CMat::from_fn(2, 1, |_, _| complex_normal(&mut rng, 1.0));
            raw += z.frobenius_norm().powi(2);
            combined += p.apply_rx(&z).unwrap().frobenius_norm().powi(2);
        }
        let ratio = combined / raw;
        assert!((ratio - 1.0).abs() < 1e-9, "unitary combining ratio {ratio}");
    }

    #[test]
    fn test_effective_channel_equivalence_for_ml() {
        // Decoding against Sigma after combining must order candidates the
        // same way as decoding the raw block against H^T V.
        let mut rng = substream(10, "precode", &[]);
        let h = draw_channel(&mut rng, 2, 2);
        let p = Precoder::from_channel(&h).unwrap();
        let f = p.factors.as_ref().unwrap();
        let candidates: Vec<CMat> = (0..8)
            .map(|_| CMat::from_fn(2, 2, |_, _| complex_normal(&mut rng, 1.0)))
            .collect();
        let s_true = candidates[3].clone();
        let x = p.apply_tx(&s_true).unwrap();
        let y = transmit(&h, &x, &SnrPoint::noiseless(), &mut rng).unwrap();
        let combined = p.apply_rx(&y).unwrap();
        let heff_raw = h.h_transpose().matmul(&f.v).unwrap();
        let sigma = p.effective_channel(2, 2).unwrap();
        let metric = |obs: &CMat, ch: &CMat, cand: &CMat| {
            obs.sub(&ch.matmul(cand).unwrap())
                .unwrap()
                .frobenius_norm()
        };
        let pick_raw = (0..8)
            .min_by(|&a, &b| {
                metric(&y, &heff_raw, &candidates[a])
                    .partial_cmp(&metric(&y, &heff_raw, &candidates[b]))
                    .unwrap()
            })
            .unwrap();
        let pick_combined = (0..8)
            .min_by(|&a, &b| {
                metric(&combined, &sigma, &candidates[a])
                    .partial_cmp(&metric(&combined, &sigma, &candidates[b]))
                    .unwrap()
            })
            .unwrap();
        assert_eq!(pick_raw, 3);
        assert_eq!(pick_combined, 3);
    }
}
