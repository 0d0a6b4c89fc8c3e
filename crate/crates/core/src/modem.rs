//! Square M-QAM mapping with Gray labeling and unit average symbol energy.
//!
//! Labels are split into an in-phase group (first half of the bits) and a
//! quadrature group (second half); each group is Gray-coded independently
//! along its amplitude axis, so lattice neighbors differ in exactly one bit.
//! The constellation is scaled so that E[|s|^2] = 1 over uniform labels.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// An immutable M-QAM constellation. Point `i` carries label `i` (bits
/// most-significant first).
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    m: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
}

fn gray_to_binary(mut g: u32) -> u32 {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Build a square M-QAM constellation, `m` in {4, 16, 64}.
pub fn build_qam(m: usize) -> Result<Constellation> {
    if !matches!(m, 4 | 16 | 64) {
        return Err(Error::Config(format!(
            "unsupported modulation order {m}; expected 4, 16 or 64"
        )));
    }
    let bits = m.trailing_zeros() as usize;
    let axis_bits = bits / 2;
    let side = 1usize << axis_bits;
    // E[|s|^2] over the {±1, ±3, ...} lattice is 2(m-1)/3.
    let scale = (3.0 / (2.0 * (m as f64 - 1.0))).sqrt();
    let mut points = Vec::with_capacity(m);
    for label in 0..m {
        let gi = (label >> axis_bits) as u32;
        let gq = (label & (side - 1)) as u32;
        let li = gray_to_binary(gi) as f64;
        let lq = gray_to_binary(gq) as f64;
        let amp = |l: f64| (2.0 * l - (side as f64 - 1.0)) * scale;
        points.push(Complex64::new(amp(li), amp(lq)));
    }
    Ok(Constellation {
        m,
        bits_per_symbol: bits,
        points,
    })
}

impl Constellation {
    pub fn order(&self) -> usize {
        self.m
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Bits of a label, most-significant first.
    pub fn label_bits(&self, label: usize) -> Vec<u8> {
        (0..self.bits_per_symbol)
            .rev()
            .map(|k| ((label >> k) & 1) as u8)
            .collect()
    }

    /// Append a label's bits to an existing buffer.
    pub fn push_label_bits(&self, label: usize, out: &mut Vec<u8>) {
        for k in (0..self.bits_per_symbol).rev() {
            out.push(((label >> k) & 1) as u8);
        }
    }

    /// Map a bit sequence (length divisible by log2(m)) to symbols.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        if bits.len() % self.bits_per_symbol != 0 {
            return Err(Error::Shape(format!(
                "bit count {} not divisible by {}",
                bits.len(),
                self.bits_per_symbol
            )));
        }
        Ok(bits
            .chunks_exact(self.bits_per_symbol)
            .map(|chunk| {
                let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
                self.points[label]
            })
            .collect())
    }

    /// Index of the nearest constellation point; ties go to the lowest index.
    pub fn nearest(&self, y: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Hard-decision demapping to bits.
    pub fn demap_hard(&self, symbols: &[Complex64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for &y in symbols {
            self.push_label_bits(self.nearest(y), &mut out);
        }
        out
    }
}
