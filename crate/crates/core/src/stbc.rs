//! Space-time block code construction and encoding.
//!
//! Codes are symbolic grids: each entry references a symbol slot with a sign
//! and a conjugation flag, and only becomes numeric at encode time. The
//! rate-one quasi-orthogonal family is generated by a doubling recursion
//! whose base case is a single symbol; one level of recursion gives the
//! Alamouti code, two give the classic 4x4 quasi-orthogonal design.
//!
//! `encode` produces the raw coded block. The transmit-power normalization
//! (scaling by 1/sqrt(ntx) so total power per time slot is one) is applied
//! by the transmission layer and recorded in experiment outputs.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// One grid cell: a (possibly conjugated, possibly negated) symbol slot, or
/// a structural zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeEntry {
    /// 0-based symbol index; `None` is a zero entry.
    pub symbol: Option<u16>,
    pub negated: bool,
    pub conjugated: bool,
}

impl CodeEntry {
    fn symbol_ref(index: u16) -> Self {
        CodeEntry {
            symbol: Some(index),
            negated: false,
            conjugated: false,
        }
    }

    fn negate(self) -> Self {
        CodeEntry {
            negated: !self.negated,
            ..self
        }
    }

    fn conjugate(self) -> Self {
        CodeEntry {
            conjugated: !self.conjugated,
            ..self
        }
    }

    /// Numeric value given the symbol vector.
    pub fn eval(&self, s: &[Complex64]) -> Complex64 {
        match self.symbol {
            None => Complex64::new(0.0, 0.0),
            Some(idx) => {
                let mut v = s[idx as usize];
                if self.conjugated {
                    v = v.conj();
                }
                if self.negated {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// Token form, e.g. `s[1]`, `-s[2]*`, `0`.
    pub fn token(&self) -> String {
        match self.symbol {
            None => "0".to_string(),
            Some(idx) => format!(
                "{}s[{}]{}",
                if self.negated { "-" } else { "" },
                idx + 1,
                if self.conjugated { "*" } else { "" }
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeKind {
    Alamouti,
    QuasiOrthogonal,
    Orthogonal,
}

/// A symbolic space-time block code: `ntx` antennas by `p` time slots,
/// carrying `ns` symbols per block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StbcCode {
    ntx: usize,
    p: usize,
    ns: usize,
    kind: CodeKind,
    entries: Vec<CodeEntry>, // row-major ntx x p
}

impl StbcCode {
    pub fn ntx(&self) -> usize {
        self.ntx
    }

    /// Time slots per block.
    pub fn slots(&self) -> usize {
        self.p
    }

    /// Symbols per block.
    pub fn symbols_per_block(&self) -> usize {
        self.ns
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    /// Code rate as the exact rational (ns, p).
    pub fn rate(&self) -> (usize, usize) {
        (self.ns, self.p)
    }

    pub fn rate_value(&self) -> f64 {
        self.ns as f64 / self.p as f64
    }

    pub fn entry(&self, antenna: usize, slot: usize) -> CodeEntry {
        self.entries[antenna * self.p + slot]
    }

    /// Numeric coded block, `X[i,t] = sign * f(s[idx])` with `f` the
    /// conjugation when flagged and zero entries mapped to zero.
    pub fn encode(&self, s: &[Complex64]) -> Result<CMat> {
        if s.len() != self.ns {
            return Err(Error::Shape(format!(
                "code expects {} symbols, got {}",
                self.ns,
                s.len()
            )));
        }
        if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Shape("non-finite symbol".into()));
        }
        Ok(CMat::from_fn(self.ntx, self.p, |i, t| {
            self.entry(i, t).eval(s)
        }))
    }

    /// Block Gram matrix `X X^H` of the raw (unnormalized) coded block; a
    /// scaled identity for orthogonal designs, with residual cross-couplings
    /// for quasi-orthogonal ones.
    pub fn gram(&self, s: &[Complex64]) -> Result<CMat> {
        let x = self.encode(s)?;
        x.matmul(&x.hermitian())
    }

    /// (coding gain, array gain) in dB: `10 log10(rate)` and `10 log10(nrx)`.
    pub fn gains(&self, nrx: usize) -> (f64, f64) {
        (
            10.0 * self.rate_value().log10(),
            10.0 * (nrx as f64).log10(),
        )
    }

    /// Human-readable grid of `±s[k]` / `±s[k]*` tokens, one row per antenna.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.ntx {
            let row: Vec<String> = (0..self.p).map(|t| self.entry(i, t).token()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Build the rate-one quasi-orthogonal code for `ntx = 2^n` antennas.
///
/// The doubling step places the half-size code on the first half of the
/// symbols top-left, the half-size code on the second half top-right, and
/// fills the bottom row of blocks with their negated-conjugate and
/// conjugate respectively. `n = 1` yields the Alamouti code.
pub fn build_qostbc(n: u32) -> Result<StbcCode> {
    if n < 1 {
        return Err(Error::Config("qostbc exponent must be >= 1".into()));
    }
    if n > 8 {
        return Err(Error::Config(format!(
            "qostbc exponent {n} gives ntx = 2^{n}; limit is 256 antennas"
        )));
    }
    let ntx = 1usize << n;
    let entries = qostbc_grid(ntx, ntx);
    Ok(StbcCode {
        ntx,
        p: ntx,
        ns: ntx,
        kind: if n == 1 {
            CodeKind::Alamouti
        } else {
            CodeKind::QuasiOrthogonal
        },
        entries,
    })
}

/// The Alamouti code (two antennas, rate one).
pub fn build_alamouti() -> StbcCode {
    build_qostbc(1).expect("n = 1 is valid")
}

/// Square grid over symbols `hi - size .. hi` (0-based, exclusive `hi`).
fn qostbc_grid(size: usize, hi: usize) -> Vec<CodeEntry> {
    if size == 1 {
        return vec![CodeEntry::symbol_ref((hi - 1) as u16)];
    }
    let half = size / 2;
    let first = qostbc_grid(half, hi - half); // first half of the symbols
    let second = qostbc_grid(half, hi); // second half
    let mut entries = vec![CodeEntry::symbol_ref(0); size * size];
    for r in 0..half {
        for c in 0..half {
            let a = first[r * half + c];
            let b = second[r * half + c];
            entries[r * size + c] = a;
            entries[r * size + half + c] = b;
            entries[(half + r) * size + c] = b.conjugate().negate();
            entries[(half + r) * size + half + c] = a.conjugate();
        }
    }
    entries
}

/// The standard complex orthogonal rate-1/2 design for four antennas:
/// four symbol columns followed by their conjugate columns. Its Gram is
/// exactly `2 sum(|s_i|^2) I`.
pub fn build_ostbc_rate_half(ntx: usize) -> Result<StbcCode> {
    if ntx != 4 {
        return Err(Error::Config(format!(
            "rate-1/2 orthogonal design is only provided for 4 antennas, got {ntx}"
        )));
    }
    // Real orthogonal 4x4 design evaluated at complex symbols.
    let signs: [[i8; 4]; 4] = [[1, 1, 1, 1], [-1, 1, -1, 1], [-1, 1, 1, -1], [-1, -1, 1, 1]];
    let idx: [[u16; 4]; 4] = [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]];
    let mut entries = Vec::with_capacity(4 * 8);
    for r in 0..4 {
        let mut row = Vec::with_capacity(8);
        for c in 0..4 {
            let mut e = CodeEntry::symbol_ref(idx[r][c]);
            if signs[r][c] < 0 {
                e = e.negate();
            }
            row.push(e);
        }
        for c in 0..4 {
            row.push(row[c].conjugate());
        }
        entries.extend(row);
    }
    Ok(StbcCode {
        ntx: 4,
        p: 8,
        ns: 4,
        kind: CodeKind::Orthogonal,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, substream};

    fn random_symbols(seed: u64, n: usize) -> Vec<Complex64> {
        let mut rng = substream(seed, "stbc-test", &[n as u64]);
        (0..n).map(|_| complex_normal(&mut rng, 1.0)).collect()
    }

    /// Gram oracle independent of encode/matmul: expand the symbolic rows.
    fn gram_oracle(code: &StbcCode, s: &[Complex64]) -> Vec<Vec<Complex64>> {
        let n = code.ntx();
        let mut g = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            for j in 0..n {
                for t in 0..code.slots() {
                    g[i][j] += code.entry(i, t).eval(s) * code.entry(j, t).eval(s).conj();
                }
            }
        }
        g
    }

    const EQ3_GRID: &str = "\
s[1] s[2] s[3] s[4]
-s[2]* s[1]* -s[4]* s[3]*
-s[3]* -s[4]* s[1]* s[2]*
s[4] -s[3] -s[2] s[1]
";

    // Hand expansion of the doubling step applied to the 4x4 grid.
    const N3_GRID: &str = "\
s[1] s[2] s[3] s[4] s[5] s[6] s[7] s[8]
-s[2]* s[1]* -s[4]* s[3]* -s[6]* s[5]* -s[8]* s[7]*
-s[3]* -s[4]* s[1]* s[2]* -s[7]* -s[8]* s[5]* s[6]*
s[4] -s[3] -s[2] s[1] s[8] -s[7] -s[6] s[5]
-s[5]* -s[6]* -s[7]* -s[8]* s[1]* s[2]* s[3]* s[4]*
s[6] -s[5] s[8] -s[7] -s[2] s[1] -s[4] s[3]
s[7] s[8] -s[5] -s[6] -s[3] -s[4] s[1] s[2]
-s[8]* s[7]* s[6]* -s[5]* s[4]* -s[3]* -s[2]* s[1]*
";

    #[test]
    fn test_qostbc_rejects_zero() {
        assert!(matches!(build_qostbc(0), Err(Error::Config(_))));
    }

    #[test]
    fn test_alamouti_grid() {
        let code = build_alamouti();
        assert_eq!(code.kind(), CodeKind::Alamouti);
        assert_eq!(code.render_text(), "s[1] s[2]\n-s[2]* s[1]*\n");
        assert_eq!(code.rate(), (2, 2));
    }

    #[test]
    fn test_qostbc_n2_matches_reference_grid() {
        let code = build_qostbc(2).unwrap();
        assert_eq!(code.kind(), CodeKind::QuasiOrthogonal);
        assert_eq!(code.render_text(), EQ3_GRID);
        assert_eq!(code.rate_value(), 1.0);
    }

    #[test]
    fn test_qostbc_n3_matches_golden_grid() {
        let code = build_qostbc(3).unwrap();
        assert_eq!(code.render_text(), N3_GRID);
    }

    #[test]
    fn test_qostbc_recursion_block_structure() {
        // Quadrants of the size-2^n grid must equal the doubling pattern
        // applied to the half-size grids (structural equality of entries).
        for n in 2..=4u32 {
            let code = build_qostbc(n).unwrap();
            let size = code.ntx();
            let half = size / 2;
            let first = qostbc_grid(half, half);
            let second = qostbc_grid(half, size);
            for r in 0..half {
                for c in 0..half {
                    let a = first[r * half + c];
                    let b = second[r * half + c];
                    assert_eq!(code.entry(r, c), a);
                    assert_eq!(code.entry(r, half + c), b);
                    assert_eq!(code.entry(half + r, c), b.conjugate().negate());
                    assert_eq!(code.entry(half + r, half + c), a.conjugate());
                }
            }
        }
    }

    #[test]
    fn test_symbol_occupancy_once_per_row() {
        for n in 1..=5u32 {
            let code = build_qostbc(n).unwrap();
            for i in 0..code.ntx() {
                let mut seen = vec![0usize; code.symbols_per_block()];
                for t in 0..code.slots() {
                    let e = code.entry(i, t);
                    seen[e.symbol.unwrap() as usize] += 1;
                }
                assert!(seen.iter().all(|&c| c == 1), "row {i} occupancy {seen:?}");
            }
        }
    }

    #[test]
    fn test_encode_alamouti_example() {
        let code = build_alamouti();
        let s = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        let x = code.encode(&s).unwrap();
        // [[1, j], [j, 1]]: -( j )* = j and (1)* = 1.
        assert_eq!(x.get(0, 0), Complex64::new(1.0, 0.0));
        assert_eq!(x.get(0, 1), Complex64::new(0.0, 1.0));
        assert_eq!(x.get(1, 0), Complex64::new(0.0, 1.0));
        assert_eq!(x.get(1, 1), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn test_encode_zero_symbols() {
        let code = build_qostbc(2).unwrap();
        let s = vec![Complex64::new(0.0, 0.0); 4];
        let x = code.encode(&s).unwrap();
        assert_eq!(x.max_abs(), 0.0);
    }

    #[test]
    fn test_encode_unit_vector_hits_diagonal() {
        // s = (1, 0, 0, 0): s[1] sits where the reference grid has ±s[1],
        // i.e. the main diagonal (conjugated in rows 2 and 3).
        let code = build_qostbc(2).unwrap();
        let mut s = vec![Complex64::new(0.0, 0.0); 4];
        s[0] = Complex64::new(1.0, 0.0);
        let x = code.encode(&s).unwrap();
        for i in 0..4 {
            for t in 0..4 {
                let expect = if i == t { 1.0 } else { 0.0 };
                assert!((x.get(i, t) - Complex64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn test_encode_length_mismatch() {
        let code = build_alamouti();
        assert!(matches!(
            code.encode(&[Complex64::new(1.0, 0.0)]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn test_row_energy_unit_symbols() {
        // With |s_k| = 1 every entry has unit magnitude, so each row's
        // squared norm equals the number of symbol slots it carries.
        let mut rng = substream(9, "stbc-test", &[]);
        for code in [build_qostbc(2).unwrap(), build_qostbc(3).unwrap()] {
            let s: Vec<Complex64> = (0..code.symbols_per_block())
                .map(|_| {
                    let z = complex_normal(&mut rng, 1.0);
                    z / z.norm()
                })
                .collect();
            let x = code.encode(&s).unwrap();
            for i in 0..code.ntx() {
                let e: f64 = (0..code.slots()).map(|t| x.get(i, t).norm_sqr()).sum();
                assert!((e - code.symbols_per_block() as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn test_alamouti_gram_scaled_identity() {
        let code = build_alamouti();
        let s = random_symbols(3, 2);
        let g = code.gram(&s).unwrap();
        let power: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { power } else { 0.0 };
                assert!((g.get(i, j) - Complex64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn test_qostbc_gram_signature() {
        // Diagonal sum(|s|^2); nonzero anti-diagonal couplings; zero elsewhere.
        let code = build_qostbc(2).unwrap();
        let s = random_symbols(4, 4);
        let g = code.gram(&s).unwrap();
        let oracle = gram_oracle(&code, &s);
        let power: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        let coupling = 2.0 * (s[0] * s[3].conj()).re - 2.0 * (s[1] * s[2].conj()).re;
        for i in 0..4 {
            for j in 0..4 {
                assert!((g.get(i, j) - oracle[i][j]).norm() < 1e-12);
                let expect = match (i, j) {
                    (a, b) if a == b => Complex64::new(power, 0.0),
                    (0, 3) | (3, 0) => Complex64::new(coupling, 0.0),
                    (1, 2) | (2, 1) => Complex64::new(-coupling, 0.0),
                    _ => Complex64::new(0.0, 0.0),
                };
                assert!(
                    (g.get(i, j) - expect).norm() < 1e-12,
                    "gram[{i}][{j}] = {:?}, expected {:?}",
                    g.get(i, j),
                    expect
                );
            }
        }
        assert!(coupling.abs() > 1e-6, "witness symbols should couple");
    }

    #[test]
    fn test_rate_half_code_shape_and_gains() {
        let code = build_ostbc_rate_half(4).unwrap();
        assert_eq!(code.kind(), CodeKind::Orthogonal);
        assert_eq!(code.rate(), (4, 8));
        assert!((code.rate_value() - 0.5).abs() < 1e-15);
        let (gc, ga) = code.gains(1);
        assert!((gc - (-3.010299956639812)).abs() < 1e-9);
        assert_eq!(ga, 0.0);
        let (_, ga4) = code.gains(4);
        assert!((ga4 - 6.020599913279624).abs() < 1e-9);
        let rate1 = build_alamouti().gains(1);
        assert_eq!(rate1, (0.0, 0.0));
    }

    #[test]
    fn test_rate_half_rejects_other_sizes() {
        assert!(matches!(build_ostbc_rate_half(2), Err(Error::Config(_))));
        assert!(matches!(build_ostbc_rate_half(8), Err(Error::Config(_))));
    }

    #[test]
    fn test_rate_half_gram_scaled_identity() {
        let code = build_ostbc_rate_half(4).unwrap();
        let s = random_symbols(8, 4);
        let g = code.gram(&s).unwrap();
        let oracle = gram_oracle(&code, &s);
        let power: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        for i in 0..4 {
            for j in 0..4 {
                assert!((g.get(i, j) - oracle[i][j]).norm() < 1e-12);
                let expect = if i == j { 2.0 * power } else { 0.0 };
                assert!(
                    (g.get(i, j) - Complex64::new(expect, 0.0)).norm() < 1e-10,
                    "gram[{i}][{j}] = {:?}",
                    g.get(i, j)
                );
            }
        }
    }

    #[test]
    fn test_qostbc_gram_not_identity_generic() {
        let code = build_qostbc(2).unwrap();
        // Deterministic witness with nonzero coupling.
        let s = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let g = code.gram(&s).unwrap();
        assert!(g.get(0, 3).norm() > 0.5, "expected anti-diagonal coupling");
    }
}
