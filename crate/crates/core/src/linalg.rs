//! Dense complex matrices and a deterministic complex SVD.
//!
//! The SVD is a one-sided (Hestenes) Jacobi iteration with complex plane
//! rotations: columns of the working matrix are pairwise orthogonalized
//! until the relative off-diagonal mass of the implicit Gram matrix falls
//! below `SVD_TOL`. Singular values are the resulting column norms. The
//! factorization is made unique by a phase convention: each column of `V`
//! is rotated so that its largest-magnitude entry is real and positive,
//! with the inverse rotation propagated into `U`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Convergence threshold on the relative off-diagonal Gram mass.
const SVD_TOL: f64 = 1e-12;
/// Sweep cap; far beyond what matrices up to 32x32 need.
const SVD_MAX_SWEEPS: usize = 100;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    /// Build from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Shape("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(CMat {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    /// Rectangular diagonal matrix from real values.
    pub fn from_diagonal(rows: usize, cols: usize, diag: &[f64]) -> Self {
        let mut m = CMat::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate().take(rows.min(cols)) {
            m.set(i, i, Complex64::new(d, 0.0));
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// Row-major matrix product.
    pub fn matmul(&self, rhs: &CMat) -> Result<CMat> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    /// Plain transpose (no conjugation).
    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn add(&self, rhs: &CMat) -> Result<CMat> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &CMat) -> Result<CMat> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &CMat, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<CMat> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Shape(format!(
                "elementwise op on {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(CMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, c: Complex64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn scale_re(&self, c: f64) -> CMat {
        self.scale(Complex64::new(c, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Singular value decomposition, `self = U diag(sigma) V^H`.
    pub fn svd(&self) -> Result<SvdFactors> {
        svd(self)
    }
}

/// SVD factors with `u`, `v` unitary and `sigma` sorted descending.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: CMat,
    pub sigma: Vec<f64>,
    pub v: CMat,
}

impl SvdFactors {
    /// `sigma` as a rectangular `rows x cols` diagonal matrix.
    pub fn sigma_block(&self, rows: usize, cols: usize) -> CMat {
        CMat::from_diagonal(rows, cols, &self.sigma)
    }

    /// `U diag(sigma) V^H`.
    pub fn reconstruct(&self) -> CMat {
        let s = self.sigma_block(self.u.cols(), self.v.cols());
        self.u
            .matmul(&s)
            .and_then(|us| us.matmul(&self.v.hermitian()))
            .expect("factor dimensions are consistent by construction")
    }
}

pub fn svd(a: &CMat) -> Result<SvdFactors> {
    if a.rows == 0 || a.cols == 0 {
        return Err(Error::Shape("svd of empty matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::Numeric("svd input contains NaN or Inf".into()));
    }
    if a.max_abs() == 0.0 {
        // Degenerate but valid: all-zero input.
        return Ok(SvdFactors {
            u: CMat::identity(a.rows),
            sigma: vec![0.0; a.rows.min(a.cols)],
            v: CMat::identity(a.cols),
        });
    }
    let mut factors = if a.rows >= a.cols {
        svd_tall(a)?
    } else {
        let f = svd_tall(&a.hermitian())?;
        SvdFactors {
            u: f.v,
            sigma: f.sigma,
            v: f.u,
        }
    };
    apply_phase_convention(&mut factors);
    Ok(factors)
}

/// One-sided Jacobi on a matrix with `rows >= cols`.
fn svd_tall(a: &CMat) -> Result<SvdFactors> {
    let m = a.rows;
    let n = a.cols;
    let mut b = a.clone();
    let mut v = CMat::identity(n);

    let mut converged = false;
    let mut residual = f64::INFINITY;
    for _sweep in 0..SVD_MAX_SWEEPS {
        let mut max_off = 0.0_f64;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (app, aqq, apq) = column_gram(&b, p, q);
                if app == 0.0 || aqq == 0.0 {
                    continue;
                }
                let rel = apq.norm() / (app * aqq).sqrt();
                if rel > max_off {
                    max_off = rel;
                }
                if rel <= SVD_TOL {
                    continue;
                }
                // Complex Jacobi rotation zeroing the (p,q) Gram entry.
                let abs_apq = apq.norm();
                let tau = (aqq - app) / (2.0 * abs_apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = (apq / abs_apq) * (c * t);
                rotate_columns(&mut b, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        residual = max_off;
        if max_off <= SVD_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "svd did not converge in {SVD_MAX_SWEEPS} sweeps (off-diagonal residual {residual:.3e})"
        )));
    }

    // Column norms are the singular values; sort descending, ties by index.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| b.get(i, j).norm_sqr()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap().then(x.cmp(&y)));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let v_sorted = CMat::from_fn(n, n, |i, j| v.get(i, order[j]));

    let mut u = CMat::zeros(m, m);
    let rank_tol = sigma.first().copied().unwrap_or(0.0) * 1e-13 * m.max(n) as f64;
    let mut fixed = Vec::with_capacity(m);
    for (jn, &col) in order.iter().enumerate() {
        if sigma[jn] > rank_tol {
            for i in 0..m {
                u.set(i, jn, b.get(i, col) / sigma[jn]);
            }
            fixed.push(jn);
        }
    }
    complete_basis(&mut u, &fixed);

    Ok(SvdFactors {
        u,
        sigma,
        v: v_sorted,
    })
}

/// (‖b_p‖², ‖b_q‖², b_p^H b_q) for two columns.
fn column_gram(b: &CMat, p: usize, q: usize) -> (f64, f64, Complex64) {
    let mut app = 0.0;
    let mut aqq = 0.0;
    let mut apq = Complex64::new(0.0, 0.0);
    for i in 0..b.rows {
        let bp = b.get(i, p);
        let bq = b.get(i, q);
        app += bp.norm_sqr();
        aqq += bq.norm_sqr();
        apq += bp.conj() * bq;
    }
    (app, aqq, apq)
}

/// Right-multiply columns (p, q) by [[c, s], [-conj(s), c]].
fn rotate_columns(mat: &mut CMat, p: usize, q: usize, c: f64, s: Complex64) {
    for i in 0..mat.rows {
        let xp = mat.get(i, p);
        let xq = mat.get(i, q);
        mat.set(i, p, xp * c - xq * s.conj());
        mat.set(i, q, xp * s + xq * c);
    }
}

/// Fill every column of `u` not in `fixed` with unit vectors orthonormal to
/// the existing ones, chosen deterministically (largest-residual basis
/// vector first, re-orthogonalized twice for stability).
fn complete_basis(u: &mut CMat, fixed: &[usize]) {
    let m = u.rows;
    let mut have: Vec<usize> = fixed.to_vec();
    let missing: Vec<usize> = (0..m).filter(|j| !have.contains(j)).collect();
    for target in missing {
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for e in 0..m {
            let mut vcol: Vec<Complex64> = (0..m)
                .map(|i| Complex64::new(if i == e { 1.0 } else { 0.0 }, 0.0))
                .collect();
            for _ in 0..2 {
                for &j in &have {
                    let proj: Complex64 = (0..m).map(|i| u.get(i, j).conj() * vcol[i]).sum();
                    for i in 0..m {
                        vcol[i] -= u.get(i, j) * proj;
                    }
                }
            }
            let norm = vcol.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().map_or(true, |(bn, _)| norm > *bn) {
                best = Some((norm, vcol));
            }
        }
        let (norm, vcol) = best.expect("m > 0");
        for i in 0..m {
            u.set(i, target, vcol[i] / norm);
        }
        have.push(target);
    }
}

/// Rotate each `V` column so its largest-magnitude entry is real positive;
/// propagate the inverse rotation into the paired `U` column. Unpaired `U`
/// columns get the same treatment on their own.
fn apply_phase_convention(f: &mut SvdFactors) {
    let r = f.sigma.len();
    for j in 0..f.v.cols() {
        if let Some(rot) = column_phase_fix(&f.v, j) {
            scale_column(&mut f.v, j, rot);
            if j < r {
                scale_column(&mut f.u, j, rot);
            }
        }
    }
    for j in r..f.u.cols() {
        if let Some(rot) = column_phase_fix(&f.u, j) {
            scale_column(&mut f.u, j, rot);
        }
    }
}

fn column_phase_fix(m: &CMat, j: usize) -> Option<Complex64> {
    let mut imax = 0;
    let mut best = -1.0;
    for i in 0..m.rows() {
        let a = m.get(i, j).norm();
        if a > best {
            best = a;
            imax = i;
        }
    }
    if best <= 0.0 {
        return None;
    }
    let entry = m.get(imax, j);
    Some((entry / entry.norm()).conj())
}

fn scale_column(m: &mut CMat, j: usize, c: Complex64) {
    for i in 0..m.rows() {
        let v = m.get(i, j);
        m.set(i, j, v * c);
    }
}

/// Inverse of a square matrix by Gauss-Jordan elimination with partial
/// pivoting. Used for the regularized pilot Gram inverse in MMSE estimation.
pub fn inverse(a: &CMat) -> Result<CMat> {
    if a.rows != a.cols {
        return Err(Error::Shape(format!(
            "inverse of non-square {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut work = a.clone();
    let mut inv = CMat::identity(n);
    let pivot_tol = a.max_abs() * 1e-13 * n as f64;
    for col in 0..n {
        let mut piv = col;
        let mut best = work.get(col, col).norm();
        for i in (col + 1)..n {
            let mag = work.get(i, col).norm();
            if mag > best {
                best = mag;
                piv = i;
            }
        }
        if best <= pivot_tol {
            return Err(Error::Numeric("singular matrix in inverse".into()));
        }
        if piv != col {
            swap_rows(&mut work, piv, col);
            swap_rows(&mut inv, piv, col);
        }
        let d = work.get(col, col);
        for j in 0..n {
            work.set(col, j, work.get(col, j) / d);
            inv.set(col, j, inv.get(col, j) / d);
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = work.get(i, col);
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = work.get(i, j) - f * work.get(col, j);
                work.set(i, j, w);
                let v = inv.get(i, j) - f * inv.get(col, j);
                inv.set(i, j, v);
            }
        }
    }
    Ok(inv)
}

fn swap_rows(m: &mut CMat, a: usize, b: usize) {
    for j in 0..m.cols {
        let tmp = m.get(a, j);
        m.set(a, j, m.get(b, j));
        m.set(b, j, tmp);
    }
}

/// ‖M^H M − I‖_inf, the unitarity defect used in tests and invariants.
pub fn unitarity_defect(m: &CMat) -> f64 {
    let g = m.hermitian().matmul(m).expect("square product");
    let mut worst = 0.0_f64;
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let expect = if i == j { 1.0 } else { 0.0 };
            let d = (g.get(i, j) - Complex64::new(expect, 0.0)).norm();
            worst = worst.max(d);
        }
    }
    worst
}
