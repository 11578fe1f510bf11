//! Envelope (profile) factorizations behind a reverse Cuthill-McKee
//! permutation.
//!
//! One symbolic pattern serves every matrix on the same mesh: the stiffness,
//! the mass, the Gram matrix and all shifted combinations share adjacency, so
//! the pattern is computed once and the numeric values reloaded per matrix.
//!
//! The complex factorization is an LDLᵀ of the complex symmetric matrix
//! s²M + K without pivoting. For Re s > 0 and SPD (K, M) every leading
//! principal minor of s²M + K is nonzero (the pencil eigenvalues are shifted
//! by s² which never lands on the negative real axis), so the factorization
//! exists; residuals are verified by the callers that care.

use super::sparse::SparseSymMatrix;
use crate::{Error, Result};
use num_complex::Complex64;
use std::sync::Arc;

/// Four-lane dot product: fixed association order (deterministic) while
/// breaking the scalar dependency chain the substitution sweeps live on.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let q = n / 4 * 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let mut i = 0;
    while i < q {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut s = (s0 + s1) + (s2 + s3);
    while i < n {
        s += a[i] * b[i];
        i += 1;
    }
    s
}

/// Symbolic envelope: permutation plus per-row first-column indices.
pub struct EnvelopePattern {
    dim: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    /// iperm[old] = new
    iperm: Vec<usize>,
    /// first[i] = leftmost column of permuted row i inside the envelope
    first: Vec<usize>,
    /// prefix offsets into the packed value buffer, len dim+1
    offsets: Vec<usize>,
}

impl EnvelopePattern {
    /// Pattern of a single matrix, RCM-ordered.
    pub fn new(a: &SparseSymMatrix) -> Arc<EnvelopePattern> {
        Self::from_matrices(&[a])
    }

    /// Union pattern of several same-dimension matrices, RCM-ordered on the
    /// union graph.
    pub fn from_matrices(mats: &[&SparseSymMatrix]) -> Arc<EnvelopePattern> {
        assert!(!mats.is_empty());
        let dim = mats[0].dim();
        let union = if mats.len() == 1 {
            mats[0].clone()
        } else {
            let mut u = mats[0].clone();
            for m in &mats[1..] {
                assert_eq!(m.dim(), dim);
                u = u.add_scaled(m, 1.0);
            }
            u
        };
        let perm = super::rcm::reverse_cuthill_mckee(&union);
        let mut iperm = vec![0usize; dim];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first: Vec<usize> = (0..dim).collect();
        for i in 0..dim {
            let pi = iperm[i];
            for k in union.row_ptr()[i]..union.row_ptr()[i + 1] {
                let pj = iperm[union.col_idx()[k]];
                let (lo, hi) = (pi.min(pj), pi.max(pj));
                if lo < first[hi] {
                    first[hi] = lo;
                }
            }
        }
        let mut offsets = vec![0usize; dim + 1];
        for i in 0..dim {
            offsets[i + 1] = offsets[i] + (i - first[i] + 1);
        }
        Arc::new(EnvelopePattern { dim, perm, iperm, first, offsets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Packed storage size.
    pub fn profile(&self) -> usize {
        self.offsets[self.dim]
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(self.first[i] <= j && j <= i);
        self.offsets[i] + (j - self.first[i])
    }

    /// Scatter a matrix's values into envelope layout (permuted).
    pub fn load(&self, a: &SparseSymMatrix) -> Vec<f64> {
        assert_eq!(a.dim(), self.dim);
        let mut v = vec![0.0; self.profile()];
        for i in 0..self.dim {
            let pi = self.iperm[i];
            for k in a.row_ptr()[i]..a.row_ptr()[i + 1] {
                let pj = self.iperm[a.col_idx()[k]];
                if pj <= pi {
                    v[self.idx(pi, pj)] = a.values()[k];
                }
            }
        }
        v
    }

    fn permute_real(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| x[self.perm[i]]).collect()
    }

    fn unpermute_real(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            out[self.perm[i]] = y[i];
        }
        out
    }
}

/// LLᵀ factorization of an SPD matrix inside its envelope.
pub struct RealCholesky {
    pattern: Arc<EnvelopePattern>,
    l: Vec<f64>,
}

impl RealCholesky {
    /// One-shot: builds a private pattern for `a` and factors it.
    pub fn new(a: &SparseSymMatrix) -> Result<RealCholesky> {
        let pattern = EnvelopePattern::new(a);
        let vals = pattern.load(a);
        Self::factor(pattern, &vals)
    }

    /// Factors envelope-layout values (from `EnvelopePattern::load`).
    pub fn factor(pattern: Arc<EnvelopePattern>, env: &[f64]) -> Result<RealCholesky> {
        assert_eq!(env.len(), pattern.profile());
        let n = pattern.dim;
        let mut l = env.to_vec();
        for i in 0..n {
            let fi = pattern.first[i];
            let oi = pattern.offsets[i];
            let (done, cur) = l.split_at_mut(oi);
            for j in fi..i {
                let fj = pattern.first[j];
                let lo = fi.max(fj);
                let oj = pattern.offsets[j];
                let row_j = &done[oj..pattern.offsets[j + 1]];
                let s = dot(&cur[lo - fi..j - fi], &row_j[lo - fj..j - fj]);
                cur[j - fi] = (cur[j - fi] - s) / row_j[j - fj];
            }
            let row_i = &cur[..i - fi];
            let d = cur[i - fi] - dot(row_i, row_i);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite(format!(
                    "pivot {d:e} at elimination step {i}"
                )));
            }
            cur[i - fi] = d.sqrt();
        }
        Ok(RealCholesky { pattern, l })
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim
    }

    /// x = A⁻¹ b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = self.pattern.permute_real(b);
        self.forward(&mut y);
        self.backward(&mut y);
        self.pattern.unpermute_real(&y)
    }

    /// Solves L y = b in place (b in permuted order).
    fn forward(&self, y: &mut [f64]) {
        let p = &self.pattern;
        for i in 0..p.dim {
            let fi = p.first[i];
            let row = &self.l[p.offsets[i]..p.offsets[i + 1]];
            let s = dot(&row[..i - fi], &y[fi..i]);
            y[i] = (y[i] - s) / row[i - fi];
        }
    }

    /// Solves Lᵀ x = y in place (permuted order).
    fn backward(&self, y: &mut [f64]) {
        let p = &self.pattern;
        for i in (0..p.dim).rev() {
            let fi = p.first[i];
            let row = &self.l[p.offsets[i]..p.offsets[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (yj, lj) in y[fi..i].iter_mut().zip(row.iter()) {
                *yj -= lj * xi;
            }
        }
    }

    /// Applies the upper-triangular square root: with P A Pᵀ = L Lᵀ this is
    /// R x = Lᵀ P x, so that A = RᵀR.
    pub fn apply_r(&self, x: &[f64]) -> Vec<f64> {
        let p = &self.pattern;
        let z = p.permute_real(x);
        let mut y = vec![0.0; p.dim];
        for j in 0..p.dim {
            let zj = z[j];
            for i in p.first[j]..=j {
                y[i] += self.l[p.idx(j, i)] * zj;
            }
        }
        y
    }

    /// Inverts `apply_r`: returns R⁻¹ x = Pᵀ L⁻ᵀ x.
    pub fn solve_r(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.backward(&mut y);
        self.pattern.unpermute_real(&y)
    }
}

/// LDLᵀ factorization of the complex symmetric matrix s²M + K.
pub struct ComplexShiftedLdl {
    pattern: Arc<EnvelopePattern>,
    /// unit lower triangle, diagonal slots hold D
    ld: Vec<Complex64>,
}

impl ComplexShiftedLdl {
    /// Factors s²·M + K from pre-loaded envelope values of K and M.
    pub fn factor(
        pattern: Arc<EnvelopePattern>,
        k_env: &[f64],
        m_env: &[f64],
        s_squared: Complex64,
    ) -> Result<ComplexShiftedLdl> {
        assert_eq!(k_env.len(), pattern.profile());
        assert_eq!(m_env.len(), pattern.profile());
        let n = pattern.dim;
        let mut ld: Vec<Complex64> = k_env
            .iter()
            .zip(m_env.iter())
            .map(|(&k, &m)| Complex64::new(k, 0.0) + s_squared * m)
            .collect();
        // v[j] accumulates L_ij * D_j for the row being eliminated
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let fi = pattern.first[i];
            for j in fi..i {
                let fj = pattern.first[j];
                let lo = fi.max(fj);
                let mut s = ld[pattern.idx(i, j)];
                for k in lo..j {
                    s -= ld[pattern.idx(j, k)] * v[k];
                }
                v[j] = s;
                let dj = ld[pattern.idx(j, j)];
                ld[pattern.idx(i, j)] = s / dj;
            }
            let mut d = ld[pattern.idx(i, i)];
            for k in fi..i {
                d -= ld[pattern.idx(i, k)] * v[k];
            }
            if d == Complex64::new(0.0, 0.0) || !d.is_finite() {
                return Err(Error::Numerical(format!(
                    "zero pivot in shifted factorization at step {i}"
                )));
            }
            ld[pattern.idx(i, i)] = d;
        }
        Ok(ComplexShiftedLdl { pattern, ld })
    }

    /// x = (s²M + K)⁻¹ b.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let p = &self.pattern;
        let mut y: Vec<Complex64> = (0..p.dim).map(|i| b[p.perm[i]]).collect();
        // L z = b
        for i in 0..p.dim {
            let fi = p.first[i];
            let mut s = y[i];
            for j in fi..i {
                s -= self.ld[p.idx(i, j)] * y[j];
            }
            y[i] = s;
        }
        // D w = z
        for i in 0..p.dim {
            y[i] /= self.ld[p.idx(i, i)];
        }
        // Lᵀ x = w
        for i in (0..p.dim).rev() {
            let xi = y[i];
            for j in p.first[i]..i {
                y[j] -= self.ld[p.idx(i, j)] * xi;
            }
        }
        let mut out = vec![Complex64::new(0.0, 0.0); p.dim];
        for i in 0..p.dim {
            out[p.perm[i]] = y[i];
        }
        out
    }
}
