//! Symmetric sparse matrices in CSR form with a COO assembly path.
//!
//! Both triangles are stored so that matvec is a single row sweep; symmetry
//! is a structural promise of the builder, not a storage trick.

use crate::{Error, Result};

/// Accumulates (i, j, v) triples, then compresses duplicates into CSR.
pub struct CooBuilder {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(dim: usize) -> Self {
        CooBuilder { dim, entries: Vec::new() }
    }

    /// Adds v at (i, j). Symmetric counterparts must be pushed explicitly.
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        self.entries.push((i, j, v));
    }

    /// Adds v at (i, j) and (j, i); diagonal entries are pushed once.
    pub fn push_sym(&mut self, i: usize, j: usize, v: f64) {
        self.push(i, j, v);
        if i != j {
            self.push(j, i, v);
        }
    }

    pub fn build(mut self) -> SparseSymMatrix {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut last = None;
        for (i, j, v) in self.entries {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] = col_idx.len();
                last = Some((i, j));
            }
        }
        // rows without entries inherit the running offset
        for i in 0..self.dim {
            if row_ptr[i + 1] < row_ptr[i] {
                row_ptr[i + 1] = row_ptr[i];
            }
        }
        SparseSymMatrix { dim: self.dim, row_ptr, col_idx, values }
    }
}

/// Symmetric sparse matrix, CSR, both triangles stored.
#[derive(Clone, Debug)]
pub struct SparseSymMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry lookup by binary search within the row.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for i in 0..self.dim {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    /// A x as a fresh vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// Bilinear form xᵀ A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.apply(y);
        x.iter().zip(ay.iter()).map(|(a, b)| a * b).sum()
    }

    /// Energy norm sqrt(xᵀ A x). Clamps tiny negative round-off to zero.
    pub fn norm(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x).max(0.0).sqrt()
    }

    /// Returns A + c*B for matrices sharing the dimension (patterns may differ).
    pub fn add_scaled(&self, other: &SparseSymMatrix, c: f64) -> SparseSymMatrix {
        assert_eq!(self.dim, other.dim);
        let mut b = CooBuilder::new(self.dim);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                b.push(i, self.col_idx[k], self.values[k]);
            }
            for k in other.row_ptr[i]..other.row_ptr[i + 1] {
                b.push(i, other.col_idx[k], c * other.values[k]);
            }
        }
        b.build()
    }

    /// Largest |a_ij| asymmetry relative to the largest entry magnitude.
    pub fn symmetry_defect(&self) -> f64 {
        let mut max_abs = 0.0f64;
        let mut max_diff = 0.0f64;
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                max_abs = max_abs.max(self.values[k].abs());
                max_diff = max_diff.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        if max_abs == 0.0 {
            0.0
        } else {
            max_diff / max_abs
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[(i, self.col_idx[k])] = self.values[k];
            }
        }
        d
    }

    pub fn identity(dim: usize) -> SparseSymMatrix {
        let mut b = CooBuilder::new(dim);
        for i in 0..dim {
            b.push(i, i, 1.0);
        }
        b.build()
    }

    /// Fails unless the matrix is structurally usable as a Gram matrix:
    /// square with a fully populated diagonal.
    pub fn require_full_diagonal(&self) -> Result<()> {
        for i in 0..self.dim {
            if self.get(i, i) == 0.0 {
                return Err(Error::NotPositiveDefinite(format!(
                    "zero diagonal at row {i}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coo_accumulates_duplicates() {
        let mut b = CooBuilder::new(3);
        b.push(0, 0, 1.0);
        b.push(0, 0, 2.0);
        b.push_sym(0, 2, 5.0);
        b.push(1, 1, 4.0);
        b.push(2, 2, 6.0);
        let a = b.build();
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 2), 5.0);
        assert_eq!(a.get(2, 0), 5.0);
        assert_eq!(a.get(1, 1), 4.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 5);
    }

    #[test]
    fn matvec_matches_dense() {
        let mut b = CooBuilder::new(4);
        b.push_sym(0, 1, -1.0);
        b.push_sym(1, 2, -1.0);
        b.push_sym(2, 3, -1.0);
        for i in 0..4 {
            b.push(i, i, 2.0);
        }
        let a = b.build();
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = a.apply(&x);
        let d = a.to_dense();
        let yd = d * nalgebra::DVector::from_row_slice(&x);
        for i in 0..4 {
            assert!((y[i] - yd[i]).abs() < 1e-14);
        }
        assert_eq!(a.symmetry_defect(), 0.0);
    }

    #[test]
    fn add_scaled_merges_patterns() {
        let mut b1 = CooBuilder::new(2);
        b1.push(0, 0, 1.0);
        b1.push(1, 1, 1.0);
        let a1 = b1.build();
        let mut b2 = CooBuilder::new(2);
        b2.push_sym(0, 1, 3.0);
        b2.push(0, 0, 1.0);
        b2.push(1, 1, 1.0);
        let a2 = b2.build();
        let s = a1.add_scaled(&a2, 2.0);
        assert_eq!(s.get(0, 0), 3.0);
        assert_eq!(s.get(0, 1), 6.0);
        assert_eq!(s.get(1, 0), 6.0);
    }
}
