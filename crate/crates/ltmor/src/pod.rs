//! Proper orthogonal decomposition of the snapshot family in the energy
//! inner product.
//!
//! The snapshot matrix is scaled by the square roots of the quadrature
//! weights and whitened with the Cholesky square root of the Gram matrix,
//! so a plain Euclidean SVD of the whitened matrix yields a basis that is
//! orthonormal in the energy inner product after the back-substitution.

use crate::linalg::{dense_svd, orthonormalize_columns, sym_eigen_desc, RealCholesky, SparseSymMatrix};
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Whitened-space eigenvalue ratio below which the Gram-matrix route is
/// abandoned for a direct SVD: squaring the matrix halves the digits, so
/// eigen-pairs this small are noise there while the SVD still resolves them.
const GRAM_SQUARING_LIMIT: f64 = 1e-12;

/// Column excess required before the Gram route pays off.
const GRAM_PATH_COLUMN_RATIO: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PodMethod {
    GramEigen,
    DirectSvd,
}

pub struct ReducedBasis {
    /// N×R, columns orthonormal in the energy inner product
    pub phi: DMatrix<f64>,
    /// whitened image R·phi, orthonormal in the Euclidean sense
    pub u_tilde: DMatrix<f64>,
    /// full weighted singular value spectrum, descending
    pub singular_values: Vec<f64>,
    pub method: PodMethod,
}

impl ReducedBasis {
    pub fn retained(&self) -> usize {
        self.phi.ncols()
    }

    /// Energy lost by truncation: sum of the squared discarded singular values.
    pub fn residual_energy(&self) -> f64 {
        self.singular_values[self.retained()..]
            .iter()
            .map(|s| s * s)
            .sum()
    }

    /// max |Φᵀ B Φ − I| over all entries.
    pub fn orthonormality_defect(&self, b: &SparseSymMatrix) -> f64 {
        let r = self.retained();
        let mut worst: f64 = 0.0;
        let cols: Vec<Vec<f64>> = (0..r)
            .map(|j| b.apply(self.phi.column(j).as_slice()))
            .collect();
        for i in 0..r {
            let pi = self.phi.column(i);
            for (j, bcol) in cols.iter().enumerate() {
                let dot: f64 = pi.iter().zip(bcol.iter()).map(|(a, c)| a * c).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Applies the weight scaling and the Gram square root to every column.
pub fn whiten_snapshots(
    chol: &RealCholesky,
    snapshots: &DMatrix<f64>,
    weights: &[f64],
) -> DMatrix<f64> {
    assert_eq!(snapshots.ncols(), weights.len());
    let mut out = DMatrix::zeros(snapshots.nrows(), snapshots.ncols());
    let mut col = vec![0.0; snapshots.nrows()];
    for j in 0..snapshots.ncols() {
        let w = weights[j].sqrt();
        for i in 0..snapshots.nrows() {
            col[i] = snapshots[(i, j)] * w;
        }
        let whitened = chol.apply_r(&col);
        for i in 0..snapshots.nrows() {
            out[(i, j)] = whitened[i];
        }
    }
    out
}

/// ‖S̃ − U(UᵀS̃)‖²_F computed by explicit subtraction, no spectral shortcut.
pub fn projection_residual_sq(u: &DMatrix<f64>, whitened: &DMatrix<f64>) -> f64 {
    let coeffs = u.transpose() * whitened;
    let defect = whitened - u * coeffs;
    defect.iter().map(|v| v * v).sum()
}

pub fn build_reduced_basis(
    chol: &RealCholesky,
    snapshots: &DMatrix<f64>,
    weights: &[f64],
    rank: usize,
) -> Result<ReducedBasis> {
    let (n, cols) = snapshots.shape();
    if rank == 0 || rank > cols.min(n) {
        return Err(Error::InvalidArgument(format!(
            "basis size {rank} outside 1..={} for {n}×{cols} snapshots",
            cols.min(n)
        )));
    }
    let whitened = whiten_snapshots(chol, snapshots, weights);

    let mut method = if n >= GRAM_PATH_COLUMN_RATIO * cols {
        PodMethod::GramEigen
    } else {
        PodMethod::DirectSvd
    };

    let (u_tilde, singular_values) = loop {
        match method {
            PodMethod::GramEigen => {
                let gram = whitened.transpose() * &whitened;
                let (lambdas, vectors) = sym_eigen_desc(&gram)?;
                let sigmas: Vec<f64> = lambdas.iter().map(|l| l.max(0.0).sqrt()).collect();
                if sigmas[rank - 1] * sigmas[rank - 1]
                    < GRAM_SQUARING_LIMIT * sigmas[0] * sigmas[0]
                {
                    method = PodMethod::DirectSvd;
                    continue;
                }
                let mut u = DMatrix::zeros(n, rank);
                for j in 0..rank {
                    let col = (&whitened * vectors.column(j)) / sigmas[j];
                    u.column_mut(j).copy_from(&col);
                }
                // squaring costs half the digits; re-orthonormalize so the
                // retained block is orthonormal to working precision again
                orthonormalize_columns(&mut u)?;
                break (u, sigmas);
            }
            PodMethod::DirectSvd => {
                let svd = dense_svd(&whitened)?;
                let u = svd.u.columns(0, rank).into_owned();
                break (u, svd.sigma);
            }
        }
    };

    let mut phi = DMatrix::zeros(n, rank);
    let mut col = vec![0.0; n];
    for j in 0..rank {
        col.copy_from_slice(u_tilde.column(j).as_slice());
        let back = chol.solve_r(&col);
        for i in 0..n {
            phi[(i, j)] = back[i];
        }
    }
    Ok(ReducedBasis { phi, u_tilde, singular_values, method })
}

/// Full-space basis, orthonormal in the energy inner product: the columns of
/// R⁻¹, spanning every discrete state the mesh can represent.
pub fn complete_basis(chol: &RealCholesky) -> DMatrix<f64> {
    let n = chol.dim();
    let mut phi = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = chol.solve_r(&e);
        for i in 0..n {
            phi[(i, j)] = col[i];
        }
    }
    phi
}
