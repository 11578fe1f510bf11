//! Dense kernels on top of nalgebra with descending-order guarantees.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Thin SVD A = U Σ Vᵀ with singular values sorted descending.
pub struct Svd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn dense_svd(a: &DMatrix<f64>) -> Result<Svd> {
    let svd = a
        .clone()
        .try_svd(true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("svd did not converge".into()))?;
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u_sorted = DMatrix::from_columns(
        &order.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>(),
    );
    let v_sorted = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| v_t.row(i).transpose())
            .collect::<Vec<_>>(),
    );
    Ok(Svd { u: u_sorted, sigma, v: v_sorted })
}

/// Symmetric eigendecomposition, eigenvalues descending.
pub fn sym_eigen_desc(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = a
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("symmetric eigensolve did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok((vals, vecs))
}

/// In-place modified Gram-Schmidt on the columns; drops nothing, assumes the
/// columns are numerically independent (callers truncate to rank first).
pub fn orthonormalize_columns(m: &mut DMatrix<f64>) -> Result<()> {
    let (rows, cols) = m.shape();
    for j in 0..cols {
        for i in 0..j {
            let proj = m.column(i).dot(&m.column(j));
            let col_i = m.column(i).into_owned();
            let mut col_j = m.column_mut(j);
            col_j.axpy(-proj, &col_i, 1.0);
        }
        let norm = m.column(j).norm();
        if norm <= f64::EPSILON * (rows as f64).sqrt() {
            return Err(Error::Numerical(format!(
                "column {j} dependent during orthonormalization"
            )));
        }
        m.column_mut(j).scale_mut(1.0 / norm);
    }
    Ok(())
}

/// Frobenius norm helper for contract tests.
pub fn reconstruction_error(a: &DMatrix<f64>, svd: &Svd) -> f64 {
    let sig = DMatrix::from_diagonal(&DVector::from_vec(svd.sigma.clone()));
    let rebuilt = &svd.u * sig * svd.v.transpose();
    (a - rebuilt).norm() / a.norm().max(f64::MIN_POSITIVE)
}
