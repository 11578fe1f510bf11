//! Linear algebra kernels: sparse symmetric storage, profile factorizations
//! and dense helpers.

pub mod dense;
pub mod envelope;
pub mod rcm;
pub mod sparse;

pub use dense::{dense_svd, orthonormalize_columns, sym_eigen_desc, Svd};
pub use envelope::{ComplexShiftedLdl, EnvelopePattern, RealCholesky};
pub use sparse::{CooBuilder, SparseSymMatrix};
