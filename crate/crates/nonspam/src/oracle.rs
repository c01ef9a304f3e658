//! Dense linear-algebra oracle for the spectral code paths.
//!
//! Everything here goes through an explicit frame matrix and generic
//! SVD/eigendecomposition, deliberately avoiding the DFT shortcuts used by
//! the production paths, so the two can be compared against each other.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::frame::{ActivationTensor, DenseFrameMatrix};

fn to_dmatrix(dense: &DenseFrameMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(dense.rows, dense.cols, &dense.data)
}

/// Extreme squared singular values of the dense frame matrix; these are the
/// sharp frame bounds.
pub fn singular_squared_extremes(dense: &DenseFrameMatrix) -> Result<(f64, f64)> {
    let svd = to_dmatrix(dense).svd(false, false);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &s in svd.singular_values.iter() {
        lo = lo.min(s * s);
        hi = hi.max(s * s);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain("SVD produced non-finite singular values".into()));
    }
    Ok((lo, hi))
}

/// Eigenvalues of the Gram matrix, ascending. Under the circular model this
/// multiset equals the aggregate spectrum.
pub fn gram_eigenvalues(dense: &DenseFrameMatrix) -> Vec<f64> {
    let m = to_dmatrix(dense);
    let gram = m.transpose() * &m;
    let mut eig: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

/// Least-squares reconstruction through the SVD pseudo-inverse of the dense
/// matrix; the oracle counterpart of the spectral dual synthesis.
pub fn pseudo_inverse_reconstruct(dense: &DenseFrameMatrix, acts: &ActivationTensor) -> Result<Vec<f64>> {
    let n = acts.grid.n();
    if dense.cols != n || dense.rows != n * acts.bins() {
        return Err(Error::Dimension(format!(
            "dense matrix {}x{} does not match a {}-bin tensor on {} pixels",
            dense.rows,
            dense.cols,
            acts.bins(),
            n
        )));
    }
    let mut flat = Vec::with_capacity(dense.rows);
    for bin in &acts.coeffs {
        flat.extend_from_slice(bin);
    }
    let rhs = nalgebra::DVector::from_vec(flat);
    let svd = to_dmatrix(dense).svd(true, true);
    let solution = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Domain(format!("SVD solve failed: {e}")))?;
    Ok(solution.iter().copied().collect())
}
