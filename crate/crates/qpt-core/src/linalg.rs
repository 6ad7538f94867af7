//! Thin wrappers around the dense complex linear algebra everything else
//! builds on.

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigValsh, Eigh, UPLO};

use crate::error::{QptError, Result};
use crate::C64;

/// Hermitian eigendecomposition. Eigenvalues come back ascending and
/// `vectors.column(k)` is the eigenvector of `values[k]`.
pub fn eigh(mat: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let (values, vectors) = mat
        .eigh(UPLO::Lower)
        .map_err(|e| QptError::InvalidParameter(format!("eigendecomposition failed: {e}")))?;
    // LAPACK reads the row-major buffer as its transpose, i.e. the complex
    // conjugate of a hermitian matrix; conjugating the returned vectors
    // restores eigenvectors of the original matrix.
    Ok((values, vectors.mapv(|z| z.conj())))
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(mat: &Array2<C64>) -> Result<Array1<f64>> {
    mat.eigvalsh(UPLO::Lower)
        .map_err(|e| QptError::InvalidParameter(format!("eigenvalue computation failed: {e}")))
}

/// Conjugate transpose.
pub fn dagger(mat: &Array2<C64>) -> Array2<C64> {
    let mut out = mat.t().to_owned();
    out.mapv_inplace(|z| z.conj());
    out
}

/// Largest `|A[i,j] - conj(A[j,i])|`.
pub fn hermiticity_deviation(mat: &Array2<C64>) -> f64 {
    let n = mat.nrows();
    let mut max = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            max = max.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    max
}

/// Largest `|(A^dag A - I)[i,j]|`.
pub fn unitarity_deviation(mat: &Array2<C64>) -> f64 {
    let prod = dagger(mat).dot(mat);
    let n = prod.nrows();
    let mut max = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            max = max.max((prod[(i, j)] - expect).norm());
        }
    }
    max
}

/// Largest element magnitude.
pub fn max_abs(mat: &Array2<C64>) -> f64 {
    mat.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// exp(i * scale * M) for hermitian M, synthesized from the spectrum of M.
/// The result is unitary up to rounding for any truncation.
pub fn unitary_exp_i_hermitian(mat: &Array2<C64>, scale: f64) -> Result<Array2<C64>> {
    let (values, vectors) = eigh(mat)?;
    let n = mat.nrows();
    // V e^{i s Lambda} V^dag
    let mut phased = vectors.clone();
    for (k, lam) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, scale * lam);
        phased.column_mut(k).mapv_inplace(|z| z * phase);
    }
    let out = phased.dot(&dagger(&vectors));
    debug_assert_eq!(out.nrows(), n);
    Ok(out)
}
