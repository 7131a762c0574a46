//! Small dense helpers for the M×M matrices that describe finite-rank maps.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues (ascending) and eigenvectors of the pencil `(a, b)` with `a`
/// symmetric and `b` symmetric positive definite. Eigenvectors are
/// `b`-orthonormal and stored column-wise.
pub(crate) fn generalized_symmetric_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = b.clone().cholesky().ok_or(Error::NotSpd {
        row: 0,
        pivot: f64::NAN,
    })?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or(Error::NotSpd { row: 0, pivot: 0.0 })?;
    let mut c = &l_inv * a * l_inv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let back = l_inv.transpose();
    let mut vectors = DMatrix::zeros(a.nrows(), a.ncols());
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &(&back * eig.eigenvectors.column(i)));
    }
    Ok((values, vectors))
}

/// Norm, in the mass-weighted L² norm, of `h ↦ X core Yᵀ M h` where the
/// columns of `X` and `Y` have Gram matrices `gram_x` and `gram_y`.
///
/// The nonzero singular values squared are the eigenvalues of
/// `coreᵀ gram_x core gram_y`, a symmetric-definite pencil.
pub(crate) fn finite_rank_norm(
    gram_x: &DMatrix<f64>,
    core: &DMatrix<f64>,
    gram_y: &DMatrix<f64>,
) -> Result<f64> {
    let s = core.transpose() * gram_x * core;
    let chol = gram_y.clone().cholesky().ok_or(Error::NotSpd {
        row: 0,
        pivot: f64::NAN,
    })?;
    let l = chol.l();
    let mut t = l.transpose() * s * &l;
    t = (&t + t.transpose()) * 0.5;
    let eig = SymmetricEigen::new(t);
    let max = eig.eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v));
    Ok(max.sqrt())
}

/// 2-norm condition number through the singular values.
pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub(crate) fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    sv.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
pub(crate) fn dvec(v: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(v)
}
