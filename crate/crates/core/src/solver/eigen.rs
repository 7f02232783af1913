use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Leading eigenpairs of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    /// Descending.
    pub values: DVector<f64>,
    /// `n x c`, orthonormal columns.
    pub vectors: DMatrix<f64>,
}

/// Relative gap below which two eigenvalues are treated as one eigenspace.
const TIE_TOLERANCE: f64 = 1e-10;
/// Smallest residual norm for a projected unit vector to extend the basis.
const BASIS_THRESHOLD: f64 = 1e-6;

/// The `c` algebraically largest eigenpairs of the symmetric matrix `u`.
///
/// Repeated eigenvalues leave the eigenbasis free up to rotation. Each
/// eigenspace touching the top `c` is therefore re-expressed in a canonical
/// basis: the unit vectors `e_1, e_2, ...` are projected onto the space and
/// orthonormalized in index order, keeping those that are not already
/// spanned.
pub fn top_eigs(u: &DMatrix<f64>, c: usize) -> Result<Eigenpairs> {
    let n = u.nrows();
    if u.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.ncols(),
        });
    }
    if c == 0 || c > n {
        return Err(Error::InvalidParameter(format!("need 1 <= c <= n, got c = {c}, n = {n}")));
    }
    let sym = (u + u.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 1000 + 100 * n).ok_or(Error::NoConvergence { n })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let sorted = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut basis = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);

    let scale = sorted.amax();
    let tol = TIE_TOLERANCE * scale;
    let mut start = 0;
    while start < c {
        let mut end = start + 1;
        while end < n && sorted[end - 1] - sorted[end] <= tol {
            end += 1;
        }
        if end - start > 1 {
            let block = basis.columns(start, end - start).into_owned();
            let canon = canonical_basis(&block);
            basis.columns_mut(start, end - start).copy_from(&canon);
        }
        start = end;
    }

    Ok(Eigenpairs {
        values: sorted.rows(0, c).into_owned(),
        vectors: basis.columns(0, c).into_owned(),
    })
}

/// Canonical orthonormal basis of the column space of `v` (orthonormal,
/// `n x m`), built from the projections of `e_1, e_2, ...`.
fn canonical_basis(v: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = v.shape();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(m);
    for k in 0..n {
        if out.len() == m {
            break;
        }
        // P e_k = V V^T e_k = V (row k of V)^T
        let mut w: DVector<f64> = v * v.row(k).transpose();
        // two passes of Gram-Schmidt keep the result orthogonal to working precision
        for _ in 0..2 {
            for b in &out {
                let p = b.dot(&w);
                w.axpy(-p, b, 1.0);
            }
        }
        let norm = w.norm();
        if norm > BASIS_THRESHOLD {
            out.push(w / norm);
        }
    }
    debug_assert_eq!(out.len(), m, "projection of the standard basis must span the eigenspace");
    DMatrix::from_columns(&out)
}
