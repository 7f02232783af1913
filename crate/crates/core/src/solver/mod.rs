//! Semi-supervised SMI clustering.
//!
//! The class-posterior model `p(y|x) = sum_i alpha_{y,i} K(x, x_i)` turns the
//! squared-loss mutual information into the quadratic form
//! `(c / 2n) sum_y alpha_y^T U alpha_y - 1/2` with
//!
//! ```text
//! U = K' (2I + 2 gamma M + gamma^2 M^2 - 2 eta C + eta^2 C^2) K'
//! ```
//!
//! where `K'` is the constraint-edited kernel and `M`, `C` the must-/cannot-
//! link matrices. Under orthonormal `alpha_y` the maximizer is the top-`c`
//! eigenvectors of `U`; labels follow by sign fixing, clipping negatives and
//! normalizing each column to unit mass.

mod eigen;
mod model;

pub use eigen::{top_eigs, Eigenpairs};
pub use model::{ClusterModel, MODEL_SCHEMA};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{ConstraintSet, Dataset};
use crate::error::{Error, Result};
use crate::kernel::{apply_constraints, DistanceTable, KernelMatrix};

/// Kernel and constraint-strength hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Neighborhood size of the local-scaling kernel.
    pub t: usize,
    /// Must-link weight.
    pub gamma: f64,
    /// Cannot-link weight; must be 0 when `c > 2`.
    pub eta: f64,
}

/// The matrix whose leading eigenvectors solve the clustering problem.
#[derive(Debug, Clone, PartialEq)]
pub struct UMatrix {
    pub entries: DMatrix<f64>,
    pub gamma: f64,
    pub eta: f64,
}

/// Labels together with the model that produced them.
#[derive(Debug, Clone)]
pub struct Clustering {
    /// 0-based cluster index per sample.
    pub labels: Vec<usize>,
    pub model: ClusterModel,
}

fn check_weights(gamma: f64, eta: f64, c: usize) -> Result<()> {
    for (name, v) in [("gamma", gamma), ("eta", eta)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
        }
    }
    if c > 2 && eta != 0.0 {
        return Err(Error::EtaWithMulticlass { eta, classes: c });
    }
    Ok(())
}

/// Sparse rows of `2I + 2 gamma M + gamma^2 M^2 - 2 eta C + eta^2 C^2`.
fn link_operator(cs: &ConstraintSet, gamma: f64, eta: f64) -> Vec<Vec<(usize, f64)>> {
    let n = cs.n();
    let mut must_adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for &(i, j) in cs.must_links() {
        must_adj[i].push(j);
        must_adj[j].push(i);
    }
    let mut cannot_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in cs.cannot_links() {
        cannot_adj[i].push(j);
        cannot_adj[j].push(i);
    }
    let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
    let mut add = |i: usize, j: usize, v: f64| *rows[i].entry(j).or_insert(0.0) += v;
    for i in 0..n {
        add(i, i, 2.0);
        for &j in &must_adj[i] {
            add(i, j, 2.0 * gamma);
        }
        for &j in &cannot_adj[i] {
            add(i, j, -2.0 * eta);
        }
    }
    // (M^2)_ij = sum_k M_ik M_kj: every k contributes to all pairs of its
    // neighbours, and likewise for C.
    for (adj, w) in [(&must_adj, gamma * gamma), (&cannot_adj, eta * eta)] {
        if w == 0.0 {
            continue;
        }
        for nbrs in adj.iter() {
            for &i in nbrs {
                for &j in nbrs {
                    add(i, j, w);
                }
            }
        }
    }
    rows.into_iter().map(|r| r.into_iter().filter(|&(_, v)| v != 0.0).collect()).collect()
}

/// `U = K' A K'` with `A` the link operator above.
pub fn build_u(kernel: &KernelMatrix, cs: &ConstraintSet, gamma: f64, eta: f64, c: usize) -> Result<UMatrix> {
    check_weights(gamma, eta, c)?;
    let n = kernel.n();
    if cs.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: cs.n() });
    }
    let k = &kernel.entries;
    // B = K' A, column by column; A is symmetric.
    let mut b = DMatrix::zeros(n, n);
    for (i, row) in link_operator(cs, gamma, eta).iter().enumerate() {
        let mut col = b.column_mut(i);
        for &(j, a) in row {
            col.axpy(a, &k.column(j), 1.0);
        }
    }
    let u = b * k;
    let entries = (&u + u.transpose()) * 0.5;
    Ok(UMatrix { entries, gamma, eta })
}

/// Flips each column so that its entries sum to a non-negative value. A
/// column summing to exactly zero takes the sign of its first nonzero entry.
pub fn fix_signs(phi: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = phi.clone();
    for mut col in out.column_iter_mut() {
        let s = col.sum();
        let negate = if s != 0.0 {
            s < 0.0
        } else {
            col.iter().find(|v| **v != 0.0).is_some_and(|v| *v < 0.0)
        };
        if negate {
            col.neg_mut();
        }
    }
    out
}

/// Per-column clipped response and its normalizer: `max(0, phi_y)` and its
/// sum, or `|phi_y|` when nothing survives clipping.
pub(crate) fn clipped_columns(phi: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let mut clipped = phi.map(|v| v.max(0.0));
    let mut mass = Vec::with_capacity(phi.ncols());
    for y in 0..phi.ncols() {
        let mut s = clipped.column(y).sum();
        if s == 0.0 {
            clipped.set_column(y, &phi.column(y).abs());
            s = clipped.column(y).sum();
        }
        mass.push(s);
    }
    (clipped, mass)
}

/// Index of the largest value; ties go to the smallest index.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (y, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (y, v);
        }
    }
    best.0
}

/// `y_i = argmax_y [max(0, phi_y)]_i / sum(max(0, phi_y))`.
pub fn assign_clusters(phi_tilde: &DMatrix<f64>) -> Vec<usize> {
    let (clipped, mass) = clipped_columns(phi_tilde);
    (0..phi_tilde.nrows())
        .map(|i| {
            argmax((0..phi_tilde.ncols()).map(|y| {
                if mass[y] > 0.0 {
                    clipped[(i, y)] / mass[y]
                } else {
                    0.0
                }
            }))
        })
        .collect()
}

/// `(c / 2n) sum_y alpha_y^T K^2 alpha_y - 1/2` for symmetric `K`.
pub fn smi_hat(kernel: &DMatrix<f64>, alpha: &DMatrix<f64>, c: usize) -> Result<f64> {
    let n = kernel.nrows();
    if kernel.ncols() != n || alpha.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: alpha.nrows(),
        });
    }
    let ka = kernel * alpha;
    Ok(c as f64 / (2.0 * n as f64) * ka.norm_squared() - 0.5)
}

fn check_problem(ds: &Dataset, cs: &ConstraintSet, c: usize) -> Result<()> {
    if cs.n() != ds.n() {
        return Err(Error::DimensionMismatch {
            expected: ds.n(),
            found: cs.n(),
        });
    }
    if c == 0 || c > ds.n() {
        return Err(Error::InvalidParameter(format!("class count c = {c} must lie in 1..={}", ds.n())));
    }
    Ok(())
}

/// Full pipeline: kernel, constraint editing, `U`, eigenvectors, labels.
pub fn cluster(ds: &Dataset, cs: &ConstraintSet, params: &SolverParams, c: usize) -> Result<Clustering> {
    check_problem(ds, cs, c)?;
    check_weights(params.gamma, params.eta, c)?;
    if params.t == 0 || params.t >= ds.n() {
        return Err(Error::InvalidParameter(format!(
            "neighborhood size t = {} must lie in 1..={}",
            params.t,
            ds.n() - 1
        )));
    }
    let table = DistanceTable::new(&ds.features, params.t)?;
    cluster_with_table(&table, ds, cs, params, c)
}

/// As [`cluster`], reusing precomputed distances.
pub fn cluster_with_table(
    table: &DistanceTable,
    ds: &Dataset,
    cs: &ConstraintSet,
    params: &SolverParams,
    c: usize,
) -> Result<Clustering> {
    check_problem(ds, cs, c)?;
    let kernel = table.kernel(params.t)?;
    let edited = apply_constraints(&kernel, cs)?;
    let u = build_u(&edited, cs, params.gamma, params.eta, c)?;
    let eig = top_eigs(&u.entries, c)?;
    let phi = fix_signs(&eig.vectors);
    let labels = assign_clusters(&phi);
    let model = ClusterModel::new(
        phi,
        eig.values.iter().copied().collect(),
        &kernel,
        *params,
        ds.features.clone(),
        table.sigma(params.t),
    );
    Ok(Clustering { labels, model })
}

/// Unsupervised SMI clustering: top-`c` eigenvectors of the kernel itself.
pub fn smic(ds: &Dataset, t: usize, c: usize) -> Result<Vec<usize>> {
    check_problem(ds, &ConstraintSet::empty(ds.n()), c)?;
    let table = DistanceTable::new(&ds.features, t)?;
    let kernel = table.kernel(t)?;
    let eig = top_eigs(&kernel.entries, c)?;
    Ok(assign_clusters(&fix_signs(&eig.vectors)))
}
