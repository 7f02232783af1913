//! Sparse local-scaling similarity and must-/cannot-link kernel editing.
//!
//! `K_ij = exp(-|x_i - x_j|^2 / (2 s_i s_j))` when `i` is among the `t`
//! nearest neighbors of `j` or vice versa, and 0 otherwise, where `s_i` is
//! the distance from `x_i` to its `t`-th nearest neighbor. Pairs at distance
//! zero get similarity 1.

use std::cmp::Ordering;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::ConstraintSet;
use crate::error::{Error, Result};

/// Symmetric similarity matrix with entries in `[0, 1]` and a unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub entries: DMatrix<f64>,
    /// Neighborhood size used to build the matrix.
    pub t: usize,
    /// Set once must-/cannot-link editing has been applied.
    pub modified: bool,
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Dense CSV dump, one matrix row per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in self.entries.row_iter() {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Per-sample `t`-nearest-neighbor lists and local scales.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhoods {
    /// 0-based neighbor indices, nearest first.
    pub neighbors: Vec<Vec<usize>>,
    /// Distance to the `t`-th nearest neighbor.
    pub sigma: Vec<f64>,
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Orders `(squared distance, index)` pairs; equal distances go to the lower
/// index.
fn by_distance(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Squared pairwise distances plus each sample's neighbor ordering up to
/// `t_max`. Building the table once lets callers derive kernels for every
/// `t <= t_max` without repeating the `O(n^2 d)` distance pass.
#[derive(Debug, Clone)]
pub struct DistanceTable {
    sq: DMatrix<f64>,
    /// `order[i][k]` = `(squared distance, index)` of the `(k+1)`-th neighbor.
    order: Vec<Vec<(f64, usize)>>,
}

impl DistanceTable {
    /// `features` is `n x d`, one row per sample.
    pub fn new(features: &DMatrix<f64>, t_max: usize) -> Result<Self> {
        let n = features.nrows();
        check_t(t_max, n)?;
        let cols = features.transpose();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = cols.column(i);
                (0..n)
                    .map(|j| sq_dist(xi.as_slice(), cols.column(j).as_slice()))
                    .collect()
            })
            .collect();
        let sq = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let order = rows
            .into_par_iter()
            .enumerate()
            .map(|(i, row)| {
                let mut cand: Vec<(f64, usize)> =
                    row.into_iter().enumerate().filter(|&(j, _)| j != i).map(|(j, d)| (d, j)).collect();
                if t_max < cand.len() {
                    cand.select_nth_unstable_by(t_max - 1, by_distance);
                    cand.truncate(t_max);
                }
                cand.sort_by(by_distance);
                cand
            })
            .collect();
        Ok(Self { sq, order })
    }

    pub fn n(&self) -> usize {
        self.sq.nrows()
    }

    pub fn t_max(&self) -> usize {
        self.order.first().map_or(0, Vec::len)
    }

    pub fn squared(&self) -> &DMatrix<f64> {
        &self.sq
    }

    pub fn neighborhoods(&self, t: usize) -> Result<Neighborhoods> {
        self.check(t)?;
        Ok(Neighborhoods {
            neighbors: self.order.iter().map(|o| o[..t].iter().map(|&(_, j)| j).collect()).collect(),
            sigma: self.sigma(t),
        })
    }

    pub fn sigma(&self, t: usize) -> Vec<f64> {
        self.order.iter().map(|o| o[t - 1].0.sqrt()).collect()
    }

    /// Unmodified sparse local-scaling kernel for neighborhood size `t`.
    pub fn kernel(&self, t: usize) -> Result<KernelMatrix> {
        self.check(t)?;
        let n = self.n();
        let sigma = self.sigma(t);
        let mut linked = DMatrix::from_element(n, n, false);
        for (i, o) in self.order.iter().enumerate() {
            for &(_, j) in &o[..t] {
                linked[(i, j)] = true;
                linked[(j, i)] = true;
            }
        }
        let entries = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else if linked[(i, j)] {
                similarity(self.sq[(i, j)], sigma[i], sigma[j])
            } else {
                0.0
            }
        });
        Ok(KernelMatrix {
            entries,
            t,
            modified: false,
        })
    }

    fn check(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.t_max() {
            return Err(Error::InvalidParameter(format!(
                "neighborhood size t = {t} outside 1..={}",
                self.t_max()
            )));
        }
        Ok(())
    }
}

fn check_t(t: usize, n: usize) -> Result<()> {
    if t == 0 || t >= n {
        return Err(Error::InvalidParameter(format!(
            "neighborhood size t = {t} must lie in 1..={} for n = {n}",
            n.saturating_sub(1)
        )));
    }
    Ok(())
}

/// Local-scaling similarity of a pair already known to be neighbors.
pub(crate) fn similarity(sq: f64, sigma_a: f64, sigma_b: f64) -> f64 {
    if sq == 0.0 {
        return 1.0;
    }
    let scale = 2.0 * sigma_a * sigma_b;
    if scale == 0.0 {
        0.0
    } else {
        (-sq / scale).exp()
    }
}

/// The `t` nearest neighbors of each sample (excluding itself) and the local
/// scale `s_i`, the distance to the `t`-th one.
pub fn knn(features: &DMatrix<f64>, t: usize) -> Result<Neighborhoods> {
    check_t(t, features.nrows())?;
    DistanceTable::new(features, t)?.neighborhoods(t)
}

pub fn local_scaling_kernel(features: &DMatrix<f64>, t: usize) -> Result<KernelMatrix> {
    check_t(t, features.nrows())?;
    DistanceTable::new(features, t)?.kernel(t)
}

/// Sets `K'_ij = 1` for each must-link and `K'_ij = 0` for each cannot-link.
pub fn apply_constraints(kernel: &KernelMatrix, cs: &ConstraintSet) -> Result<KernelMatrix> {
    if cs.n() != kernel.n() {
        return Err(Error::DimensionMismatch {
            expected: kernel.n(),
            found: cs.n(),
        });
    }
    let mut out = kernel.clone();
    for (links, value) in [(cs.must_links(), 1.0), (cs.cannot_links(), 0.0)] {
        for &(i, j) in links {
            out.entries[(i, j)] = value;
            out.entries[(j, i)] = value;
        }
    }
    out.modified = true;
    Ok(out)
}

/// Kernel row `K(x, x_i)` of a new point against the training samples.
///
/// `train` is `d x n` (one column per sample). `x` is a neighbor of `x_i`
/// when `x_i` is among the `t` nearest training points of `x`, or when `x`
/// is strictly closer to `x_i` than `x_i`'s own `t`-th neighbor.
pub fn out_of_sample_row(train: &DMatrix<f64>, train_sigma: &[f64], t: usize, x: &[f64]) -> Result<Vec<f64>> {
    let n = train.ncols();
    if x.len() != train.nrows() {
        return Err(Error::DimensionMismatch {
            expected: train.nrows(),
            found: x.len(),
        });
    }
    if t == 0 || t > n {
        return Err(Error::InvalidParameter(format!("neighborhood size t = {t} outside 1..={n}")));
    }
    let sq: Vec<f64> = (0..n).map(|i| sq_dist(train.column(i).as_slice(), x)).collect();
    let mut order: Vec<(f64, usize)> = sq.iter().copied().zip(0..).collect();
    if t < n {
        order.select_nth_unstable_by(t - 1, by_distance);
    }
    order[..t].sort_by(by_distance);
    let sigma_x = order[t - 1].0.sqrt();
    let mut row = vec![0.0; n];
    for &(_, i) in &order[..t] {
        row[i] = similarity(sq[i], sigma_x, train_sigma[i]);
    }
    for i in 0..n {
        if sq[i].sqrt() < train_sigma[i] {
            row[i] = similarity(sq[i], sigma_x, train_sigma[i]);
        }
    }
    Ok(row)
}
