//! Least-squares mutual information.
//!
//! The density ratio `r(x, y) = p(x, y) / (p(x) p(y))` is modelled per class
//! as `r(x, y) = sum_l w_l^(y) L(x, c_l^(y))` with a Gaussian `L` of width
//! `kappa` and centers drawn from class `y`. The weights have the closed form
//! `w^(y) = (H^(y) + delta I)^-1 h^(y)` with
//!
//! ```text
//! H^(y)_{l,l'} = (n_y / n^2) sum_i L(x_i, c_l) L(x_i, c_l')
//! h^(y)_l      = (1 / n) sum_{i : y_i = y} L(x_i, c_l)
//! ```
//!
//! and the SMI estimate is
//! `-(1/2n^2) sum_{i,j} r(x_i, y_j)^2 + (1/n) sum_i r(x_i, y_i) - 1/2`.
//! `kappa` and `delta` are chosen by M-fold cross-validation of the held-out
//! squared error.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::sq_dist;

pub const DEFAULT_CENTER_CAP: usize = 500;
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_DELTA_GRID: [f64; 5] = [1e-3, 1e-2, 1e-1, 1.0, 10.0];

/// Density-ratio weights for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassRatio {
    /// 0-based class label.
    pub label: usize,
    /// `d x m`, one center per column.
    pub centers: DMatrix<f64>,
    pub weights: DVector<f64>,
}

/// A fitted density-ratio model.
#[derive(Debug, Clone, PartialEq)]
pub struct LsmiModel {
    pub kappa: f64,
    pub delta: f64,
    /// Sorted by label.
    pub classes: Vec<ClassRatio>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsmiParams {
    pub kappa: f64,
    pub delta: f64,
    pub center_cap: usize,
    pub seed: u64,
}

/// Cross-validation and center settings for [`estimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LsmiConfig {
    /// Gaussian widths to try; `None` uses [`default_kappa_grid`].
    pub kappa_grid: Option<Vec<f64>>,
    pub delta_grid: Vec<f64>,
    pub folds: usize,
    pub center_cap: usize,
    pub seed: u64,
}

impl Default for LsmiConfig {
    fn default() -> Self {
        Self {
            kappa_grid: None,
            delta_grid: DEFAULT_DELTA_GRID.to_vec(),
            folds: DEFAULT_FOLDS,
            center_cap: DEFAULT_CENTER_CAP,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvRow {
    pub kappa: f64,
    pub delta: f64,
    pub mean: f64,
    pub per_fold: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub kappa: f64,
    pub delta: f64,
    pub table: Vec<CvRow>,
}

impl CvResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let folds = self.table.first().map_or(0, |r| r.per_fold.len());
        let mut header = vec!["kappa".to_string(), "delta".into(), "mean_cv".into()];
        header.extend((1..=folds).map(|m| format!("fold_{m}")));
        writeln!(out, "{}", header.join(","))?;
        for row in &self.table {
            let mut cells = vec![row.kappa.to_string(), row.delta.to_string(), row.mean.to_string()];
            cells.extend(row.per_fold.iter().map(f64::to_string));
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// LSMI value together with the selected hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LsmiEstimate {
    pub value: f64,
    pub kappa: f64,
    pub delta: f64,
    pub cv: CvResult,
}

pub(crate) fn gaussian(sq: f64, kappa: f64) -> f64 {
    (-sq / (2.0 * kappa * kappa)).exp()
}

fn check_params(kappa: f64, delta: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be >= 0, got {delta}")));
    }
    Ok(())
}

fn check_xy(x: &DMatrix<f64>, y: &[usize]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Sample indices grouped by label, ascending.
fn by_class(y: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &label) in y.iter().enumerate() {
        groups.entry(label).or_default().push(i);
    }
    groups
}

/// Kernel centers: every sample when `n <= cap`, otherwise a seeded sample
/// without replacement, stratified by class in proportion to class size
/// (largest remainder, at least one per class). Returned grouped by class,
/// each group ascending.
pub fn select_centers(y: &[usize], cap: usize, seed: u64) -> BTreeMap<usize, Vec<usize>> {
    let groups = by_class(y);
    let n = y.len();
    if n <= cap || cap == 0 {
        return groups;
    }
    let mut quota: Vec<(usize, usize, f64)> = groups
        .iter()
        .map(|(&label, members)| {
            let exact = cap as f64 * members.len() as f64 / n as f64;
            (label, (exact.floor() as usize).max(1), exact.fract())
        })
        .collect();
    let assigned: usize = quota.iter().map(|q| q.1).sum();
    if assigned < cap {
        let mut order: Vec<usize> = (0..quota.len()).collect();
        order.sort_by(|&a, &b| quota[b].2.total_cmp(&quota[a].2).then(a.cmp(&b)));
        for &k in order.iter().take(cap - assigned) {
            quota[k].1 += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    quota
        .into_iter()
        .map(|(label, take, _)| {
            let members = &groups[&label];
            let take = take.min(members.len());
            let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, members.len(), take)
                .into_iter()
                .map(|k| members[k])
                .collect();
            picked.sort_unstable();
            (label, picked)
        })
        .collect()
}

/// Solves `(H + delta I) w = h`: Cholesky when `delta > 0`, an SVD
/// pseudo-solution when `delta == 0`.
fn ridge_solve(h_mat: &DMatrix<f64>, h_vec: &DVector<f64>, delta: f64) -> Result<DVector<f64>> {
    let m = h_mat.nrows();
    let mut a = h_mat.clone();
    for k in 0..m {
        a[(k, k)] += delta;
    }
    if delta > 0.0 {
        if let Some(chol) = a.clone().cholesky() {
            return Ok(chol.solve(h_vec));
        }
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let eps = f64::EPSILON * m as f64 * smax;
    if svd.singular_values.iter().any(|&s| s <= eps) {
        log::warn!("density-ratio system is singular (delta = {delta}); using a least-squares solution, consider delta > 0");
    }
    svd.solve(h_vec, eps).map_err(|e| Error::Numerical(e.to_string()))
}

/// Builds `(H, h)` for one class from the kernel matrix `phi` between the
/// `n` fitting samples (rows) and the class centers (columns).
fn class_system(phi: &DMatrix<f64>, members: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
    let n = phi.nrows() as f64;
    let n_y = members.len() as f64;
    let h_mat = phi.tr_mul(phi) * (n_y / (n * n));
    let mut h_vec = DVector::zeros(phi.ncols());
    for &i in members {
        h_vec += phi.row(i).transpose();
    }
    (h_mat, h_vec / n)
}

/// The regularized least-squares problem for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSystem {
    pub label: usize,
    /// `(n_y / n^2) sum_i L(x_i, c_l) L(x_i, c_l')`.
    pub h_mat: DMatrix<f64>,
    /// `(1/n) sum_{i: y_i = y} L(x_i, c_l)`.
    pub h_vec: DVector<f64>,
}

/// Builds `(H, h)` for every class from explicit centers, given per class as
/// `d x m` matrices.
pub fn class_systems(
    x: &DMatrix<f64>,
    y: &[usize],
    centers: &[(usize, DMatrix<f64>)],
    kappa: f64,
) -> Result<Vec<ClassSystem>> {
    check_xy(x, y)?;
    check_params(kappa, 0.0)?;
    let groups = by_class(y);
    let cols = x.transpose();
    centers
        .iter()
        .map(|(label, ctr)| {
            if ctr.nrows() != x.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: x.ncols(),
                    found: ctr.nrows(),
                });
            }
            let members = groups.get(label).ok_or(Error::MissingClass { class: label + 1 })?;
            let phi = DMatrix::from_fn(x.nrows(), ctr.ncols(), |i, l| {
                gaussian(sq_dist(cols.column(i).as_slice(), ctr.column(l).as_slice()), kappa)
            });
            let (h_mat, h_vec) = class_system(&phi, members);
            Ok(ClassSystem {
                label: *label,
                h_mat,
                h_vec,
            })
        })
        .collect()
}

/// Fits the ratio model with explicit centers, given per class as `d x m`
/// matrices.
pub fn fit_with_centers(
    x: &DMatrix<f64>,
    y: &[usize],
    centers: &[(usize, DMatrix<f64>)],
    kappa: f64,
    delta: f64,
) -> Result<LsmiModel> {
    check_params(kappa, delta)?;
    let systems = class_systems(x, y, centers, kappa)?;
    let mut classes = Vec::with_capacity(centers.len());
    for (sys, (_, ctr)) in systems.iter().zip(centers) {
        classes.push(ClassRatio {
            label: sys.label,
            centers: ctr.clone(),
            weights: ridge_solve(&sys.h_mat, &sys.h_vec, delta)?,
        });
    }
    classes.sort_by_key(|c| c.label);
    Ok(LsmiModel { kappa, delta, classes })
}

/// Fits the ratio model on `(x, y)` with centers from [`select_centers`].
pub fn fit(x: &DMatrix<f64>, y: &[usize], params: &LsmiParams) -> Result<LsmiModel> {
    check_xy(x, y)?;
    let centers: Vec<(usize, DMatrix<f64>)> = select_centers(y, params.center_cap, params.seed)
        .into_iter()
        .map(|(label, idx)| {
            let m = DMatrix::from_fn(x.ncols(), idx.len(), |j, l| x[(idx[l], j)]);
            (label, m)
        })
        .collect();
    fit_with_centers(x, y, &centers, params.kappa, params.delta)
}

impl LsmiModel {
    fn class(&self, label: usize) -> Result<&ClassRatio> {
        self.classes
            .binary_search_by_key(&label, |c| c.label)
            .map(|k| &self.classes[k])
            .map_err(|_| Error::MissingClass { class: label + 1 })
    }

    pub fn ratio(&self, x: &[f64], label: usize) -> Result<f64> {
        let class = self.class(label)?;
        if x.len() != class.centers.nrows() {
            return Err(Error::DimensionMismatch {
                expected: class.centers.nrows(),
                found: x.len(),
            });
        }
        Ok(class
            .weights
            .iter()
            .zip(class.centers.column_iter())
            .map(|(w, c)| w * gaussian(sq_dist(x, c.as_slice()), self.kappa))
            .sum())
    }
}

/// `r(x, y) = sum_l w_l^(y) L(x, c_l^(y))`.
pub fn evaluate_ratio(model: &LsmiModel, x: &[f64], label: usize) -> Result<f64> {
    model.ratio(x, label)
}

/// The LSMI estimate on `(x, y)`. The squared term pairs every sample with
/// every label, so it is accumulated as `sum_i sum_y count(y) r(x_i, y)^2`.
pub fn lsmi_value(model: &LsmiModel, x: &DMatrix<f64>, y: &[usize]) -> Result<f64> {
    check_xy(x, y)?;
    let n = y.len() as f64;
    let counts: Vec<(usize, f64)> = by_class(y).into_iter().map(|(l, m)| (l, m.len() as f64)).collect();
    let mut squared = 0.0;
    let mut paired = 0.0;
    for (i, &label) in y.iter().enumerate() {
        let xi: Vec<f64> = x.row(i).iter().copied().collect();
        for &(other, count) in &counts {
            let r = model.ratio(&xi, other)?;
            squared += count * r * r;
            if other == label {
                paired += r;
            }
        }
    }
    Ok(-squared / (2.0 * n * n) + paired / n - 0.5)
}

/// Stratified fold index per sample: a seeded shuffle, stably grouped by
/// class, dealt round-robin into `folds` blocks.
pub fn fold_assignment(y: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by_key(|&i| y[i]);
    let mut fold = vec![0; y.len()];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

/// Ten widths log-spaced from 1/10 to 10 times the median pairwise distance.
/// The median is taken over at most 1000 evenly strided samples.
pub fn default_kappa_grid(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows();
    let stride = n.div_ceil(1000).max(1);
    let cols = x.transpose();
    let picks: Vec<usize> = (0..n).step_by(stride).collect();
    let mut dists = Vec::with_capacity(picks.len() * picks.len() / 2);
    for (a, &i) in picks.iter().enumerate() {
        for &j in &picks[a + 1..] {
            dists.push(sq_dist(cols.column(i).as_slice(), cols.column(j).as_slice()).sqrt());
        }
    }
    let median = if dists.is_empty() {
        1.0
    } else {
        let mid = dists.len() / 2;
        let (_, m, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
        *m
    };
    let base = if median > 0.0 { median } else { 1.0 };
    (0..10).map(|k| base * 10f64.powf(-1.0 + 2.0 * k as f64 / 9.0)).collect()
}

fn sorted_grid(grid: &[f64]) -> Vec<f64> {
    let mut g = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

/// M-fold cross-validation over `kappa_grid x delta_grid`.
///
/// For each fold the model is fitted on the remaining samples and scored by
/// `(1/2|Z|^2) sum_{x in Z} sum_{y in Z} r(x, y)^2 - (1/|Z|) sum_{(x,y) in Z} r(x, y)`.
/// The pair with the smallest mean wins; ties go to the smaller `kappa`,
/// then the smaller `delta`.
pub fn cross_validate(
    x: &DMatrix<f64>,
    y: &[usize],
    kappa_grid: &[f64],
    delta_grid: &[f64],
    folds: usize,
    center_cap: usize,
    seed: u64,
) -> Result<CvResult> {
    check_xy(x, y)?;
    if folds < 2 || folds > y.len() {
        return Err(Error::InvalidParameter(format!(
            "fold count must lie in 2..={}, got {folds}",
            y.len()
        )));
    }
    if kappa_grid.is_empty() || delta_grid.is_empty() {
        return Err(Error::InvalidParameter("kappa and delta grids must be nonempty".into()));
    }
    let kappas = sorted_grid(kappa_grid);
    let deltas = sorted_grid(delta_grid);
    for &k in &kappas {
        for &d in &deltas {
            check_params(k, d)?;
        }
    }

    let n = y.len();
    let fold_of = fold_assignment(y, folds, seed);
    struct FoldPlan {
        train: Vec<usize>,
        held: Vec<usize>,
        /// (label, center sample indices, member positions within `train`)
        classes: Vec<(usize, Vec<usize>, Vec<usize>)>,
        /// (label, count) over held-out samples
        held_counts: Vec<(usize, f64)>,
    }
    let mut plans = Vec::with_capacity(folds);
    let mut used = vec![false; n];
    for m in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != m).collect();
        let held: Vec<usize> = (0..n).filter(|&i| fold_of[i] == m).collect();
        let train_y: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        let centers = select_centers(&train_y, center_cap, seed.wrapping_add(m as u64 + 1));
        let members = by_class(&train_y);
        let classes: Vec<(usize, Vec<usize>, Vec<usize>)> = centers
            .into_iter()
            .map(|(label, pos)| {
                let global: Vec<usize> = pos.iter().map(|&p| train[p]).collect();
                global.iter().for_each(|&g| used[g] = true);
                (label, global, members[&label].clone())
            })
            .collect();
        let held_y: Vec<usize> = held.iter().map(|&i| y[i]).collect();
        let held_counts: Vec<(usize, f64)> = by_class(&held_y).into_iter().map(|(l, v)| (l, v.len() as f64)).collect();
        if let Some(&(missing, _)) = held_counts.iter().find(|(l, _)| !classes.iter().any(|c| c.0 == *l)) {
            return Err(Error::MissingClass { class: missing + 1 });
        }
        plans.push(FoldPlan {
            train,
            held,
            classes,
            held_counts,
        });
    }

    // Squared distances from every sample to every sample used as a center.
    let center_ids: Vec<usize> = (0..n).filter(|&i| used[i]).collect();
    let mut col_of = vec![usize::MAX; n];
    for (c, &g) in center_ids.iter().enumerate() {
        col_of[g] = c;
    }
    let cols = x.transpose();
    let sq = DMatrix::from_fn(n, center_ids.len(), |i, c| {
        sq_dist(cols.column(i).as_slice(), cols.column(center_ids[c]).as_slice())
    });

    let mut table: Vec<CvRow> = Vec::with_capacity(kappas.len() * deltas.len());
    let mut scores = vec![vec![0.0; folds]; kappas.len() * deltas.len()];
    for (ki, &kappa) in kappas.iter().enumerate() {
        let gram = sq.map(|s| gaussian(s, kappa));
        for (m, plan) in plans.iter().enumerate() {
            let systems: Vec<_> = plan
                .classes
                .iter()
                .map(|(label, ctr, members)| {
                    let phi_train = DMatrix::from_fn(plan.train.len(), ctr.len(), |r, l| gram[(plan.train[r], col_of[ctr[l]])]);
                    let phi_held = DMatrix::from_fn(plan.held.len(), ctr.len(), |r, l| gram[(plan.held[r], col_of[ctr[l]])]);
                    let (h_mat, h_vec) = class_system(&phi_train, members);
                    (*label, h_mat, h_vec, phi_held)
                })
                .collect();
            let z = plan.held.len() as f64;
            for (di, &delta) in deltas.iter().enumerate() {
                // r_m(x, y) for every held-out x and every training class y
                let mut ratios: BTreeMap<usize, DVector<f64>> = BTreeMap::new();
                for (label, h_mat, h_vec, phi_held) in &systems {
                    let w = ridge_solve(h_mat, h_vec, delta)?;
                    ratios.insert(*label, phi_held * w);
                }
                let mut squared = 0.0;
                for &(label, count) in &plan.held_counts {
                    squared += count * ratios[&label].norm_squared();
                }
                let paired: f64 = plan.held.iter().enumerate().map(|(r, &i)| ratios[&y[i]][r]).sum();
                scores[ki * deltas.len() + di][m] = squared / (2.0 * z * z) - paired / z;
            }
        }
    }
    let mut best: Option<(f64, f64, f64)> = None;
    for (ki, &kappa) in kappas.iter().enumerate() {
        for (di, &delta) in deltas.iter().enumerate() {
            let per_fold = std::mem::take(&mut scores[ki * deltas.len() + di]);
            let mean = per_fold.iter().sum::<f64>() / folds as f64;
            if best.is_none_or(|b| mean < b.0) {
                best = Some((mean, kappa, delta));
            }
            table.push(CvRow {
                kappa,
                delta,
                mean,
                per_fold,
            });
        }
    }
    let (_, kappa, delta) = best.expect("grids are nonempty");
    Ok(CvResult { kappa, delta, table })
}

/// Cross-validates `(kappa, delta)`, refits on all samples and returns the
/// in-sample LSMI.
pub fn estimate(x: &DMatrix<f64>, y: &[usize], cfg: &LsmiConfig) -> Result<LsmiEstimate> {
    let kappas = match &cfg.kappa_grid {
        Some(g) => g.clone(),
        None => default_kappa_grid(x),
    };
    let cv = cross_validate(x, y, &kappas, &cfg.delta_grid, cfg.folds, cfg.center_cap, cfg.seed)?;
    let model = fit(
        x,
        y,
        &LsmiParams {
            kappa: cv.kappa,
            delta: cv.delta,
            center_cap: cfg.center_cap,
            seed: cfg.seed,
        },
    )?;
    let value = lsmi_value(&model, x, y)?;
    Ok(LsmiEstimate {
        value,
        kappa: cv.kappa,
        delta: cv.delta,
        cv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn params(kappa: f64, delta: f64) -> LsmiParams {
        LsmiParams {
            kappa,
            delta,
            center_cap: DEFAULT_CENTER_CAP,
            seed: 0,
        }
    }

    #[test]
    fn single_sample_scalar_case() {
        let x = DMatrix::from_element(1, 2, 0.3);
        for delta in [0.0, 0.5, 2.0] {
            let model = fit(&x, &[0], &params(1.0, delta)).unwrap();
            assert_abs_diff_eq!(model.classes[0].weights[0], 1.0 / (1.0 + delta), epsilon = 1e-15);
        }
        let model = fit(&x, &[0], &params(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(evaluate_ratio(&model, &[0.3, 0.3], 0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ratio_decays_far_from_centers_and_is_linear_in_weights() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 0.5, 3.0, 3.5]);
        let y = [0, 0, 1, 1];
        let mut model = fit(&x, &y, &params(0.5, 0.1)).unwrap();
        assert!(evaluate_ratio(&model, &[1e3], 0).unwrap().abs() < 1e-300);
        let before = evaluate_ratio(&model, &[0.2], 0).unwrap();
        model.classes[0].weights *= 2.0;
        assert_abs_diff_eq!(evaluate_ratio(&model, &[0.2], 0).unwrap(), 2.0 * before, epsilon = 1e-14);
        assert!(matches!(evaluate_ratio(&model, &[0.2], 5), Err(Error::MissingClass { class: 6 })));
    }

    #[test]
    fn constant_ratio_gives_zero() {
        // a model whose ratio is identically 1: one center and an infinitely
        // wide kernel are approximated by a huge kappa
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        let y = [0, 1, 0, 1];
        let model = LsmiModel {
            kappa: 1e300,
            delta: 0.0,
            classes: (0..2)
                .map(|label| ClassRatio {
                    label,
                    centers: DMatrix::zeros(1, 1),
                    weights: DVector::from_element(1, 1.0),
                })
                .collect(),
        };
        assert_eq!(lsmi_value(&model, &x, &y).unwrap(), 0.0);
    }

    #[test]
    fn huge_delta_shrinks_towards_h_over_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = DMatrix::from_fn(12, 2, |_, _| rng.random::<f64>());
        let y: Vec<usize> = (0..12).map(|i| i % 2).collect();
        let delta = 1e8;
        let model = fit(&x, &y, &params(0.7, delta)).unwrap();
        let cols = x.transpose();
        for class in &model.classes {
            for (l, c) in class.centers.column_iter().enumerate() {
                let h: f64 = (0..12)
                    .filter(|&i| y[i] == class.label)
                    .map(|i| gaussian(sq_dist(cols.column(i).as_slice(), c.as_slice()), 0.7))
                    .sum::<f64>()
                    / 12.0;
                assert_abs_diff_eq!(class.weights[l] * delta, h, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn center_selection_is_stratified_and_capped() {
        let y: Vec<usize> = (0..1000).map(|i| usize::from(i % 4 == 0)).collect();
        let centers = select_centers(&y, 100, 5);
        assert_eq!(centers[&0].len(), 75);
        assert_eq!(centers[&1].len(), 25);
        assert!(centers[&1].iter().all(|&i| y[i] == 1));
        assert_eq!(centers, select_centers(&y, 100, 5));
        let all = select_centers(&y[..50], 100, 5);
        assert_eq!(all.values().map(Vec::len).sum::<usize>(), 50);
    }

    #[test]
    fn folds_are_balanced_and_stratified() {
        let y: Vec<usize> = (0..103).map(|i| i % 3).collect();
        let folds = fold_assignment(&y, 5, 9);
        for m in 0..5 {
            let size = folds.iter().filter(|&&f| f == m).count();
            assert!((20..=21).contains(&size));
            for class in 0..3 {
                let k = (0..103).filter(|&i| folds[i] == m && y[i] == class).count();
                assert!((6..=8).contains(&k), "fold {m} class {class} has {k}");
            }
        }
        assert_eq!(folds, fold_assignment(&y, 5, 9));
    }

    #[test]
    fn single_point_grid_is_returned() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = DMatrix::from_fn(30, 2, |_, _| rng.random::<f64>());
        let y: Vec<usize> = (0..30).map(|i| i % 2).collect();
        let cv = cross_validate(&x, &y, &[0.4], &[0.1], 5, 500, 1).unwrap();
        assert_eq!((cv.kappa, cv.delta), (0.4, 0.1));
        assert_eq!(cv.table.len(), 1);
        assert_eq!(cv, cross_validate(&x, &y, &[0.4], &[0.1], 5, 500, 1).unwrap());
    }

    #[test]
    fn class_confined_to_one_fold_is_an_error() {
        let x = DMatrix::from_row_slice(6, 1, &[0.0, 0.1, 0.2, 0.3, 0.4, 9.0]);
        let y = [0, 0, 0, 0, 0, 1];
        assert!(matches!(
            cross_validate(&x, &y, &[1.0], &[0.1], 2, 500, 0),
            Err(Error::MissingClass { class: 2 })
        ));
    }

    #[test]
    fn rejects_bad_settings() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        let y = [0, 1, 0, 1];
        assert!(cross_validate(&x, &y, &[1.0], &[0.1], 1, 500, 0).is_err());
        assert!(cross_validate(&x, &y, &[], &[0.1], 2, 500, 0).is_err());
        assert!(fit(&x, &y, &params(0.0, 0.1)).is_err());
        assert!(fit(&x, &y, &params(1.0, -1.0)).is_err());
    }

    proptest! {
        #[test]
        fn weights_solve_the_ridge_system(seed in any::<u64>(), delta in 1e-4f64..10.0, kappa in 0.2f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = DMatrix::from_fn(15, 2, |_, _| rng.random::<f64>() * 3.0);
            let y: Vec<usize> = (0..15).map(|i| i % 3).collect();
            let model = fit(&x, &y, &params(kappa, delta)).unwrap();
            let cols = x.transpose();
            for class in &model.classes {
                let phi = DMatrix::from_fn(15, class.centers.ncols(), |i, l| {
                    gaussian(sq_dist(cols.column(i).as_slice(), class.centers.column(l).as_slice()), kappa)
                });
                let members: Vec<usize> = (0..15).filter(|&i| y[i] == class.label).collect();
                let (h_mat, h_vec) = class_system(&phi, &members);
                let a = h_mat + DMatrix::identity(phi.ncols(), phi.ncols()) * delta;
                let residual = (&a * &class.weights - &h_vec).norm();
                prop_assert!(residual <= 1e-8 * h_vec.norm());
            }
        }

        #[test]
        fn larger_delta_never_grows_the_weights(seed in any::<u64>(), d1 in 1e-3f64..5.0, factor in 1.0f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = DMatrix::from_fn(14, 3, |_, _| rng.random::<f64>());
            let y: Vec<usize> = (0..14).map(|i| i % 2).collect();
            let a = fit(&x, &y, &params(0.8, d1)).unwrap();
            let b = fit(&x, &y, &params(0.8, d1 * factor)).unwrap();
            for (ca, cb) in a.classes.iter().zip(&b.classes) {
                prop_assert!(cb.weights.norm() <= ca.weights.norm() * (1.0 + 1e-12));
            }
        }
    }
}
