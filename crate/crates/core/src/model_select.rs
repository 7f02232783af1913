//! Hyperparameter search over `(t, gamma, eta)`.
//!
//! Each candidate is clustered, its labels are scored by LSMI (with its own
//! cross-validated `kappa`, `delta`) and by the number of violated links
//! `n_v`. The selection score is `lsmi / max lsmi - n_v / max n_v`.

use std::cmp::Ordering;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ConstraintSet, Dataset};
use crate::error::{Error, Result};
use crate::kernel::DistanceTable;
use crate::lsmi::{self, CvResult, LsmiConfig};
use crate::solver::{cluster_with_table, ClusterModel, SolverParams};

pub const DEFAULT_WEIGHT_GRID: [f64; 6] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub params: SolverParams,
    pub labels: Vec<usize>,
    pub lsmi: f64,
    pub kappa: f64,
    pub delta: f64,
    pub n_v: usize,
    pub score: f64,
    pub wall_ms: f64,
}

/// A candidate that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct FailedCandidate {
    pub params: SolverParams,
    pub reason: String,
}

/// Search space; `eta` collapses to `{0}` when `c > 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchGrid {
    pub t: Vec<usize>,
    pub gamma: Vec<f64>,
    pub eta: Vec<f64>,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            t: (1..=10).collect(),
            gamma: DEFAULT_WEIGHT_GRID.to_vec(),
            eta: DEFAULT_WEIGHT_GRID.to_vec(),
        }
    }
}

/// How the LSMI term was normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsmiNormalization {
    /// `lsmi / max lsmi`.
    Ratio,
    /// `lsmi - max lsmi`, used when the largest LSMI is not positive.
    Shifted,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: Candidate,
    pub model: ClusterModel,
    /// Cross-validation table behind the winner's LSMI.
    pub best_cv: CvResult,
    /// Scored candidates in grid order (t, then gamma, then eta).
    pub table: Vec<Candidate>,
    pub failures: Vec<FailedCandidate>,
    pub normalization: LsmiNormalization,
}

/// Must-links split across clusters plus cannot-links kept together.
pub fn count_violations(labels: &[usize], cs: &ConstraintSet) -> Result<usize> {
    if labels.len() != cs.n() {
        return Err(Error::DimensionMismatch {
            expected: cs.n(),
            found: labels.len(),
        });
    }
    let must = cs.must_links().iter().filter(|&&(i, j)| labels[i] != labels[j]).count();
    let cannot = cs.cannot_links().iter().filter(|&&(i, j)| labels[i] == labels[j]).count();
    Ok(must + cannot)
}

/// Fills in `score` for every candidate.
pub fn score_all(candidates: &mut [Candidate]) -> Result<LsmiNormalization> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidates to score".into()));
    }
    let max_lsmi = candidates.iter().map(|c| c.lsmi).fold(f64::NEG_INFINITY, f64::max);
    let max_nv = candidates.iter().map(|c| c.n_v).max().unwrap_or(0);
    let normalization = if max_lsmi > 0.0 {
        LsmiNormalization::Ratio
    } else {
        log::warn!("largest LSMI is {max_lsmi:.4} <= 0; ranking by shifted LSMI instead of the ratio");
        LsmiNormalization::Shifted
    };
    for c in candidates.iter_mut() {
        let information = match normalization {
            LsmiNormalization::Ratio => c.lsmi / max_lsmi,
            LsmiNormalization::Shifted => c.lsmi - max_lsmi,
        };
        let penalty = if max_nv == 0 {
            0.0
        } else {
            c.n_v as f64 / max_nv as f64
        };
        c.score = information - penalty;
    }
    Ok(normalization)
}

/// Selection order: higher score, fewer violations, higher LSMI, then the
/// smaller `t`, `gamma`, `eta`.
pub fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.n_v.cmp(&b.n_v))
        .then(b.lsmi.total_cmp(&a.lsmi))
        .then(a.params.t.cmp(&b.params.t))
        .then(a.params.gamma.total_cmp(&b.params.gamma))
        .then(a.params.eta.total_cmp(&b.params.eta))
}

/// Renumbers clusters by first appearance, so permuted but otherwise equal
/// labelings produce bitwise-equal LSMI estimates.
fn first_appearance(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

fn evaluate(
    table: &DistanceTable,
    ds: &Dataset,
    cs: &ConstraintSet,
    params: SolverParams,
    c: usize,
    lsmi_cfg: &LsmiConfig,
) -> Result<(Candidate, CvResult)> {
    let started = Instant::now();
    let clustering = cluster_with_table(table, ds, cs, &params, c)?;
    let estimate = lsmi::estimate(&ds.features, &first_appearance(&clustering.labels), lsmi_cfg)?;
    let n_v = count_violations(&clustering.labels, cs)?;
    Ok((
        Candidate {
            params,
            labels: clustering.labels,
            lsmi: estimate.value,
            kappa: estimate.kappa,
            delta: estimate.delta,
            n_v,
            score: f64::NAN,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        },
        estimate.cv,
    ))
}

/// Evaluates the Cartesian grid in parallel and picks the best candidate.
pub fn grid_search(
    ds: &Dataset,
    cs: &ConstraintSet,
    c: usize,
    grid: &SearchGrid,
    lsmi_cfg: &LsmiConfig,
) -> Result<SearchOutcome> {
    if grid.t.is_empty() || grid.gamma.is_empty() || grid.eta.is_empty() {
        return Err(Error::InvalidParameter("search grids must be nonempty".into()));
    }
    let mut etas = grid.eta.clone();
    if c > 2 && etas.iter().any(|&e| e != 0.0) {
        log::warn!("c = {c} > 2: cannot-link weight eta fixed at 0");
        etas = vec![0.0];
    }
    let mut thetas = Vec::new();
    for &t in &grid.t {
        for &gamma in &grid.gamma {
            for &eta in &etas {
                thetas.push(SolverParams { t, gamma, eta });
            }
        }
    }
    let t_max = grid.t.iter().copied().filter(|&t| t < ds.n()).max().ok_or_else(|| {
        Error::InvalidParameter(format!("no neighborhood size in the grid is below n = {}", ds.n()))
    })?;
    let table = DistanceTable::new(&ds.features, t_max)?;

    let results: Vec<Result<(Candidate, CvResult)>> = thetas
        .par_iter()
        .map(|&theta| evaluate(&table, ds, cs, theta, c, lsmi_cfg))
        .collect();

    let mut scored = Vec::new();
    let mut cvs = Vec::new();
    let mut failures = Vec::new();
    for (theta, result) in thetas.iter().zip(results) {
        match result {
            Ok((cand, cv)) => {
                scored.push(cand);
                cvs.push(cv);
            }
            Err(e) => {
                log::debug!("candidate t={} gamma={} eta={} failed: {e}", theta.t, theta.gamma, theta.eta);
                failures.push(FailedCandidate {
                    params: *theta,
                    reason: e.to_string(),
                });
            }
        }
    }
    if scored.is_empty() {
        return Err(Error::AllCandidatesFailed {
            count: failures.len(),
            reasons: failures
                .iter()
                .map(|f| format!("(t={}, gamma={}, eta={}): {}", f.params.t, f.params.gamma, f.params.eta, f.reason))
                .collect(),
        });
    }
    let normalization = score_all(&mut scored)?;
    let best_idx = (0..scored.len())
        .min_by(|&a, &b| rank(&scored[a], &scored[b]))
        .expect("nonempty");
    let best = scored[best_idx].clone();
    let model = cluster_with_table(&table, ds, cs, &best.params, c)?.model;
    Ok(SearchOutcome {
        best,
        model,
        best_cv: cvs.swap_remove(best_idx),
        table: scored,
        failures,
        normalization,
    })
}

/// Candidate table as CSV; failed candidates are listed with empty scores.
pub fn write_candidate_table<W: Write>(outcome: &SearchOutcome, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,gamma,eta,lsmi,kappa,delta,n_v,score,status")?;
    let mut rows: Vec<(SolverParams, String)> = outcome
        .table
        .iter()
        .map(|c| {
            (
                c.params,
                format!("{},{},{},{},{},ok", c.lsmi, c.kappa, c.delta, c.n_v, c.score),
            )
        })
        .collect();
    rows.extend(
        outcome
            .failures
            .iter()
            .map(|f| (f.params, format!(",,,,,failed: {}", f.reason.replace([',', '\n'], ";")))),
    );
    rows.sort_by(|a, b| {
        a.0.t
            .cmp(&b.0.t)
            .then(a.0.gamma.total_cmp(&b.0.gamma))
            .then(a.0.eta.total_cmp(&b.0.eta))
    });
    for (p, rest) in rows {
        writeln!(out, "{},{},{},{rest}", p.t, p.gamma, p.eta)?;
    }
    Ok(())
}
