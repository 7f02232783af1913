use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{argmax, clipped_columns, SolverParams};
use crate::error::{Error, Result};
use crate::kernel::{out_of_sample_row, KernelMatrix};

pub const MODEL_SCHEMA: &str = "smic.cluster-model/v1";

/// A fitted clustering that can label new points.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    /// `n x c` sign-fixed eigenvectors.
    pub phi: DMatrix<f64>,
    /// Eigenvalues of `U`, descending.
    pub lambda: Vec<f64>,
    /// `phi_y^T K phi_y` under the unmodified kernel, the eigenvalue that
    /// relates `K phi_y` to `phi_y` in out-of-sample prediction.
    pub kernel_scale: Vec<f64>,
    pub c: usize,
    pub params: SolverParams,
    /// `n x d` training inputs.
    pub train_features: DMatrix<f64>,
    /// Local scale of each training sample.
    pub train_sigma: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    schema: String,
    classes: usize,
    t: usize,
    gamma: f64,
    eta: f64,
    eigenvalues: Vec<f64>,
    kernel_scale: Vec<f64>,
    /// Row per training sample.
    eigenvectors: Vec<Vec<f64>>,
    train_features: Vec<Vec<f64>>,
    train_sigma: Vec<f64>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::InvalidParameter(format!(
            "model {what} row has {} entries, expected {ncols}",
            bad.len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl ClusterModel {
    pub(crate) fn new(
        phi: DMatrix<f64>,
        lambda: Vec<f64>,
        kernel: &KernelMatrix,
        params: SolverParams,
        train_features: DMatrix<f64>,
        train_sigma: Vec<f64>,
    ) -> Self {
        let kphi = &kernel.entries * &phi;
        let kernel_scale = (0..phi.ncols()).map(|y| phi.column(y).dot(&kphi.column(y))).collect();
        Self {
            c: phi.ncols(),
            phi,
            lambda,
            kernel_scale,
            params,
            train_features,
            train_sigma,
        }
    }

    pub fn dim(&self) -> usize {
        self.train_features.ncols()
    }

    fn check_spectrum(&self) -> Result<()> {
        for (y, (&l, &s)) in self.lambda.iter().zip(&self.kernel_scale).enumerate() {
            if l <= 0.0 || !l.is_finite() {
                return Err(Error::NonPositiveEigenvalue { cluster: y + 1, value: l });
            }
            if s <= 0.0 || !s.is_finite() {
                return Err(Error::NonPositiveEigenvalue { cluster: y + 1, value: s });
            }
        }
        Ok(())
    }

    /// Labels each row of `points` (`m x d`):
    /// `argmax_y max(0, sum_i K(x, x_i) phi_{iy}) / (mu_y sum_i max(0, phi_{iy}))`,
    /// with `mu_y` the kernel scale of cluster `y`. Ties go to the first
    /// cluster.
    pub fn predict_batch(&self, points: &DMatrix<f64>) -> Result<Vec<usize>> {
        if points.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: points.ncols(),
            });
        }
        self.check_spectrum()?;
        let train = self.train_features.transpose();
        let (_, mass) = clipped_columns(&self.phi);
        let mut out = Vec::with_capacity(points.nrows());
        for r in 0..points.nrows() {
            let x: Vec<f64> = points.row(r).iter().copied().collect();
            let row = out_of_sample_row(&train, &self.train_sigma, self.params.t, &x)?;
            let scores = (0..self.c).map(|y| {
                let response: f64 = row.iter().zip(self.phi.column(y).iter()).map(|(k, p)| k * p).sum();
                let denom = self.kernel_scale[y] * mass[y];
                if denom > 0.0 {
                    response.max(0.0) / denom
                } else {
                    0.0
                }
            });
            out.push(argmax(scores));
        }
        Ok(out)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let m = DMatrix::from_row_slice(1, x.len(), x);
        Ok(self.predict_batch(&m)?[0])
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            schema: MODEL_SCHEMA.to_string(),
            classes: self.c,
            t: self.params.t,
            gamma: self.params.gamma,
            eta: self.params.eta,
            eigenvalues: self.lambda.clone(),
            kernel_scale: self.kernel_scale.clone(),
            eigenvectors: rows_of(&self.phi),
            train_features: rows_of(&self.train_features),
            train_sigma: self.train_sigma.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.schema != MODEL_SCHEMA {
            return Err(Error::Schema(doc.schema));
        }
        let n = doc.train_features.len();
        let d = doc.train_features.first().map_or(0, Vec::len);
        let phi = matrix_from_rows(&doc.eigenvectors, doc.classes, "eigenvector")?;
        let train_features = matrix_from_rows(&doc.train_features, d, "feature")?;
        if phi.nrows() != n || doc.train_sigma.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: phi.nrows().min(doc.train_sigma.len()),
            });
        }
        if doc.eigenvalues.len() != doc.classes || doc.kernel_scale.len() != doc.classes {
            return Err(Error::DimensionMismatch {
                expected: doc.classes,
                found: doc.eigenvalues.len(),
            });
        }
        if doc.t == 0 || doc.t > n {
            return Err(Error::InvalidParameter(format!("model t = {} invalid for {n} samples", doc.t)));
        }
        Ok(Self {
            phi,
            lambda: doc.eigenvalues,
            kernel_scale: doc.kernel_scale,
            c: doc.classes,
            params: SolverParams {
                t: doc.t,
                gamma: doc.gamma,
                eta: doc.eta,
            },
            train_features,
            train_sigma: doc.train_sigma,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_blobs, ConstraintSet};
    use crate::solver::cluster;

    fn fitted() -> (crate::data::Dataset, crate::solver::Clustering) {
        let ds = make_blobs(40, 2, 2, 10.0, 21).unwrap();
        let out = cluster(&ds, &ConstraintSet::empty(80), &SolverParams { t: 6, gamma: 0.0, eta: 0.0 }, 2).unwrap();
        (ds, out)
    }

    #[test]
    fn training_points_predict_their_own_labels() {
        let (ds, out) = fitted();
        assert_eq!(out.model.predict_batch(&ds.features).unwrap(), out.labels);
    }

    #[test]
    fn point_at_infinity_ties_to_first_cluster() {
        let (_, out) = fitted();
        assert_eq!(out.model.predict(&[1e9, -1e9]).unwrap(), 0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (_, out) = fitted();
        let text = out.model.to_json().unwrap();
        let back = ClusterModel::from_json(&text).unwrap();
        assert_eq!(back, out.model);
        assert!(ClusterModel::from_json(&text.replace(MODEL_SCHEMA, "other/v0")).is_err());
    }

    #[test]
    fn non_positive_eigenvalue_refuses_prediction() {
        let (_, mut out) = fitted();
        out.model.lambda[1] = -0.5;
        assert!(matches!(
            out.model.predict(&[0.0, 0.0]),
            Err(Error::NonPositiveEigenvalue { cluster: 2, .. })
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let (_, out) = fitted();
        assert!(matches!(out.model.predict(&[0.0]), Err(Error::DimensionMismatch { .. })));
    }
}
