//! Semi-supervised clustering by squared-loss mutual information (3SMIC).
//!
//! Samples are clustered by maximizing an SMI approximator over a kernel
//! class-posterior model. Must-link and cannot-link pairs edit the kernel
//! and add quadratic penalties, and the optimum is still an eigenproblem.
//! Hyperparameters are chosen by an LSMI estimate of the information between
//! inputs and candidate labels, minus the fraction of violated links.
//!
//! ```
//! use smic_core::{cluster, make_blobs, sample_constraints, SolverParams};
//!
//! let ds = make_blobs(30, 2, 2, 8.0, 0).unwrap();
//! let links = sample_constraints(ds.labels.as_ref().unwrap(), 10, 0).unwrap();
//! let out = cluster(&ds, &links, &SolverParams { t: 7, gamma: 1.0, eta: 1.0 }, 2).unwrap();
//! assert_eq!(out.labels.len(), 60);
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod lsmi;
pub mod model_select;
pub mod solver;

pub use data::{
    load_dataset, make_blobs, normalize, parse_dataset, sample_constraints, ConstraintSet, CsvFormat, Dataset,
    Normalization,
};
pub use error::{Error, Result};
pub use eval::{ari, run_benchmark, BenchmarkConfig, BenchmarkReport};
pub use kernel::{apply_constraints, local_scaling_kernel, DistanceTable, KernelMatrix};
pub use lsmi::{LsmiConfig, LsmiEstimate};
pub use model_select::{count_violations, grid_search, Candidate, SearchGrid, SearchOutcome};
pub use solver::{build_u, cluster, smic, ClusterModel, Clustering, SolverParams, UMatrix};
