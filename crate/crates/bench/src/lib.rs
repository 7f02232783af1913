//! Fixtures shared by the pipeline benchmarks.

use smic_core::{make_blobs, sample_constraints, ConstraintSet, Dataset};

/// Two overlapping blobs with `n_per_class` points each and `links` sampled
/// constraints.
pub fn fixture(n_per_class: usize, links: usize) -> (Dataset, ConstraintSet) {
    let ds = make_blobs(n_per_class, 2, 2, 3.0, 0).expect("valid blob parameters");
    let cs = sample_constraints(ds.labels.as_ref().expect("blobs are labeled"), links, 1).expect("enough pairs");
    (ds, cs)
}
