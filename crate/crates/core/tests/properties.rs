use nalgebra::DMatrix;
use proptest::prelude::*;
use smic_core::data::{make_blobs, normalize, sample_constraints, ConstraintSet, Dataset, Normalization};
use smic_core::kernel::local_scaling_kernel;
use smic_core::solver::{build_u, cluster, SolverParams};
use smic_core::apply_constraints;

fn pairs(n: usize) -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0..n, 0..n), 0..3 * n)
}

fn features() -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..20, 1usize..4).prop_flat_map(|(n, d)| {
        prop::collection::vec(-50.0f64..50.0, n * d).prop_map(move |v| DMatrix::from_vec(n, d, v))
    })
}

proptest! {
    #[test]
    fn link_matrices_are_symmetric_binary_and_disjoint(n in 2usize..15, raw_m in pairs(15), raw_c in pairs(15)) {
        let keep = |p: &(usize, usize)| p.0 < n && p.1 < n && p.0 != p.1;
        let must: Vec<_> = raw_m.into_iter().filter(keep).collect();
        let norm = |(i, j): (usize, usize)| (i.min(j), i.max(j));
        let cannot: Vec<_> = raw_c
            .into_iter()
            .filter(keep)
            .filter(|&p| !must.iter().any(|&q| norm(q) == norm(p)))
            .collect();
        let cs = ConstraintSet::new(n, must, cannot).unwrap();
        let (m, c) = (cs.must_matrix(), cs.cannot_matrix());
        prop_assert_eq!(&m, &m.transpose());
        prop_assert_eq!(&c, &c.transpose());
        for i in 0..n {
            prop_assert_eq!(m[(i, i)], 1.0);
            prop_assert_eq!(c[(i, i)], 0.0);
            for j in 0..n {
                prop_assert!(m[(i, j)] == 0.0 || m[(i, j)] == 1.0);
                prop_assert!(c[(i, j)] == 0.0 || c[(i, j)] == 1.0);
                if i != j {
                    prop_assert_eq!(m[(i, j)] * c[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn overlapping_link_lists_are_rejected(n in 3usize..10, i in 0usize..10, j in 0usize..10) {
        prop_assume!(i < n && j < n && i != j);
        prop_assert!(ConstraintSet::new(n, [(i, j)], [(j, i)]).is_err());
        prop_assert!(ConstraintSet::new(n, [(i, i)], []).is_err());
    }

    #[test]
    fn minmax_is_idempotent(x in features()) {
        let ds = Dataset::new("p", x).unwrap();
        let once = normalize(&ds, Normalization::MinMaxSymmetric);
        let twice = normalize(&once, Normalization::MinMaxSymmetric);
        prop_assert!((&once.features - &twice.features).amax() <= 1e-12);
    }

    #[test]
    fn edited_kernel_keeps_its_bounds(x in features(), seed in any::<u64>(), t_frac in 0.0f64..1.0) {
        let n = x.nrows();
        let t = 1 + ((n - 1) as f64 * t_frac) as usize % (n - 1);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let cs = sample_constraints(&labels, n - 1, seed).unwrap();
        let k = apply_constraints(&local_scaling_kernel(&x, t).unwrap(), &cs).unwrap();
        prop_assert!(k.modified);
        prop_assert_eq!(&k.entries, &k.entries.transpose());
        for i in 0..n {
            prop_assert_eq!(k.entries[(i, i)], 1.0);
        }
        prop_assert!(k.entries.iter().all(|&v| (0.0..=1.0).contains(&v)));
        for &(i, j) in cs.must_links() {
            prop_assert_eq!(k.entries[(i, j)], 1.0);
        }
        for &(i, j) in cs.cannot_links() {
            prop_assert_eq!(k.entries[(i, j)], 0.0);
        }
        let u = build_u(&k, &cs, 1.5, 0.5, 2).unwrap();
        prop_assert!((&u.entries - u.entries.transpose()).amax() <= 1e-10);
    }

    #[test]
    fn fitted_model_is_orthonormal_sorted_and_sign_fixed(
        seed in any::<u64>(),
        links in 0usize..40,
        c in 2usize..4,
        gamma in 0.0f64..4.0,
    ) {
        let ds = make_blobs(15, c, 2, 3.0, seed).unwrap();
        let cs = sample_constraints(ds.labels.as_ref().unwrap(), links, seed).unwrap();
        let eta = if c == 2 { gamma / 2.0 } else { 0.0 };
        let out = cluster(&ds, &cs, &SolverParams { t: 5, gamma, eta }, c).unwrap();
        let phi = &out.model.phi;
        let gram = phi.transpose() * phi;
        prop_assert!((gram - DMatrix::<f64>::identity(c, c)).amax() <= 1e-8);
        prop_assert!(out.model.lambda.windows(2).all(|w| w[0] >= w[1]));
        for col in phi.column_iter() {
            prop_assert!(col.sum() >= 0.0);
        }
        prop_assert!(out.labels.iter().all(|&l| l < c));
    }
}
