use num_complex::Complex64;
use proptest::prelude::*;

use loopvertex::kernel::{radius, t_closed_form, t_solve};
use loopvertex::lve::{covariance, enumerate_trees, PSD_TOLERANCE};

/// Points of the cut plane away from the branch point, `|z|` up to 1e4.
fn cut_plane_point() -> impl Strategy<Value = Complex64> {
    (-3.0f64..4.0, -3.1f64..3.1).prop_map(|(log_r, theta)| Complex64::from_polar(10f64.powf(log_r), theta))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn residual_is_tiny(p in 2u32..=6, z in cut_plane_point()) {
        let k = t_solve(p, z).unwrap();
        prop_assert!(k.residual < 1e-12, "residual {} at {z}", k.residual);
    }

    #[test]
    fn schwarz_reflection(p in 2u32..=6, z in cut_plane_point()) {
        let a = t_solve(p, z).unwrap();
        let b = t_solve(p, z.conj()).unwrap();
        prop_assert!((a.t.conj() - b.t).norm() <= 1e-13 * a.t.norm());
        prop_assert!((a.s.conj() - b.s).norm() <= 1e-12 * (1.0 + a.s.norm()));
    }

    #[test]
    fn closed_forms_agree(p in 2u32..=4, z in cut_plane_point()) {
        prop_assume!((z - radius(p).unwrap()).norm() > 1e-3);
        let gap = (t_solve(p, z).unwrap().t - t_closed_form(p, z).unwrap()).norm();
        prop_assert!(gap < 1e-10, "gap {gap:e} at {z}");
    }

    #[test]
    fn covariances_are_psd(n in 2usize..=6, pick in any::<usize>(), w in prop::collection::vec(0.0f64..=1.0, 5)) {
        let trees = enumerate_trees(n).unwrap();
        let tree = &trees[pick % trees.len()];
        let cov = covariance(tree, &w[..n - 1]).unwrap();
        prop_assert!(cov.min_eigenvalue() >= -PSD_TOLERANCE);
        for i in 0..n {
            prop_assert_eq!(cov.get(i, i), 1.0);
            for j in 0..n {
                prop_assert_eq!(cov.get(i, j), cov.get(j, i));
            }
        }
    }
}
