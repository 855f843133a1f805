use dualax::kernel::{det, eigh_desc, exp_herm, inverse, polar_right, sqrt_pd, CMatrix};
use num_complex::Complex;
use proptest::prelude::*;

fn hermitian(n: usize) -> impl Strategy<Value = CMatrix<f64>> {
    prop::collection::vec(-2.0f64..2.0, 2 * n * n).prop_map(move |x| {
        let raw = CMatrix::from_fn(n, |i, j| Complex::new(x[i * n + j], x[n * n + i * n + j]));
        raw.hermitian_part()
    })
}

fn positive(n: usize) -> impl Strategy<Value = CMatrix<f64>> {
    hermitian(n).prop_map(move |h| &(&h * &h) + &CMatrix::identity(n))
}

fn general(n: usize) -> impl Strategy<Value = CMatrix<f64>> {
    prop::collection::vec(-2.0f64..2.0, 2 * n * n)
        .prop_map(move |x| CMatrix::from_fn(n, |i, j| Complex::new(x[i * n + j], x[n * n + i * n + j])))
}

proptest! {
    #[test]
    fn eigen_reconstructs_and_sorts(h in (1usize..7).prop_flat_map(hermitian)) {
        let e = eigh_desc(&h).unwrap();
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(e.basis.unitarity_defect() < 1e-13);
        let back = e.recompose(&e.values);
        prop_assert!((&back - &h).norm_max() < 1e-12 * (1.0 + h.norm_max()));
    }

    #[test]
    fn sqrt_squares_back(p in (1usize..7).prop_flat_map(positive)) {
        let r = sqrt_pd(&p).unwrap();
        prop_assert!((&(&r * &r) - &p).norm_max() < 1e-11 * p.norm_max());
    }

    #[test]
    fn exp_group_law(h in (1usize..6).prop_flat_map(hermitian), s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let a = exp_herm(&h, s).unwrap();
        let b = exp_herm(&h, t).unwrap();
        let ab = exp_herm(&h, s + t).unwrap();
        prop_assert!((&(&a * &b) - &ab).norm_max() < 1e-11 * ab.norm_max());
    }

    #[test]
    fn polar_factors(g in (1usize..6).prop_flat_map(general)) {
        prop_assume!(det(&g).norm() > 1e-3);
        let (p, u) = polar_right(&g).unwrap();
        prop_assert!(u.unitarity_defect() < 1e-10);
        prop_assert!((&(&p * &u) - &g).norm_max() < 1e-10 * (1.0 + g.norm_max()));
    }

    #[test]
    fn inverse_and_det(g in (1usize..6).prop_flat_map(general)) {
        prop_assume!(det(&g).norm() > 1e-3);
        let gi = inverse(&g).unwrap();
        let id = CMatrix::identity(g.n());
        prop_assert!((&(&g * &gi) - &id).norm_max() < 1e-9);
        let product = det(&g) * det(&gi);
        prop_assert!((product - Complex::new(1.0, 0.0)).norm() < 1e-9);
    }
}
