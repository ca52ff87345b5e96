//! Property tests for the crate's structural invariants.

use proptest::prelude::*;

use splitscore_core::experiment::nearest_rank_percentile;
use splitscore_core::io::{tensor_from_bytes, tensor_to_bytes};
use splitscore_core::model::squared_residual;
use splitscore_core::rng::gaussian_noise;
use splitscore_core::{
    c_alpha, make_kernel, split_with_noise, valid_crop, BayesianModel, GaussianLikelihood,
    KernelFamily, LinearOperator, Prior, SeedSpec, Tensor, ValidMask,
};

/// Finite doubles including negative zero and subnormals.
fn finite_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        5 => -1e12f64..1e12f64,
        1 => Just(-0.0f64),
        1 => Just(f64::MIN_POSITIVE / 4.0),
        1 => Just(-1e-308f64),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ft64_round_trip_is_bit_exact(
        h in 1usize..6,
        w in 1usize..6,
        payload in proptest::collection::vec(finite_f64(), 25),
    ) {
        let data: Vec<f64> = payload[..h * w].to_vec();
        let t = Tensor::from_vec(vec![h, w], data).unwrap();
        let back = tensor_from_bytes(&tensor_to_bytes(&t).unwrap()).unwrap();
        prop_assert_eq!(back.shape(), t.shape());
        for (a, b) in back.data().iter().zip(t.data()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn fission_recombines_exactly(
        y in proptest::collection::vec(-100.0f64..100.0, 1..12),
        w in proptest::collection::vec(-100.0f64..100.0, 12),
        alpha in 0.01f64..0.99,
    ) {
        let n = y.len();
        let y = Tensor::from_vec(vec![n], y).unwrap();
        let w = Tensor::from_vec(vec![n], w[..n].to_vec()).unwrap();
        let pair = split_with_noise(&y, 1.0, alpha, w).unwrap();
        let recon = pair.recombine().unwrap();
        for (r, orig) in recon.data().iter().zip(y.data()) {
            prop_assert!((r - orig).abs() <= 1e-12 * orig.abs().max(1.0));
        }
        // c_alpha ties the two halves' displacements together.
        let c = c_alpha(alpha).unwrap();
        for ((p, m), orig) in pair.y_plus.data().iter().zip(pair.y_minus.data()).zip(y.data()) {
            let from_plus = (p - orig) / c;
            let from_minus = (orig - m) * c;
            prop_assert!((from_plus - from_minus).abs() <= 1e-9 * from_plus.abs().max(1.0));
        }
    }

    #[test]
    fn kernels_stay_normalized_and_symmetric(
        which in 0usize..5,
        a in 0.2f64..4.0,
        b in 0.3f64..3.0,
        support in prop_oneof![Just(5usize), Just(9), Just(13)],
    ) {
        let family = match which {
            0 => KernelFamily::Gaussian { sigma: a },
            1 => KernelFamily::Moffat { sigma: a, mu: b },
            2 => KernelFamily::Laplace { sigma: a },
            3 => KernelFamily::LaplaceXY { sigma: a },
            _ => KernelFamily::Uniform { s: 1.0 + a },
        };
        let k = make_kernel(family, support).unwrap();
        prop_assert!((k.values().sum() - 1.0).abs() < 1e-12);
        let d = k.values().data();
        let s = k.support;
        for i in 0..s * s {
            let j = (s * s - 1) - i;
            prop_assert_eq!(d[i], d[j]);
        }
    }

    #[test]
    fn operators_satisfy_adjoint_identity(
        which in 0usize..3,
        sigma in 0.5f64..3.0,
        h in 8usize..16,
        w in 8usize..16,
        seed in 0u64..1000,
    ) {
        let shape = vec![h, w];
        let op = match which {
            0 => LinearOperator::identity(shape.clone()).unwrap(),
            1 => LinearOperator::circulant(
                shape.clone(),
                make_kernel(KernelFamily::Gaussian { sigma }, 7).unwrap(),
            )
            .unwrap(),
            _ => splitscore_core::make_mri_mask(shape.clone(), 2.0, 0.2, &SeedSpec::new(seed))
                .unwrap(),
        };
        let u = gaussian_noise(&shape, 1.0, &SeedSpec::new(seed).child(1)).unwrap();
        let v = gaussian_noise(&shape, 1.0, &SeedSpec::new(seed).child(2)).unwrap();
        let lhs = op.apply(&u).unwrap().dot(&v).unwrap();
        let rhs = u.dot(&op.apply_adjoint(&v).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * u.norm() * v.norm());
    }

    #[test]
    fn percentile_threshold_monotone(
        scores in proptest::collection::vec(-50.0f64..50.0, 20..60),
        p_lo in 1.0f64..50.0,
        p_hi in 50.0f64..100.0,
    ) {
        let lo = nearest_rank_percentile(&scores, p_lo).unwrap();
        let hi = nearest_rank_percentile(&scores, p_hi).unwrap();
        prop_assert!(lo <= hi);
    }

    #[test]
    fn crop_then_norm_equals_mask_then_norm(
        border in 0usize..3,
        seed in 0u64..1000,
    ) {
        let shape = vec![8usize, 8];
        let y = gaussian_noise(&shape, 1.0, &SeedSpec::new(seed).child(0)).unwrap();
        let x = gaussian_noise(&shape, 1.0, &SeedSpec::new(seed).child(1)).unwrap();
        let mask = ValidMask::new(border);
        let model = BayesianModel::new(
            Prior::iid_gaussian(1.0).unwrap(),
            GaussianLikelihood::new(LinearOperator::identity(shape).unwrap(), 1.0)
                .unwrap()
                .with_valid_mask(mask),
            "crop",
        );
        let via_model = squared_residual(&model, &y, &x).unwrap();
        let via_crop = valid_crop(&y.sub(&x).unwrap(), mask).unwrap().norm_sq();
        prop_assert!((via_model - via_crop).abs() <= 1e-12 * via_crop.max(1.0));
    }
}
