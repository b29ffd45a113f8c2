use geomatch_core::diagnostics::{
    basis_residual_sweep, best_sign_alignment, default_bound_scale, goe_min_gap_sample_scaled,
    singular_envelope,
};
use geomatch_core::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn negate_columns(m: &DMatrix<f64>, mask: u32) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        if mask >> j & 1 == 1 {
            -m[(i, j)]
        } else {
            m[(i, j)]
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn alignment_ignores_coordinate_reflections(seed in any::<u64>(), n in 20usize..80, d in 1usize..5, mask in any::<u32>()) {
        let inst = sample_instance(n, d, 1e-3, seed, TruthMode::UniformRandom).unwrap();
        let flipped = ModelInstance::from_parts(
            negate_columns(inst.x(), mask),
            negate_columns(inst.z(), mask),
            inst.sigma(),
            inst.truth().clone(),
            inst.seed(),
        )
        .unwrap();
        let a = best_sign_alignment(&inst, 1.0).unwrap();
        let b = best_sign_alignment(&flipped, 1.0).unwrap();
        prop_assert!((a.q_r_residual - b.q_r_residual).abs() <= 1e-9);
        prop_assert!((a.u_v_residual - b.u_v_residual).abs() <= 1e-9);
    }

    #[test]
    fn zero_noise_residuals_vanish(seed in any::<u64>(), n in 10usize..80, d in 1usize..6) {
        let inst = sample_instance(n, d, 0.0, seed, TruthMode::UniformRandom).unwrap();
        let r = best_sign_alignment(&inst, default_bound_scale(n)).unwrap();
        prop_assert!(r.q_r_residual <= 1e-8);
        prop_assert!(r.u_v_residual <= 1e-8);
    }
}

#[test]
fn residuals_grow_with_noise() {
    let rows = basis_residual_sweep(300, 3, &[0.0, 1e-4, 1e-3, 1e-2], 5, 11).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].mean_q_r_residual >= w[0].mean_q_r_residual);
        assert!(w[1].mean_u_v_residual >= w[0].mean_u_v_residual);
    }
}

#[test]
fn envelope_holds_at_default_slack() {
    let n = 2000;
    let d = 5;
    let inst = sample_instance(n, d, 1e-5, 4, TruthMode::UniformRandom).unwrap();
    let slack = d as f64 * (n as f64).ln().sqrt();
    let (x, y) = singular_envelope(&inst, slack).unwrap();
    assert!(x.passed && y.passed, "{x:?} {y:?}");
}

#[test]
fn gap_samples_are_reproducible() {
    let a = goe_min_gap_sample_scaled(12, 100, 5, 0.5, 3.0).unwrap();
    let b = goe_min_gap_sample_scaled(12, 100, 5, 0.5, 3.0).unwrap();
    assert_eq!(a, b);
    assert!(a.samples.iter().all(|&g| g > 0.0));
}
