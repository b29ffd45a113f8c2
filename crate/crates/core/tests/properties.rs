use geomatch_core::assignment::{assignment_value, next_permutation};
use geomatch_core::matcher::alignment_objective;
use geomatch_core::metrics::almost_exact_bound;
use geomatch_core::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn square(max_n: usize, lo: f64, hi: f64) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_n).prop_flat_map(move |n| {
        prop::collection::vec(lo..hi, n * n).prop_map(move |v| DMatrix::from_row_slice(n, n, &v))
    })
}

fn integer_square(max_n: usize, levels: i32) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_n).prop_flat_map(move |n| {
        prop::collection::vec(0..levels, n * n)
            .prop_map(move |v| DMatrix::from_fn(n, n, |i, j| f64::from(v[i * n + j])))
    })
}

fn permutation(n: usize, seed: u64) -> Permutation {
    Permutation::random(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn flip_columns(m: &DMatrix<f64>, mask: u32) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        if mask >> j & 1 == 1 {
            -m[(i, j)]
        } else {
            m[(i, j)]
        }
    })
}

fn brute_force_min(c: &DMatrix<f64>) -> f64 {
    let mut p: Vec<usize> = (0..c.nrows()).collect();
    let mut best = assignment_value(c, &p);
    while next_permutation(&mut p) {
        best = best.min(assignment_value(c, &p));
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lap_value_matches_exhaustive_search(c in square(8, -10.0, 10.0)) {
        let fast = solve_max_lap(&c).unwrap();
        let slow = brute_force_lap(&c).unwrap();
        prop_assert_eq!(fast.value, slow.value);
        prop_assert_eq!(assignment_value(&c, fast.perm.as_slice()), fast.value);
    }

    #[test]
    fn lap_is_optimal_under_heavy_ties(c in integer_square(8, 3)) {
        prop_assert_eq!(solve_max_lap(&c).unwrap().value, brute_force_lap(&c).unwrap().value);
    }

    #[test]
    fn row_shift_moves_value_by_the_shift(c in integer_square(8, 50), row in 0usize..8, shift in -20i32..20) {
        let row = row % c.nrows();
        let mut shifted = c.clone();
        shifted.row_mut(row).add_scalar_mut(f64::from(shift));
        let base = solve_max_lap(&c).unwrap();
        let moved = solve_max_lap(&shifted).unwrap();
        prop_assert_eq!(moved.value, base.value + f64::from(shift));
        // The shifted optimum is also optimal for the original costs.
        prop_assert_eq!(assignment_value(&c, moved.perm.as_slice()), base.value);
    }

    #[test]
    fn maximizing_is_minimizing_the_negation(c in square(7, -5.0, 5.0)) {
        let best = solve_max_lap(&c).unwrap();
        let neg = -c.clone();
        prop_assert_eq!(assignment_value(&neg, best.perm.as_slice()), brute_force_min(&neg));
    }

    #[test]
    fn column_sign_flips_do_not_change_the_match(
        seed in any::<u64>(),
        n in 6usize..30,
        d in 1usize..5,
        sigma in 0.0f64..0.3,
        mask_u in any::<u32>(),
        mask_v in any::<u32>(),
    ) {
        let inst = sample_instance(n, d, sigma, seed, TruthMode::UniformRandom).unwrap();
        let obs = observe_dot(&inst);
        let u = top_d_eigs(&obs.a, d).unwrap();
        let v = top_d_eigs(&obs.b, d).unwrap();
        let base = match_bases(u.clone(), v.clone(), MatchOptions::default()).unwrap();
        let fu = SpectralBasis { vectors: flip_columns(&u.vectors, mask_u), ..u };
        let fv = SpectralBasis { vectors: flip_columns(&v.vectors, mask_v), ..v };
        let flipped = match_bases(fu, fv, MatchOptions::default()).unwrap();
        prop_assert_eq!(flipped.pi_hat, base.pi_hat);
        prop_assert_eq!(flipped.objective, base.objective);
    }

    #[test]
    fn relabeling_b_relabels_the_estimate(
        seed in any::<u64>(),
        relabel_seed in any::<u64>(),
        n in 6usize..30,
        d in 1usize..4,
        sigma in 0.0f64..0.2,
        distance in any::<bool>(),
    ) {
        let inst = sample_instance(n, d, sigma, seed, TruthMode::UniformRandom).unwrap();
        let kind = if distance { ModelKind::Distance } else { ModelKind::DotProduct };
        let obs = observe(&inst, kind);
        let q = permutation(n, relabel_seed);
        let b2 = q.conjugate(&obs.b);
        let run = |b: &DMatrix<f64>| match kind {
            ModelKind::DotProduct => umeyama_match(&obs.a, b, d).unwrap(),
            ModelKind::Distance => match_distance(&obs.a, b, d).unwrap(),
        };
        let base = run(&obs.b);
        let moved = run(&b2);
        prop_assert_eq!(moved.pi_hat, base.pi_hat.compose(&q).unwrap());
        prop_assert!((moved.objective - base.objective).abs() <= 1e-9 * base.objective.abs().max(1.0));
    }

    #[test]
    fn small_instances_reach_the_exhaustive_optimum(
        seed in any::<u64>(),
        n in 2usize..=6,
        d in 1usize..=3,
        sigma in prop::sample::select(vec![0.0, 0.01, 0.1, 0.5]),
    ) {
        let d = d.min(n);
        let inst = sample_instance(n, d, sigma, seed, TruthMode::UniformRandom).unwrap();
        let obs = observe_dot(&inst);
        let result = umeyama_match(&obs.a, &obs.b, d).unwrap();
        let mut best = f64::NEG_INFINITY;
        for psi in enumerate_signs(d).unwrap() {
            let mut p: Vec<usize> = (0..n).collect();
            loop {
                let pi = Permutation::new(p.clone()).unwrap();
                best = best.max(alignment_objective(&result.u, &result.v, &psi, &pi));
                if !next_permutation(&mut p) {
                    break;
                }
            }
        }
        prop_assert!((result.objective - best).abs() <= 1e-8 * best.abs().max(1e-300));
        prop_assert!((result.recomputed_objective() - result.objective).abs() <= 1e-12 * best.abs().max(1.0));
    }

    #[test]
    fn score_is_symmetric_and_relabel_invariant(
        n in 1usize..40,
        s1 in any::<u64>(),
        s2 in any::<u64>(),
        s3 in any::<u64>(),
        d in 1usize..10,
        sigma in 0.0f64..1.0,
    ) {
        let a = permutation(n, s1);
        let b = permutation(n, s2);
        let r = permutation(n, s3);
        let ab = score(&a, &b, n, d, sigma).unwrap();
        let ba = score(&b, &a, n, d, sigma).unwrap();
        prop_assert_eq!(ab, ba);
        let relabeled = score(&r.compose(&a).unwrap(), &r.compose(&b).unwrap(), n, d, sigma).unwrap();
        prop_assert_eq!(relabeled.hamming_entries, ab.hamming_entries);
        prop_assert_eq!(relabeled.mismatched_vertices, ab.mismatched_vertices);
        let entries = (a.to_matrix() - b.to_matrix()).iter().filter(|v| **v != 0.0).count();
        prop_assert_eq!(ab.hamming_entries, entries);
    }

    #[test]
    fn exact_threshold_is_below_almost_exact(n in 2usize..1_000_000, d in 1usize..=20) {
        prop_assert!(
            threshold_sigma(n, d, ThresholdMode::Exact) < threshold_sigma(n, d, ThresholdMode::AlmostExact)
        );
    }

    #[test]
    fn bound_is_finite_only_when_its_log_argument_exceeds_one(n in 2usize..100_000, d in 1usize..20, sigma in 0.0f64..1.0) {
        let nf = n as f64;
        let signal = 1.0 / (sigma * (d as f64).powi(3) * nf.powf(1.0 / d as f64));
        let arg = signal.min(nf.ln());
        prop_assert_eq!(almost_exact_bound(n, d, sigma).is_some(), arg > 1.0);
    }

    #[test]
    fn spectrum_is_conjugation_invariant(seed in any::<u64>(), relabel in any::<u64>(), n in 3usize..40, d in 1usize..4) {
        let inst = sample_instance(n, d.min(n), 0.1, seed, TruthMode::Identity).unwrap();
        let m = observe_dot(&inst).b;
        let k = d.min(n);
        let p = permutation(n, relabel);
        let a = top_d_eigs(&m, k).unwrap();
        let b = top_d_eigs(&p.conjugate(&m), k).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-10 * a.values[0].abs().max(1.0));
        }
    }

    #[test]
    fn observations_satisfy_their_invariants(seed in any::<u64>(), n in 2usize..30, d in 1usize..6, sigma in 0.0f64..2.0) {
        let inst = sample_instance(n, d, sigma, seed, TruthMode::UniformRandom).unwrap();
        let dot = observe_dot(&inst);
        dot.validate().unwrap();
        let ev = dot.a.clone().symmetric_eigenvalues();
        prop_assert!(ev.min() >= -1e-8 * ev.max());
        let dist = observe_distance(&inst);
        dist.validate().unwrap();
        for m in [&dist.a, &dist.b] {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        prop_assert!(m[(i, k)] <= m[(i, j)] + m[(j, k)] + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_noise_observations_are_exact_relabelings(seed in any::<u64>(), n in 2usize..30, d in 1usize..6) {
        let same = sample_instance(n, d, 0.0, seed, TruthMode::Identity).unwrap();
        for kind in [ModelKind::DotProduct, ModelKind::Distance] {
            let obs = observe(&same, kind);
            prop_assert_eq!(&obs.a, &obs.b);
        }
        let moved = sample_instance(n, d, 0.0, seed, TruthMode::UniformRandom).unwrap();
        for kind in [ModelKind::DotProduct, ModelKind::Distance] {
            let obs = observe(&moved, kind);
            prop_assert_eq!(moved.truth().conjugate(&obs.a), obs.b);
        }
    }

    #[test]
    fn double_centering_recovers_the_centered_gram(seed in any::<u64>(), n in 2usize..40, d in 1usize..8) {
        let inst = sample_instance(n, d, 0.0, seed, TruthMode::Identity).unwrap();
        let centered = double_center(&observe_distance(&inst).a).unwrap().matrix;
        let x = inst.x();
        let means = x.row_mean();
        let xc = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - means[j]);
        let expected = &xc * xc.transpose();
        prop_assert!((&centered - &expected).norm() <= 1e-8 * expected.norm().max(1e-300));
        let mut ev: Vec<f64> = centered.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        let rank = d.min(n - 1);
        for &extra in &ev[rank..] {
            prop_assert!(extra.abs() <= 1e-6 * ev[0].abs().max(1e-300));
        }
    }

    #[test]
    fn eigen_and_singular_routes_agree(seed in any::<u64>(), n in 5usize..40, d in 1usize..5) {
        let inst = sample_instance(n, d, 0.0, seed, TruthMode::Identity).unwrap();
        let x = inst.x();
        let eig = top_d_eigs(&(x * x.transpose()), d).unwrap();
        let svd = svd_factor(x).unwrap();
        for (l, s) in eig.values.iter().zip(&svd.values) {
            prop_assert!((l - s * s).abs() <= 1e-6 * l.abs());
        }
        prop_assume!(!eig.degenerate);
        let gaps_ok = eig.values.windows(2).all(|w| (w[0] - w[1]) > 1e-6 * eig.values[0]);
        prop_assume!(gaps_ok);
        // Largest principal angle: smallest singular value of UᵀL.
        let overlap = eig.vectors.transpose() * &svd.left;
        let cos_min = overlap.singular_values().min().min(1.0);
        prop_assert!(((1.0 - cos_min) * (1.0 + cos_min)).sqrt() < 1e-6);
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), n in 1usize..20, d in 1usize..5, sigma in 0.0f64..1.0) {
        let a = sample_instance(n, d, sigma, seed, TruthMode::UniformRandom).unwrap();
        let b = sample_instance(n, d, sigma, seed, TruthMode::UniformRandom).unwrap();
        prop_assert_eq!(a.x(), b.x());
        prop_assert_eq!(a.y(), b.y());
        prop_assert_eq!(a.truth(), b.truth());
    }
}
