use learnable_mmf::baselines::greedy_mmf;
use learnable_mmf::graphgen::{
    format_matrix_market, parse_matrix_market, read_labels, write_labels,
};
use learnable_mmf::matcore::{orthogonality_error, IndexSet, SymMatrix};
use learnable_mmf::mmf::{level_errors, objective, MmfConfig};
use learnable_mmf::rlpolicy::{self, sample_trajectory, softmax, PolicyParams};
use learnable_mmf::seeding;
use learnable_mmf::stiefel::{cayley_curve, skew_direction};
use learnable_mmf::wavelets::{extract_basis, BasisMode};
use learnable_mmf::wnn::WnnModel;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn random_sym(n: usize, seed: u64) -> SymMatrix {
    let mut r = seeding::stream(seed, "sym");
    let m = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
    SymMatrix::new((&m + m.transpose()) * 0.5).unwrap()
}

fn random_stiefel(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut r = seeding::stream(seed, "stiefel");
    let m = DMatrix::from_fn(n, p, |_, _| r.random_range(-1.0..1.0));
    m.qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matrix_market_round_trip_is_bit_exact(seed in any::<u64>(), n in 1usize..12, scale in -20i32..20) {
        let a = random_sym(n, seed);
        let a = SymMatrix::new(a.as_matrix() * 10f64.powi(scale)).unwrap();
        let back = parse_matrix_market(&format_matrix_market(&a)).unwrap();
        prop_assert_eq!(back.dim(), n);
        for (x, y) in a.row_major().iter().zip(back.row_major()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn labels_round_trip(labels in proptest::collection::vec(0usize..5, 1..40)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.labels");
        write_labels(&labels, &path).unwrap();
        prop_assert_eq!(read_labels(&path, labels.len()).unwrap(), labels);
    }

    #[test]
    fn cayley_curve_stays_on_the_manifold(seed in any::<u64>(), n in 2usize..9, p_frac in 0.0f64..1.0, tau in -20.0f64..20.0) {
        let p = 1 + ((n - 1) as f64 * p_frac) as usize;
        let x = random_stiefel(n, p, seed);
        let mut r = seeding::stream(seed, "grad");
        let g = DMatrix::from_fn(n, p, |_, _| r.random_range(-3.0..3.0));
        let w = skew_direction(&x, &g).unwrap();
        prop_assert!((&w + w.transpose()).amax() == 0.0);
        let y = cayley_curve(&x, &w, tau).unwrap();
        prop_assert!(orthogonality_error(&y) <= 1e-8);
    }

    #[test]
    fn softmax_is_shift_invariant(logits in proptest::collection::vec(-30.0f64..30.0, 1..12), shift in -500.0f64..500.0) {
        let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
        let (p, q) = (softmax(&logits), softmax(&shifted));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for (x, y) in p.iter().zip(&q) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn trajectories_respect_the_action_and_active_set_rules(seed in any::<u64>(), n in 4usize..11, k in 2usize..5, c in 1usize..3) {
        prop_assume!(c < k && c < n);
        let levels = 1 + (seed as usize) % ((n - 1) / c);
        let a = random_sym(n, seed);
        let params = PolicyParams::glorot(2, 4, &mut seeding::stream(seed, "init"));
        let cfg = MmfConfig::new(levels, k, c);
        let t = sample_trajectory(&a, &params, &cfg, 1.0, &mut seeding::stream(seed, "episode")).unwrap();
        let f = &t.factorization;
        let mut active = IndexSet::full(n);
        for (plan, next) in t.plans.iter().zip(&f.active_sets()[1..]) {
            prop_assert!(plan.wavelets.is_subset(&plan.support));
            prop_assert!(plan.support.is_subset(&active));
            prop_assert_eq!(plan.wavelets.len(), c);
            prop_assert_eq!(next.len(), active.len() - c);
            active = active.difference(&plan.wavelets);
            prop_assert_eq!(next, &active);
        }
        let objective = objective(&a, f).unwrap();
        prop_assert!((t.final_error() - objective.sqrt()).abs() <= 1e-9 * objective.sqrt().max(1.0));
        let returns = rlpolicy::returns(&t.rewards, 1.0).unwrap();
        prop_assert_eq!(returns.last(), t.rewards.last());
    }

    #[test]
    fn greedy_level_errors_split_the_objective(seed in any::<u64>(), n in 3usize..12) {
        let a = random_sym(n, seed);
        let levels = 1 + (seed as usize) % (n - 1);
        let f = greedy_mmf(&a, levels).unwrap();
        let split = level_errors(&a, &f).unwrap();
        prop_assert!(split.iter().all(|e| *e >= 0.0));
        let total = objective(&a, &f).unwrap();
        prop_assert!((split.iter().sum::<f64>() - total).abs() <= 1e-10 * total.max(1.0));
    }

    #[test]
    fn wavelet_bases_are_orthonormal_and_energy_preserving(seed in any::<u64>(), n in 3usize..12) {
        let a = random_sym(n, seed);
        let levels = 1 + (seed as usize) % (n - 1);
        let f = greedy_mmf(&a, levels).unwrap();
        let basis = extract_basis(&a, &f, BasisMode::Orthonormal).unwrap();
        prop_assert!(basis.orthogonality_error() <= 1e-10);
        prop_assert_eq!(basis.mother_count(), levels);
        prop_assert_eq!(basis.father_count(), n - levels);
        let mut r = seeding::stream(seed, "signal");
        let signal: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let coeffs = basis.transform(&signal).unwrap();
        let energy = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        prop_assert!((energy(&signal) - energy(&coeffs)).abs() <= 1e-10);
        let back = basis.inverse_transform(&coeffs).unwrap();
        for (x, y) in signal.iter().zip(&back) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn wnn_outputs_lie_on_the_simplex(seed in any::<u64>(), n in 3usize..10, features in 1usize..4, classes in 2usize..4) {
        let a = random_sym(n, seed);
        let f = greedy_mmf(&a, n - 2).unwrap();
        let basis = extract_basis(&a, &f, BasisMode::Orthonormal).unwrap();
        let mut r = seeding::stream(seed, "wnn");
        let model = WnnModel::initialized(basis, &[features, 3, classes], &mut r).unwrap();
        let input = DMatrix::from_fn(n, features, |_, _| r.random_range(-5.0..5.0));
        let probs = model.forward(&input).unwrap();
        prop_assert_eq!(probs.shape(), (n, classes));
        for row in probs.row_iter() {
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!((row.sum() - 1.0).abs() <= 1e-12);
        }
    }
}
