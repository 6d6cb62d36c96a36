mod common;

use common::{all_partials, is_subset, random_instance, subsets};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stochsub::experiments::{MatroidKind, ObjectiveKind};
use stochsub::{FractionalPoint, Instance, PartialRealization};

fn objective(idx: usize) -> ObjectiveKind {
    ObjectiveKind::ALL[idx % 3]
}

/// Monotonicity and diminishing returns of `F(., t)` over every `t`,
/// `S ⊆ T` and `j`.
fn check_conditional_lattice(inst: &Instance) {
    let sets = subsets(inst.n());
    for t in all_partials(inst) {
        let values: Vec<f64> = sets
            .iter()
            .map(|s| inst.conditional_expected_value(s, &t).unwrap())
            .collect();
        let index = |set: &[usize]| set.iter().map(|&i| 1usize << i).sum::<usize>();
        for (a, s) in sets.iter().enumerate() {
            for (b, big) in sets.iter().enumerate() {
                if !is_subset(s, big) {
                    continue;
                }
                assert!(values[a] <= values[b] + 1e-9, "monotone: {s:?} {big:?} {t:?}");
                for j in (0..inst.n()).filter(|j| !big.contains(j)) {
                    let gain_small = values[index(s) | 1 << j] - values[a];
                    let gain_big = values[index(big) | 1 << j] - values[b];
                    assert!(gain_big <= gain_small + 1e-9, "submodular: {s:?} {big:?} +{j} {t:?}");
                }
            }
        }
    }
}

#[test]
fn conditional_value_is_monotone_submodular_exhaustively() {
    for seed in 0..9u64 {
        let (inst, _) = random_instance(seed, 4, 1 + seed as usize % 3, objective(seed as usize), MatroidKind::Uniform);
        assert!(inst.validate_objective().valid);
        check_conditional_lattice(&inst);
    }
}

#[test]
fn conditional_lattice_at_five_elements() {
    for seed in 0..3u64 {
        let (inst, _) = random_instance(100 + seed, 5, 2, objective(seed as usize), MatroidKind::Uniform);
        check_conditional_lattice(&inst);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn indicator_matches_expected_value(seed in any::<u64>(), n in 2usize..=6, support in 1usize..=3, obj in 0usize..3, mask in any::<u32>()) {
        let (inst, _) = random_instance(seed, n, support, objective(obj), MatroidKind::Uniform);
        let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let exact = inst.expected_value_exact(&set).unwrap();
        let at_indicator = inst.multilinear_exact(&FractionalPoint::indicator(n, &set)).unwrap();
        prop_assert!((exact - at_indicator).abs() <= 1e-12);
        let empty = PartialRealization::empty(n);
        prop_assert_eq!(inst.conditional_expected_value(&set, &empty).unwrap(), exact);
    }

    #[test]
    fn coverage_closed_form_matches_enumeration(seed in any::<u64>(), n in 2usize..=6, support in 1usize..=3, mask in any::<u32>(), y in prop::collection::vec(0.0f64..=1.0, 6)) {
        let (inst, _) = random_instance(seed, n, support, ObjectiveKind::Coverage, MatroidKind::Uniform);
        let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let exact = inst.expected_value_exact(&set).unwrap();
        prop_assert!((inst.coverage_closed_form(&set).unwrap() - exact).abs() <= 1e-9);
        let point = FractionalPoint::new(y[..n].to_vec()).unwrap();
        let closed = inst.coverage_closed_form_at(&point).unwrap();
        prop_assert!((inst.multilinear_exact(&point).unwrap() - closed).abs() <= 1e-9);
    }

    #[test]
    fn multilinear_is_monotone_in_each_coordinate(seed in any::<u64>(), n in 2usize..=5, obj in 0usize..3, y in prop::collection::vec(0.0f64..=1.0, 5), coord in 0usize..5, bump in 0.0f64..=1.0) {
        let (inst, _) = random_instance(seed, n, 2, objective(obj), MatroidKind::Uniform);
        let mut lo = y[..n].to_vec();
        let i = coord % n;
        let mut hi = lo.clone();
        hi[i] = (lo[i] + bump).min(1.0);
        lo[i] = lo[i].min(hi[i]);
        let f_lo = inst.multilinear_exact(&FractionalPoint::new(lo).unwrap()).unwrap();
        let f_hi = inst.multilinear_exact(&FractionalPoint::new(hi).unwrap()).unwrap();
        prop_assert!(f_lo <= f_hi + 1e-9);
    }

    #[test]
    fn monte_carlo_is_reproducible(seed in any::<u64>(), mc_seed in any::<u64>()) {
        let (inst, _) = random_instance(seed, 4, 2, ObjectiveKind::Coverage, MatroidKind::Uniform);
        let set = [0, 1, 2, 3];
        let a = inst.expected_value_mc(&set, 50, &mut ChaCha8Rng::seed_from_u64(mc_seed)).unwrap();
        let b = inst.expected_value_mc(&set, 50, &mut ChaCha8Rng::seed_from_u64(mc_seed)).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn monte_carlo_confidence_intervals_cover_exact_value() {
    let (inst, _) = random_instance(11, 5, 2, ObjectiveKind::ConcaveSum, MatroidKind::Uniform);
    let set = [0, 1, 2, 3, 4];
    let exact = inst.expected_value_exact(&set).unwrap();
    let covered = (0..200u64)
        .filter(|&trial| {
            let est = inst.expected_value_mc(&set, 500, &mut ChaCha8Rng::seed_from_u64(trial)).unwrap();
            assert!(est.ci_halfwidth_95 > 0.0);
            (est.estimate - exact).abs() <= est.ci_halfwidth_95
        })
        .count();
    assert!(covered >= 186, "{covered} of 200");
}
