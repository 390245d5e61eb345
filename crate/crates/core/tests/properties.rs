//! Randomized invariants of weighting, exclusion, proportions and losses.

use pppl_core::nn::{softmax, softmax_ce_loss, weighted_mse_loss};
use pppl_core::pppl::{admitted_count, calculate_weights, class_cap, exclude_by_proportion};
use pppl_core::proportions::{perturb_anomaly, perturb_proportions, Direction, PerturbMode};
use pppl_core::{proportion_distance, ClassProportions, Matrix, ProportionKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Certainty on a coarse grid so ties are common, with labels in `0..classes`.
fn scored(max_n: usize, classes: usize) -> impl Strategy<Value = (Vec<f64>, Vec<usize>)> {
    (1..=max_n).prop_flat_map(move |n| {
        (
            prop::collection::vec((0u32..12).prop_map(|v| f64::from(v) / 10.0), n),
            prop::collection::vec(0..classes, n),
        )
    })
}

fn ahead(certainty: &[f64], i: usize, j: usize) -> bool {
    certainty[j] > certainty[i] || (certainty[j] == certainty[i] && j < i)
}

fn brute_weights(certainty: &[f64], labels: &[usize], percent: usize, class_aware: bool) -> Vec<f32> {
    let n = certainty.len();
    (0..n)
        .map(|i| {
            let same = |j: usize| !class_aware || labels[j] == labels[i];
            let size = (0..n).filter(|&j| same(j)).count();
            let admitted = ((percent * size + 99) / 100).max(1);
            let rank = (0..n).filter(|&j| same(j) && ahead(certainty, i, j)).count();
            if rank < admitted {
                (1.0 / (1.0 + 4.0 * rank as f64 / admitted as f64)) as f32
            } else {
                0.0
            }
        })
        .collect()
}

fn brute_exclusion(labels: &[usize], certainty: &[f64], included: &[bool], caps: &[usize]) -> Vec<bool> {
    (0..labels.len())
        .map(|i| {
            included[i]
                && (0..labels.len())
                    .filter(|&j| included[j] && labels[j] == labels[i] && ahead(certainty, i, j))
                    .count()
                    < caps[labels[i]]
        })
        .collect()
}

fn simplex(classes: usize) -> impl Strategy<Value = ClassProportions> {
    prop::collection::vec(0.05f64..1.0, classes).prop_map(|raw| {
        let s: f64 = raw.iter().sum();
        ClassProportions::new(raw.iter().map(|v| v / s).collect(), ProportionKind::True).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn weights_lie_in_bounds((c, l) in scored(200, 4), percent in 1usize..=100, aware: bool) {
        let w = calculate_weights(&c, &l, percent as f64, aware).unwrap();
        prop_assert!(w.iter().all(|&w| w == 0.0 || (w > 0.2 && w <= 1.0)));
        // every nonempty group admits its top sample at weight 1
        prop_assert!(w.iter().any(|&w| w == 1.0));
    }

    #[test]
    fn weights_decrease_with_certainty_within_a_group((c, l) in scored(120, 3), percent in 1usize..=100) {
        let w = calculate_weights(&c, &l, percent as f64, true).unwrap();
        for i in 0..c.len() {
            for j in 0..c.len() {
                if l[i] == l[j] && c[i] > c[j] {
                    prop_assert!(w[i] >= w[j]);
                }
            }
        }
    }

    #[test]
    fn later_rounds_admit_a_superset((c, l) in scored(200, 4), a in 1usize..=100, b in 1usize..=100) {
        let (lo, hi) = (a.min(b), a.max(b));
        let w_lo = calculate_weights(&c, &l, lo as f64, true).unwrap();
        let w_hi = calculate_weights(&c, &l, hi as f64, true).unwrap();
        prop_assert!(w_lo.iter().zip(&w_hi).all(|(&x, &y)| x == 0.0 || y > 0.0));
    }

    #[test]
    fn weights_match_brute_force((c, l) in scored(20, 3), percent in 1usize..=100, aware: bool) {
        prop_assert_eq!(calculate_weights(&c, &l, percent as f64, aware).unwrap(), brute_weights(&c, &l, percent, aware));
    }

    #[test]
    fn admitted_count_is_exact_ceiling(size in 1usize..5000, percent in 1usize..=100) {
        prop_assert_eq!(admitted_count(size, percent as f64), ((percent * size).div_ceil(100)).max(1));
    }

    #[test]
    fn exclusion_respects_caps_and_order(
        (c, l) in scored(200, 3),
        mask_seed in any::<u64>(),
        counts in prop::collection::vec(0usize..80, 3),
    ) {
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let total: usize = counts.iter().sum();
        let cp = ClassProportions::new(counts.iter().map(|&k| k as f64 / total as f64).collect(), ProportionKind::Guessed).unwrap();
        let included: Vec<bool> = (0..c.len()).map(|i| (mask_seed >> (i % 64)) & 1 == 1 || i % 3 == 0).collect();
        let kept = exclude_by_proportion(&l, &c, &included, &cp, total).unwrap();
        for class in 0..3 {
            prop_assert_eq!(class_cap(cp.values()[class], total), counts[class]);
            let members: Vec<usize> = (0..c.len()).filter(|&i| l[i] == class && included[i]).collect();
            let k: Vec<usize> = members.iter().copied().filter(|&i| kept[i]).collect();
            prop_assert_eq!(k.len(), members.len().min(counts[class]));
            let min_kept = k.iter().map(|&i| c[i]).fold(f64::INFINITY, f64::min);
            prop_assert!(members.iter().filter(|&&i| !kept[i]).all(|&i| c[i] <= min_kept));
        }
        prop_assert!((0..c.len()).all(|i| !kept[i] || included[i]));
    }

    #[test]
    fn exclusion_matches_brute_force(
        (c, l) in scored(20, 3),
        included in prop::collection::vec(any::<bool>(), 20),
        caps in prop::collection::vec(0usize..8, 3),
    ) {
        prop_assume!(caps.iter().sum::<usize>() > 0);
        let total: usize = caps.iter().sum();
        let cp = ClassProportions::new(caps.iter().map(|&k| k as f64 / total as f64).collect(), ProportionKind::Guessed).unwrap();
        let inc = &included[..c.len()];
        prop_assert_eq!(exclude_by_proportion(&l, &c, inc, &cp, total).unwrap(), brute_exclusion(&l, &c, inc, &caps));
    }

    #[test]
    fn multiclass_perturbation_stays_on_simplex_at_exact_distance(
        cp in (2usize..6).prop_flat_map(simplex),
        frac in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let min_p = cp.values().iter().copied().fold(1.0, f64::min);
        let e = frac * 2.0 * (1.0 - min_p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = perturb_proportions(&cp, e, PerturbMode::Multiclass, &mut rng).unwrap();
        prop_assert!(p.values().iter().all(|&v| v >= 0.0));
        prop_assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((proportion_distance(&cp, &p).unwrap() - e).abs() < 1e-9);
        prop_assert_eq!(p.kind(), ProportionKind::Perturbed);
    }

    #[test]
    fn anomaly_perturbation_scales_the_anomalous_class(
        cp in (2usize..5).prop_flat_map(simplex),
        e in 0.0f64..1.0,
        up: bool,
    ) {
        let a = cp.len() - 1;
        let dir = if up { Direction::Up } else { Direction::Down };
        if let Ok(p) = perturb_anomaly(&cp, a, e, dir) {
            let c = cp.values()[a];
            prop_assert!(((p.values()[a] - c).abs() - e * c).abs() < 1e-9);
            prop_assert!((p.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        } else {
            prop_assert!(up);
        }
    }

    #[test]
    fn losses_are_linear_in_weights(
        scores in prop::collection::vec(-3.0f32..3.0, 12),
        labels in prop::collection::vec(0usize..3, 4),
        w in prop::collection::vec(0.0f32..1.0, 4),
        k in 0.1f32..4.0,
    ) {
        let s = Matrix::from_vec(4, 3, scores).unwrap();
        let mut t = vec![0.0f32; 12];
        for (i, &l) in labels.iter().enumerate() {
            t[i * 3 + l] = 1.0;
        }
        let t = Matrix::from_vec(4, 3, t).unwrap();
        let scaled: Vec<f32> = w.iter().map(|v| v * k).collect();
        for loss in [weighted_mse_loss::<f32>, softmax_ce_loss::<f32>] {
            let base = loss(&s, &t, &w).unwrap();
            let big = loss(&s, &t, &scaled).unwrap();
            prop_assert!((big - f64::from(k) * base).abs() <= 1e-4 * (1.0 + big.abs()));
        }
        prop_assert_eq!(weighted_mse_loss(&s, &t, &[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn softmax_ignores_constant_shifts(row in prop::collection::vec(-20.0f64..20.0, 2..6), shift in -50.0f64..50.0) {
        let a = softmax(&row);
        let shifted: Vec<f64> = row.iter().map(|v| v + shift).collect();
        let b = softmax(&shifted);
        prop_assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
        prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
