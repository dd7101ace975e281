//! Rank-sum test and comparison counts against brute-force references.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use tfwa_core::SeededRng;
use tfwa_harness::stats::{average_rank, wilcoxon_rank_sum, win_lose_tie, ComparisonCell};

/// Exact two-sided p by enumerating every way to hand `n` of the ranks
/// `1..=n+m` to the first sample: the fraction of assignments whose rank sum
/// is at least as far from its mean as the observed one.
fn brute_force_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let total = pooled.len();
    let rank = |x: f64| pooled.iter().filter(|&&y| y < x).count() as i64 + 1;
    let observed: i64 = a.iter().map(|&x| rank(x)).sum();
    // distances doubled to stay in integers
    let centre2 = a.len() as i64 * (total as i64 + 1);
    let dist_obs = (2 * observed - centre2).abs();
    let (mut extreme, mut count) = (0u64, 0u64);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let sum: i64 = (0..total).filter(|i| mask >> i & 1 == 1).map(|i| i as i64 + 1).sum();
        count += 1;
        if (2 * sum - centre2).abs() >= dist_obs {
            extreme += 1;
        }
    }
    extreme as f64 / count as f64
}

fn distinct_sample(rng: &mut SeededRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

#[test]
fn three_against_three_separated() {
    let t = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    assert!((t.p_value - 0.1).abs() < 1e-15);
    assert!((brute_force_p(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]) - 0.1).abs() < 1e-15);
}

#[test]
fn exact_branch_matches_enumeration_for_every_small_split() {
    let mut rng = SeededRng::seed_from_u64(12);
    for n in 3..=9 {
        for m in 3..=(12 - n) {
            for _ in 0..40 {
                let a = distinct_sample(&mut rng, n);
                let b = distinct_sample(&mut rng, m);
                let t = wilcoxon_rank_sum(&a, &b).unwrap();
                assert!(t.exact);
                let oracle = brute_force_p(&a, &b);
                assert!((t.p_value - oracle).abs() < 1e-12, "n={n} m={m}: {} vs {oracle}", t.p_value);
            }
        }
    }
}

#[test]
fn shifted_normals_are_significant() {
    let mut rng = SeededRng::seed_from_u64(30);
    let a: Vec<f64> = (0..30).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let b: Vec<f64> = (0..30).map(|_| 2.0 + rng.sample::<f64, _>(StandardNormal)).collect();
    let t = wilcoxon_rank_sum(&a, &b).unwrap();
    assert!(!t.exact);
    assert!(t.p_value < 1e-3, "{}", t.p_value);
}

#[test]
fn normal_branch_close_to_exact_at_the_crossover() {
    let mut rng = SeededRng::seed_from_u64(3);
    for (n, m) in [(6, 6), (5, 7), (4, 8)] {
        for _ in 0..200 {
            let a = distinct_sample(&mut rng, n);
            let b = distinct_sample(&mut rng, m);
            let exact = wilcoxon_rank_sum(&a, &b).unwrap().p_value;
            let approx = normal_approximation(&a, &b);
            assert!((exact - approx).abs() < 0.02, "n={n} m={m}: {exact} vs {approx}");
        }
    }
}

/// Continuity-corrected normal approximation without ties, from textbook
/// moments of the rank sum.
fn normal_approximation(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let w: f64 = a.iter().map(|&x| a.iter().chain(b).filter(|&&y| y < x).count() as f64 + 1.0).sum();
    let mu = n * (n + m + 1.0) / 2.0;
    let sigma = (n * m * (n + m + 1.0) / 12.0).sqrt();
    let z = ((w - mu).abs() - 0.5).max(0.0) / sigma;
    erfc_by_quadrature(z / std::f64::consts::SQRT_2).min(1.0)
}

/// `erfc` by trapezoid quadrature of `2/√π·e^{-t²}` over `[x, 10]`.
fn erfc_by_quadrature(x: f64) -> f64 {
    let steps = 200_000;
    let hi = 10.0;
    if x >= hi {
        return 0.0;
    }
    let h = (hi - x) / steps as f64;
    let f = |t: f64| (-t * t).exp();
    let inner: f64 = (1..steps).map(|i| f(x + i as f64 * h)).sum();
    2.0 / std::f64::consts::PI.sqrt() * h * (inner + 0.5 * (f(x) + f(hi)))
}

#[test]
fn tied_values_use_tie_corrected_variance() {
    // ranks: a gets 1.5, 1.5, 3, b gets 4..=7 shared pairs
    let a = [1.0, 1.0, 2.0];
    let b = [3.0, 3.0, 4.0, 4.0];
    let t = wilcoxon_rank_sum(&a, &b).unwrap();
    assert!(!t.exact);
    assert_eq!(t.statistic, 0.0);
    let (n, m, big) = (3.0f64, 4.0f64, 7.0f64);
    let ties = 3.0 * (8.0 - 2.0);
    let var = n * m / 12.0 * ((big + 1.0) - ties / (big * (big - 1.0)));
    let z = (n * m / 2.0 - 0.5) / var.sqrt();
    assert!((t.p_value - erfc_by_quadrature(z / std::f64::consts::SQRT_2)).abs() < 1e-9);
}

fn function_set(rng: &mut SeededRng, f: usize, reps: usize, offset: f64) -> BTreeMap<String, Vec<f64>> {
    (0..f)
        .map(|i| {
            let shift = offset * (i % 3) as f64;
            (format!("f{i}"), (0..reps).map(|_| shift + rng.random::<f64>()).collect())
        })
        .collect()
}

#[test]
fn identical_results_are_all_ties() {
    let mut rng = SeededRng::seed_from_u64(1);
    let a = function_set(&mut rng, 6, 30, 1.0);
    let cell = win_lose_tie(&a, &a, 0.05).unwrap();
    assert_eq!(cell, ComparisonCell { win: 0, lose: 0, tie: 6, alpha: 0.05 });
}

#[test]
fn uniformly_better_wins_everything() {
    let a: BTreeMap<String, Vec<f64>> =
        (0..5).map(|i| (format!("f{i}"), (0..30).map(|r| r as f64).collect())).collect();
    let b: BTreeMap<String, Vec<f64>> =
        (0..5).map(|i| (format!("f{i}"), (0..30).map(|r| 100.0 + r as f64).collect())).collect();
    let cell = win_lose_tie(&a, &b, 0.05).unwrap();
    assert_eq!((cell.win, cell.lose, cell.tie), (5, 0, 0));
}

#[test]
fn one_significant_one_not() {
    let mut a = BTreeMap::new();
    let mut b = BTreeMap::new();
    // fully separated samples of 30: p far below 0.05
    a.insert("clear".to_string(), (0..30).map(|r| r as f64).collect::<Vec<_>>());
    b.insert("clear".to_string(), (0..30).map(|r| 50.0 + r as f64).collect::<Vec<_>>());
    // interleaved samples: p close to 1
    a.insert("noise".to_string(), (0..30).map(|r| 2.0 * r as f64).collect());
    b.insert("noise".to_string(), (0..30).map(|r| 2.0 * r as f64 + 1.0).collect());
    assert!(wilcoxon_rank_sum(&a["clear"], &b["clear"]).unwrap().p_value < 0.05);
    assert!(wilcoxon_rank_sum(&a["noise"], &b["noise"]).unwrap().p_value > 0.05);
    let cell = win_lose_tie(&a, &b, 0.05).unwrap();
    assert_eq!((cell.win, cell.lose, cell.tie), (1, 0, 1));
}

#[test]
fn mismatched_functions_are_rejected() {
    let mut rng = SeededRng::seed_from_u64(2);
    let a = function_set(&mut rng, 3, 10, 0.0);
    let b = function_set(&mut rng, 4, 10, 0.0);
    assert!(win_lose_tie(&a, &b, 0.05).is_err());
}

#[test]
fn average_rank_examples() {
    let t: BTreeMap<String, BTreeMap<String, f64>> = [
        ("f1", [("a", 0.5), ("b", 0.5)]),
        ("f2", [("a", 0.1), ("b", 0.9)]),
    ]
    .into_iter()
    .map(|(f, row)| (f.to_string(), row.into_iter().map(|(k, v)| (k.to_string(), v)).collect()))
    .collect();
    let r = average_rank(&t).unwrap();
    assert_eq!((r["a"], r["b"]), (1.25, 1.75));
}

proptest! {
    #[test]
    fn swapping_samples_keeps_p(
        a in prop::collection::vec(-1e3f64..1e3, 3..25),
        b in prop::collection::vec(-1e3f64..1e3, 3..25),
    ) {
        let ab = wilcoxon_rank_sum(&a, &b).unwrap();
        let ba = wilcoxon_rank_sum(&b, &a).unwrap();
        prop_assert_eq!(ab.p_value, ba.p_value);
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
    }

    #[test]
    fn monotone_transforms_keep_p(
        a in prop::collection::vec(-5.0f64..5.0, 3..20),
        b in prop::collection::vec(-5.0f64..5.0, 3..20),
        tie in any::<bool>(),
    ) {
        let mut a = a;
        if tie {
            a[0] = b[0];
        }
        let t = |x: &f64| x.exp() * 3.0 + 1.0;
        let ta: Vec<f64> = a.iter().map(t).collect();
        let tb: Vec<f64> = b.iter().map(t).collect();
        prop_assert_eq!(wilcoxon_rank_sum(&a, &b).unwrap().p_value, wilcoxon_rank_sum(&ta, &tb).unwrap().p_value);
    }

    #[test]
    fn comparison_mirrors(seed in any::<u64>(), f in 1usize..8, reps in 3usize..20, offset in 0.0f64..2.0) {
        let mut rng = SeededRng::seed_from_u64(seed);
        let a = function_set(&mut rng, f, reps, offset);
        let b = function_set(&mut rng, f, reps, 0.0);
        let ab = win_lose_tie(&a, &b, 0.05).unwrap();
        let ba = win_lose_tie(&b, &a, 0.05).unwrap();
        prop_assert_eq!(ab.mirrored(), ba);
        prop_assert_eq!(ab.total(), f);
    }
}
