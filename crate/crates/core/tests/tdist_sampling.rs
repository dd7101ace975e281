//! Monte-Carlo checks of the t sampler and density against closed forms
//! computed here from first principles.

use std::f64::consts::PI;

use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use tfwa_core::benchfns::random_rotation;
use tfwa_core::tdist::TDistribution;
use tfwa_core::SeededRng;

fn sample_covariance(draws: &DMatrix<f64>) -> DMatrix<f64> {
    let n = draws.nrows() as f64;
    let mean = draws.row_mean();
    let centered = DMatrix::from_fn(draws.nrows(), draws.ncols(), |i, j| draws[(i, j)] - mean[j]);
    centered.transpose() * centered / (n - 1.0)
}

/// Relative error per entry, measured against the geometric mean of the two
/// matching diagonal entries so that zero off-diagonals stay meaningful.
fn max_scaled_error(est: &DMatrix<f64>, exact: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..exact.nrows() {
        for j in 0..exact.ncols() {
            let norm = (exact[(i, i)] * exact[(j, j)]).sqrt();
            worst = worst.max((est[(i, j)] - exact[(i, j)]).abs() / norm);
        }
    }
    worst
}

#[test]
fn df5_covariance_is_five_thirds_scale() {
    for (seed, scale) in [(1u64, DMatrix::identity(2, 2)), (2, dmatrix![4.0, 1.0; 1.0, 2.0])] {
        let dist = TDistribution::new(DVector::zeros(2), scale.clone(), 5.0).unwrap();
        let draws = dist.sample(1_000_000, &mut SeededRng::seed_from_u64(seed));
        let err = max_scaled_error(&sample_covariance(&draws), &(scale * (5.0 / 3.0)));
        assert!(err < 0.03, "covariance error {err}");
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided one-sample Kolmogorov–Smirnov statistic against N(0, 1).
fn ks_statistic(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[test]
fn huge_df_passes_normal_ks() {
    // asymptotic critical value of the KS statistic at alpha = 0.01
    let n = 10_000;
    let critical = 1.628 / (n as f64).sqrt();
    for dim in [1, 3] {
        let dist = TDistribution::standard(dim, 1e8).unwrap();
        let draws = dist.sample(n, &mut SeededRng::seed_from_u64(40 + dim as u64));
        for j in 0..dim {
            let d = ks_statistic(draws.column(j).iter().copied().collect());
            assert!(d < critical, "dim {dim} coordinate {j}: D = {d}");
        }
    }
}

#[test]
fn cauchy_tail_frequency() {
    let exact = 1.0 - 2.0 / PI * 5f64.atan();
    assert!((exact - 0.1257).abs() < 5e-5);
    let dist = TDistribution::standard(1, 1.0).unwrap();
    let mut rng = SeededRng::seed_from_u64(7);
    let n = 1_000_000;
    let hits = (0..n).filter(|_| dist.sample_one(&mut rng)[0].abs() > 5.0).count();
    let freq = hits as f64 / n as f64;
    assert!((freq - exact).abs() < 0.002, "tail frequency {freq}");
}

#[test]
fn tails_shrink_by_orders_of_magnitude_towards_gaussian() {
    let n = 10_000_000;
    let tail = |df: f64, seed: u64| {
        let dist = TDistribution::standard(1, df).unwrap();
        let mut rng = SeededRng::seed_from_u64(seed);
        (0..n).filter(|_| dist.sample_one(&mut rng)[0].abs() > 5.0).count() as f64 / n as f64
    };
    let heavy = tail(1.0, 11);
    let light = tail(1e8, 12);
    // P(|Z| > 5) ≈ 5.7e-7, so the Gaussian count is ~6 and may even be 0
    assert!(heavy >= 1e4 * light, "heavy {heavy}, light {light}");
}

#[test]
fn density_integrates_to_one() {
    let (lo, hi, steps) = (-100.0, 100.0, 200_000);
    let h = (hi - lo) / steps as f64;
    for df in [3.0, 5.0, 10.0, 1e3] {
        let dist = TDistribution::standard(1, df).unwrap();
        let f = |x: f64| dist.log_density(&dvector![x]).exp();
        let interior: f64 = (1..steps).map(|i| f(lo + i as f64 * h)).sum();
        let integral = h * (interior + 0.5 * (f(lo) + f(hi)));
        assert!((integral - 1.0).abs() < 1e-4, "df {df}: {integral}");
    }
}

#[test]
fn density_matches_scalar_formula() {
    // Γ((v+1)/2) / (Γ(v/2) √(vπ) σ) · (1 + z²/v)^{-(v+1)/2}, for v = 3
    // where Γ(2)/Γ(3/2) = 2/√π
    let (mu, sigma2, v) = (1.5, 4.0, 3.0);
    let dist = TDistribution::new(dvector![mu], dmatrix![sigma2], v).unwrap();
    for x in [-3.0, 0.0, 1.5, 7.0] {
        let z2 = (x - mu) * (x - mu) / sigma2;
        let pdf = 2.0 / PI.sqrt() / (v * PI).sqrt() / sigma2.sqrt() * (1.0 + z2 / v).powf(-(v + 1.0) / 2.0);
        assert!((dist.log_density(&dvector![x]) - pdf.ln()).abs() < 1e-12);
    }
}

#[test]
fn sampling_is_reproducible() {
    let dist = TDistribution::new(dvector![1.0, -2.0], dmatrix![2.0, 0.3; 0.3, 1.0], 4.0).unwrap();
    let a = dist.sample(50, &mut SeededRng::seed_from_u64(99));
    let b = dist.sample(50, &mut SeededRng::seed_from_u64(99));
    assert_eq!(a, b);
}

fn spd(dim: usize, entries: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |i, j| entries[i * dim + j]);
    &a * a.transpose() + DMatrix::identity(dim, dim) * 0.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mahalanobis_survives_joint_rotation(
        dim in 1usize..6,
        seed in any::<u64>(),
        entries in prop::collection::vec(-2.0f64..2.0, 36),
        point in prop::collection::vec(-5.0f64..5.0, 12),
    ) {
        let scale = spd(dim, &entries);
        let mean = DVector::from_column_slice(&point[..dim]);
        let x = DVector::from_column_slice(&point[6..6 + dim]);
        let q = random_rotation(dim, &mut SeededRng::seed_from_u64(seed));
        let base = TDistribution::new(mean.clone(), scale.clone(), 5.0).unwrap();
        let rotated = TDistribution::new(&q * &mean, &q * &scale * q.transpose(), 5.0).unwrap();
        let s = base.mahalanobis(&x);
        let s_rot = rotated.mahalanobis(&(&q * &x));
        prop_assert!(s >= 0.0);
        prop_assert!((s - s_rot).abs() <= 1e-10 * s.max(1.0), "{} vs {}", s, s_rot);
    }

    #[test]
    fn mahalanobis_matches_explicit_inverse(
        dim in 1usize..6,
        entries in prop::collection::vec(-2.0f64..2.0, 36),
        point in prop::collection::vec(-5.0f64..5.0, 6),
    ) {
        let scale = spd(dim, &entries);
        let x = DVector::from_column_slice(&point[..dim]);
        let dist = TDistribution::new(DVector::zeros(dim), scale.clone(), 2.5).unwrap();
        let inv = scale.try_inverse().unwrap();
        let expected = (x.transpose() * inv * &x)[0];
        prop_assert!((dist.mahalanobis(&x) - expected).abs() <= 1e-9 * expected.max(1.0));
    }
}
