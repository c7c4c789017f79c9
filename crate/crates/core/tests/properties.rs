use proptest::prelude::*;
use weakmean::config::EstimatorConfig;
use weakmean::distributions::{corruption_count, corruption_pair, lower_bound_family, DirectionalMoment};
use weakmean::estimator::{bucket_sizes, estimate_mean};
use weakmean::harness::error_quantile;
use weakmean::linalg;
use weakmean::points::{Points, Sample};

fn rows(d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-50.0..50.0f64, d), 8..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bucket_sizes_partition_the_sample(m in 1usize..500, k in 1usize..50) {
        prop_assume!(k <= m);
        let sizes = bucket_sizes(m, k);
        prop_assert_eq!(sizes.iter().sum::<usize>(), m);
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }

    #[test]
    fn corruption_count_is_the_ceiling(n in 1usize..10_000, eta in 0.0..0.99f64) {
        let c = corruption_count(eta, n);
        prop_assert!(c <= n);
        prop_assert!(c as f64 + 1e-9 * n as f64 >= eta * n as f64);
        prop_assert!((c as f64) < eta * n as f64 + 1.0);
    }

    #[test]
    fn quantile_is_an_order_statistic(mut errors in prop::collection::vec(0.0..10.0f64, 1..200), delta in 0.01..0.99f64) {
        let q = error_quantile(&errors, delta);
        prop_assert!(errors.contains(&q));
        errors.sort_by(f64::total_cmp);
        let below = errors.iter().filter(|&&e| e <= q).count() as f64;
        prop_assert!(below >= (1.0 - delta) * errors.len() as f64 - 1e-9);
    }

    #[test]
    fn estimate_is_deterministic_and_finite(rows in rows(3)) {
        let s = Sample::from_rows(&rows, 0.5).unwrap();
        let cfg = EstimatorConfig::desk(0.1, s.len(), 3).unwrap();
        // Widely spread inputs may lose every point to pruning; that error must
        // then be reproducible too.
        match (estimate_mean(&s, &cfg), estimate_mean(&s, &cfg)) {
            (Ok(a), Ok(b)) => {
                prop_assert!(a.mean.iter().all(|x| x.is_finite()));
                prop_assert_eq!(a, b);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "outcomes differ"),
        }
    }

    #[test]
    fn estimate_is_nearly_translation_equivariant(rows in rows(2), shift in prop::collection::vec(-1e3..1e3f64, 2)) {
        let s = Sample::from_rows(&rows, 1.0).unwrap();
        let cfg = EstimatorConfig::desk(0.1, s.len(), 2).unwrap();
        let (Ok(a), Ok(b)) = (estimate_mean(&s, &cfg), estimate_mean(&s.with_points(s.points.translated(&shift)), &cfg))
        else {
            return Ok(());
        };
        let back = linalg::sub(&b.mean, &shift);
        let scale = 1.0 + linalg::norm(&shift) + rows.iter().map(|r| linalg::norm(r)).fold(0.0, f64::max);
        prop_assert!(linalg::dist(&back, &a.mean) <= 1e-2 * scale, "{:?} vs {:?}", back, a.mean);
    }

    #[test]
    fn spike_family_moment_never_exceeds_half(
        alpha in 0.05..1.0f64,
        n in 10usize..1000,
        half in 1usize..8,
        v in prop::collection::vec(-1.0..1.0f64, 16),
    ) {
        let d = 2 * half;
        let s: Vec<usize> = (0..half).collect();
        let dist = lower_bound_family(d, &s, n, alpha).unwrap();
        let Some(u) = linalg::normalized(&v[..d]) else { return Ok(()) };
        prop_assert!(dist.directional_moment(&u, alpha) <= 0.5 + 1e-9);
    }

    #[test]
    fn corruption_pair_tv_and_moment(eta in 1e-4..0.99f64, alpha in 0.01..1.0f64) {
        let pair = corruption_pair(eta, alpha).unwrap();
        prop_assert!((pair.tv_distance() - eta / 4.0).abs() <= 1e-12);
        prop_assert!(pair.second.centered_norm_moment(1.0 + alpha) <= 1.0 + 1e-12);
    }
}

#[test]
fn identical_points_in_any_dimension() {
    for d in 1..6 {
        let p: Vec<f64> = (0..d).map(|j| j as f64 - 2.5).collect();
        let s = Sample::new(Points::repeat(&p, 24), 0.3).unwrap();
        let est = estimate_mean(&s, &EstimatorConfig::desk(0.05, 24, d).unwrap()).unwrap();
        assert_eq!(est.mean, p);
    }
}
