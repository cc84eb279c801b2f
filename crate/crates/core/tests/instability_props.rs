mod common;

use proptest::prelude::*;

use borelknn::instability::{
    eps_knn, instability_profile, leave_one_out_profile, vc_sample_bound, RadiusGrid,
};

use common::{cases, unit_point, unit_points};

proptest! {
    #![proptest_config(cases(300))]

    #[test]
    fn radii_are_ordered(pts in unit_points(2..=100, 3), q in unit_point(3), k_frac in 0.0..1.0f64) {
        let n = pts.len();
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let k = k.min(n - 1);
        let a = eps_knn(&pts, &q, 1).unwrap();
        let b = eps_knn(&pts, &q, k).unwrap();
        let c = eps_knn(&pts, &q, k + 1).unwrap();
        prop_assert!(a <= b && b <= c);
    }

    #[test]
    fn profile_invariants(pts in unit_points(5..=100, 2), qs in unit_points(1..=20, 2), k in 1usize..=5, c in 0.0..1.0f64) {
        let p = instability_profile(&pts, &qs, k, c, &RadiusGrid::Even(50)).unwrap();
        for r in &p.records {
            prop_assert!(r.eps_nn <= r.eps_knn);
            prop_assert!(r.count >= k);
        }
        prop_assert!((0.0..=1.0).contains(&p.unstable_fraction));
        prop_assert!(p.mean_counts.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*p.mean_counts.last().unwrap(), pts.len() as f64);
        let wider = instability_profile(&pts, &qs, k, c + 0.5, &RadiusGrid::Even(50)).unwrap();
        prop_assert!(wider.unstable_fraction >= p.unstable_fraction);
    }

    #[test]
    fn ball_holds_exactly_k_when_distances_differ(xs in prop::collection::btree_set(0u32..1_000_000, 3..=60), k_frac in 0.0..1.0f64) {
        // Points on a line with distinct distances to a query left of them all.
        let pts: Vec<_> = xs.iter().map(|&x| borelknn::Point::new(vec![1.0 + x as f64]).unwrap()).collect();
        let q = borelknn::Point::new(vec![0.0]).unwrap();
        let k = 1 + ((pts.len() - 1) as f64 * k_frac) as usize;
        let p = instability_profile(&pts, &[q], k, 0.0, &RadiusGrid::Even(2)).unwrap();
        prop_assert_eq!(p.records[0].count, k);
    }

    #[test]
    fn vc_bound_shrinks_with_looser_targets(d in 1usize..=20, e in 0.01..0.5f64, de in 0.01..0.5f64) {
        let base = vc_sample_bound(d, e, de).unwrap();
        prop_assert!(vc_sample_bound(d, e * 1.5, de).unwrap() <= base);
        prop_assert!(vc_sample_bound(d, e, de * 1.5).unwrap() <= base);
    }
}

#[test]
fn leave_one_out_excludes_the_query() {
    let pts: Vec<_> = (0..10)
        .map(|i| borelknn::Point::new(vec![i as f64]).unwrap())
        .collect();
    let p = leave_one_out_profile(&pts, 1, 0.0, &RadiusGrid::Even(10)).unwrap();
    assert!(p.records.iter().all(|r| r.eps_nn == 1.0));
    assert_eq!(p.n, 9);
}

#[test]
fn gaussian_ball_counts_grow_with_dimension() {
    use borelknn::bench::gaussian_points;
    use borelknn::Seed;
    let (k, c) = (20, 0.5);
    let mean_count = |d: usize| {
        let pts = gaussian_points(2000, d, Seed(31).derive(d as u64));
        let qs = gaussian_points(200, d, Seed(32).derive(d as u64));
        instability_profile(&pts, &qs, k, c, &RadiusGrid::Even(2))
            .unwrap()
            .mean_count
    };
    let low = mean_count(2);
    assert!((k as f64..=3.0 * k as f64).contains(&low), "d=2: {low}");
    let mid = mean_count(14);
    assert!(mid >= 5.0 * k as f64, "d=14: {mid}");
}
