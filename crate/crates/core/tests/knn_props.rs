mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use borelknn::borel::{borel_map, BorelCode, ReductionConfig};
use borelknn::instability::eps_knn;
use borelknn::knn::{
    brute_knn, majority_vote, make_knn_rule, sorted_index_build, sorted_knn, weighted_vote,
    KSchedule, LearningRule, NeighborSource, WeightVector,
};
use borelknn::{Label, Labeled, Point, Seed};

use common::{cases, unit_points};

fn codes(points: &[Point], bits: u32) -> Vec<BorelCode> {
    let cfg = ReductionConfig::single(points[0].dim(), bits).unwrap();
    points.iter().map(|p| borel_map(p, &cfg).unwrap()).collect()
}

fn sorted_keys(v: &[f64]) -> Vec<u64> {
    let mut k: Vec<u64> = v.iter().map(|d| d.to_bits()).collect();
    k.sort_unstable();
    k
}

proptest! {
    #![proptest_config(cases(500))]

    #[test]
    fn sorted_matches_brute(
        pts in unit_points(1..=120, 3),
        q in common::unit_point(3),
        bits in 1u32..=10,
        k_frac in 0.0..1.0f64,
        seed in any::<u64>(),
    ) {
        let train = codes(&pts, bits);
        let q = codes(&[q], bits).pop().unwrap();
        let k = 1 + ((train.len() as f64 * k_frac) as usize).min(train.len() - 1);
        let index = sorted_index_build(&train).unwrap();
        let a = sorted_knn(&index, &q, k, Seed(seed)).unwrap();
        let b = brute_knn(&train, &q, k, Seed(seed)).unwrap();
        prop_assert_eq!(sorted_keys(&a.distances), sorted_keys(&b.distances));
        let all: BTreeSet<_> = train.iter().map(|c| c.value().clone()).collect();
        if all.len() == train.len() && !train.iter().any(|c| c == &q) {
            let gaps: BTreeSet<_> = train.iter().map(|c| c.gap(&q).unwrap()).collect();
            if gaps.len() == train.len() {
                let ia: BTreeSet<_> = a.indices.iter().collect();
                let ib: BTreeSet<_> = b.indices.iter().collect();
                prop_assert_eq!(ia, ib);
            }
        }
    }

    #[test]
    fn neighbor_sets_are_well_formed(pts in unit_points(1..=80, 4), q in common::unit_point(4), k_frac in 0.0..1.0f64, seed in any::<u64>()) {
        let k = 1 + ((pts.len() as f64 * k_frac) as usize).min(pts.len() - 1);
        let set = brute_knn(&pts, &q, k, Seed(seed)).unwrap();
        prop_assert_eq!(set.len(), k);
        prop_assert_eq!(set.indices.iter().collect::<BTreeSet<_>>().len(), k);
        prop_assert!(set.distances.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(set.radius(), eps_knn(&pts, &q, k).unwrap());
        prop_assert_eq!(brute_knn(&pts, &q, k, Seed(seed)).unwrap(), set);
    }

    #[test]
    fn uniform_weights_vote_like_majority(labels in prop::collection::vec(0u32..4, 1..=25), seed in any::<u64>()) {
        let labels: Vec<Label> = labels.into_iter().map(Label).collect();
        let w = WeightVector::uniform(&(0..labels.len()).collect::<Vec<_>>(), labels.len()).unwrap();
        prop_assert_eq!(
            weighted_vote(&w, &labels, 4, Seed(seed)).unwrap(),
            majority_vote(&labels, 4, Seed(seed)).unwrap()
        );
    }

    #[test]
    fn same_seed_same_predictions(pts in unit_points(2..=60, 2), labels in prop::collection::vec(0u32..3, 60), seed in any::<u64>()) {
        let n = pts.len();
        let s = Labeled::new(pts.clone(), labels[..n].iter().map(|&l| Label(l)).collect(), 3).unwrap();
        let run = || {
            let rule = make_knn_rule::<Point>(NeighborSource::Brute, KSchedule::SqrtCeil, Seed(seed)).unwrap();
            rule.train(&s).unwrap().classify_all(&pts).unwrap()
        };
        prop_assert_eq!(run(), run());
    }
}
