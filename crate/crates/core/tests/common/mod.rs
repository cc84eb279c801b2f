#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

use borelknn::Point;

/// Fixed-seed configuration so every run explores the same cases.
pub fn cases(n: u32) -> Config {
    Config {
        cases: n,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn unit_point(d: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(0.0..=1.0f64, d).prop_map(|v| Point::new(v).unwrap())
}

pub fn unit_points(
    n: std::ops::RangeInclusive<usize>,
    d: usize,
) -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(unit_point(d), n)
}
