//! Nearest-neighbour radii, c-unstable queries and ball-count profiles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::check_k;
use crate::metric::MetricPoint;

pub const DEFAULT_GRID_POINTS: usize = 200;

/// `ε_k-NN(q)`: the `k`-th smallest distance from `q` to the points.
pub fn eps_knn<T: MetricPoint>(points: &[T], q: &T, k: usize) -> Result<f64> {
    check_k(k, points.len())?;
    let mut keys = points
        .iter()
        .map(|p| q.distance_key(p))
        .collect::<Result<Vec<_>>>()?;
    let (_, kth, _) = keys.select_nth_unstable(k - 1);
    Ok(q.key_value(kth))
}

/// Whether the `(1 + c)·ε_NN(q)` ball holds at least half of the points.
pub fn is_c_unstable<T: MetricPoint>(points: &[T], q: &T, c: f64) -> Result<bool> {
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let keys = points
        .iter()
        .map(|p| q.distance_key(p))
        .collect::<Result<Vec<_>>>()?;
    let nearest = keys.iter().min().expect("nonempty");
    let radius = (1.0 + c) * q.key_value(nearest);
    let inside = keys
        .iter()
        .filter(|k| *k <= nearest || q.key_value(k) <= radius)
        .count();
    Ok(2 * inside >= points.len())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub eps_nn: f64,
    pub eps_knn: f64,
    /// Points within `(1 + c)·ε_k-NN`.
    pub count: usize,
    pub unstable: bool,
}

/// Radii at which the mean ball count is tabulated.
#[derive(Clone, Debug, PartialEq)]
pub enum RadiusGrid {
    /// Evenly spaced from 0 to the largest observed distance, inclusive.
    Even(usize),
    Explicit(Vec<f64>),
}

impl Default for RadiusGrid {
    fn default() -> Self {
        RadiusGrid::Even(DEFAULT_GRID_POINTS)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstabilityProfile {
    pub n: usize,
    pub k: usize,
    pub c: f64,
    pub records: Vec<QueryRecord>,
    pub mean_count: f64,
    pub unstable_fraction: f64,
    pub mean_eps_knn: f64,
    /// Mean of `(1 + c)·ε_k-NN`.
    pub mean_inflated_radius: f64,
    pub radii: Vec<f64>,
    /// Mean number of points within each radius.
    pub mean_counts: Vec<f64>,
}

/// Ball statistics for `queries` against `points`.
pub fn instability_profile<T: MetricPoint>(
    points: &[T],
    queries: &[T],
    k: usize,
    c: f64,
    grid: &RadiusGrid,
) -> Result<InstabilityProfile> {
    if queries.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_k(k, points.len())?;
    let rows = queries
        .par_iter()
        .map(|q| sorted_distances(points, q, None))
        .collect::<Result<Vec<_>>>()?;
    profile_from_rows(rows, points.len(), k, c, grid)
}

/// Every point queried against the rest of the dataset.
pub fn leave_one_out_profile<T: MetricPoint>(
    points: &[T],
    k: usize,
    c: f64,
    grid: &RadiusGrid,
) -> Result<InstabilityProfile> {
    if points.len() < 2 {
        return Err(Error::param("leave-one-out needs at least two points"));
    }
    check_k(k, points.len() - 1)?;
    let rows = (0..points.len())
        .into_par_iter()
        .map(|i| sorted_distances(points, &points[i], Some(i)))
        .collect::<Result<Vec<_>>>()?;
    profile_from_rows(rows, points.len() - 1, k, c, grid)
}

fn sorted_distances<T: MetricPoint>(points: &[T], q: &T, skip: Option<usize>) -> Result<Vec<f64>> {
    let mut d = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if Some(i) != skip {
            d.push(q.distance(p)?);
        }
    }
    d.sort_unstable_by(f64::total_cmp);
    Ok(d)
}

fn within(sorted: &[f64], r: f64) -> usize {
    sorted.partition_point(|&d| d <= r)
}

fn profile_from_rows(
    rows: Vec<Vec<f64>>,
    n: usize,
    k: usize,
    c: f64,
    grid: &RadiusGrid,
) -> Result<InstabilityProfile> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::param(format!("c = {c} must be >= 0")));
    }
    let records: Vec<QueryRecord> = rows
        .iter()
        .map(|d| {
            let eps_nn = d[0];
            let eps_knn = d[k - 1];
            QueryRecord {
                eps_nn,
                eps_knn,
                count: within(d, (1.0 + c) * eps_knn),
                unstable: 2 * within(d, (1.0 + c) * eps_nn) >= n,
            }
        })
        .collect();
    let m = records.len() as f64;
    let radii = match grid {
        RadiusGrid::Even(points) => {
            let points = (*points).max(2);
            let max = rows.iter().map(|d| d[d.len() - 1]).fold(0.0, f64::max);
            let mut r: Vec<f64> = (0..points)
                .map(|i| max * i as f64 / (points - 1) as f64)
                .collect();
            r[points - 1] = max;
            r
        }
        RadiusGrid::Explicit(r) => r.clone(),
    };
    let mean_counts = radii
        .iter()
        .map(|&r| rows.iter().map(|d| within(d, r) as f64).sum::<f64>() / m)
        .collect();
    Ok(InstabilityProfile {
        n,
        k,
        c,
        mean_count: records.iter().map(|r| r.count as f64).sum::<f64>() / m,
        unstable_fraction: records.iter().filter(|r| r.unstable).count() as f64 / m,
        mean_eps_knn: records.iter().map(|r| r.eps_knn).sum::<f64>() / m,
        mean_inflated_radius: records.iter().map(|r| (1.0 + c) * r.eps_knn).sum::<f64>() / m,
        records,
        radii,
        mean_counts,
    })
}

/// Sample size making empirical measures of all Euclidean balls in ℝᵈ
/// ε-accurate with confidence `1 − δ`:
/// `⌈max{8(d+1)/ε · lg(8e/ε), 4/ε · lg(2/δ)}⌉`.
pub fn vc_sample_bound(d: usize, eps: f64, delta: f64) -> Result<u64> {
    for (name, v) in [("epsilon", eps), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::param(format!("{name} = {v} must lie in (0, 1)")));
        }
    }
    let vc = (d + 1) as f64;
    let shatter = 8.0 * vc / eps * (8.0 * std::f64::consts::E / eps).log2();
    let confidence = 4.0 / eps * (2.0 / delta).log2();
    Ok(shatter.max(confidence).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Point;

    fn line(v: &[f64]) -> Vec<Point> {
        v.iter().map(|&x| Point::from(vec![x])).collect()
    }

    #[test]
    fn eps_examples() {
        let pts = line(&[0.0, 1.0, 2.0]);
        assert_eq!(eps_knn(&pts, &pts[1], 1).unwrap(), 0.0);
        assert_eq!(eps_knn(&pts, &Point::from(vec![0.0]), 2).unwrap(), 1.0);
        assert!(eps_knn(&pts, &pts[0], 4).is_err());
    }

    #[test]
    fn unstable_examples() {
        assert!(is_c_unstable(&line(&[3.0]), &Point::from(vec![0.0]), 0.0).unwrap());
        assert!(!is_c_unstable(&line(&[0.0, 10.0, 20.0]), &Point::from(vec![0.1]), 0.5).unwrap());
        let ring = line(&[-1.0, 1.0, -1.0, 1.0]);
        assert!(is_c_unstable(&ring, &Point::from(vec![0.0]), 0.0).unwrap());
        assert!(is_c_unstable::<Point>(&[], &Point::from(vec![0.0]), 0.0).is_err());
    }

    #[test]
    fn zero_inflation_counts_k() {
        let pts = line(&[0.0, 0.3, 0.7, 1.6, 2.1, 3.3, 5.0]);
        let qs = line(&[0.11, 1.03, 4.2]);
        let p = instability_profile(&pts, &qs, 3, 0.0, &RadiusGrid::default()).unwrap();
        assert!(p.records.iter().all(|r| r.count == 3));
        assert_eq!(p.radii.len(), 200);
        assert_eq!(*p.mean_counts.last().unwrap(), 7.0);
        assert!(p.mean_counts.windows(2).all(|w| w[0] <= w[1]));
        assert!(p.records.iter().all(|r| r.eps_nn <= r.eps_knn));
    }

    #[test]
    fn leave_one_out_excludes_self() {
        let pts = line(&[0.0, 1.0, 3.0]);
        let p = leave_one_out_profile(&pts, 1, 0.0, &RadiusGrid::Explicit(vec![0.0, 1.0])).unwrap();
        assert_eq!(p.n, 2);
        let eps: Vec<f64> = p.records.iter().map(|r| r.eps_nn).collect();
        assert_eq!(eps, vec![1.0, 1.0, 2.0]);
        assert_eq!(p.mean_counts[0], 0.0);
    }

    #[test]
    fn vc_bound_oracle() {
        // Independent high-precision evaluations of the two terms.
        assert_eq!(vc_sample_bound(2, 0.1, 0.05).unwrap(), 1864);
        assert_eq!(vc_sample_bound(1, 0.5, 0.5).unwrap(), 175);
        assert_eq!(vc_sample_bound(33, 0.2, 0.1).unwrap(), 9200);
        assert_eq!(vc_sample_bound(2, 0.9, 0.01).unwrap(), 123);
    }

    #[test]
    fn vc_bound_shape() {
        let grid = [0.05, 0.1, 0.2, 0.4, 0.8];
        for d in 1..6 {
            for w in grid.windows(2) {
                assert!(
                    vc_sample_bound(d, w[1], 0.1).unwrap()
                        <= vc_sample_bound(d, w[0], 0.1).unwrap()
                );
                assert!(
                    vc_sample_bound(d, 0.1, w[1]).unwrap()
                        <= vc_sample_bound(d, 0.1, w[0]).unwrap()
                );
            }
        }
        // Confidence-dominated: d does not matter.
        assert_eq!(
            vc_sample_bound(1, 0.9, 1e-9).unwrap(),
            vc_sample_bound(2, 0.9, 1e-9).unwrap()
        );
        for bad in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(vc_sample_bound(2, bad, 0.1).is_err());
            assert!(vc_sample_bound(2, 0.1, bad).is_err());
        }
    }
}
