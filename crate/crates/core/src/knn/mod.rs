//! Exact k-NN search, votes, learning rules and their transport along a map.
//!
//! Equidistant candidates are ranked by a random order on dataset indices
//! drawn per query: index `i` gets rank `seed.rank(i)` and ties in distance
//! are resolved by `(rank, i)`. Every search path in the crate uses the same
//! order, so the brute-force scan and the sorted index agree index for index.

mod rule;
mod sorted;
mod vote;

pub use rule::{
    empirical_error, make_knn_rule, transport_rule, Carrier, Classifier, KSchedule, KnnClassifier,
    KnnRule, LearningRule, NeighborOracle, NeighborSource, Transported,
};
pub use sorted::{sorted_index_build, sorted_knn, Sorted1DIndex};
pub use vote::{majority_vote, weighted_vote, WeightVector};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricPoint;
use crate::seed::Seed;

/// The `k` neighbours of a query: distinct indices with nondecreasing
/// distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborSet {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Distance to the farthest member.
    pub fn radius(&self) -> f64 {
        self.distances.last().copied().unwrap_or(0.0)
    }

    /// The first `k` members.
    pub fn truncated(&self, k: usize) -> NeighborSet {
        NeighborSet {
            indices: self.indices[..k.min(self.len())].to_vec(),
            distances: self.distances[..k.min(self.len())].to_vec(),
        }
    }
}

/// A candidate during selection: exact distance key, tie rank, index.
pub(crate) type Ranked<K> = (K, u64, usize);

pub(crate) fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    Ok(())
}

/// Keep the `k` smallest candidates, sorted.
pub(crate) fn select_smallest<K: Ord>(mut cands: Vec<Ranked<K>>, k: usize) -> Vec<Ranked<K>> {
    if k < cands.len() {
        cands.select_nth_unstable(k - 1);
        cands.truncate(k);
    }
    cands.sort_unstable();
    cands
}

pub(crate) fn to_neighbor_set<T: MetricPoint>(q: &T, ranked: &[Ranked<T::Key>]) -> NeighborSet {
    NeighborSet {
        indices: ranked.iter().map(|(_, _, i)| *i).collect(),
        distances: ranked.iter().map(|(key, _, _)| q.key_value(key)).collect(),
    }
}

/// Exact distance keys from `q` to every point, with tie ranks.
pub(crate) fn ranked_all<T: MetricPoint>(
    points: &[T],
    q: &T,
    seed: Seed,
) -> Result<Vec<Ranked<T::Key>>> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| Ok((q.distance_key(p)?, seed.rank(i as u64), i)))
        .collect()
}

/// Brute-force k-NN: the `k` points closest to `q`, equidistant candidates
/// ordered by the seeded random permutation of indices.
pub fn brute_knn<T: MetricPoint>(points: &[T], q: &T, k: usize, seed: Seed) -> Result<NeighborSet> {
    check_k(k, points.len())?;
    let ranked = select_smallest(ranked_all(points, q, seed)?, k);
    Ok(to_neighbor_set(q, &ranked))
}
