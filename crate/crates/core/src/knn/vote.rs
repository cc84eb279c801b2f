use crate::data::Label;
use crate::error::{Error, Result};
use crate::seed::Seed;

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Non-negative per-point weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "negative or non-finite weight {w}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(WeightVector { weights })
    }

    /// `1/k` on each of the `k` given indices out of `n`, zero elsewhere.
    pub fn uniform(indices: &[usize], n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidWeights("no support".into()));
        }
        let share = 1.0 / indices.len() as f64;
        let mut weights = vec![0.0; n];
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidWeights(format!("index {i} out of range {n}")));
            }
            weights[i] += share;
        }
        WeightVector::new(weights)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Among the classes whose score is maximal, the first in the seeded random
/// order of class ids.
fn argmax_with_ties<S: PartialOrd + Copy>(scores: &[S], seed: Seed) -> Label {
    let mut best: Option<(S, u64, usize)> = None;
    for (c, &s) in scores.iter().enumerate() {
        let rank = seed.rank(c as u64);
        let better = match best {
            None => true,
            Some((bs, br, _)) => s > bs || (s == bs && rank < br),
        };
        if better {
            best = Some((s, rank, c));
        }
    }
    Label(best.expect("at least one class").2 as u32)
}

/// Plurality label; ties resolved by the seeded permutation of class ids.
pub fn majority_vote(labels: &[Label], class_count: usize, seed: Seed) -> Result<Label> {
    if labels.is_empty() {
        return Err(Error::param("majority vote over an empty list"));
    }
    let mut counts = vec![0usize; class_count];
    for l in labels {
        *counts
            .get_mut(l.index())
            .ok_or_else(|| Error::param(format!("label {} out of range", l.0)))? += 1;
    }
    Ok(argmax_with_ties(&counts, seed))
}

/// Label with the largest total weight; ties as in [`majority_vote`].
pub fn weighted_vote(
    w: &WeightVector,
    labels: &[Label],
    class_count: usize,
    seed: Seed,
) -> Result<Label> {
    if w.weights.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: w.weights.len(),
        });
    }
    let mut score = vec![0.0f64; class_count];
    for (&wi, l) in w.weights.iter().zip(labels) {
        if wi > 0.0 {
            *score
                .get_mut(l.index())
                .ok_or_else(|| Error::param(format!("label {} out of range", l.0)))? += wi;
        }
    }
    Ok(argmax_with_ties(&score, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[u32]) -> Vec<Label> {
        v.iter().map(|&l| Label(l)).collect()
    }

    #[test]
    fn strict_majority_and_plurality() {
        assert_eq!(
            majority_vote(&labels(&[1, 1, 0]), 2, Seed(0)).unwrap(),
            Label(1)
        );
        assert_eq!(
            majority_vote(&labels(&[2, 2, 1, 0]), 3, Seed(0)).unwrap(),
            Label(2)
        );
    }

    #[test]
    fn binary_tie_depends_on_seed_only() {
        let ls = labels(&[0, 1]);
        let zero = (0..).map(Seed).find(|s| s.rank(0) < s.rank(1)).unwrap();
        let one = (0..).map(Seed).find(|s| s.rank(1) < s.rank(0)).unwrap();
        assert_eq!(majority_vote(&ls, 2, zero).unwrap(), Label(0));
        assert_eq!(majority_vote(&ls, 2, one).unwrap(), Label(1));
        assert_eq!(majority_vote(&ls, 2, one).unwrap(), Label(1));
    }

    #[test]
    fn empty_vote_is_an_error() {
        assert!(majority_vote(&[], 2, Seed(0)).is_err());
    }

    #[test]
    fn weighted_examples() {
        let w = WeightVector::new(vec![0.6, 0.4]).unwrap();
        assert_eq!(
            weighted_vote(&w, &labels(&[0, 1]), 2, Seed(0)).unwrap(),
            Label(0)
        );
        let tie = WeightVector::new(vec![0.5, 0.5]).unwrap();
        for s in 0..20 {
            let got = weighted_vote(&tie, &labels(&[0, 1]), 2, Seed(s)).unwrap();
            assert_eq!(got, majority_vote(&labels(&[0, 1]), 2, Seed(s)).unwrap());
        }
    }

    #[test]
    fn invalid_weights() {
        assert!(matches!(
            WeightVector::new(vec![0.5, 0.6]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(matches!(
            WeightVector::new(vec![1.5, -0.5]),
            Err(Error::InvalidWeights(_))
        ));
        assert!(WeightVector::new(vec![0.1; 10]).is_ok());
    }

    #[test]
    fn uniform_weights() {
        let w = WeightVector::uniform(&[0, 2, 3], 5).unwrap();
        assert_eq!(w.weights().iter().filter(|&&x| x > 0.0).count(), 3);
    }
}
