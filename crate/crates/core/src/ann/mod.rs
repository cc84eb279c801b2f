//! Approximate k-NN over the Hamming cube by random Bernoulli projections
//! mod 2, plus the discretization that carries `[0,1]ᵈ` into the cube and
//! an adversarial oracle that answers k-ANN queries as badly as is legal.

mod index;
mod matrix;

pub use index::{
    audit_kann, build_ann_index, kann_query, AnnIndex, AuditReport, Draw, EncodingInfo, RangeTable,
};
pub use matrix::{project, sample_projection, BinaryMatrix};

use serde::{Deserialize, Serialize};

use crate::data::{Label, Point};
use crate::error::{Error, Result};
use crate::knn::{check_k, ranked_all, to_neighbor_set, NeighborSet};
use crate::metric::{BitString, MetricPoint};
use crate::seed::Seed;

pub const DEFAULT_CONST_C: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnParams {
    /// Approximation factor: answers lie within `(1 + c)·ε_k-NN`.
    pub c: f64,
    /// Additive distortion of one projection, relative to its range.
    pub epsilon: f64,
    /// Target failure probability.
    pub delta: f64,
    /// Independent draws per range.
    pub repeats: usize,
    /// Constant in `k' = ⌈C·ε⁻²·log₂ n⌉`.
    pub const_c: f64,
}

impl AnnParams {
    /// `ε = c/4`, `R = ⌈log₂(1/δ)⌉`, `C = 4`.
    pub fn new(c: f64, delta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta) || delta == 0.0 {
            return Err(Error::param(format!("delta = {delta} must lie in (0, 1)")));
        }
        let repeats = ((1.0 / delta).log2().ceil() as usize).max(1);
        AnnParams {
            c,
            epsilon: c / 4.0,
            delta,
            repeats,
            const_c: DEFAULT_CONST_C,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::param(format!("c = {} must be positive", self.c)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::param(format!(
                "epsilon = {} must be positive",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param(format!(
                "delta = {} must lie in (0, 1)",
                self.delta
            )));
        }
        if self.repeats == 0 {
            return Err(Error::param("at least one repetition is required"));
        }
        if !(self.const_c.is_finite() && self.const_c > 0.0) {
            return Err(Error::param(format!(
                "C = {} must be positive",
                self.const_c
            )));
        }
        Ok(self)
    }

    /// Projected dimension for a dataset of `n` points.
    pub fn k_prime(&self, n: usize) -> usize {
        let log_n = (n.max(1) as f64).log2();
        ((self.const_c * log_n / (self.epsilon * self.epsilon)).ceil() as usize).max(1)
    }
}

/// Unary code per coordinate: `v = round(x·B)` ones followed by `B − v`
/// zeros, so Hamming distance equals the ℓ¹ distance of the levels.
pub fn thermometer_encode(x: &Point, levels: u32) -> Result<BitString> {
    if levels == 0 {
        return Err(Error::param("thermometer code needs at least one level"));
    }
    let b = levels as usize;
    let mut out = BitString::zeros(x.dim() * b);
    for (i, &v) in x.coords().iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfUnitRange { index: i, value: v });
        }
        let level = (v * levels as f64).round() as usize;
        for j in 0..level.min(b) {
            out.set(i * b + j, true);
        }
    }
    Ok(out)
}

/// A legal but hostile (k, c)-ANN answer: among all points within
/// `(1 + c)·ε_k-NN(q)`, the `k` that carry `bias` most often, nearer points
/// first within each label group.
pub fn adversarial_kann<T: MetricPoint>(
    points: &[T],
    labels: &[Label],
    q: &T,
    k: usize,
    c: f64,
    bias: Label,
    seed: Seed,
) -> Result<NeighborSet> {
    check_k(k, points.len())?;
    if labels.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            actual: labels.len(),
        });
    }
    let mut all = ranked_all(points, q, seed)?;
    all.sort_unstable();
    let kth = all[k - 1].0.clone();
    let radius = (1.0 + c) * q.key_value(&kth);
    let mut ball: Vec<_> = all
        .into_iter()
        .take_while(|(key, _, _)| *key <= kth || q.key_value(key) <= radius)
        .collect();
    // Stable: preserves distance order inside each group.
    ball.sort_by_key(|(_, _, i)| labels[*i] != bias);
    ball.truncate(k);
    ball.sort_unstable();
    Ok(to_neighbor_set(q, &ball))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::brute_knn;

    #[test]
    fn k_prime_examples() {
        let p = AnnParams {
            c: 0.5,
            epsilon: 0.125,
            delta: 0.1,
            repeats: 4,
            const_c: 4.0,
        };
        assert_eq!(p.k_prime(1024), 2560);
        assert_eq!(p.k_prime(1), 1);
        assert_eq!(AnnParams::new(0.5, 0.1).unwrap(), p);
    }

    #[test]
    fn param_validation() {
        assert!(AnnParams::new(0.5, 0.0).is_err());
        assert!(AnnParams::new(0.5, 1.0).is_err());
        assert!(AnnParams::new(0.0, 0.5).is_err());
        assert_eq!(AnnParams::new(0.5, 0.5).unwrap().repeats, 1);
    }

    #[test]
    fn thermometer_examples() {
        let half = thermometer_encode(&Point::from(vec![0.5]), 4).unwrap();
        assert_eq!(half.to_string(), "1100");
        let three = thermometer_encode(&Point::from(vec![0.75]), 4).unwrap();
        assert_eq!(half.hamming(&three).unwrap(), 1);
        assert_eq!(
            thermometer_encode(&Point::from(vec![0.0; 3]), 5).unwrap(),
            BitString::zeros(15)
        );
        assert!(thermometer_encode(&Point::from(vec![1.2]), 4).is_err());
    }

    fn line(v: &[f64]) -> Vec<Point> {
        v.iter().map(|&x| Point::from(vec![x])).collect()
    }

    #[test]
    fn adversary_without_freedom() {
        let pts = line(&[0.0, 0.1, 0.3, 0.6, 1.0]);
        let labels = vec![Label(0); 5];
        let q = Point::from(vec![0.05]);
        for s in 0..10 {
            let a = adversarial_kann(&pts, &labels, &q, 2, 0.5, Label(1), Seed(s)).unwrap();
            assert_eq!(a, brute_knn(&pts, &q, 2, Seed(s)).unwrap());
        }
        // Zero slack with distinct distances: exactly the k-NN set.
        let mixed = vec![Label(0), Label(1), Label(0), Label(1), Label(1)];
        let a = adversarial_kann(
            &pts,
            &mixed,
            &Point::from(vec![0.02]),
            3,
            0.0,
            Label(1),
            Seed(0),
        )
        .unwrap();
        assert_eq!(a.indices, vec![0, 1, 2]);
    }

    #[test]
    fn adversary_fills_with_bias() {
        // The 4-NN radius is 2; the 3× ball holds all 12 points, the four
        // farthest labelled 1.
        let k = 4;
        let xs: Vec<f64> = (1..=12).map(|i| i as f64 * 0.5).collect();
        let pts = line(&xs);
        let labels: Vec<Label> = (0..12).map(|i| Label(u32::from(i >= 8))).collect();
        let q = Point::from(vec![0.0]);
        let eps = brute_knn(&pts, &q, k, Seed(0)).unwrap().radius();
        let a = adversarial_kann(&pts, &labels, &q, k, 2.0, Label(1), Seed(0)).unwrap();
        assert_eq!(a.indices, vec![8, 9, 10, 11]);
        assert!(a.distances.iter().all(|&d| d <= 3.0 * eps));
        assert!(a.distances.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn adversary_rejects_bad_k() {
        let pts = line(&[0.0]);
        assert!(adversarial_kann(&pts, &[Label(0)], &pts[0], 2, 0.1, Label(0), Seed(0)).is_err());
    }
}
