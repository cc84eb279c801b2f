use std::marker::PhantomData;
use std::sync::Arc;

use rayon::prelude::*;

use super::{brute_knn, majority_vote, sorted_index_build, sorted_knn, NeighborSet, Sorted1DIndex};
use crate::ann::{adversarial_kann, AnnParams};
use crate::borel::BorelCode;
use crate::data::{Label, Labeled};
use crate::error::{Error, Result};
use crate::metric::{BitString, MetricPoint};
use crate::seed::{stream, Seed};

/// A trained classifier. `ordinal` identifies the query within a batch; tie
/// orders are derived from it, so results do not depend on scheduling.
pub trait Classifier<T>: Send + Sync {
    fn classify(&self, q: &T, ordinal: u64) -> Result<Label>;

    fn classify_all(&self, queries: &[T]) -> Result<Vec<Label>>
    where
        T: Sync,
    {
        queries
            .par_iter()
            .enumerate()
            .map(|(i, q)| self.classify(q, i as u64))
            .collect()
    }
}

/// Sample → classifier.
pub trait LearningRule<T>: Send + Sync {
    fn train(&self, sample: &Labeled<T>) -> Result<Box<dyn Classifier<T>>>;
}

/// Answers neighbour queries over a fixed sample.
pub trait NeighborOracle<T>: Send + Sync {
    fn neighbors(&self, q: &T, k: usize, seed: Seed) -> Result<NeighborSet>;
}

/// Where a k-NN rule gets its neighbours from.
#[derive(Clone, Debug, PartialEq)]
pub enum NeighborSource {
    /// Exhaustive scan under the carrier's metric.
    Brute,
    /// Sorted one-dimensional index; Borel codes only.
    Sorted1d,
    /// Randomized Hamming-cube k-ANN index; bit strings only.
    Kann(AnnParams),
    /// Worst-case legal (k, c)-ANN oracle favouring `bias`.
    Adversarial { c: f64, bias: Label },
}

impl NeighborSource {
    pub fn name(&self) -> &'static str {
        match self {
            NeighborSource::Brute => "brute",
            NeighborSource::Sorted1d => "sorted1d",
            NeighborSource::Kann(_) => "kann",
            NeighborSource::Adversarial { .. } => "adversarial",
        }
    }
}

/// Carriers a k-NN rule can run on. The default supports the sources that
/// only need the metric.
pub trait Carrier: MetricPoint + Clone + Sized + 'static {
    fn build_oracle(
        source: &NeighborSource,
        sample: &Labeled<Self>,
        _k: usize,
        _seed: Seed,
    ) -> Result<Box<dyn NeighborOracle<Self>>> {
        generic_oracle(source, sample)
    }
}

pub(crate) fn generic_oracle<T: Carrier>(
    source: &NeighborSource,
    sample: &Labeled<T>,
) -> Result<Box<dyn NeighborOracle<T>>> {
    match source {
        NeighborSource::Brute => Ok(Box::new(BruteOracle {
            points: sample.points().to_vec(),
        })),
        NeighborSource::Adversarial { c, bias } => {
            if !(c.is_finite() && *c >= 0.0) {
                return Err(Error::param(format!(
                    "approximation factor c = {c} must be >= 0"
                )));
            }
            Ok(Box::new(AdversarialOracle {
                points: sample.points().to_vec(),
                labels: sample.labels().to_vec(),
                c: *c,
                bias: *bias,
            }))
        }
        other => Err(Error::CarrierMismatch {
            metric: other.name(),
            carrier: T::CARRIER,
        }),
    }
}

struct BruteOracle<T> {
    points: Vec<T>,
}

impl<T: MetricPoint> NeighborOracle<T> for BruteOracle<T> {
    fn neighbors(&self, q: &T, k: usize, seed: Seed) -> Result<NeighborSet> {
        brute_knn(&self.points, q, k, seed)
    }
}

struct AdversarialOracle<T> {
    points: Vec<T>,
    labels: Vec<Label>,
    c: f64,
    bias: Label,
}

impl<T: MetricPoint> NeighborOracle<T> for AdversarialOracle<T> {
    fn neighbors(&self, q: &T, k: usize, seed: Seed) -> Result<NeighborSet> {
        adversarial_kann(&self.points, &self.labels, q, k, self.c, self.bias, seed)
    }
}

struct SortedOracle(Sorted1DIndex);

impl NeighborOracle<BorelCode> for SortedOracle {
    fn neighbors(&self, q: &BorelCode, k: usize, seed: Seed) -> Result<NeighborSet> {
        sorted_knn(&self.0, q, k, seed)
    }
}

impl Carrier for crate::data::Point {}
impl Carrier for crate::borel::GroupedCode {}

impl Carrier for BorelCode {
    fn build_oracle(
        source: &NeighborSource,
        sample: &Labeled<Self>,
        _k: usize,
        _seed: Seed,
    ) -> Result<Box<dyn NeighborOracle<Self>>> {
        match source {
            NeighborSource::Sorted1d => {
                Ok(Box::new(SortedOracle(sorted_index_build(sample.points())?)))
            }
            other => generic_oracle(other, sample),
        }
    }
}

impl Carrier for BitString {
    fn build_oracle(
        source: &NeighborSource,
        sample: &Labeled<Self>,
        k: usize,
        seed: Seed,
    ) -> Result<Box<dyn NeighborOracle<Self>>> {
        match source {
            NeighborSource::Kann(params) => Ok(Box::new(crate::ann::build_ann_index(
                sample.points(),
                params,
                k,
                seed.derive(stream::TRAIN),
            )?)),
            other => generic_oracle(other, sample),
        }
    }
}

/// `n ↦ k`.
#[derive(Clone)]
pub enum KSchedule {
    Fixed(usize),
    /// `⌈√n⌉`, which lies in ω(log n) ∩ o(n).
    SqrtCeil,
    Custom(Arc<dyn Fn(usize) -> usize + Send + Sync>),
}

impl std::fmt::Debug for KSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KSchedule::Fixed(k) => write!(f, "Fixed({k})"),
            KSchedule::SqrtCeil => f.write_str("SqrtCeil"),
            KSchedule::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl KSchedule {
    /// The `k` for a sample of size `n`; must land in `1..=n`.
    pub fn k_for(&self, n: usize) -> Result<usize> {
        let k = match self {
            KSchedule::Fixed(k) => *k,
            KSchedule::SqrtCeil => {
                let r = n.isqrt();
                if r * r == n {
                    r
                } else {
                    r + 1
                }
            }
            KSchedule::Custom(f) => f(n),
        };
        if k == 0 || k > n {
            return Err(Error::InvalidK { k, n });
        }
        Ok(k)
    }
}

/// Majority vote over the neighbours supplied by a [`NeighborSource`].
#[derive(Clone, Debug)]
pub struct KnnRule<T> {
    source: NeighborSource,
    schedule: KSchedule,
    seed: Seed,
    _carrier: PhantomData<fn() -> T>,
}

pub fn make_knn_rule<T: Carrier>(
    source: NeighborSource,
    schedule: KSchedule,
    seed: Seed,
) -> Result<KnnRule<T>> {
    if let KSchedule::Fixed(0) = schedule {
        return Err(Error::InvalidK { k: 0, n: 0 });
    }
    Ok(KnnRule {
        source,
        schedule,
        seed,
        _carrier: PhantomData,
    })
}

impl<T: Carrier> KnnRule<T> {
    pub fn train_knn(&self, sample: &Labeled<T>) -> Result<KnnClassifier<T>> {
        let k = self.schedule.k_for(sample.len())?;
        let oracle = T::build_oracle(&self.source, sample, k, self.seed)?;
        Ok(KnnClassifier {
            oracle,
            labels: sample.labels().to_vec(),
            class_count: sample.class_count(),
            k,
            seed: self.seed,
        })
    }
}

impl<T: Carrier> LearningRule<T> for KnnRule<T> {
    fn train(&self, sample: &Labeled<T>) -> Result<Box<dyn Classifier<T>>> {
        Ok(Box::new(self.train_knn(sample)?))
    }
}

pub struct KnnClassifier<T> {
    oracle: Box<dyn NeighborOracle<T>>,
    labels: Vec<Label>,
    class_count: usize,
    k: usize,
    seed: Seed,
}

impl<T> KnnClassifier<T> {
    pub fn k(&self) -> usize {
        self.k
    }

    fn query_seed(&self, ordinal: u64) -> Seed {
        self.seed.derive(stream::QUERY).derive(ordinal)
    }

    pub fn neighbors(&self, q: &T, ordinal: u64) -> Result<NeighborSet> {
        self.neighbors_k(q, ordinal, self.k)
    }

    fn neighbors_k(&self, q: &T, ordinal: u64, k: usize) -> Result<NeighborSet> {
        self.oracle
            .neighbors(q, k, self.query_seed(ordinal).derive(stream::NEIGHBOR_TIES))
    }

    fn vote(&self, neighbors: &[usize], ordinal: u64) -> Result<Label> {
        let labels: Vec<Label> = neighbors.iter().map(|&i| self.labels[i]).collect();
        majority_vote(
            &labels,
            self.class_count,
            self.query_seed(ordinal).derive(stream::LABEL_TIES),
        )
    }

    /// Predictions for every `k` in `1..=k_max` from a single neighbour
    /// query. Entry `k-1` equals what a classifier trained with that `k`
    /// would return for the same ordinal, since the k-NN list for smaller
    /// `k` is a prefix under a fixed tie order.
    pub fn classify_upto(&self, q: &T, ordinal: u64, k_max: usize) -> Result<Vec<Label>> {
        let nn = self.neighbors_k(q, ordinal, k_max)?;
        (1..=k_max)
            .map(|k| self.vote(&nn.indices[..k], ordinal))
            .collect()
    }
}

impl<T: Send + Sync> Classifier<T> for KnnClassifier<T> {
    fn classify(&self, q: &T, ordinal: u64) -> Result<Label> {
        let nn = self.neighbors(q, ordinal)?;
        self.vote(&nn.indices, ordinal)
    }
}

/// A rule on Ω obtained from a rule on X and a fixed map φ: Ω → X. Training
/// pushes the sample through φ; a query q is answered at φ(q).
pub struct Transported<R, F, X> {
    base: R,
    forward: Arc<F>,
    _target: PhantomData<fn() -> X>,
}

pub fn transport_rule<R, F, X>(base: R, forward: F) -> Transported<R, F, X> {
    Transported {
        base,
        forward: Arc::new(forward),
        _target: PhantomData,
    }
}

struct TransportedClassifier<F, X> {
    inner: Box<dyn Classifier<X>>,
    forward: Arc<F>,
}

impl<O, X, F> Classifier<O> for TransportedClassifier<F, X>
where
    F: Fn(&O) -> Result<X> + Send + Sync,
    X: Send + Sync,
{
    fn classify(&self, q: &O, ordinal: u64) -> Result<Label> {
        self.inner.classify(&(self.forward)(q)?, ordinal)
    }
}

impl<O, X, R, F> LearningRule<O> for Transported<R, F, X>
where
    R: LearningRule<X>,
    F: Fn(&O) -> Result<X> + Send + Sync + 'static,
    X: Send + Sync + 'static,
    O: 'static,
{
    fn train(&self, sample: &Labeled<O>) -> Result<Box<dyn Classifier<O>>> {
        let mapped = sample.try_map(|x| (self.forward)(x))?;
        Ok(Box::new(TransportedClassifier {
            inner: self.base.train(&mapped)?,
            forward: Arc::clone(&self.forward),
        }))
    }
}

/// Fraction of misclassified test points.
pub fn empirical_error<T: Sync>(classifier: &dyn Classifier<T>, test: &Labeled<T>) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let predicted = classifier.classify_all(test.points())?;
    let wrong = predicted
        .iter()
        .zip(test.labels())
        .filter(|(p, y)| p != y)
        .count();
    Ok(wrong as f64 / test.len() as f64)
}
