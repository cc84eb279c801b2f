use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::borel::{borel_map, grouped_reduce, ReductionConfig, DEFAULT_BITS};
use crate::data::{clamp_unit, Label, Labeled, LabeledDataset, Point, UnitCubeParams};
use crate::error::{Error, Result};
use crate::folds::split_folds;
use crate::knn::{make_knn_rule, Carrier, KSchedule, NeighborSource};
use crate::seed::Seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Euclidean k-NN on normalized attributes.
    Original,
    /// k-NN on Borel codes of normalized attributes.
    Reduced,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Reduced => "reduced",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Variant::Original),
            "reduced" => Ok(Variant::Reduced),
            other => Err(Error::param(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub k_max: usize,
    pub variant: Variant,
    pub bits: u32,
    /// Coordinates per Borel group; `None` means one group.
    pub group_size: Option<usize>,
    /// Fit the normalization on each training fold instead of the whole
    /// dataset.
    pub strict: bool,
    pub seed: Seed,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            k_max: 20,
            variant: Variant::Original,
            bits: DEFAULT_BITS,
            group_size: None,
            strict: false,
            seed: Seed(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub variant: Variant,
    pub n: usize,
    pub folds: usize,
    pub k_max: usize,
    /// `correct[k-1]`: correctly classified points with `k` neighbours.
    pub correct: Vec<usize>,
    pub accuracy: Vec<f64>,
    /// Most accurate `k`, smallest on ties.
    pub best_k: usize,
    pub best_accuracy: f64,
    pub correctly_classified: usize,
    pub incorrectly_classified: usize,
}

/// k-fold cross-validation of the k-NN rule for every `k ∈ 1..=k_max`.
/// Every test point is answered once with `k_max` neighbours; the votes for
/// smaller `k` use prefixes of that list.
pub fn run_cv(ds: &LabeledDataset, cfg: &CvConfig) -> Result<CvReport> {
    let folds = split_folds(ds, cfg.folds, cfg.seed)?;
    let min_train = folds.iter().map(|f| f.train.len()).min().unwrap_or(0);
    if cfg.k_max == 0 || cfg.k_max > min_train {
        return Err(Error::InvalidK {
            k: cfg.k_max,
            n: min_train,
        });
    }
    let reduction = match cfg.variant {
        Variant::Original => None,
        Variant::Reduced => Some(ReductionConfig::new(
            cfg.bits,
            cfg.group_size.unwrap_or(ds.dim()),
        )?),
    };
    let global = if cfg.strict {
        None
    } else {
        Some(UnitCubeParams::fit(ds)?)
    };

    let per_fold: Vec<Vec<usize>> = folds
        .par_iter()
        .map(|fold| {
            let train = ds.subset(&fold.train)?;
            let params = match &global {
                Some(p) => p.clone(),
                None => UnitCubeParams::fit(&train)?,
            };
            let norm = |p: &Point| -> Result<Point> { Ok(clamp_unit(&params.apply(p)?)) };
            let train = train.try_map(norm)?;
            let test: Vec<Point> = fold
                .test
                .iter()
                .map(|&i| norm(&ds.points()[i]))
                .collect::<Result<_>>()?;
            let truth: Vec<Label> = fold.test.iter().map(|&i| ds.labels()[i]).collect();
            let predictions = match reduction {
                None => predict(&train, &test, &fold.test, NeighborSource::Brute, cfg)?,
                Some(r) if r.group_size >= ds.dim() => {
                    let r = ReductionConfig::single(ds.dim(), r.bits)?;
                    let map = |p: &Point| borel_map(p, &r);
                    let test = test.iter().map(map).collect::<Result<Vec<_>>>()?;
                    predict(
                        &train.try_map(map)?,
                        &test,
                        &fold.test,
                        NeighborSource::Sorted1d,
                        cfg,
                    )?
                }
                Some(r) => {
                    let map = |p: &Point| grouped_reduce(p, &r);
                    let test = test.iter().map(map).collect::<Result<Vec<_>>>()?;
                    predict(
                        &train.try_map(map)?,
                        &test,
                        &fold.test,
                        NeighborSource::Brute,
                        cfg,
                    )?
                }
            };
            let mut correct = vec![0usize; cfg.k_max];
            for (row, y) in predictions.iter().zip(&truth) {
                for (k, p) in row.iter().enumerate() {
                    correct[k] += usize::from(p == y);
                }
            }
            Ok(correct)
        })
        .collect::<Result<_>>()?;

    let mut correct = vec![0usize; cfg.k_max];
    for f in &per_fold {
        for (c, x) in correct.iter_mut().zip(f) {
            *c += x;
        }
    }
    let n = ds.len();
    // First maximum: ties go to the smaller k.
    let best = correct
        .iter()
        .enumerate()
        .fold(0, |best, (i, &c)| if c > correct[best] { i } else { best });
    Ok(CvReport {
        variant: cfg.variant,
        n,
        folds: cfg.folds,
        k_max: cfg.k_max,
        accuracy: correct.iter().map(|&c| c as f64 / n as f64).collect(),
        best_k: best + 1,
        best_accuracy: correct[best] as f64 / n as f64,
        correctly_classified: correct[best],
        incorrectly_classified: n - correct[best],
        correct,
    })
}

/// Predictions for `k = 1..=k_max` per test point. Test points are
/// identified by their dataset row, which fixes their tie orders.
fn predict<T: Carrier>(
    train: &Labeled<T>,
    test: &[T],
    rows: &[usize],
    source: NeighborSource,
    cfg: &CvConfig,
) -> Result<Vec<Vec<Label>>> {
    let clf =
        make_knn_rule::<T>(source, KSchedule::Fixed(cfg.k_max), cfg.seed)?.train_knn(train)?;
    test.iter()
        .zip(rows)
        .map(|(q, &row)| clf.classify_upto(q, row as u64, cfg.k_max))
        .collect()
}
