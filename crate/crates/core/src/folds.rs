//! Cross-validation fold splitting.

use rand::seq::SliceRandom;

use crate::data::Labeled;
use crate::error::{Error, Result};
use crate::seed::{stream, Seed};

/// One fold: indices used for training and the held-out test indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Split `0..n` into `folds` test sets whose sizes differ by at most one.
///
/// When every class has at least `folds` members the split is stratified:
/// each class is shuffled and dealt round-robin, continuing the deal across
/// classes, so per-class counts per fold also differ by at most one.
pub fn split_folds<T>(ds: &Labeled<T>, folds: usize, seed: Seed) -> Result<Vec<Fold>> {
    let n = ds.len();
    if folds < 2 || folds > n {
        return Err(Error::InvalidFolds { folds, n });
    }
    let mut rng = seed.derive(stream::FOLDS).rng();
    let stratify = ds.class_histogram().iter().all(|&c| c == 0 || c >= folds);

    let mut order: Vec<usize> = Vec::with_capacity(n);
    if stratify {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.class_count()];
        for (i, l) in ds.labels().iter().enumerate() {
            by_class[l.index()].push(i);
        }
        for mut members in by_class {
            members.shuffle(&mut rng);
            order.extend(members);
        }
    } else {
        order.extend(0..n);
        order.shuffle(&mut rng);
    }

    let mut assignment = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % folds;
    }
    Ok((0..folds)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}
