use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::synth::{bayes_error, synth_mm2, Mm2Spec};
use crate::ann::{thermometer_encode, AnnParams};
use crate::borel::{borel_map, BorelCode, ReductionConfig};
use crate::data::{Label, Point};
use crate::error::{Error, Result};
use crate::knn::{
    empirical_error, make_knn_rule, transport_rule, KSchedule, LearningRule, NeighborSource,
};
use crate::metric::BitString;
use crate::seed::{stream, Seed};

pub const DEFAULT_TEST_SIZE: usize = 10_000;

/// The rules a consistency run can exercise, all with `k = ⌈√n⌉`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum RuleKind {
    /// Exact k-NN in the original space.
    Knn,
    /// Exact k-NN on Borel codes through the sorted index.
    Reduced { bits: u32 },
    /// Hamming-cube k-ANN on thermometer codes.
    Kann { levels: u32, c: f64, delta: f64 },
    /// Worst-case legal (k, c)-ANN answers favouring `bias`.
    Adversarial { c: f64, bias: u32 },
}

impl RuleKind {
    pub fn name(&self) -> &'static str {
        match self {
            RuleKind::Knn => "knn",
            RuleKind::Reduced { .. } => "reduced",
            RuleKind::Kann { .. } => "kann",
            RuleKind::Adversarial { .. } => "adversarial",
        }
    }

    pub fn build(&self, dim: usize, seed: Seed) -> Result<Box<dyn LearningRule<Point>>> {
        let schedule = KSchedule::SqrtCeil;
        Ok(match self {
            RuleKind::Knn => Box::new(make_knn_rule::<Point>(
                NeighborSource::Brute,
                schedule,
                seed,
            )?),
            RuleKind::Adversarial { c, bias } => Box::new(make_knn_rule::<Point>(
                NeighborSource::Adversarial {
                    c: *c,
                    bias: Label(*bias),
                },
                schedule,
                seed,
            )?),
            RuleKind::Reduced { bits } => {
                let cfg = ReductionConfig::single(dim, *bits)?;
                let base = make_knn_rule::<BorelCode>(NeighborSource::Sorted1d, schedule, seed)?;
                Box::new(transport_rule(base, move |p: &Point| borel_map(p, &cfg)))
            }
            RuleKind::Kann { levels, c, delta } => {
                let levels = *levels;
                let base = make_knn_rule::<BitString>(
                    NeighborSource::Kann(AnnParams::new(*c, *delta)?),
                    schedule,
                    seed,
                )?;
                Box::new(transport_rule(base, move |p: &Point| {
                    thermometer_encode(p, levels)
                }))
            }
        })
    }
}

/// Error of one rule as the sample grows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCurve {
    pub rule: String,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub test_size: usize,
    pub bayes_error: f64,
    /// `errors[i][t]`: test error at `n_grid[i]` in trial `t`.
    pub errors: Vec<Vec<f64>>,
    pub mean_error: Vec<f64>,
    pub std_error: Vec<f64>,
    /// `mean_error − bayes_error`.
    pub excess: Vec<f64>,
}

/// For every `n` and trial: train on a fresh sample of size `n`, test on a
/// fresh sample of `test_size` points.
pub fn run_consistency(
    spec: &Mm2Spec,
    rule: &RuleKind,
    n_grid: &[usize],
    trials: usize,
    test_size: usize,
    seed: Seed,
) -> Result<ConsistencyCurve> {
    let bayes = bayes_error(spec)?;
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] == 0 {
        return Err(Error::param(
            "n grid must be a nonempty increasing list of positive sizes",
        ));
    }
    if trials == 0 || test_size == 0 {
        return Err(Error::param("trials and test size must be positive"));
    }
    let jobs: Vec<(usize, usize)> = n_grid
        .iter()
        .flat_map(|&n| (0..trials).map(move |t| (n, t)))
        .collect();
    let flat: Vec<f64> = jobs
        .par_iter()
        .map(|&(n, trial)| {
            let s = seed.derive(n as u64).derive(trial as u64);
            let wrap = |e: Error| Error::Trial {
                n,
                trial,
                source: Box::new(e),
            };
            let run = || -> Result<f64> {
                let train = synth_mm2(spec, n, s.derive(stream::TRAIN))?;
                let test = synth_mm2(spec, test_size, s.derive(stream::TEST))?;
                let classifier = rule.build(spec.dim, s)?.train(&train)?;
                empirical_error(classifier.as_ref(), &test)
            };
            run().map_err(wrap)
        })
        .collect::<Result<_>>()?;
    let errors: Vec<Vec<f64>> = flat.chunks(trials).map(<[f64]>::to_vec).collect();
    let mean_error: Vec<f64> = errors
        .iter()
        .map(|e| e.iter().sum::<f64>() / trials as f64)
        .collect();
    let std_error = errors
        .iter()
        .zip(&mean_error)
        .map(|(e, m)| {
            if trials < 2 {
                0.0
            } else {
                (e.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (trials - 1) as f64).sqrt()
            }
        })
        .collect();
    Ok(ConsistencyCurve {
        rule: rule.name().to_string(),
        n_grid: n_grid.to_vec(),
        trials,
        test_size,
        bayes_error: bayes,
        excess: mean_error.iter().map(|m| m - bayes).collect(),
        errors,
        mean_error,
        std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_concept_is_learned() {
        let spec = Mm2Spec::constant(2, 0.0);
        let curve = run_consistency(&spec, &RuleKind::Knn, &[20, 80], 2, 500, Seed(1)).unwrap();
        assert!(curve.excess.iter().all(|&e| e.abs() < 1e-12));
        assert_eq!(curve.errors.len(), 2);
        assert!(curve.errors.iter().all(|e| e.len() == 2));
    }

    #[test]
    fn bad_grids() {
        let spec = Mm2Spec::step();
        assert!(run_consistency(&spec, &RuleKind::Knn, &[100, 50], 1, 10, Seed(0)).is_err());
        assert!(run_consistency(&spec, &RuleKind::Knn, &[], 1, 10, Seed(0)).is_err());
        assert!(run_consistency(&spec, &RuleKind::Knn, &[10], 0, 10, Seed(0)).is_err());
    }

    #[test]
    fn failures_carry_coordinates() {
        // Gaussian points leave [0, 1], so the Borel map rejects them.
        let text = r#"{"dim": 1, "marginal": {"kind": "gaussian"},
            "eta": [{"region": {"lower": [null], "upper": [null]}, "p": 0.5}]}"#;
        let spec = Mm2Spec::from_json(text).unwrap();
        let err = run_consistency(
            &spec,
            &RuleKind::Reduced { bits: 16 },
            &[30],
            1,
            10,
            Seed(0),
        )
        .unwrap_err();
        assert!(
            matches!(
                err,
                Error::Trial {
                    n: 30,
                    trial: 0,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn rules_run_on_the_step_spec() {
        let spec = Mm2Spec::step();
        for rule in [
            RuleKind::Reduced { bits: 16 },
            RuleKind::Adversarial { c: 0.2, bias: 1 },
            RuleKind::Kann {
                levels: 16,
                c: 0.5,
                delta: 0.25,
            },
        ] {
            let curve = run_consistency(&spec, &rule, &[64], 1, 200, Seed(4)).unwrap();
            assert!(
                curve.mean_error[0] <= 0.5,
                "{}: {:?}",
                rule.name(),
                curve.mean_error
            );
        }
    }
}
