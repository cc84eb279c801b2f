use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalCdf};

use crate::data::{Label, Labeled, LabeledDataset, Point};
use crate::error::{Error, Result};
use crate::seed::Seed;

const MASS_TOLERANCE: f64 = 1e-9;

/// Law of `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Marginal {
    /// Uniform on `[0,1]ᵈ`.
    Uniform,
    /// Independent normal coordinates.
    Gaussian {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        std: f64,
    },
    /// Uniform over a fixed list of points.
    Empirical { points: Vec<Vec<f64>> },
}

fn one() -> f64 {
    1.0
}

/// Axis-aligned box `∏ [lowerᵢ, upperᵢ)`; a missing bound is unbounded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

impl Region {
    /// The whole space.
    pub fn everything(dim: usize) -> Self {
        Region {
            lower: vec![None; dim],
            upper: vec![None; dim],
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &v)| {
            self.lower[i].is_none_or(|lo| v >= lo) && self.upper[i].is_none_or(|hi| v < hi)
        })
    }

    fn bounds(&self, i: usize) -> (f64, f64) {
        (
            self.lower[i].unwrap_or(f64::NEG_INFINITY),
            self.upper[i].unwrap_or(f64::INFINITY),
        )
    }

    fn intersect(&self, other: &Region) -> Region {
        let pick = |a: Option<f64>, b: Option<f64>, f: fn(f64, f64) -> f64| match (a, b) {
            (Some(x), Some(y)) => Some(f(x, y)),
            (x, None) => x,
            (None, y) => y,
        };
        Region {
            lower: self
                .lower
                .iter()
                .zip(&other.lower)
                .map(|(&a, &b)| pick(a, b, f64::max))
                .collect(),
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(&a, &b)| pick(a, b, f64::min))
                .collect(),
        }
    }
}

/// One piece of the regression function: `η = p` on `region`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaPiece {
    pub region: Region,
    pub p: f64,
}

/// A distribution of labelled points: marginal of `X` and a piecewise
/// constant `η(x) = P(Y = 1 | X = x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mm2Spec {
    pub dim: usize,
    pub marginal: Marginal,
    pub eta: Vec<EtaPiece>,
}

impl Mm2Spec {
    /// Uniform on `[0,1]ᵈ` with constant `η`.
    pub fn constant(dim: usize, p: f64) -> Self {
        Mm2Spec {
            dim,
            marginal: Marginal::Uniform,
            eta: vec![EtaPiece {
                region: Region::everything(dim),
                p,
            }],
        }
    }

    /// Uniform on `[0,1]`, `η = 0.9` on `[0, 0.5)` and `0.1` on `[0.5, 1]`.
    /// Bayes error 0.1.
    pub fn step() -> Self {
        Mm2Spec {
            dim: 1,
            marginal: Marginal::Uniform,
            eta: vec![
                EtaPiece {
                    region: Region {
                        lower: vec![None],
                        upper: vec![Some(0.5)],
                    },
                    p: 0.9,
                },
                EtaPiece {
                    region: Region {
                        lower: vec![Some(0.5)],
                        upper: vec![None],
                    },
                    p: 0.1,
                },
            ],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Mm2Spec =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Probability of `region` under the marginal.
    pub fn mass(&self, region: &Region) -> f64 {
        match &self.marginal {
            Marginal::Uniform => (0..self.dim)
                .map(|i| {
                    let (lo, hi) = region.bounds(i);
                    (hi.min(1.0) - lo.max(0.0)).max(0.0)
                })
                .product(),
            Marginal::Gaussian { mean, std } => {
                let n = NormalCdf::new(*mean, *std).expect("validated");
                (0..self.dim)
                    .map(|i| {
                        let (lo, hi) = region.bounds(i);
                        (n.cdf(hi) - n.cdf(lo)).max(0.0)
                    })
                    .product()
            }
            Marginal::Empirical { points } => {
                points.iter().filter(|p| region.contains(p)).count() as f64 / points.len() as f64
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.dim == 0 {
            return bad("dimension must be positive".into());
        }
        match &self.marginal {
            Marginal::Uniform => {}
            Marginal::Gaussian { mean, std } => {
                if !(mean.is_finite() && std.is_finite() && *std > 0.0) {
                    return bad(format!(
                        "gaussian needs finite mean and positive std, got ({mean}, {std})"
                    ));
                }
            }
            Marginal::Empirical { points } => {
                if points.is_empty() {
                    return bad("empirical marginal has no points".into());
                }
                if let Some(p) = points
                    .iter()
                    .find(|p| p.len() != self.dim || p.iter().any(|v| !v.is_finite()))
                {
                    return bad(format!(
                        "empirical point {p:?} is not a finite {}-vector",
                        self.dim
                    ));
                }
            }
        }
        if self.eta.is_empty() {
            return bad("eta has no regions".into());
        }
        for (i, piece) in self.eta.iter().enumerate() {
            if !(0.0..=1.0).contains(&piece.p) {
                return bad(format!(
                    "eta piece {i} has probability {} outside [0, 1]",
                    piece.p
                ));
            }
            if piece.region.lower.len() != self.dim || piece.region.upper.len() != self.dim {
                return bad(format!(
                    "eta piece {i} is not a {}-dimensional box",
                    self.dim
                ));
            }
        }
        let total: f64 = self.eta.iter().map(|e| self.mass(&e.region)).sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return bad(format!("regions cover mass {total}, not 1"));
        }
        for i in 0..self.eta.len() {
            for j in i + 1..self.eta.len() {
                let overlap = self.mass(&self.eta[i].region.intersect(&self.eta[j].region));
                if overlap > MASS_TOLERANCE {
                    return bad(format!("regions {i} and {j} overlap with mass {overlap}"));
                }
            }
        }
        Ok(())
    }

    /// `η(x)`; the first region containing `x` wins.
    pub fn eta_at(&self, x: &[f64]) -> Result<f64> {
        self.eta
            .iter()
            .find(|e| e.region.contains(x))
            .map(|e| e.p)
            .ok_or_else(|| Error::InvalidSpec(format!("no region contains {x:?}")))
    }

    fn sample_x(&self, rng: &mut impl Rng) -> Vec<f64> {
        match &self.marginal {
            Marginal::Uniform => (0..self.dim).map(|_| rng.random::<f64>()).collect(),
            Marginal::Gaussian { mean, std } => {
                let n = Normal::new(*mean, *std).expect("validated");
                (0..self.dim).map(|_| n.sample(rng)).collect()
            }
            Marginal::Empirical { points } => points[rng.random_range(0..points.len())].clone(),
        }
    }
}

/// `n` i.i.d. draws of `(X, Y)` with `Y ~ Bernoulli(η(X))`.
pub fn synth_mm2(spec: &Mm2Spec, n: usize, seed: Seed) -> Result<LabeledDataset> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = seed.rng();
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x = spec.sample_x(&mut rng);
        let p = spec.eta_at(&x)?;
        labels.push(Label(u32::from(rng.random::<f64>() < p)));
        points.push(Point::from(x));
    }
    Labeled::new(points, labels, 2)
}

/// `E[min(η, 1 − η)]`.
pub fn bayes_error(spec: &Mm2Spec) -> Result<f64> {
    spec.validate()?;
    Ok(spec
        .eta
        .iter()
        .map(|e| spec.mass(&e.region) * e.p.min(1.0 - e.p))
        .sum())
}

/// `n` standard normal points in ℝᵈ.
pub fn gaussian_points(n: usize, d: usize, seed: Seed) -> Vec<Point> {
    let mut rng = seed.rng();
    (0..n)
        .map(|_| {
            Point::from(
                (0..d)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect::<Vec<f64>>(),
            )
        })
        .collect()
}
