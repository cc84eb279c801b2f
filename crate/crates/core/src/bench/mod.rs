//! Experiment harness: synthetic distributions with known Bayes error,
//! consistency curves, cross-validation and report files.

mod consistency;
mod cv;
mod synth;

pub use consistency::{run_consistency, ConsistencyCurve, RuleKind, DEFAULT_TEST_SIZE};
pub use cv::{run_cv, CvConfig, CvReport, Variant};
pub use synth::{bayes_error, gaussian_points, synth_mm2, EtaPiece, Marginal, Mm2Spec, Region};

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instability::InstabilityProfile;
use crate::seed::Seed;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::param(format!("unknown report format {other:?}"))),
        }
    }
}

/// Results that can be written as a table.
pub trait Tabular: Serialize {
    fn columns(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
}

impl Tabular for CvReport {
    fn columns(&self) -> Vec<&'static str> {
        vec!["k", "accuracy", "correct", "incorrect"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.correct
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                vec![
                    (i + 1).to_string(),
                    self.accuracy[i].to_string(),
                    c.to_string(),
                    (self.n - c).to_string(),
                ]
            })
            .collect()
    }
}

impl Tabular for ConsistencyCurve {
    fn columns(&self) -> Vec<&'static str> {
        vec!["n", "mean_error", "std_error", "bayes_error", "excess"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        (0..self.n_grid.len())
            .map(|i| {
                vec![
                    self.n_grid[i].to_string(),
                    self.mean_error[i].to_string(),
                    self.std_error[i].to_string(),
                    self.bayes_error.to_string(),
                    self.excess[i].to_string(),
                ]
            })
            .collect()
    }
}

impl Tabular for InstabilityProfile {
    fn columns(&self) -> Vec<&'static str> {
        vec!["radius", "mean_count"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.radii
            .iter()
            .zip(&self.mean_counts)
            .map(|(r, c)| vec![r.to_string(), c.to_string()])
            .collect()
    }
}

#[derive(Serialize)]
struct Envelope<'a, R, C> {
    tool: &'static str,
    version: &'static str,
    seed: Seed,
    config: &'a C,
    result: &'a R,
}

/// Write `results` with the toolkit version, seed and configuration. CSV
/// files carry the provenance in leading `#` lines.
pub fn emit_report<R: Tabular, C: Serialize>(
    results: &R,
    config: &C,
    seed: Seed,
    format: ReportFormat,
    path: &Path,
) -> Result<()> {
    let text = render_report(results, config, seed, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn render_report<R: Tabular, C: Serialize>(
    results: &R,
    config: &C,
    seed: Seed,
    format: ReportFormat,
) -> Result<String> {
    let rows = results.rows();
    if rows.is_empty() {
        return Err(Error::param("nothing to report"));
    }
    Ok(match format {
        ReportFormat::Json => {
            let env = Envelope {
                tool: "borelknn",
                version: TOOL_VERSION,
                seed,
                config,
                result: results,
            };
            let mut s = serde_json::to_string_pretty(&env)?;
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = format!(
                "# borelknn {TOOL_VERSION}\n# seed={seed}\n# config={}\n",
                serde_json::to_string(config)?
            );
            s.push_str(&results.columns().join(","));
            s.push('\n');
            for r in rows {
                s.push_str(&r.join(","));
                s.push('\n');
            }
            s
        }
    })
}
