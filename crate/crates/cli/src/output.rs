use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use serde::ser::SerializeMap;
use serde::Serialize;

use borelknn::bench::{render_report, ReportFormat, Tabular};
use borelknn::Seed;

use crate::args::{Format, GlobalArgs};

pub struct Context {
    pub seed: Seed,
    pub format: Format,
    out_dir: Option<PathBuf>,
    verbose: bool,
}

impl Context {
    pub fn new(global: &GlobalArgs) -> Self {
        Context {
            seed: Seed(global.seed.unwrap_or(0)),
            format: global.format.unwrap_or(Format::Csv),
            out_dir: global.out_dir.clone(),
            verbose: global.verbose,
        }
    }

    pub fn note(&self, msg: fmt::Arguments<'_>) {
        if self.verbose {
            eprintln!("{msg}");
        }
    }

    pub fn extension(&self) -> &'static str {
        match self.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    fn report_format(&self) -> ReportFormat {
        match self.format {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }

    /// Write `text` to `explicit`, else to `OUT_DIR/name.ext`, else stdout.
    pub fn write(&self, name: &str, explicit: Option<&Path>, text: &str) -> anyhow::Result<()> {
        let path = match (explicit, &self.out_dir) {
            (Some(p), _) => Some(p.to_path_buf()),
            (None, Some(dir)) => {
                std::fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                Some(dir.join(format!("{name}.{}", self.extension())))
            }
            (None, None) => None,
        };
        match path {
            Some(p) => {
                std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
                self.note(format_args!("wrote {}", p.display()));
            }
            None => std::io::stdout()
                .lock()
                .write_all(text.as_bytes())
                .context("writing to stdout")?,
        }
        Ok(())
    }

    pub fn emit<R: Tabular, C: Serialize>(
        &self,
        name: &str,
        explicit: Option<&Path>,
        result: &R,
        config: &C,
    ) -> anyhow::Result<()> {
        let text = render_report(result, config, self.seed, self.report_format())?;
        self.write(name, explicit, &text)
    }
}

/// Named scalar results, one row per entry.
pub struct Summary(pub Vec<(&'static str, serde_json::Value)>);

impl Serialize for Summary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl Tabular for Summary {
    fn columns(&self) -> Vec<&'static str> {
        vec!["key", "value"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.0
            .iter()
            .map(|(k, v)| {
                let v = match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                vec![k.to_string(), v]
            })
            .collect()
    }
}
