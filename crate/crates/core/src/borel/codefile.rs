//! Text format for reduced datasets.
//!
//! ```text
//! # borelknn reduce v1 d=4 bits=16 group_size=4
//! code_1,class
//! 3735928559,setosa
//! ```
//!
//! Codes are decimal integers, one column per group, and the label is the
//! last column. The header line fixes the layout so a reader rebuilds the
//! exact codes.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use num_bigint::BigUint;

use super::{BorelCode, GroupedCode, ReductionConfig};
use crate::data::{Label, Labeled};
use crate::error::{Error, Result};

const MAGIC: &str = "# borelknn reduce v1";

/// A reduced dataset with the layout it was produced with.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeFile {
    /// Dimension of the original points.
    pub dim: usize,
    pub config: ReductionConfig,
    pub data: Labeled<GroupedCode>,
}

impl CodeFile {
    fn group_dims(&self) -> Vec<usize> {
        group_dims(self.dim, self.config.group_size)
    }
}

fn group_dims(dim: usize, g: usize) -> Vec<usize> {
    (0..dim.div_ceil(g)).map(|i| g.min(dim - i * g)).collect()
}

pub fn write_codes(mut w: impl Write, file: &CodeFile) -> Result<()> {
    let io = |e| Error::io("<output>", e);
    let groups = file.group_dims().len();
    let mut text = format!(
        "{MAGIC} d={} bits={} group_size={}\n",
        file.dim, file.config.bits, file.config.group_size
    );
    let mut head: Vec<String> = (1..=groups).map(|i| format!("code_{i}")).collect();
    head.push("class".into());
    text.push_str(&head.join(","));
    text.push('\n');
    for (code, label) in file.data.iter() {
        for c in code.codes() {
            text.push_str(&c.value().to_string());
            text.push(',');
        }
        text.push_str(&file.data.class_name(label));
        text.push('\n');
    }
    w.write_all(text.as_bytes()).map_err(io)
}

fn field(header: &str, key: &str) -> Option<usize> {
    header
        .split_whitespace()
        .find_map(|t| t.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

/// Read a file written by [`write_codes`]. Labels are mapped through
/// `class_map` when given, else numbered in order of appearance.
pub fn read_codes(
    path: impl AsRef<Path>,
    class_map: Option<&HashMap<String, u32>>,
) -> Result<CodeFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: u64, message: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        column: "-".into(),
        message,
    };
    let (first, body) = text.split_once('\n').unwrap_or((&text, ""));
    let rest = first
        .strip_prefix(MAGIC)
        .ok_or_else(|| bad(1, "not a reduced code file".into()))?;
    let (dim, bits, g) = match (
        field(rest, "d"),
        field(rest, "bits"),
        field(rest, "group_size"),
    ) {
        (Some(d), Some(b), Some(g)) => (d, b as u32, g),
        _ => return Err(bad(1, "header needs d, bits and group_size".into())),
    };
    let config = ReductionConfig::new(bits, g)?;
    if dim == 0 || g > dim {
        return Err(bad(
            1,
            format!("group size {g} does not fit dimension {dim}"),
        ));
    }
    let dims = group_dims(dim, g);

    let mut names: Vec<String> = Vec::new();
    let mut ids: HashMap<String, u32> = HashMap::new();
    if let Some(map) = class_map {
        names = vec![String::new(); map.values().map(|&v| v as usize + 1).max().unwrap_or(0)];
        for (k, &v) in map {
            names[v as usize] = k.clone();
            ids.insert(k.clone(), v);
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    let mut codes = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record =
            record.map_err(|e| bad(e.position().map_or(0, |p| p.line() + 1), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() + 1);
        if record.len() != dims.len() + 1 {
            return Err(bad(
                line,
                format!("expected {} fields, found {}", dims.len() + 1, record.len()),
            ));
        }
        let mut groups = Vec::with_capacity(dims.len());
        for (cell, &d) in record.iter().zip(&dims) {
            let value: BigUint = cell
                .trim()
                .parse()
                .map_err(|_| bad(line, format!("bad code {cell:?}")))?;
            groups.push(BorelCode::new(value, d, bits).map_err(|e| bad(line, e.to_string()))?);
        }
        codes.push(GroupedCode::new(groups)?);
        let name = record[dims.len()].trim();
        let id = match ids.get(name) {
            Some(&id) => id,
            None if class_map.is_some() => {
                return Err(bad(line, format!("label {name:?} not in class map")))
            }
            None => {
                let id = names.len() as u32;
                names.push(name.to_string());
                ids.insert(name.to_string(), id);
                id
            }
        };
        labels.push(Label(id));
    }
    if codes.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let count = names.len();
    Ok(CodeFile {
        dim,
        config,
        data: Labeled::new(codes, labels, count)?.with_class_names(names),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::borel::grouped_reduce;
    use crate::data::Point;

    fn sample(g: usize) -> CodeFile {
        let config = ReductionConfig::new(20, g).unwrap();
        let pts = [
            vec![0.1, 0.9, 1.0],
            vec![0.0, 0.5, 0.25],
            vec![0.3, 0.3, 0.7],
        ];
        let codes = pts
            .iter()
            .map(|p| grouped_reduce(&Point::new(p.clone()).unwrap(), &config).unwrap())
            .collect();
        let data = Labeled::new(codes, vec![Label(1), Label(0), Label(1)], 2)
            .unwrap()
            .with_class_names(vec!["a".into(), "b".into()]);
        CodeFile {
            dim: 3,
            config,
            data,
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for g in 1..=3 {
            let path = dir.path().join(format!("g{g}.csv"));
            let file = sample(g);
            write_codes(std::fs::File::create(&path).unwrap(), &file).unwrap();
            let text = std::fs::read_to_string(&path).unwrap();
            assert!(text.starts_with(&format!(
                "# borelknn reduce v1 d=3 bits=20 group_size={g}\n"
            )));
            let back = read_codes(&path, None).unwrap();
            assert_eq!(back.data.points(), file.data.points());
            assert_eq!(back.data.class_name(back.data.labels()[0]), "b");
        }
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_codes(&path, None).is_err());
        std::fs::write(
            &path,
            "# borelknn reduce v1 d=2 bits=2 group_size=2\ncode_1,class\n99,a\n",
        )
        .unwrap();
        assert!(read_codes(&path, None).is_err());
    }
}
