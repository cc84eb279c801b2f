//! Labelled samples, CSV ingestion and unit-cube normalization.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of ℝᵈ. All coordinates are finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: 0, column: i });
        }
        Ok(Point(coords))
    }

    /// Caller guarantees finiteness.
    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for Point {
    /// Panics on non-finite input; use [`Point::new`] for fallible construction.
    fn from(v: Vec<f64>) -> Self {
        Point::new(v).expect("non-finite coordinate")
    }
}

/// Class id. Binary problems use `{0, 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u32);

impl Label {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A labelled sample over an arbitrary carrier (points, codes, bit strings).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Labeled<T> {
    points: Vec<T>,
    labels: Vec<Label>,
    class_count: usize,
    /// Display names of the classes, indexed by class id.
    #[serde(default)]
    class_names: Vec<String>,
}

/// The real-vector sample used throughout.
pub type LabeledDataset = Labeled<Point>;

impl<T> Labeled<T> {
    pub fn new(points: Vec<T>, labels: Vec<Label>, class_count: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if points.len() != labels.len() {
            return Err(Error::param(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        if class_count == 0 {
            return Err(Error::param("class_count must be positive"));
        }
        if let Some(l) = labels.iter().find(|l| l.index() >= class_count) {
            return Err(Error::param(format!(
                "label {} out of range for {class_count} classes",
                l.0
            )));
        }
        Ok(Labeled {
            points,
            labels,
            class_count,
            class_names: Vec::new(),
        })
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Self {
        self.class_names = names;
        self
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Name of class `l`, or its numeric id when no names were recorded.
    pub fn class_name(&self, l: Label) -> String {
        self.class_names
            .get(l.index())
            .cloned()
            .unwrap_or_else(|| l.0.to_string())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, Label)> + '_ {
        self.points.iter().zip(self.labels.iter().copied())
    }

    /// Sub-sample at `indices`, keeping the class count and names.
    pub fn subset(&self, indices: &[usize]) -> Result<Self>
    where
        T: Clone,
    {
        let points = indices.iter().map(|&i| self.points[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Ok(Labeled::new(points, labels, self.class_count)?
            .with_class_names(self.class_names.clone()))
    }

    /// Apply `f` to every point, keeping labels. Used to push a sample
    /// through a fixed map.
    pub fn try_map<U>(&self, f: impl FnMut(&T) -> Result<U>) -> Result<Labeled<U>> {
        let points = self.points.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Labeled {
            points,
            labels: self.labels.clone(),
            class_count: self.class_count,
            class_names: self.class_names.clone(),
        })
    }

    /// Count of each class.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.class_count];
        for l in &self.labels {
            h[l.index()] += 1;
        }
        h
    }
}

impl LabeledDataset {
    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }
}

/// How the label column of a CSV file is selected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    /// The last column.
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Integers select by zero-based index, anything else by header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

/// Load a comma-separated file with a header row.
///
/// Every column other than the label column must be numeric. Class ids are
/// assigned in order of first appearance unless `class_map` fixes them.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    class_map: Option<&HashMap<String, u32>>,
) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, path, label_column, class_map)
}

pub(crate) fn read_csv(
    reader: impl std::io::Read,
    path: &Path,
    label_column: &LabelColumn,
    class_map: Option<&HashMap<String, u32>>,
) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let csv_err = |line: u64, column: &str, message: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        column: column.to_string(),
        message,
    };
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(1, "-", e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.len() < 2 {
        return Err(csv_err(
            1,
            "-",
            "need at least one feature and one label column".into(),
        ));
    }
    let label_idx = match label_column {
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => {
            return Err(csv_err(
                1,
                &i.to_string(),
                format!("only {} columns", headers.len()),
            ))
        }
        LabelColumn::Name(n) => headers
            .iter()
            .position(|h| h == n)
            .ok_or_else(|| csv_err(1, n, "no such column".into()))?,
        LabelColumn::Last => headers.len() - 1,
    };

    let mut names: Vec<String> = Vec::new();
    let mut ids: HashMap<String, u32> = HashMap::new();
    if let Some(map) = class_map {
        let count = map.values().map(|&v| v as usize + 1).max().unwrap_or(0);
        names = vec![String::new(); count];
        for (k, &v) in map {
            names[v as usize] = k.clone();
            ids.insert(k.clone(), v);
        }
    }

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            csv_err(line, "-", e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != headers.len() {
            return Err(csv_err(
                line,
                "-",
                format!(
                    "ragged row: {} fields, header has {}",
                    record.len(),
                    headers.len()
                ),
            ));
        }
        let mut coords = Vec::with_capacity(headers.len() - 1);
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if j == label_idx {
                let id = match ids.get(cell) {
                    Some(&id) => id,
                    None if class_map.is_some() => {
                        return Err(csv_err(
                            line,
                            &headers[j],
                            format!("label {cell:?} not in class map"),
                        ))
                    }
                    None => {
                        let id = names.len() as u32;
                        names.push(cell.to_string());
                        ids.insert(cell.to_string(), id);
                        id
                    }
                };
                labels.push(Label(id));
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| csv_err(line, &headers[j], format!("non-numeric value {cell:?}")))?;
            if !v.is_finite() {
                return Err(csv_err(
                    line,
                    &headers[j],
                    format!("non-finite value {cell:?}"),
                ));
            }
            coords.push(v);
        }
        points.push(Point(coords));
    }
    if points.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let count = names.len();
    Ok(Labeled::new(points, labels, count)?.with_class_names(names))
}

/// Per-attribute affine map onto `[0, 1]`, fitted on one sample and
/// reusable on another.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitCubeParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl UnitCubeParams {
    pub fn fit(ds: &LabeledDataset) -> Result<Self> {
        Self::fit_points(ds.points())
    }

    pub fn fit_points(points: &[Point]) -> Result<Self> {
        let d = points.first().ok_or(Error::EmptyDataset)?.dim();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for (row, p) in points.iter().enumerate() {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: p.dim(),
                });
            }
            for (j, &v) in p.coords().iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row, column: j });
                }
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(UnitCubeParams { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Maps observed min to 0 and max to 1. Constant attributes map to 0.
    /// Values outside the fitted range land outside `[0, 1]`; see
    /// [`clamp_unit`].
    pub fn apply(&self, p: &Point) -> Result<Point> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: p.dim(),
            });
        }
        let coords = p
            .coords()
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect();
        Ok(Point(coords))
    }
}

/// Normalize every attribute onto `[0, 1]`, fitting the map on `ds` unless
/// `params` are supplied. Returns the map that was used.
pub fn normalize_unit_cube(
    ds: &LabeledDataset,
    params: Option<&UnitCubeParams>,
) -> Result<(LabeledDataset, UnitCubeParams)> {
    let params = match params {
        Some(p) => p.clone(),
        None => UnitCubeParams::fit(ds)?,
    };
    let out = ds.try_map(|p| params.apply(p))?;
    Ok((out, params))
}

/// Clamp every coordinate into `[0, 1]`.
pub fn clamp_unit(p: &Point) -> Point {
    Point(p.coords().iter().map(|v| v.clamp(0.0, 1.0)).collect())
}
