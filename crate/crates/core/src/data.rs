//! Pattern sets: CSV ingestion, [0,1] normalization, splits and the 5x2
//! cross-validation protocol.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::argmax;

/// Row-major input and target matrices with their metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    input_width: usize,
    target_width: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    pub column_names: Vec<String>,
    /// Original class labels, in encoded order, when the target is a class.
    pub class_names: Vec<String>,
    /// Per-input `(min, max)` recorded by [`normalize`].
    pub ranges: Option<Vec<(f64, f64)>>,
    /// Rows skipped while loading because of missing cells.
    pub dropped_rows: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        input_width: usize,
        target_width: usize,
        inputs: Vec<f64>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        if input_width == 0 || target_width == 0 {
            return Err(Error::ShapeMismatch {
                expected: 1,
                found: 0,
            });
        }
        if !inputs.len().is_multiple_of(input_width) {
            return Err(Error::ShapeMismatch {
                expected: input_width,
                found: inputs.len() % input_width,
            });
        }
        let rows = inputs.len() / input_width;
        if targets.len() != rows * target_width {
            return Err(Error::ShapeMismatch {
                expected: rows * target_width,
                found: targets.len(),
            });
        }
        if rows == 0 {
            return Err(Error::EmptyDataset);
        }
        if inputs.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig {
                field: "data",
                reason: "non-finite value".into(),
            });
        }
        Ok(Dataset {
            name: name.into(),
            input_width,
            target_width,
            inputs,
            targets,
            column_names: (0..input_width).map(|i| format!("x{i}")).collect(),
            class_names: Vec::new(),
            ranges: None,
            dropped_rows: 0,
        })
    }

    /// Builds a dataset from per-row slices.
    pub fn from_rows(name: &str, inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Self> {
        let iw = inputs.first().map_or(0, Vec::len);
        let tw = targets.first().map_or(0, Vec::len);
        if inputs.iter().any(|r| r.len() != iw) || targets.iter().any(|r| r.len() != tw) {
            return Err(Error::ShapeMismatch {
                expected: iw,
                found: 0,
            });
        }
        if inputs.len() != targets.len() {
            return Err(Error::ShapeMismatch {
                expected: inputs.len(),
                found: targets.len(),
            });
        }
        Dataset::new(name, iw, tw, inputs.concat(), targets.concat())
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.input_width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn target_width(&self) -> usize {
        self.target_width
    }

    pub fn input(&self, row: usize) -> &[f64] {
        &self.inputs[row * self.input_width..(row + 1) * self.input_width]
    }

    pub fn target(&self, row: usize) -> &[f64] {
        &self.targets[row * self.target_width..(row + 1) * self.target_width]
    }

    /// Class of each pattern: target ≥ 0.5 for one target column, argmax
    /// otherwise.
    pub fn labels(&self) -> Vec<usize> {
        (0..self.len())
            .map(|r| {
                let t = self.target(r);
                if t.len() == 1 {
                    usize::from(t[0] >= 0.5)
                } else {
                    argmax(t)
                }
            })
            .collect()
    }

    /// Patterns at `rows`, in that order. Metadata is carried over.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(rows.len() * self.input_width);
        let mut targets = Vec::with_capacity(rows.len() * self.target_width);
        for &r in rows {
            inputs.extend_from_slice(self.input(r));
            targets.extend_from_slice(self.target(r));
        }
        Dataset {
            inputs,
            targets,
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Dataset {
        Dataset {
            name: self.name.clone(),
            input_width: self.input_width,
            target_width: self.target_width,
            inputs: Vec::new(),
            targets: Vec::new(),
            column_names: self.column_names.clone(),
            class_names: self.class_names.clone(),
            ranges: self.ranges.clone(),
            dropped_rows: self.dropped_rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CsvSchema {
    /// 0-based target columns; empty means the last column.
    pub target_columns: Vec<usize>,
    /// One-hot encode class targets with more than two classes. When false,
    /// the class index is scaled into a single [0,1] column.
    pub one_hot: bool,
    pub header: bool,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            target_columns: Vec::new(),
            one_hot: true,
            header: true,
        }
    }
}

enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

/// Reads a comma-separated file. Feature columns whose first present value
/// is not a number are treated as categorical and coded by sorted value.
/// Rows with a missing cell (`?` or empty) are dropped and counted.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(&name, &text, schema)
}

pub fn parse_csv(name: &str, text: &str, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let cells: Vec<String> = record.iter().map(str::to_owned).collect();
        match width {
            None => width = Some(cells.len()),
            Some(w) if w != cells.len() => {
                return Err(Error::InconsistentWidth {
                    line,
                    expected: w,
                    found: cells.len(),
                })
            }
            _ => {}
        }
        if schema.header && header.is_none() {
            header = Some(cells);
            continue;
        }
        rows.push((line, cells));
    }
    let width = width.ok_or(Error::EmptyFile)?;
    if width < 2 {
        return Err(Error::config("csv", "need at least one input and one target column"));
    }

    let targets: Vec<usize> = if schema.target_columns.is_empty() {
        vec![width - 1]
    } else {
        schema.target_columns.clone()
    };
    if let Some(&bad) = targets.iter().find(|&&c| c >= width) {
        return Err(Error::config(
            "target_columns",
            format!("column {bad} beyond width {width}"),
        ));
    }
    if targets.len() >= width {
        return Err(Error::config("target_columns", "no input columns left"));
    }
    let features: Vec<usize> = (0..width).filter(|c| !targets.contains(c)).collect();

    let total_rows = rows.len();
    rows.retain(|(_, cells)| !cells.iter().any(|c| is_missing(c)));
    let dropped = total_rows - rows.len();
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }

    let read_column = |col: usize| -> Result<Column> {
        if rows[0].1[col].parse::<f64>().is_err() {
            return Ok(Column::Categorical(
                rows.iter().map(|(_, c)| c[col].clone()).collect(),
            ));
        }
        rows.iter()
            .map(|(line, cells)| {
                cells[col].parse::<f64>().map_err(|_| Error::Parse {
                    line: *line,
                    column: col + 1,
                    message: format!("`{}` is not a number", cells[col]),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Column::Numeric)
    };

    let n = rows.len();
    let mut input_cols = Vec::with_capacity(features.len());
    for &c in &features {
        input_cols.push(match read_column(c)? {
            Column::Numeric(v) => v,
            Column::Categorical(v) => encode_categories(&v).1,
        });
    }

    let (target_width, target_values, class_names) = if targets.len() == 1 {
        let raw: Vec<String> = rows.iter().map(|(_, c)| c[targets[0]].clone()).collect();
        let (names, codes) = encode_classes(&raw);
        let k = names.len();
        if k > 2 && schema.one_hot {
            let mut t = vec![0.0; n * k];
            for (r, &code) in codes.iter().enumerate() {
                t[r * k + code as usize] = 1.0;
            }
            (k, t, names)
        } else {
            let scale = (k.max(2) - 1) as f64;
            (1, codes.iter().map(|&c| c / scale).collect(), names)
        }
    } else {
        let mut cols = Vec::new();
        for &c in &targets {
            match read_column(c)? {
                Column::Numeric(v) => cols.push(min_max(&v).0),
                Column::Categorical(_) => {
                    return Err(Error::config(
                        "target_columns",
                        "multiple target columns must be numeric",
                    ))
                }
            }
        }
        let tw = cols.len();
        let mut t = Vec::with_capacity(n * tw);
        for r in 0..n {
            t.extend(cols.iter().map(|c| c[r]));
        }
        (tw, t, Vec::new())
    };

    let mut inputs = Vec::with_capacity(n * features.len());
    for r in 0..n {
        inputs.extend(input_cols.iter().map(|c| c[r]));
    }
    let mut ds = Dataset::new(name, features.len(), target_width, inputs, target_values)?;
    ds.column_names = features
        .iter()
        .map(|&c| {
            header
                .as_ref()
                .map_or_else(|| format!("x{c}"), |h| h[c].clone())
        })
        .collect();
    ds.class_names = class_names;
    ds.dropped_rows = dropped;
    Ok(ds)
}

/// Distinct values sorted (numerically when all parse as numbers) and each
/// row's code.
fn encode_classes(raw: &[String]) -> (Vec<String>, Vec<f64>) {
    let numeric: Option<Vec<f64>> = raw.iter().map(|s| s.parse().ok()).collect();
    let mut names: Vec<String> = raw.to_vec();
    match numeric {
        Some(_) => names.sort_by(|a, b| {
            a.parse::<f64>()
                .unwrap()
                .total_cmp(&b.parse::<f64>().unwrap())
        }),
        None => names.sort(),
    }
    names.dedup();
    let index: BTreeMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let codes = raw.iter().map(|s| index[s.as_str()] as f64).collect();
    (names, codes)
}

fn encode_categories(raw: &[String]) -> (Vec<String>, Vec<f64>) {
    encode_classes(raw)
}

/// `(x - min) / (max - min)` per value; constant columns map to 0.
fn min_max(col: &[f64]) -> (Vec<f64>, (f64, f64)) {
    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mapped = if span > 0.0 {
        col.iter().map(|x| (x - lo) / span).collect()
    } else {
        vec![0.0; col.len()]
    };
    (mapped, (lo, hi))
}

/// Maps every input column onto [0,1] and records the original ranges.
pub fn normalize(ds: &Dataset) -> Dataset {
    let n = ds.len();
    let w = ds.input_width;
    let mut inputs = vec![0.0; n * w];
    let mut ranges = Vec::with_capacity(w);
    for c in 0..w {
        let col: Vec<f64> = (0..n).map(|r| ds.inputs[r * w + c]).collect();
        let (mapped, range) = min_max(&col);
        for (r, v) in mapped.into_iter().enumerate() {
            inputs[r * w + c] = v;
        }
        ranges.push(range);
    }
    Dataset {
        inputs,
        targets: ds.targets.clone(),
        ranges: Some(ranges),
        ..ds.clone_meta()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl SplitFractions {
    pub fn new(train: f64, validation: f64, test: f64) -> Self {
        SplitFractions {
            train,
            validation,
            test,
        }
    }
}

/// Splits pattern indices into train/validation/test index lists (each
/// sorted). Stratified splits interleave classes so every part keeps the
/// class proportions to within one pattern per class.
pub fn split_indices(
    labels: &[usize],
    fractions: SplitFractions,
    stratified: bool,
    rng: &mut ChaCha8Rng,
) -> Result<[Vec<usize>; 3]> {
    let SplitFractions {
        train,
        validation,
        test,
    } = fractions;
    if [train, validation, test]
        .iter()
        .any(|f| !(0.0..=1.0).contains(f))
        || (train + validation + test - 1.0).abs() > 1e-9
    {
        return Err(Error::config(
            "fractions",
            format!("{train} + {validation} + {test} must be fractions summing to 1"),
        ));
    }
    let n = labels.len();
    let n_val = ((n as f64 * validation).round() as usize).min(n);
    let n_test = ((n as f64 * test).round() as usize).min(n - n_val);
    let n_train = n - n_val - n_test;
    for (part, frac, count) in [
        ("train", train, n_train),
        ("validation", validation, n_val),
        ("test", test, n_test),
    ] {
        if frac > 0.0 && count == 0 {
            return Err(Error::DegenerateSplit { part });
        }
    }

    let order: Vec<usize> = if stratified {
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            by_class.entry(l).or_default().push(i);
        }
        let mut keyed = Vec::with_capacity(n);
        for (&class, members) in by_class.iter_mut() {
            members.shuffle(rng);
            let size = members.len() as f64;
            for (j, &i) in members.iter().enumerate() {
                keyed.push(((j as f64 + 0.5) / size, class, i));
            }
        }
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        keyed.into_iter().map(|(_, _, i)| i).collect()
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(rng);
        all
    };

    let mut parts = [
        order[..n_train].to_vec(),
        order[n_train..n_train + n_val].to_vec(),
        order[n_train + n_val..].to_vec(),
    ];
    for p in &mut parts {
        p.sort_unstable();
    }
    Ok(parts)
}

/// Splits `ds` into `(train, validation, test)`. Empty parts come back as
/// `None`.
pub fn split(
    ds: &Dataset,
    fractions: SplitFractions,
    stratified: bool,
    seed: u64,
) -> Result<(Option<Dataset>, Option<Dataset>, Option<Dataset>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [a, b, c] = split_indices(&ds.labels(), fractions, stratified, &mut rng)?;
    let part = |rows: Vec<usize>| (!rows.is_empty()).then(|| ds.subset(&rows));
    Ok((part(a), part(b), part(c)))
}

pub const CV_ITERATIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldId {
    pub iteration: usize,
    /// 0: train on the first half, test on the second; 1: the reverse.
    pub fold: usize,
}

impl FoldId {
    pub fn index(&self) -> usize {
        self.iteration * 2 + self.fold
    }
}

/// Fold assignment for 5x2 cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvPlan {
    pub seed: u64,
    pub stratified: bool,
    /// For each iteration, the two halves of the pattern indices.
    pub halves: Vec<[Vec<usize>; 2]>,
}

impl CvPlan {
    pub fn new(ds: &Dataset, seed: u64, stratified: bool) -> Result<Self> {
        let labels = ds.labels();
        if stratified {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for &l in &labels {
                *counts.entry(l).or_default() += 1;
            }
            if counts.values().any(|&c| c < 2) {
                return Err(Error::DegenerateSplit { part: "fold" });
            }
        } else if labels.len() < 2 {
            return Err(Error::DegenerateSplit { part: "fold" });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let halves = (0..CV_ITERATIONS)
            .map(|_| {
                let [a, _, b] = split_indices(
                    &labels,
                    SplitFractions::new(0.5, 0.0, 0.5),
                    stratified,
                    &mut rng,
                )?;
                Ok([a, b])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CvPlan {
            seed,
            stratified,
            halves,
        })
    }

    pub fn folds(&self) -> impl Iterator<Item = FoldId> + '_ {
        (0..self.halves.len()).flat_map(|iteration| {
            (0..2).map(move |fold| FoldId { iteration, fold })
        })
    }

    /// `(train, test)` datasets of one fold.
    pub fn fold_data(&self, ds: &Dataset, id: FoldId) -> (Dataset, Dataset) {
        let [a, b] = &self.halves[id.iteration];
        if id.fold == 0 {
            (ds.subset(a), ds.subset(b))
        } else {
            (ds.subset(b), ds.subset(a))
        }
    }
}

/// Something a fold run produces that has a test accuracy.
pub trait FoldScore {
    fn accuracy(&self) -> f64;
}

impl FoldScore for f64 {
    fn accuracy(&self) -> f64 {
        *self
    }
}

#[derive(Debug, Clone)]
pub struct CvOutcome<T> {
    pub folds: Vec<(FoldId, T)>,
    pub accuracies: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation of the accuracies.
    pub std: f64,
}

impl<T: FoldScore> CvOutcome<T> {
    pub fn from_folds(folds: Vec<(FoldId, T)>) -> Self {
        let accuracies: Vec<f64> = folds.iter().map(|(_, t)| t.accuracy()).collect();
        let (mean, std) = mean_std(&accuracies);
        CvOutcome {
            folds,
            accuracies,
            mean,
            std,
        }
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Runs the 10 folds of `plan` sequentially; `runner` gets the fold id and
/// its train and test sets.
pub fn five_by_two_cv<T, F>(ds: &Dataset, plan: &CvPlan, mut runner: F) -> Result<CvOutcome<T>>
where
    T: FoldScore,
    F: FnMut(FoldId, &Dataset, &Dataset) -> Result<T>,
{
    let mut folds = Vec::with_capacity(2 * plan.halves.len());
    for id in plan.folds() {
        let (train, test) = plan.fold_data(ds, id);
        let out = runner(id, &train, &test).map_err(|e| Error::Fold {
            iteration: id.iteration,
            fold: id.fold,
            source: Box::new(e),
        })?;
        folds.push((id, out));
    }
    Ok(CvOutcome::from_folds(folds))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(values: &[f64]) -> Dataset {
        let targets: Vec<f64> = values.iter().enumerate().map(|(i, _)| (i % 2) as f64).collect();
        Dataset::new("toy", 1, 1, values.to_vec(), targets).unwrap()
    }

    #[test]
    fn normalize_maps_affinely() {
        let ds = normalize(&toy(&[2.0, 4.0, 6.0]));
        assert_eq!((0..3).map(|r| ds.input(r)[0]).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_eq!(ds.ranges, Some(vec![(2.0, 6.0)]));
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let ds = normalize(&toy(&[7.0, 7.0, 7.0]));
        assert!((0..3).all(|r| ds.input(r)[0] == 0.0));
    }

    #[test]
    fn unit_column_is_unchanged() {
        let vals = [0.0, 0.25, 1.0, 0.6];
        let ds = normalize(&toy(&vals));
        for (r, v) in vals.iter().enumerate() {
            assert!((ds.input(r)[0] - v).abs() <= 1e-15);
        }
    }

    #[test]
    fn seventy_thirty_counts() {
        let ds = toy(&(0..150).map(f64::from).collect::<Vec<_>>());
        let (tr, va, te) = split(&ds, SplitFractions::new(0.7, 0.3, 0.0), true, 1).unwrap();
        assert_eq!(tr.unwrap().len(), 105);
        assert_eq!(va.unwrap().len(), 45);
        assert!(te.is_none());
    }

    #[test]
    fn everything_to_train() {
        let ds = toy(&[1.0, 2.0, 3.0]);
        let (tr, va, te) = split(&ds, SplitFractions::new(1.0, 0.0, 0.0), false, 1).unwrap();
        assert_eq!(tr.unwrap().len(), 3);
        assert!(va.is_none() && te.is_none());
    }

    #[test]
    fn degenerate_split_is_reported() {
        let ds = toy(&[1.0, 2.0]);
        let err = split(&ds, SplitFractions::new(0.9, 0.1, 0.0), false, 1).unwrap_err();
        assert!(matches!(err, Error::DegenerateSplit { part: "validation" }));
    }

    #[test]
    fn bad_fractions_are_rejected() {
        let ds = toy(&[1.0, 2.0]);
        assert!(split(&ds, SplitFractions::new(0.5, 0.1, 0.0), false, 1).is_err());
    }

    #[test]
    fn categorical_features_and_classes() {
        let text = "colour,size,label\nred,1,b\nblue,2,a\nred,3,c\n";
        let ds = parse_csv("t", text, &CsvSchema::default()).unwrap();
        assert_eq!(ds.input_width(), 2);
        assert_eq!(ds.target_width(), 3);
        assert_eq!(ds.class_names, vec!["a", "b", "c"]);
        assert_eq!(ds.input(0), &[1.0, 1.0]);
        assert_eq!(ds.target(1), &[1.0, 0.0, 0.0]);
        assert_eq!(ds.column_names, vec!["colour", "size"]);
    }

    #[test]
    fn binary_class_is_one_column() {
        let text = "1,2,4\n3,4,2\n";
        let schema = CsvSchema {
            header: false,
            ..CsvSchema::default()
        };
        let ds = parse_csv("t", text, &schema).unwrap();
        assert_eq!(ds.target_width(), 1);
        assert_eq!(ds.target(0), &[1.0]);
        assert_eq!(ds.target(1), &[0.0]);
    }

    #[test]
    fn missing_rows_are_dropped_and_counted() {
        let text = "a,b,y\n1,2,0\n?,3,1\n4,,1\n5,6,1\n";
        let ds = parse_csv("t", text, &CsvSchema::default()).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dropped_rows, 2);
    }

    #[test]
    fn malformed_number_names_its_line() {
        let text = "a,b,y\n1,2,0\n3,oops,1\n";
        match parse_csv("t", text, &CsvSchema::default()) {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_row_is_rejected() {
        let text = "a,b,y\n1,2,0\n3,1\n";
        assert!(matches!(
            parse_csv("t", text, &CsvSchema::default()),
            Err(Error::InconsistentWidth { line: 3, .. })
        ));
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(matches!(
            parse_csv("t", "", &CsvSchema::default()),
            Err(Error::EmptyFile)
        ));
        assert!(matches!(
            parse_csv("t", "a,b\n", &CsvSchema::default()),
            Err(Error::EmptyFile)
        ));
    }

    #[test]
    fn majority_classifier_on_balanced_three_classes() {
        let rows: Vec<Vec<f64>> = (0..150).map(|i| vec![i as f64]).collect();
        let targets: Vec<Vec<f64>> = (0..150)
            .map(|i| {
                let mut t = vec![0.0; 3];
                t[i / 50] = 1.0;
                t
            })
            .collect();
        let ds = Dataset::from_rows("three", &rows, &targets).unwrap();
        let plan = CvPlan::new(&ds, 3, true).unwrap();
        let out = five_by_two_cv(&ds, &plan, |_, train, test| {
            let mut counts = [0usize; 3];
            for l in train.labels() {
                counts[l] += 1;
            }
            let majority = (0..3).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap();
            let hits = test.labels().iter().filter(|&&l| l == majority).count();
            Ok(hits as f64 / test.len() as f64)
        })
        .unwrap();
        assert_eq!(out.accuracies.len(), 10);
        for a in &out.accuracies {
            assert!((a - 1.0 / 3.0).abs() < 0.02, "{a}");
        }
    }

    #[test]
    fn runner_errors_carry_fold_identity() {
        let ds = toy(&[1.0, 2.0, 3.0, 4.0]);
        let plan = CvPlan::new(&ds, 1, true).unwrap();
        let err = five_by_two_cv(&ds, &plan, |id, _, _| {
            if id.index() == 3 {
                Err(Error::EmptyDataset)
            } else {
                Ok(1.0)
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Fold { iteration: 1, fold: 1, .. }));
    }
}
