//! Datasets: CSV ingestion, per-column normalization and a seeded Gaussian
//! blob generator used for desk-scale experiments.
//!
//! Labels are stored 0-based (`0..c`). Files and the command line use 1-based
//! labels; conversion happens at those boundaries only.

mod constraints;

pub use constraints::{sample_constraints, ConstraintSet};

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A set of `n` feature vectors in `d` dimensions with optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// `n x d`, one row per sample.
    pub features: DMatrix<f64>,
    /// 0-based class labels, one per row.
    pub labels: Option<Vec<usize>>,
    pub classes: Option<usize>,
}

/// Layout of an input CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvFormat {
    /// Every column is a feature.
    Plain,
    /// The last column holds integer class labels.
    Labeled,
}

/// Per-column normalization applied before clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Affine map of every column onto `[-1, 1]`.
    #[default]
    #[serde(rename = "minmax")]
    MinMaxSymmetric,
    /// Zero mean, unit (population) variance.
    ZScore,
    None,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: DMatrix<f64>) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::EmptyInput);
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidParameter("dataset needs at least one feature column".into()));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % features.nrows(), pos / features.nrows());
            return Err(Error::InvalidParameter(format!(
                "non-finite feature at sample {}, column {}",
                row + 1,
                col + 1
            )));
        }
        Ok(Self {
            name: name.into(),
            features,
            labels: None,
            classes: None,
        })
    }

    /// Attaches 0-based labels in `0..classes`.
    pub fn with_labels(mut self, labels: Vec<usize>, classes: usize) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidParameter(format!(
                "label {} outside 1..={classes}",
                bad + 1
            )));
        }
        self.labels = Some(labels);
        self.classes = Some(classes);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }
}

/// Reads a dataset from a CSV file. The file stem becomes the dataset name.
pub fn load_dataset(path: &Path, format: CsvFormat) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_dataset(file, format, &name)
}

/// Parses CSV text. A first line that does not parse as numbers is treated as
/// a header and skipped.
pub fn parse_dataset<R: Read>(reader: R, format: CsvFormat, name: &str) -> Result<Dataset> {
    let rows = read_numeric_rows(reader)?;
    let (first_line, first) = rows.first().ok_or(Error::EmptyInput)?;
    let width = first.len();
    if format == CsvFormat::Labeled && width < 2 {
        return Err(Error::Parse {
            line: *first_line,
            message: "labeled CSV needs at least one feature column and a label column".into(),
        });
    }
    let d = match format {
        CsvFormat::Plain => width,
        CsvFormat::Labeled => width - 1,
    };
    let mut features = DMatrix::zeros(rows.len(), d);
    let mut raw_labels = Vec::new();
    for (r, (line, values)) in rows.iter().enumerate() {
        for (c, &v) in values[..d].iter().enumerate() {
            features[(r, c)] = v;
        }
        if format == CsvFormat::Labeled {
            let v = values[d];
            if v.fract() != 0.0 || v.abs() > i64::MAX as f64 {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("label '{v}' is not an integer"),
                });
            }
            raw_labels.push(v as i64);
        }
    }
    let ds = Dataset::new(name, features)?;
    if format == CsvFormat::Plain {
        return Ok(ds);
    }
    // Distinct label values, in ascending order, become classes 0..c.
    let distinct: Vec<i64> = raw_labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let labels = raw_labels
        .iter()
        .map(|v| distinct.binary_search(v).expect("value drawn from the same set"))
        .collect();
    ds.with_labels(labels, distinct.len())
}

/// Reads rows of floats, returning `(line number, values)` pairs.
fn read_numeric_rows<R: Read>(reader: R) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = rdr.read_record(&mut record).map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .map(|(col, cell)| cell.parse::<f64>().map_err(|_| col))
            .collect();
        match parsed {
            Ok(values) => {
                if let Some(col) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Parse {
                        line,
                        message: format!("column {} is not finite", col + 1),
                    });
                }
                if let Some((_, prev)) = rows.first() {
                    if prev.len() != values.len() {
                        return Err(Error::RaggedRow {
                            line,
                            expected: prev.len(),
                            found: values.len(),
                        });
                    }
                }
                rows.push((line, values));
            }
            Err(_) if first => {} // header
            Err(col) => {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "column {}: '{}' is not a number",
                        col + 1,
                        record.get(col).unwrap_or_default()
                    ),
                });
            }
        }
        first = false;
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(rows)
}

/// Normalizes every feature column independently. Constant columns map to 0.
pub fn normalize(ds: &Dataset, scheme: Normalization) -> Dataset {
    let mut out = ds.clone();
    let n = ds.n() as f64;
    for mut col in out.features.column_iter_mut() {
        match scheme {
            Normalization::None => {}
            Normalization::MinMaxSymmetric => {
                let lo = col.min();
                let hi = col.max();
                if hi > lo {
                    let (mid, half) = ((hi + lo) / 2.0, (hi - lo) / 2.0);
                    col.apply(|v| *v = ((*v - mid) / half).clamp(-1.0, 1.0));
                } else {
                    col.fill(0.0);
                }
            }
            Normalization::ZScore => {
                let mean = col.sum() / n;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    let sd = var.sqrt();
                    col.apply(|v| *v = (*v - mean) / sd);
                } else {
                    col.fill(0.0);
                }
            }
        }
    }
    out
}

/// Generates `c` isotropic unit-variance Gaussian clusters.
///
/// Centers sit on a regular simplex whose edge length is `separation` when
/// `d >= c - 1`; otherwise they are spaced `separation` apart along a circle
/// in the first two coordinates (or along the line when `d == 1`). Samples
/// are ordered by class.
pub fn make_blobs(n_per_class: usize, c: usize, d: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 || c == 0 || d == 0 {
        return Err(Error::InvalidParameter("blob counts and dimension must be at least 1".into()));
    }
    if !separation.is_finite() || separation < 0.0 {
        return Err(Error::InvalidParameter(format!("separation must be finite and >= 0, got {separation}")));
    }
    let centers = blob_centers(c, d, separation);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_per_class * c;
    let mut features = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    for (class, center) in centers.iter().enumerate() {
        for k in 0..n_per_class {
            let row = class * n_per_class + k;
            for j in 0..d {
                let z: f64 = StandardNormal.sample(&mut rng);
                features[(row, j)] = center[j] + z;
            }
            labels.push(class);
        }
    }
    Dataset::new("blobs", features)?.with_labels(labels, c)
}

fn blob_centers(c: usize, d: usize, separation: f64) -> Vec<Vec<f64>> {
    if c == 1 {
        return vec![vec![0.0; d]];
    }
    if d + 1 >= c {
        // Gram-Schmidt coordinates of e_k - mean(e) in the (c-1)-dim plane;
        // the vertices of that simplex are sqrt(2) apart.
        let shifted: Vec<Vec<f64>> = (0..c)
            .map(|k| (0..c).map(|j| f64::from(u8::from(j == k)) - 1.0 / c as f64).collect())
            .collect();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for v in shifted.iter().take(c - 1) {
            let mut w = v.clone();
            for b in &basis {
                let p: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            basis.push(w.into_iter().map(|x| x / norm).collect());
        }
        let scale = separation / std::f64::consts::SQRT_2;
        return shifted
            .iter()
            .map(|v| {
                let mut p = vec![0.0; d];
                for (slot, b) in p.iter_mut().zip(&basis) {
                    *slot = scale * v.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                }
                p
            })
            .collect();
    }
    if d == 1 {
        return (0..c).map(|k| vec![separation * k as f64]).collect();
    }
    let step = 2.0 * std::f64::consts::PI / c as f64;
    let radius = separation / (2.0 * (step / 2.0).sin());
    (0..c)
        .map(|k| {
            let mut p = vec![0.0; d];
            p[0] = radius * (step * k as f64).cos();
            p[1] = radius * (step * k as f64).sin();
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zeros_csv_loads_without_labels() {
        let text = "0,0\n0,0\n0,0\n0,0\n";
        let ds = parse_dataset(text.as_bytes(), CsvFormat::Plain, "z").unwrap();
        assert_eq!((ds.n(), ds.dim()), (4, 2));
        assert!(ds.labels.is_none());
    }

    #[test]
    fn labeled_csv_infers_class_count() {
        let text = "x,y,label\n0.1,0.2,1\n0.3,0.1,1\n5,5,2\n5.5,4.9,2\n";
        let ds = parse_dataset(text.as_bytes(), CsvFormat::Labeled, "l").unwrap();
        assert_eq!(ds.classes, Some(2));
        assert_eq!(ds.labels.as_deref(), Some(&[0, 0, 1, 1][..]));
        assert_eq!(ds.dim(), 2);
    }

    #[test]
    fn ragged_row_names_its_line() {
        let text = "1,2\n3,4\n5\n";
        match parse_dataset(text.as_bytes(), CsvFormat::Plain, "r") {
            Err(Error::RaggedRow { line, expected, found }) => {
                assert_eq!((line, expected, found), (3, 2, 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_after_header_is_rejected() {
        let text = "a,b\n1,2\n3,x\n";
        match parse_dataset(text.as_bytes(), CsvFormat::Plain, "r") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_header_only_files_are_rejected() {
        assert!(matches!(parse_dataset("".as_bytes(), CsvFormat::Plain, "e"), Err(Error::EmptyInput)));
        assert!(matches!(parse_dataset("a,b\n".as_bytes(), CsvFormat::Plain, "e"), Err(Error::EmptyInput)));
    }

    #[test]
    fn minmax_maps_pixel_range_to_unit_interval() {
        let f = DMatrix::from_column_slice(2, 1, &[0.0, 255.0]);
        let ds = normalize(&Dataset::new("p", f).unwrap(), Normalization::MinMaxSymmetric);
        assert_eq!(ds.features.as_slice(), &[-1.0, 1.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let f = DMatrix::from_column_slice(3, 1, &[5.0, 5.0, 5.0]);
        let ds = Dataset::new("c", f).unwrap();
        for scheme in [Normalization::MinMaxSymmetric, Normalization::ZScore] {
            assert_eq!(normalize(&ds, scheme).features.as_slice(), &[0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn zscore_matches_direct_arithmetic() {
        let f = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let z = normalize(&Dataset::new("z", f).unwrap(), Normalization::ZScore);
        // population sd of [1,2,3] is sqrt(2/3)
        let sd = (2.0f64 / 3.0).sqrt();
        let expected = [-1.0 / sd, 0.0, 1.0 / sd];
        for (a, b) in z.features.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let mean = z.features.sum() / 3.0;
        let var = z.features.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(var, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn blobs_are_deterministic_per_seed() {
        let a = make_blobs(50, 2, 2, 10.0, 1).unwrap();
        let b = make_blobs(50, 2, 2, 10.0, 1).unwrap();
        assert_eq!(a, b);
        let c = make_blobs(50, 2, 2, 10.0, 2).unwrap();
        assert_ne!(a.features, c.features);
    }

    #[test]
    fn zero_separation_keeps_labels_balanced() {
        let ds = make_blobs(30, 3, 2, 0.0, 5).unwrap();
        let labels = ds.labels.unwrap();
        for class in 0..3 {
            assert_eq!(labels.iter().filter(|&&l| l == class).count(), 30);
        }
    }

    #[test]
    fn simplex_centers_are_equidistant() {
        for (c, d) in [(2, 1), (3, 2), (4, 3), (5, 8)] {
            let centers = blob_centers(c, d, 3.0);
            for i in 0..c {
                for j in i + 1..c {
                    let dist = centers[i]
                        .iter()
                        .zip(&centers[j])
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    assert_abs_diff_eq!(dist, 3.0, epsilon = 1e-12);
                }
            }
        }
        // circle fallback: adjacent centers are `separation` apart
        let ring = blob_centers(6, 2, 2.0);
        let dist = ((ring[0][0] - ring[1][0]).powi(2) + (ring[0][1] - ring[1][1]).powi(2)).sqrt();
        assert_abs_diff_eq!(dist, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn well_separated_blobs_are_nearest_centroid_separable() {
        let ds = make_blobs(50, 3, 2, 20.0, 7).unwrap();
        let labels = ds.labels.as_ref().unwrap();
        let mut centroids = vec![vec![0.0; 2]; 3];
        for (i, &l) in labels.iter().enumerate() {
            for j in 0..2 {
                centroids[l][j] += ds.features[(i, j)] / 50.0;
            }
        }
        let correct = (0..ds.n())
            .filter(|&i| {
                let nearest = (0..3)
                    .min_by(|&a, &b| {
                        let da: f64 = (0..2).map(|j| (ds.features[(i, j)] - centroids[a][j]).powi(2)).sum();
                        let db: f64 = (0..2).map(|j| (ds.features[(i, j)] - centroids[b][j]).powi(2)).sum();
                        da.total_cmp(&db)
                    })
                    .unwrap();
                nearest == labels[i]
            })
            .count();
        assert_eq!(correct, ds.n());
    }
}
