//! Sparse labelled datasets in the libsvm text format.

use crate::error::{ensure, Error, Result};
use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// One sample: parallel index/value arrays, indices 0-based and unique.
/// The text format uses 1-based indices; the shift happens at the parser
/// and serializer boundary only.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRow {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        ensure!(
            indices.len() == values.len(),
            "sparse row has {} indices but {} values",
            indices.len(),
            values.len()
        );
        let mut seen = indices.clone();
        seen.sort_unstable();
        ensure!(
            seen.windows(2).all(|w| w[0] != w[1]),
            "sparse row has duplicate indices"
        );
        Ok(SparseRow { indices, values })
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn dot(&self, x: &DVector<f64>) -> f64 {
        self.iter().map(|(j, v)| v * x[j]).sum()
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `out += scale * row`, touching only the stored coordinates.
    pub fn add_scaled_into(&self, scale: f64, out: &mut DVector<f64>) {
        for (j, v) in self.iter() {
            out[j] += scale * v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    /// Real labels from a planted linear model.
    Regression,
    /// `+/-1` labels from the sign of a planted linear model.
    Classification,
}

/// Immutable row-major dataset; row order is exactly the file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<SparseRow>,
    labels: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(rows: Vec<SparseRow>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        ensure!(
            rows.len() == labels.len(),
            "{} rows but {} labels",
            rows.len(),
            labels.len()
        );
        ensure!(!rows.is_empty(), "dataset has no samples");
        for row in &rows {
            ensure!(
                row.indices.iter().all(|&j| j < dim),
                "row index exceeds dimension {dim}"
            );
        }
        Ok(Dataset { rows, labels, dim })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &SparseRow {
        &self.rows[i]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn max_row_norm_squared(&self) -> f64 {
        self.rows
            .iter()
            .map(SparseRow::norm_squared)
            .fold(0.0, f64::max)
    }
}

/// Parses `label idx:val idx:val ...` lines, 1-based indices. The feature
/// dimension is the largest index seen anywhere in the file.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let file = std::fs::File::open(path)?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: display.clone(),
        line,
        msg,
    };

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut dim = 0usize;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else {
            continue; // blank line
        };
        let label: f64 = first
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label {first:?}")))?;
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for token in tokens {
            let (idx, val) = token
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected idx:val, got {token:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature index {idx:?}")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "feature indices are 1-based".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature value {val:?}")))?;
            if indices.contains(&(idx - 1)) {
                return Err(parse_err(lineno, format!("duplicate feature index {idx}")));
            }
            dim = dim.max(idx);
            indices.push(idx - 1);
            values.push(val);
        }
        rows.push(SparseRow { indices, values });
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(parse_err(0, "file contains no samples".into()));
    }
    Dataset::new(rows, labels, dim)
}

/// Writes the dataset back out in the same format. `{}` on f64 prints the
/// shortest decimal that parses back to the same bits, so save/load
/// round-trips exactly.
pub fn save_libsvm(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut line = String::new();
    for i in 0..dataset.len() {
        line.clear();
        write!(line, "{}", dataset.label(i)).expect("write to String");
        for (j, v) in dataset.row(i).iter() {
            write!(line, " {}:{}", j + 1, v).expect("write to String");
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Random dense dataset with unit-norm rows and labels from a planted
/// linear model (sign of the response for classification).
pub fn generate_random_dataset(
    n: usize,
    d: usize,
    kind: LabelKind,
    seed: u64,
) -> Result<Dataset> {
    ensure!(n >= 1 && d >= 1, "need n >= 1 and d >= 1, got n = {n}, d = {d}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut a = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
        a /= a.norm();
        let response = a.dot(&planted);
        let label = match kind {
            LabelKind::Regression => response + 0.1 * rng.sample::<f64, _>(StandardNormal),
            LabelKind::Classification => {
                if response >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        rows.push(SparseRow {
            indices: (0..d).collect(),
            values: a.iter().copied().collect(),
        });
        labels.push(label);
    }
    Dataset::new(rows, labels, d)
}
