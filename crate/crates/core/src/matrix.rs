//! Label-indexed confusion matrices.
//!
//! [`ConfusionMatrix`] holds raw counts (`counts[i][j]` = traces of label `i`
//! predicted as label `j`); [`NormalizedConfusionMatrix`] divides every row
//! by its total so rows sum to one. Both serialize to the JSON shapes
//! `{"labels": [...], "counts": [[...]]}` and `{"labels": [...], "rows": [[...]]}`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Allowed deviation of a normalized row sum from one.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix has no labels")]
    Empty,
    #[error("matrix is not square: {labels} labels but row {row} has {len} entries")]
    NotSquare {
        labels: usize,
        row: usize,
        len: usize,
    },
    #[error("matrix has {labels} labels but {rows} rows")]
    RowCount { labels: usize, rows: usize },
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("avatar `{0}` has no traces (zero row); apply the minimum-trace filter first")]
    ZeroRow(String),
    #[error("entry ({row}, {col}) = {value} is outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("row `{label}` sums to {sum}, not 1")]
    RowSum { label: String, sum: f64 },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("index {index} out of range for {n} labels")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("invalid matrix JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MatrixError>;

fn check_shape<T>(labels: &[String], rows: &[Vec<T>]) -> Result<()> {
    if labels.is_empty() {
        return Err(MatrixError::Empty);
    }
    if rows.len() != labels.len() {
        return Err(MatrixError::RowCount {
            labels: labels.len(),
            rows: rows.len(),
        });
    }
    for (row, r) in rows.iter().enumerate() {
        if r.len() != labels.len() {
            return Err(MatrixError::NotSquare {
                labels: labels.len(),
                row,
                len: r.len(),
            });
        }
    }
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(MatrixError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCounts")]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

#[derive(Deserialize)]
struct RawCounts {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl TryFrom<RawCounts> for ConfusionMatrix {
    type Error = MatrixError;
    fn try_from(raw: RawCounts) -> Result<Self> {
        ConfusionMatrix::new(raw.labels, raw.counts)
    }
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        check_shape(&labels, &counts)?;
        Ok(ConfusionMatrix { labels, counts })
    }

    pub(crate) fn zeros(labels: Vec<String>) -> Self {
        let n = labels.len();
        ConfusionMatrix {
            labels,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub(crate) fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub(crate) fn merge(&mut self, other: &ConfusionMatrix) {
        for (dst, src) in self.counts.iter_mut().zip(&other.counts) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("counts serialize")
    }

    /// Divides every row by its total.
    pub fn normalize(&self) -> Result<NormalizedConfusionMatrix> {
        let rows = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let total: u64 = row.iter().sum();
                if total == 0 {
                    return Err(MatrixError::ZeroRow(self.labels[i].clone()));
                }
                Ok(row.iter().map(|&c| c as f64 / total as f64).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        NormalizedConfusionMatrix::from_rows(self.labels.clone(), rows)
    }
}

/// Rounds to 15 significant decimal digits.
pub(crate) fn round_sig15(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.14e}").parse().expect("formatted float parses")
}

fn serialize_rows<S: Serializer>(rows: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let rounded: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| round_sig15(x)).collect())
        .collect();
    rounded.serialize(s)
}

/// Row-stochastic confusion matrix. Row `i` is the membership vector of
/// avatar `i` over all avatars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRows")]
pub struct NormalizedConfusionMatrix {
    labels: Vec<String>,
    #[serde(serialize_with = "serialize_rows")]
    rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawRows {
    labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<RawRows> for NormalizedConfusionMatrix {
    type Error = MatrixError;
    fn try_from(raw: RawRows) -> Result<Self> {
        NormalizedConfusionMatrix::from_rows(raw.labels, raw.rows)
    }
}

impl NormalizedConfusionMatrix {
    /// Validates shape, range and row sums.
    pub fn from_rows(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_shape(&labels, &rows)?;
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(MatrixError::OutOfRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(MatrixError::RowSum {
                    label: labels[i].clone(),
                    sum,
                });
            }
        }
        Ok(NormalizedConfusionMatrix { labels, rows })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i][j]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| MatrixError::UnknownLabel(label.to_string()))
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index < self.n() {
            Ok(())
        } else {
            Err(MatrixError::IndexOutOfRange { index, n: self.n() })
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Accepts either a counts document (normalized on the fly) or a
    /// normalized one.
    pub fn from_any_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("counts").is_some() {
            ConfusionMatrix::from_json(text)?.normalize()
        } else {
            Self::from_json(text)
        }
    }

    /// JSON with every entry rounded to 15 significant digits.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rows serialize")
    }
}
