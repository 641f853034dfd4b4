//! Deterministic avatar classifiers evaluated under stratified k-fold
//! cross-validation. The aggregated out-of-fold predictions form the
//! confusion matrix the miner consumes.

mod cv;
mod knn;
mod naive_bayes;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cv::{cross_validate, cross_validate_par, cross_validate_with, stratified_folds};
pub use knn::{knn_predict, Knn};
pub use naive_bayes::{naive_bayes_fit_predict, GaussianNaiveBayes, NaiveBayesModel};

pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("avatar `{label}` has {traces} traces but {folds} folds were requested")]
    TooFewTraces {
        label: String,
        traces: usize,
        folds: usize,
    },
    #[error("trace `{trace_id}` has a non-finite feature at column {column}")]
    NonFinite { trace_id: String, column: usize },
    #[error("query has {got} features, training vectors have {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the external classifier kind cannot be trained here; import its confusion matrix JSON instead")]
    External,
    #[error("classifier `{name}` failed: {message}")]
    Plugin { name: String, message: String },
}

pub type Result<T> = std::result::Result<T, ClassifierError>;

/// Labeled training vectors. `classes[i]` indexes into `labels`, which is
/// kept in label order so "label order" tie-breaks are index order.
#[derive(Debug, Clone)]
pub struct TrainingSet<'a> {
    pub labels: &'a [String],
    pub rows: Vec<&'a [f64]>,
    pub classes: Vec<usize>,
}

impl<'a> TrainingSet<'a> {
    pub fn new(labels: &'a [String], rows: Vec<&'a [f64]>, classes: Vec<usize>) -> Result<Self> {
        if rows.len() != classes.len() {
            return Err(ClassifierError::InvalidParameter(format!(
                "{} rows but {} class indices",
                rows.len(),
                classes.len()
            )));
        }
        if let Some(&c) = classes.iter().find(|&&c| c >= labels.len()) {
            return Err(ClassifierError::InvalidParameter(format!(
                "class index {c} out of range for {} labels",
                labels.len()
            )));
        }
        if let Some(first) = rows.first() {
            if let Some(bad) = rows.iter().find(|r| r.len() != first.len()) {
                return Err(ClassifierError::DimensionMismatch {
                    expected: first.len(),
                    got: bad.len(),
                });
            }
        }
        Ok(TrainingSet {
            labels,
            rows,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub(crate) fn check_query(&self, query: &[f64]) -> Result<()> {
        match self.rows.first() {
            Some(r) if r.len() != query.len() => Err(ClassifierError::DimensionMismatch {
                expected: r.len(),
                got: query.len(),
            }),
            _ => Ok(()),
        }
    }
}

/// Plug-in point for classifiers. Implementations train on `train` and
/// return one class index (into `train.labels`) per query, in query order.
pub trait Classifier: Sync {
    fn name(&self) -> &str;
    fn fit_predict(&self, train: &TrainingSet<'_>, queries: &[&[f64]]) -> Result<Vec<usize>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierKind {
    Knn {
        k: usize,
    },
    NaiveBayes {
        variance_floor: f64,
    },
    /// Confusion matrix produced elsewhere and imported as JSON.
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    #[serde(flatten)]
    pub kind: ClassifierKind,
    pub folds: usize,
    pub seed: u64,
    /// Let avatars with fewer traces than folds through instead of failing.
    /// Such avatars are simply absent from some training folds.
    #[serde(default)]
    pub allow_sparse_classes: bool,
}

impl ClassifierConfig {
    pub fn knn(k: usize, folds: usize, seed: u64) -> Self {
        ClassifierConfig {
            kind: ClassifierKind::Knn { k },
            folds,
            seed,
            allow_sparse_classes: false,
        }
    }

    pub fn naive_bayes(folds: usize, seed: u64) -> Self {
        ClassifierConfig {
            kind: ClassifierKind::NaiveBayes {
                variance_floor: DEFAULT_VARIANCE_FLOOR,
            },
            folds,
            seed,
            allow_sparse_classes: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(ClassifierError::InvalidParameter(format!(
                "folds must be >= 2, got {}",
                self.folds
            )));
        }
        match self.kind {
            ClassifierKind::Knn { k } if k < 1 => {
                Err(ClassifierError::InvalidParameter("k must be >= 1".into()))
            }
            ClassifierKind::NaiveBayes { variance_floor }
                if !(variance_floor > 0.0 && variance_floor.is_finite()) =>
            {
                Err(ClassifierError::InvalidParameter(format!(
                    "variance_floor must be > 0, got {variance_floor}"
                )))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(ClassifierConfig::knn(1, 10, 0).validate().is_ok());
        assert!(ClassifierConfig::knn(0, 10, 0).validate().is_err());
        assert!(ClassifierConfig::knn(1, 1, 0).validate().is_err());
        let mut nb = ClassifierConfig::naive_bayes(10, 0);
        assert!(nb.validate().is_ok());
        nb.kind = ClassifierKind::NaiveBayes {
            variance_floor: 0.0,
        };
        assert!(nb.validate().is_err());
    }

    #[test]
    fn config_toml_shape() {
        let cfg: ClassifierConfig =
            toml::from_str("kind = \"knn\"\nk = 3\nfolds = 10\nseed = 7\n").unwrap();
        assert_eq!(cfg, ClassifierConfig::knn(3, 10, 7));
        let cfg: ClassifierConfig =
            toml::from_str("kind = \"naive_bayes\"\nvariance_floor = 0.01\nfolds = 5\nseed = 1\n")
                .unwrap();
        assert_eq!(
            cfg.kind,
            ClassifierKind::NaiveBayes {
                variance_floor: 0.01
            }
        );
    }

    #[test]
    fn training_set_rejects_ragged_rows() {
        let labels = vec!["a".to_string()];
        let rows: Vec<&[f64]> = vec![&[1.0, 2.0], &[1.0]];
        assert!(matches!(
            TrainingSet::new(&labels, rows, vec![0, 0]),
            Err(ClassifierError::DimensionMismatch { .. })
        ));
    }
}
