use super::{Classifier, ClassifierError, Result, TrainingSet};

/// Per-class Gaussian likelihoods with maximum-likelihood mean and
/// variance. Variances are clamped below by `variance_floor`.
#[derive(Debug, Clone)]
pub struct NaiveBayesModel {
    /// `None` for classes absent from the training data; they are never predicted.
    classes: Vec<Option<ClassStats>>,
}

#[derive(Debug, Clone)]
struct ClassStats {
    log_prior: f64,
    mean: Vec<f64>,
    var: Vec<f64>,
    /// Sum of `-0.5 * ln(2 pi var)` over features.
    log_norm: f64,
}

impl NaiveBayesModel {
    pub fn fit(train: &TrainingSet<'_>, variance_floor: f64) -> Result<Self> {
        if train.is_empty() {
            return Err(ClassifierError::EmptyTrainingSet);
        }
        if !(variance_floor > 0.0 && variance_floor.is_finite()) {
            return Err(ClassifierError::InvalidParameter(format!(
                "variance_floor must be > 0, got {variance_floor}"
            )));
        }
        let dim = train.rows[0].len();
        let k = train.n_classes();
        let mut count = vec![0usize; k];
        let mut sum = vec![vec![0.0; dim]; k];
        for (row, &c) in train.rows.iter().zip(&train.classes) {
            count[c] += 1;
            for (s, x) in sum[c].iter_mut().zip(row.iter()) {
                *s += x;
            }
        }
        let mut sq = vec![vec![0.0; dim]; k];
        for (row, &c) in train.rows.iter().zip(&train.classes) {
            let n = count[c] as f64;
            for ((s, x), total) in sq[c].iter_mut().zip(row.iter()).zip(&sum[c]) {
                let d = x - total / n;
                *s += d * d;
            }
        }
        let total = train.len() as f64;
        let classes = (0..k)
            .map(|c| {
                if count[c] == 0 {
                    return None;
                }
                let n = count[c] as f64;
                let mean: Vec<f64> = sum[c].iter().map(|s| s / n).collect();
                let var: Vec<f64> = sq[c].iter().map(|s| (s / n).max(variance_floor)).collect();
                let log_norm = var
                    .iter()
                    .map(|v| -0.5 * (2.0 * std::f64::consts::PI * v).ln())
                    .sum();
                Some(ClassStats {
                    log_prior: (n / total).ln(),
                    mean,
                    var,
                    log_norm,
                })
            })
            .collect();
        Ok(NaiveBayesModel { classes })
    }

    /// Unnormalized log-posterior of every class (`None` for absent ones).
    pub fn log_posteriors(&self, query: &[f64]) -> Vec<Option<f64>> {
        self.classes
            .iter()
            .map(|stats| {
                stats.as_ref().map(|s| {
                    let quad: f64 = query
                        .iter()
                        .zip(&s.mean)
                        .zip(&s.var)
                        .map(|((x, m), v)| (x - m) * (x - m) / (2.0 * v))
                        .sum();
                    s.log_prior + s.log_norm - quad
                })
            })
            .collect()
    }

    /// Argmax of the log-posterior; ties go to the smaller class index.
    pub fn predict(&self, query: &[f64]) -> Result<usize> {
        let dim = self
            .classes
            .iter()
            .flatten()
            .next()
            .map_or(0, |s| s.mean.len());
        if query.len() != dim {
            return Err(ClassifierError::DimensionMismatch {
                expected: dim,
                got: query.len(),
            });
        }
        let mut best: Option<(usize, f64)> = None;
        for (c, lp) in self.log_posteriors(query).into_iter().enumerate() {
            if let Some(lp) = lp {
                if best.is_none_or(|(_, b)| lp > b) {
                    best = Some((c, lp));
                }
            }
        }
        Ok(best.expect("fit saw at least one class").0)
    }
}

pub fn naive_bayes_fit_predict(
    train: &TrainingSet<'_>,
    query: &[f64],
    variance_floor: f64,
) -> Result<usize> {
    train.check_query(query)?;
    NaiveBayesModel::fit(train, variance_floor)?.predict(query)
}

#[derive(Debug, Clone, Copy)]
pub struct GaussianNaiveBayes {
    pub variance_floor: f64,
}

impl Classifier for GaussianNaiveBayes {
    fn name(&self) -> &str {
        "naive_bayes"
    }

    fn fit_predict(&self, train: &TrainingSet<'_>, queries: &[&[f64]]) -> Result<Vec<usize>> {
        let model = NaiveBayesModel::fit(train, self.variance_floor)?;
        queries.iter().map(|q| model.predict(q)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<String> {
        vec!["minus".into(), "plus".into()]
    }

    #[test]
    fn single_class_always_wins() {
        let l = labels();
        let rows: Vec<&[f64]> = vec![&[3.0], &[4.0]];
        let t = TrainingSet::new(&l, rows, vec![1, 1]).unwrap();
        for q in [-100.0, 0.0, 3.5, 1e6] {
            assert_eq!(naive_bayes_fit_predict(&t, &[q], 1e-6).unwrap(), 1);
        }
    }

    #[test]
    fn matches_closed_form_gaussian_posterior() {
        // Class means -1 and +1, both with ML variance 1, equal priors.
        let l = labels();
        let rows: Vec<&[f64]> = vec![&[-2.0], &[0.0], &[0.0], &[2.0]];
        let t = TrainingSet::new(&l, rows, vec![0, 0, 1, 1]).unwrap();
        let model = NaiveBayesModel::fit(&t, 1e-9).unwrap();
        let q = 0.9;
        let lp = model.log_posteriors(&[q]);
        // Closed form: ln 0.5 - 0.5 ln(2 pi) - (q - mu)^2 / 2.
        let closed = |mu: f64| {
            0.5f64.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - (q - mu) * (q - mu) / 2.0
        };
        assert!((lp[0].unwrap() - closed(-1.0)).abs() < 1e-12);
        assert!((lp[1].unwrap() - closed(1.0)).abs() < 1e-12);
        assert_eq!(model.predict(&[q]).unwrap(), 1);
        assert_eq!(model.predict(&[-0.9]).unwrap(), 0);
    }

    #[test]
    fn variance_floor_keeps_constant_features_finite() {
        let l = labels();
        let rows: Vec<&[f64]> = vec![&[1.0, 0.0], &[1.0, 1.0], &[5.0, 0.5], &[6.0, 0.7]];
        let t = TrainingSet::new(&l, rows, vec![0, 0, 1, 1]).unwrap();
        let model = NaiveBayesModel::fit(&t, 1e-3).unwrap();
        let lp = model.log_posteriors(&[1.5, 0.2]);
        assert!(lp.iter().flatten().all(|v| v.is_finite()));
        assert_eq!(model.predict(&[1.0, 0.3]).unwrap(), 0);
    }

    #[test]
    fn exact_tie_goes_to_label_order() {
        let l = labels();
        let rows: Vec<&[f64]> = vec![&[-1.0], &[1.0]];
        let t = TrainingSet::new(&l, rows, vec![0, 1]).unwrap();
        // Both classes have a single point at distance 1; identical posteriors at 0.
        assert_eq!(naive_bayes_fit_predict(&t, &[0.0], 1.0).unwrap(), 0);
    }

    #[test]
    fn absent_class_is_never_predicted() {
        let l = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let rows: Vec<&[f64]> = vec![&[0.0], &[10.0]];
        let t = TrainingSet::new(&l, rows, vec![0, 2]).unwrap();
        let p = naive_bayes_fit_predict(&t, &[5.0], 1.0).unwrap();
        assert_ne!(p, 1);
    }
}
