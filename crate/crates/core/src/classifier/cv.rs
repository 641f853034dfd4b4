use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    Classifier, ClassifierConfig, ClassifierError, ClassifierKind, GaussianNaiveBayes, Knn, Result,
    TrainingSet,
};
use crate::dataset::FeatureVector;
use crate::matrix::ConfusionMatrix;
use crate::par::Parallelism;

/// Fold index for every element of `classes`.
///
/// Each class's members (in input order) are shuffled with a generator
/// seeded by `seed`, then dealt round-robin; the dealing position carries
/// over from one class to the next so fold sizes stay balanced.
pub fn stratified_folds(
    classes: &[usize],
    n_classes: usize,
    folds: usize,
    seed: u64,
) -> Vec<usize> {
    let mut members = vec![Vec::new(); n_classes];
    for (i, &c) in classes.iter().enumerate() {
        members[c].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; classes.len()];
    let mut next = 0usize;
    for group in &mut members {
        group.shuffle(&mut rng);
        for &i in group.iter() {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    assignment
}

/// Stratified k-fold cross-validation with a built-in classifier.
pub fn cross_validate(
    dataset: &[FeatureVector],
    config: &ClassifierConfig,
) -> Result<ConfusionMatrix> {
    cross_validate_par(dataset, config, Parallelism::default())
}

pub fn cross_validate_par(
    dataset: &[FeatureVector],
    config: &ClassifierConfig,
    par: Parallelism,
) -> Result<ConfusionMatrix> {
    config.validate()?;
    match config.kind {
        ClassifierKind::Knn { k } => cross_validate_with(dataset, &Knn { k }, config, par),
        ClassifierKind::NaiveBayes { variance_floor } => {
            cross_validate_with(dataset, &GaussianNaiveBayes { variance_floor }, config, par)
        }
        ClassifierKind::External => Err(ClassifierError::External),
    }
}

/// Stratified k-fold cross-validation with any [`Classifier`]. Every trace
/// is predicted exactly once, by a model trained on the other folds. Labels
/// of the returned matrix are sorted.
pub fn cross_validate_with(
    dataset: &[FeatureVector],
    classifier: &dyn Classifier,
    config: &ClassifierConfig,
    par: Parallelism,
) -> Result<ConfusionMatrix> {
    if config.folds < 2 {
        return Err(ClassifierError::InvalidParameter(format!(
            "folds must be >= 2, got {}",
            config.folds
        )));
    }
    if dataset.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    for fv in dataset {
        if let Some(column) = fv.features.iter().position(|x| !x.is_finite()) {
            return Err(ClassifierError::NonFinite {
                trace_id: fv.trace_id.clone(),
                column,
            });
        }
    }

    let labels: Vec<String> = dataset
        .iter()
        .map(|fv| fv.label())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(String::from)
        .collect();
    let classes: Vec<usize> = dataset
        .iter()
        .map(|fv| {
            labels
                .binary_search_by(|l| l.as_str().cmp(fv.label()))
                .expect("label collected")
        })
        .collect();

    let mut per_class = vec![0usize; labels.len()];
    for &c in &classes {
        per_class[c] += 1;
    }
    if !config.allow_sparse_classes {
        if let Some((c, &traces)) = per_class
            .iter()
            .enumerate()
            .find(|&(_, &n)| n < config.folds)
        {
            return Err(ClassifierError::TooFewTraces {
                label: labels[c].clone(),
                traces,
                folds: config.folds,
            });
        }
    }

    let assignment = stratified_folds(&classes, labels.len(), config.folds, config.seed);
    let fold_ids: Vec<usize> = (0..config.folds).collect();
    let partials = par.map(&fold_ids, |&fold| -> Result<ConfusionMatrix> {
        let mut rows = Vec::new();
        let mut train_classes = Vec::new();
        let mut queries = Vec::new();
        let mut truth = Vec::new();
        for (i, fv) in dataset.iter().enumerate() {
            if assignment[i] == fold {
                queries.push(fv.features.as_slice());
                truth.push(classes[i]);
            } else {
                rows.push(fv.features.as_slice());
                train_classes.push(classes[i]);
            }
        }
        let mut cm = ConfusionMatrix::zeros(labels.clone());
        if queries.is_empty() {
            return Ok(cm);
        }
        let train = TrainingSet::new(&labels, rows, train_classes)?;
        let predicted = classifier.fit_predict(&train, &queries)?;
        if predicted.len() != queries.len() {
            return Err(ClassifierError::Plugin {
                name: classifier.name().to_string(),
                message: format!(
                    "returned {} predictions for {} queries",
                    predicted.len(),
                    queries.len()
                ),
            });
        }
        for (&t, &p) in truth.iter().zip(&predicted) {
            if p >= labels.len() {
                return Err(ClassifierError::Plugin {
                    name: classifier.name().to_string(),
                    message: format!("predicted class index {p} out of range"),
                });
            }
            cm.add(t, p);
        }
        Ok(cm)
    });

    let mut total = ConfusionMatrix::zeros(labels.clone());
    for partial in partials {
        total.merge(&partial?);
    }
    Ok(total)
}
