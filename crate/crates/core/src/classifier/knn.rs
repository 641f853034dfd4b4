use super::{Classifier, ClassifierError, Result, TrainingSet};

/// k-nearest-neighbour vote under Euclidean distance.
///
/// Neighbours at equal distance are taken in training order. A tied vote
/// goes to the label whose voting neighbours have the smallest mean
/// distance, then to the smaller label index.
pub fn knn_predict(train: &TrainingSet<'_>, query: &[f64], k: usize) -> Result<usize> {
    if train.is_empty() {
        return Err(ClassifierError::EmptyTrainingSet);
    }
    if k < 1 || k > train.len() {
        return Err(ClassifierError::InvalidParameter(format!(
            "k = {k} with {} training vectors",
            train.len()
        )));
    }
    train.check_query(query)?;

    let mut dist: Vec<(f64, usize)> = train
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| (squared_distance(row, query), i))
        .collect();
    let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, order);
        dist.truncate(k);
    }
    // Fixed summation order keeps the mean-distance tie-break reproducible.
    dist.sort_unstable_by(order);

    let mut votes = vec![0usize; train.n_classes()];
    let mut dist_sum = vec![0.0f64; train.n_classes()];
    for &(d2, i) in &dist {
        let c = train.classes[i];
        votes[c] += 1;
        dist_sum[c] += d2.sqrt();
    }
    let mut best = None::<(usize, f64, usize)>;
    for (c, &v) in votes.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let mean = dist_sum[c] / v as f64;
        best = match best {
            None => Some((v, mean, c)),
            Some((bv, bm, bc)) => {
                if v > bv || (v == bv && mean < bm) {
                    Some((v, mean, c))
                } else {
                    Some((bv, bm, bc))
                }
            }
        };
    }
    Ok(best.expect("k >= 1 neighbours").2)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, Copy)]
pub struct Knn {
    pub k: usize,
}

impl Classifier for Knn {
    fn name(&self) -> &str {
        "knn"
    }

    fn fit_predict(&self, train: &TrainingSet<'_>, queries: &[&[f64]]) -> Result<Vec<usize>> {
        queries
            .iter()
            .map(|q| knn_predict(train, q, self.k))
            .collect()
    }
}
