//! Ranking metrics over a labeled candidate list.
//!
//! A ranking is a slice of [`Judgement`]s in rank order. Positives that the
//! list never retrieved still count in every denominator: they add nothing
//! to average precision and sit below every retrieved item for ROC AUC.

use super::{EvaluationError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Judgement {
    pub positive: bool,
    pub score: f64,
    pub cluster_score: f64,
}

impl Judgement {
    pub fn new(positive: bool, score: f64, cluster_score: f64) -> Self {
        Judgement {
            positive,
            score,
            cluster_score,
        }
    }

    fn ties_with(&self, other: &Judgement) -> bool {
        self.score == other.score && self.cluster_score == other.cluster_score
    }
}

fn positives_in(ranking: &[Judgement]) -> usize {
    ranking.iter().filter(|j| j.positive).count()
}

/// Precision, recall and F1 over the first `cutoff` entries. Precision
/// divides by the number of entries actually considered.
pub fn precision_recall_f1(
    ranking: &[Judgement],
    cutoff: usize,
    total_positives: usize,
) -> (f64, f64, f64) {
    let considered = cutoff.min(ranking.len());
    let tp = positives_in(&ranking[..considered]);
    let precision = if considered == 0 {
        0.0
    } else {
        tp as f64 / considered as f64
    };
    let recall = if total_positives == 0 {
        0.0
    } else {
        tp as f64 / total_positives as f64
    };
    (precision, recall, f1(precision, recall))
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Fraction of positives among the first `min(k, len)` entries.
pub fn p_at_k(ranking: &[Judgement], k: usize) -> f64 {
    precision_recall_f1(ranking, k, 0).0
}

/// Sum of precision at every positive position, divided by `total_positives`.
pub fn average_precision(ranking: &[Judgement], total_positives: usize) -> Result<f64> {
    if total_positives == 0 {
        return Err(EvaluationError::Undefined(
            "average precision with no positives".into(),
        ));
    }
    let retrieved = positives_in(ranking);
    if retrieved > total_positives {
        return Err(EvaluationError::Inconsistent {
            retrieved,
            total: total_positives,
            class: "positives",
        });
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, j) in ranking.iter().enumerate() {
        if j.positive {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
        }
    }
    Ok(sum / total_positives as f64)
}

/// Mann-Whitney ROC AUC: probability that a random positive outranks a
/// random negative. Entries with identical (score, cluster_score) tie and
/// earn half credit; unretrieved items rank below the list and tie with
/// each other.
pub fn roc_auc(
    ranking: &[Judgement],
    total_positives: usize,
    total_negatives: usize,
) -> Result<f64> {
    if total_positives == 0 || total_negatives == 0 {
        return Err(EvaluationError::Undefined(
            "ROC AUC needs both positives and negatives".into(),
        ));
    }
    let retrieved_pos = positives_in(ranking);
    let retrieved_neg = ranking.len() - retrieved_pos;
    if retrieved_pos > total_positives {
        return Err(EvaluationError::Inconsistent {
            retrieved: retrieved_pos,
            total: total_positives,
            class: "positives",
        });
    }
    if retrieved_neg > total_negatives {
        return Err(EvaluationError::Inconsistent {
            retrieved: retrieved_neg,
            total: total_negatives,
            class: "negatives",
        });
    }
    let unretrieved_pos = (total_positives - retrieved_pos) as f64;
    let unretrieved_neg = (total_negatives - retrieved_neg) as f64;

    // Walk tie groups top-down, counting negatives strictly below each group.
    let mut credit = 0.0;
    let mut neg_above = 0usize;
    let mut start = 0;
    while start < ranking.len() {
        let mut end = start + 1;
        while end < ranking.len() && ranking[end].ties_with(&ranking[start]) {
            end += 1;
        }
        let group = &ranking[start..end];
        let pos = positives_in(group);
        let neg = group.len() - pos;
        let neg_below = (retrieved_neg - neg_above - neg) as f64 + unretrieved_neg;
        credit += pos as f64 * (neg_below + 0.5 * neg as f64);
        neg_above += neg;
        start = end;
    }
    credit += 0.5 * unretrieved_pos * unretrieved_neg;
    Ok(credit / (total_positives as f64 * total_negatives as f64))
}
