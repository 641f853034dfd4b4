#![allow(dead_code)]

use std::path::PathBuf;

use aliasmine_core::evaluation::Judgement;
use aliasmine_core::matrix::{ConfusionMatrix, NormalizedConfusionMatrix};
use rand::Rng;

pub fn labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("a{i}")).collect()
}

/// Row-stochastic matrix built from small integer counts, so equal entries
/// and zeros are common.
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> NormalizedConfusionMatrix {
    let counts: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut row: Vec<u64> = (0..n)
                .map(|_| {
                    if rng.random_bool(0.4) {
                        0
                    } else {
                        rng.random_range(1..6)
                    }
                })
                .collect();
            if row.iter().all(|&c| c == 0) {
                row[i] = 1;
            }
            row
        })
        .collect();
    ConfusionMatrix::new(labels(n), counts)
        .unwrap()
        .normalize()
        .unwrap()
}

pub fn worked_example() -> NormalizedConfusionMatrix {
    let text = std::fs::read_to_string(fixture("worked_example_counts.json")).unwrap();
    ConfusionMatrix::from_json(&text)
        .unwrap()
        .normalize()
        .unwrap()
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// Strictly decreasing scores, or pairs of equal scores when `paired`.
pub fn judgements(positive: &[bool], paired: bool) -> Vec<Judgement> {
    let n = positive.len();
    positive
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let score = if paired {
                (n - i).div_ceil(2) as f64
            } else {
                (n - i) as f64
            };
            Judgement::new(p, score, 1.0)
        })
        .collect()
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Average precision as an exact fraction, from the pairwise form
/// sum over positives i of |{positive j ranked at or above i}| / rank(i).
pub fn ap_exact(positive: &[bool], total_positives: u128) -> (u128, u128) {
    let (mut num, mut den) = (0u128, 1u128);
    for (i, &pi) in positive.iter().enumerate() {
        if !pi {
            continue;
        }
        let above = positive[..=i].iter().filter(|&&pj| pj).count() as u128;
        let rank = i as u128 + 1;
        num = num * rank + above * den;
        den *= rank;
        let g = gcd(num, den);
        num /= g;
        den /= g;
    }
    let den = den * total_positives;
    let g = gcd(num, den).max(1);
    (num / g, den / g)
}

/// Mann-Whitney AUC by explicit comparison of every positive/negative
/// pair, including `extra_pos`/`extra_neg` unretrieved items that rank
/// below the list and tie with each other.
pub fn auc_pairwise(ranking: &[Judgement], extra_pos: usize, extra_neg: usize) -> f64 {
    // None marks an unretrieved item.
    let mut pos: Vec<Option<&Judgement>> =
        ranking.iter().filter(|j| j.positive).map(Some).collect();
    let mut neg: Vec<Option<&Judgement>> =
        ranking.iter().filter(|j| !j.positive).map(Some).collect();
    pos.extend(std::iter::repeat_n(None, extra_pos));
    neg.extend(std::iter::repeat_n(None, extra_neg));
    let mut twice_wins = 0u64;
    for p in &pos {
        for n in &neg {
            twice_wins += match (p, n) {
                (Some(_), None) => 2,
                (None, Some(_)) => 0,
                (None, None) => 1,
                (Some(p), Some(n)) => match (p.score, p.cluster_score)
                    .partial_cmp(&(n.score, n.cluster_score))
                    .unwrap()
                {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                },
            };
        }
    }
    twice_wins as f64 / (2 * pos.len() * neg.len()) as f64
}
