use std::collections::BTreeMap;

use super::{DatasetError, FeatureVector, Result};

/// Trace count per avatar label, in label order.
pub fn trace_counts(dataset: &[FeatureVector]) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for fv in dataset {
        *counts.entry(fv.label()).or_insert(0) += 1;
    }
    counts
}

/// Drops every avatar with fewer than `theta` traces. Retained avatars keep
/// all of their traces, in their original order.
pub fn filter_min_traces(dataset: Vec<FeatureVector>, theta: usize) -> Result<Vec<FeatureVector>> {
    if theta < 1 {
        return Err(DatasetError::InvalidParameter("theta must be >= 1".into()));
    }
    let keep: Vec<String> = trace_counts(&dataset)
        .into_iter()
        .filter(|&(_, n)| n >= theta)
        .map(|(label, _)| label.to_string())
        .collect();
    let kept: Vec<FeatureVector> = dataset
        .into_iter()
        .filter(|fv| {
            keep.binary_search_by(|l| l.as_str().cmp(fv.label()))
                .is_ok()
        })
        .collect();
    if kept.is_empty() {
        return Err(DatasetError::EmptyAfterFilter { theta });
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AvatarIdentity, FEATURE_COUNT};
    use proptest::prelude::*;

    fn dataset(counts: &[(&str, usize)]) -> Vec<FeatureVector> {
        let mut out = Vec::new();
        for &(label, n) in counts {
            for i in 0..n {
                out.push(FeatureVector {
                    trace_id: format!("{label}-{i}"),
                    avatar: AvatarIdentity::new(label),
                    features: [i as f64; FEATURE_COUNT],
                });
            }
        }
        out
    }

    #[test]
    fn drops_small_avatars() {
        let out = filter_min_traces(dataset(&[("a", 5), ("b", 2)]), 3).unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|fv| fv.label() == "a"));
    }

    #[test]
    fn theta_one_is_identity() {
        let data = dataset(&[("a", 5), ("b", 2), ("c", 1)]);
        assert_eq!(filter_min_traces(data.clone(), 1).unwrap(), data);
    }

    #[test]
    fn boundary_is_inclusive() {
        let out = filter_min_traces(dataset(&[("a", 20), ("b", 20), ("c", 19)]), 20).unwrap();
        let counts = trace_counts(&out);
        assert_eq!(counts.keys().copied().collect::<Vec<_>>(), vec!["a", "b"]);
    }

    #[test]
    fn empty_result_is_an_error() {
        let err = filter_min_traces(dataset(&[("a", 2)]), 3).unwrap_err();
        assert!(matches!(err, DatasetError::EmptyAfterFilter { theta: 3 }));
    }

    proptest! {
        #[test]
        fn retained_avatars_shrink_as_theta_grows(
            sizes in prop::collection::vec(1usize..12, 1..8),
            t1 in 1usize..12,
            t2 in 1usize..12,
        ) {
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            let labels: Vec<String> = (0..sizes.len()).map(|i| format!("a{i}")).collect();
            let spec: Vec<(&str, usize)> = labels.iter().map(String::as_str).zip(sizes.iter().copied()).collect();
            let data = dataset(&spec);
            let retained = |theta| -> Vec<String> {
                filter_min_traces(data.clone(), theta)
                    .map(|d| trace_counts(&d).keys().map(|s| s.to_string()).collect())
                    .unwrap_or_default()
            };
            let wide = retained(lo);
            for label in retained(hi) {
                prop_assert!(wide.contains(&label));
            }
        }
    }
}
