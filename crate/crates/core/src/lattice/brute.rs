use std::collections::BTreeSet;

use super::{
    extent_to_intent_unchecked, intent_to_extent_unchecked, sort_canonical, Extent, LatticeError,
    PatternConcept, Result,
};
use crate::matrix::NormalizedConfusionMatrix;

pub const BRUTE_FORCE_MAX_AVATARS: usize = 20;

/// Reference enumeration: closes every subset of avatars and keeps the
/// distinct results. The empty extent is included only if it is closed.
pub fn brute_force_concepts(m: &NormalizedConfusionMatrix) -> Result<Vec<PatternConcept>> {
    let n = m.n();
    if n > BRUTE_FORCE_MAX_AVATARS {
        return Err(LatticeError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_AVATARS,
        });
    }
    let mut closed = BTreeSet::new();
    for mask in 0u32..(1u32 << n) {
        let subset = Extent::from_indices((0..n).filter(|&i| mask & (1 << i) != 0));
        let intent = extent_to_intent_unchecked(&subset, m);
        closed.insert(intent_to_extent_unchecked(&intent, m));
    }
    let mut concepts: Vec<PatternConcept> = closed
        .into_iter()
        .map(|extent| {
            let intent = extent_to_intent_unchecked(&extent, m);
            PatternConcept { extent, intent }
        })
        .collect();
    sort_canonical(&mut concepts, m);
    Ok(concepts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_large_matrices() {
        let n = BRUTE_FORCE_MAX_AVATARS + 1;
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let m = NormalizedConfusionMatrix::from_rows(
            (0..n).map(|i| format!("a{i:02}")).collect(),
            rows,
        )
        .unwrap();
        assert!(matches!(
            brute_force_concepts(&m),
            Err(LatticeError::TooLarge { .. })
        ));
    }

    #[test]
    fn identity_of_three() {
        let rows = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let m =
            NormalizedConfusionMatrix::from_rows(vec!["a".into(), "b".into(), "c".into()], rows)
                .unwrap();
        let concepts = brute_force_concepts(&m).unwrap();
        let extents: Vec<Vec<usize>> = concepts
            .iter()
            .map(|c| c.extent.indices().to_vec())
            .collect();
        // singletons with unit rows, the full set with the zero intent, and the
        // empty extent because no row is all ones
        assert_eq!(
            extents,
            vec![vec![], vec![0], vec![1], vec![2], vec![0, 1, 2]]
        );
        assert_eq!(concepts[1].intent.degrees(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn single_avatar() {
        let m = NormalizedConfusionMatrix::from_rows(vec!["a1".into()], vec![vec![1.0]]).unwrap();
        let concepts = brute_force_concepts(&m).unwrap();
        assert_eq!(concepts.len(), 1);
        assert_eq!(concepts[0].extent.indices(), &[0]);
    }
}
