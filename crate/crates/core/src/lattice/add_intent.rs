//! Incremental lattice construction (AddIntent) over fuzzy intents.
//!
//! Objects are inserted one at a time in matrix order. For each object the
//! algorithm finds the most general concept whose intent already contains
//! the object's description, creates the missing meet-closed intents on the
//! way up, and rewires the cover relation locally. Only upper covers
//! (parents) are stored since nothing walks downwards.
//!
//! Score pruning works on the truncated semilattice
//! `{d : s(d) >= floor} ∪ {0}`: any meet scoring below the floor collapses
//! to the zero pattern. Because `s` only decreases under meet, every concept
//! that survives the floor is a concept of the untruncated structure, and
//! everything below the floor is merged into the single top concept.

use super::{sort_canonical, Extent, FuzzyPattern, LatticeError, PatternConcept, Result};
use crate::matrix::NormalizedConfusionMatrix;
use crate::miner::score;

struct Node {
    extent: Extent,
    intent: FuzzyPattern,
    parents: Vec<usize>,
}

struct Builder {
    nodes: Vec<Node>,
    /// Pruning threshold; `None` keeps every meet.
    floor: Option<f64>,
}

impl Builder {
    fn truncate(&self, p: FuzzyPattern) -> FuzzyPattern {
        match self.floor {
            Some(floor) if score(&p) < floor => FuzzyPattern::bottom(p.len()),
            _ => p,
        }
    }

    fn meet(&self, a: &FuzzyPattern, b: &FuzzyPattern) -> FuzzyPattern {
        self.truncate(a.meet_unchecked(b))
    }

    /// Climbs from `generator` while some parent's intent still contains `intent`.
    fn maximal_concept(&self, intent: &FuzzyPattern, mut generator: usize) -> usize {
        loop {
            let next = self.nodes[generator]
                .parents
                .iter()
                .copied()
                .find(|&p| intent.leq_unchecked(&self.nodes[p].intent));
            match next {
                Some(p) => generator = p,
                None => return generator,
            }
        }
    }

    fn add_intent(&mut self, intent: FuzzyPattern, generator: usize) -> usize {
        let generator = self.maximal_concept(&intent, generator);
        if self.nodes[generator].intent == intent {
            return generator;
        }

        let mut new_parents: Vec<usize> = Vec::new();
        for mut candidate in self.nodes[generator].parents.clone() {
            if !self.nodes[candidate].intent.leq_unchecked(&intent) {
                let narrowed = self.meet(&self.nodes[candidate].intent, &intent);
                candidate = self.add_intent(narrowed, candidate);
            }
            let cand_intent = &self.nodes[candidate].intent;
            if new_parents
                .iter()
                .any(|&p| cand_intent.leq_unchecked(&self.nodes[p].intent))
            {
                continue;
            }
            new_parents.retain(|&p| !self.nodes[p].intent.leq_unchecked(cand_intent));
            new_parents.push(candidate);
        }

        let id = self.nodes.len();
        self.nodes.push(Node {
            extent: self.nodes[generator].extent.clone(),
            intent,
            parents: Vec::with_capacity(new_parents.len()),
        });
        for parent in new_parents {
            self.nodes[generator].parents.retain(|&p| p != parent);
            self.nodes[id].parents.push(parent);
        }
        self.nodes[generator].parents.push(id);
        id
    }

    fn add_object(&mut self, object: usize, description: FuzzyPattern) {
        let concept = self.add_intent(description, 0);
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![concept];
        seen[concept] = true;
        while let Some(c) = stack.pop() {
            self.nodes[c].extent.push_sorted(object);
            for i in 0..self.nodes[c].parents.len() {
                let p = self.nodes[c].parents[i];
                if !seen[p] {
                    seen[p] = true;
                    stack.push(p);
                }
            }
        }
    }
}

/// All pattern concepts whose intent scores at least `min_score`, in
/// canonical order.
///
/// The concept with empty extent and all-ones intent appears only when no
/// row is all ones. With `min_score = 0` the result equals
/// [`brute_force_concepts`](super::brute_force_concepts).
pub fn enumerate_concepts(
    m: &NormalizedConfusionMatrix,
    min_score: f64,
) -> Result<Vec<PatternConcept>> {
    if !(min_score >= 0.0 && min_score.is_finite()) {
        return Err(LatticeError::InvalidMinScore(min_score));
    }
    let n = m.n();
    if min_score > n as f64 {
        return Ok(Vec::new());
    }
    let mut builder = Builder {
        nodes: vec![Node {
            extent: Extent::empty(),
            intent: FuzzyPattern::top(n),
            parents: Vec::new(),
        }],
        floor: (min_score > 0.0).then_some(min_score),
    };
    for object in 0..n {
        let description = builder.truncate(FuzzyPattern::of_row(m, object));
        builder.add_object(object, description);
    }

    let mut concepts: Vec<PatternConcept> = builder
        .nodes
        .into_iter()
        .map(|node| PatternConcept {
            extent: node.extent,
            intent: node.intent,
        })
        .filter(|c| score(&c.intent) >= min_score)
        .collect();
    sort_canonical(&mut concepts, m);
    Ok(concepts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::fixtures::worked_example;
    use crate::lattice::{brute_force_concepts, extent_to_intent};

    #[test]
    fn worked_example_contains_the_first_pair_concept() {
        let m = worked_example();
        let concepts = enumerate_concepts(&m, 0.0).unwrap();
        let target = Extent::from_labels(&m, &["a1", "a2"]).unwrap();
        let c = concepts
            .iter()
            .find(|c| c.extent == target)
            .expect("({a1,a2}, .) is a concept");
        assert_eq!(c.intent.degrees(), &[0.4, 0.4, 0.0, 0.0, 0.0]);
        assert!(concepts.iter().all(|c| c.is_closed(&m)));
    }

    #[test]
    fn worked_example_matches_brute_force() {
        let m = worked_example();
        assert_eq!(
            enumerate_concepts(&m, 0.0).unwrap(),
            brute_force_concepts(&m).unwrap()
        );
    }

    #[test]
    fn single_avatar() {
        let m = NormalizedConfusionMatrix::from_rows(vec!["a1".into()], vec![vec![1.0]]).unwrap();
        let concepts = enumerate_concepts(&m, 0.0).unwrap();
        assert_eq!(concepts.len(), 1);
        assert_eq!(concepts[0].extent.indices(), &[0]);
        assert_eq!(concepts[0].intent.degrees(), &[1.0]);
    }

    #[test]
    fn identity_matrix() {
        let rows = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let m =
            NormalizedConfusionMatrix::from_rows(vec!["a".into(), "b".into(), "c".into()], rows)
                .unwrap();
        let concepts = enumerate_concepts(&m, 0.0).unwrap();
        let extents: Vec<Vec<usize>> = concepts
            .iter()
            .map(|c| c.extent.indices().to_vec())
            .collect();
        assert_eq!(
            extents,
            vec![vec![], vec![0], vec![1], vec![2], vec![0, 1, 2]]
        );
        assert_eq!(concepts[0].intent, FuzzyPattern::top(3));
        assert_eq!(concepts[4].intent, FuzzyPattern::bottom(3));
    }

    #[test]
    fn pruned_enumeration_is_filtered_full_enumeration() {
        let m = worked_example();
        let full = enumerate_concepts(&m, 0.0).unwrap();
        for floor in [0.01, 0.05, 0.2, 0.5, 0.75, 0.8, 1.0, 2.0, 5.0, 6.0] {
            let expected: Vec<_> = full
                .iter()
                .filter(|c| c.score() >= floor)
                .cloned()
                .collect();
            assert_eq!(
                enumerate_concepts(&m, floor).unwrap(),
                expected,
                "floor {floor}"
            );
        }
    }

    #[test]
    fn scores_in_worked_example() {
        let m = worked_example();
        let s = |labels: &[&str]| {
            score(&extent_to_intent(&Extent::from_labels(&m, labels).unwrap(), &m).unwrap())
        };
        assert!((s(&["a1", "a2"]) - 0.8).abs() < 1e-12);
        assert!((s(&["a4", "a5"]) - 0.75).abs() < 1e-12);
        assert!((s(&["a1", "a2", "a4"]) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_min_score() {
        let m = worked_example();
        assert!(enumerate_concepts(&m, -0.1).is_err());
        assert!(enumerate_concepts(&m, f64::NAN).is_err());
    }
}
