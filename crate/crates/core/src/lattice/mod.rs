//! The normalized confusion matrix viewed as a fuzzy pattern structure.
//!
//! Every avatar is described by its matrix row, a fuzzy set over all
//! avatars. Descriptions are combined with the componentwise minimum
//! ([`meet`]) and compared with the induced order ([`leq`]). The two
//! derivation operators [`extent_to_intent`] and [`intent_to_extent`] form
//! a Galois connection whose closed pairs are the [`PatternConcept`]s.
//!
//! Float comparisons are exact on purpose: every degree comes out of one
//! normalization pass and `min` never invents new values, so closures are
//! self-consistent and the order stays transitive.

mod add_intent;
mod brute;

use serde::Serialize;
use thiserror::Error;

use crate::matrix::{round_sig15, MatrixError, NormalizedConfusionMatrix};

pub use add_intent::enumerate_concepts;
pub use brute::{brute_force_concepts, BRUTE_FORCE_MAX_AVATARS};

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("pattern lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("membership degree {value} at position {index} is outside [0, 1]")]
    DegreeOutOfRange { index: usize, value: f64 },
    #[error("brute-force enumeration is limited to {max} avatars, matrix has {n}")]
    TooLarge { n: usize, max: usize },
    #[error("min_score must be a non-negative number, got {0}")]
    InvalidMinScore(f64),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

pub type Result<T> = std::result::Result<T, LatticeError>;

/// Fuzzy set over the avatars of one matrix: `degrees[j]` is the
/// membership of avatar `j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FuzzyPattern {
    degrees: Vec<f64>,
}

impl FuzzyPattern {
    pub fn new(degrees: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = degrees
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(LatticeError::DegreeOutOfRange { index, value });
        }
        Ok(FuzzyPattern { degrees })
    }

    /// All-ones pattern, the greatest element.
    pub fn top(n: usize) -> Self {
        FuzzyPattern {
            degrees: vec![1.0; n],
        }
    }

    /// All-zeros pattern, the least element.
    pub fn bottom(n: usize) -> Self {
        FuzzyPattern {
            degrees: vec![0.0; n],
        }
    }

    /// Row `i` of the matrix.
    pub fn of_row(m: &NormalizedConfusionMatrix, i: usize) -> Self {
        FuzzyPattern {
            degrees: m.row(i).to_vec(),
        }
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub(crate) fn meet_unchecked(&self, other: &FuzzyPattern) -> FuzzyPattern {
        FuzzyPattern {
            degrees: self
                .degrees
                .iter()
                .zip(&other.degrees)
                .map(|(a, b)| a.min(*b))
                .collect(),
        }
    }

    pub(crate) fn leq_unchecked(&self, other: &FuzzyPattern) -> bool {
        self.degrees.iter().zip(&other.degrees).all(|(a, b)| a <= b)
    }

    fn same_space(&self, other: &FuzzyPattern) -> Result<()> {
        if self.len() == other.len() {
            Ok(())
        } else {
            Err(LatticeError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            })
        }
    }
}

/// Componentwise minimum (fuzzy intersection).
pub fn meet(p: &FuzzyPattern, q: &FuzzyPattern) -> Result<FuzzyPattern> {
    p.same_space(q)?;
    Ok(p.meet_unchecked(q))
}

/// `p ⊑ q`, i.e. `p ⊓ q = p`, i.e. `p` is componentwise at most `q`.
pub fn leq(p: &FuzzyPattern, q: &FuzzyPattern) -> Result<bool> {
    p.same_space(q)?;
    Ok(p.leq_unchecked(q))
}

/// Set of avatars, stored as sorted, distinct matrix indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Extent(Vec<usize>);

impl Extent {
    pub fn empty() -> Self {
        Extent(Vec::new())
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Extent(v)
    }

    pub fn from_labels<S: AsRef<str>>(m: &NormalizedConfusionMatrix, labels: &[S]) -> Result<Self> {
        let idx = labels
            .iter()
            .map(|l| m.index_of(l.as_ref()))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Extent::from_indices(idx))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn labels<'m>(&self, m: &'m NormalizedConfusionMatrix) -> Vec<&'m str> {
        self.0.iter().map(|&i| m.labels()[i].as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn is_subset(&self, other: &Extent) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub(crate) fn push_sorted(&mut self, index: usize) {
        debug_assert!(self.0.last().is_none_or(|&l| l < index));
        self.0.push(index);
    }
}

/// `A^□`: columnwise minimum over the rows in `extent`. The empty extent
/// maps to the all-ones pattern.
pub fn extent_to_intent(extent: &Extent, m: &NormalizedConfusionMatrix) -> Result<FuzzyPattern> {
    for &i in extent.indices() {
        m.check_index(i)?;
    }
    Ok(extent_to_intent_unchecked(extent, m))
}

pub(crate) fn extent_to_intent_unchecked(
    extent: &Extent,
    m: &NormalizedConfusionMatrix,
) -> FuzzyPattern {
    let mut degrees = vec![1.0_f64; m.n()];
    for &i in extent.indices() {
        for (d, &v) in degrees.iter_mut().zip(m.row(i)) {
            *d = d.min(v);
        }
    }
    FuzzyPattern { degrees }
}

/// `d^□`: every avatar whose row dominates `d` componentwise.
pub fn intent_to_extent(d: &FuzzyPattern, m: &NormalizedConfusionMatrix) -> Result<Extent> {
    if d.len() != m.n() {
        return Err(LatticeError::LengthMismatch {
            left: d.len(),
            right: m.n(),
        });
    }
    Ok(intent_to_extent_unchecked(d, m))
}

pub(crate) fn intent_to_extent_unchecked(
    d: &FuzzyPattern,
    m: &NormalizedConfusionMatrix,
) -> Extent {
    Extent(
        (0..m.n())
            .filter(|&i| d.degrees.iter().zip(m.row(i)).all(|(a, b)| a <= b))
            .collect(),
    )
}

/// `(A^□)^□`, the smallest closed extent containing `extent`.
pub fn closure(extent: &Extent, m: &NormalizedConfusionMatrix) -> Result<Extent> {
    let intent = extent_to_intent(extent, m)?;
    Ok(intent_to_extent_unchecked(&intent, m))
}

/// A closed (extent, intent) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternConcept {
    pub extent: Extent,
    pub intent: FuzzyPattern,
}

impl PatternConcept {
    pub fn score(&self) -> f64 {
        crate::miner::score(&self.intent)
    }

    /// Checks both halves of the closure condition against `m`.
    pub fn is_closed(&self, m: &NormalizedConfusionMatrix) -> bool {
        extent_to_intent_unchecked(&self.extent, m) == self.intent
            && intent_to_extent_unchecked(&self.intent, m) == self.extent
    }
}

/// Canonical concept order: extent size, then the extent's sorted label
/// list compared lexicographically.
pub fn sort_canonical(concepts: &mut [PatternConcept], m: &NormalizedConfusionMatrix) {
    concepts.sort_by_cached_key(|c| {
        let mut labels: Vec<String> = c.extent.labels(m).into_iter().map(String::from).collect();
        labels.sort();
        (c.extent.len(), labels)
    });
}

#[derive(Serialize)]
struct ConceptRecord<'a> {
    extent: Vec<&'a str>,
    intent: Vec<f64>,
    score: f64,
}

/// JSON list of `{"extent": [...], "intent": [...], "score": x}` in the
/// order given.
pub fn concepts_to_json(concepts: &[PatternConcept], m: &NormalizedConfusionMatrix) -> String {
    let records: Vec<ConceptRecord<'_>> = concepts
        .iter()
        .map(|c| ConceptRecord {
            extent: c.extent.labels(m),
            intent: c.intent.degrees().iter().map(|&x| round_sig15(x)).collect(),
            score: round_sig15(c.score()),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("concepts serialize")
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::matrix::NormalizedConfusionMatrix;

    /// The five-avatar worked example matrix.
    pub fn worked_example() -> NormalizedConfusionMatrix {
        NormalizedConfusionMatrix::from_rows(
            (1..=5).map(|i| format!("a{i}")).collect(),
            vec![
                vec![0.6, 0.4, 0.0, 0.0, 0.0],
                vec![0.4, 0.55, 0.05, 0.0, 0.0],
                vec![0.0, 0.0, 0.8, 0.15, 0.05],
                vec![0.0, 0.05, 0.0, 0.7, 0.25],
                vec![0.0, 0.0, 0.0, 0.5, 0.5],
            ],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::worked_example;
    use super::*;

    fn p(v: &[f64]) -> FuzzyPattern {
        FuzzyPattern::new(v.to_vec()).unwrap()
    }

    #[test]
    fn meet_of_first_two_rows() {
        let m = worked_example();
        let got = meet(&FuzzyPattern::of_row(&m, 0), &FuzzyPattern::of_row(&m, 1)).unwrap();
        assert_eq!(got, p(&[0.4, 0.4, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn meet_is_idempotent_and_zero_absorbs() {
        let x = p(&[0.3, 0.7, 0.0]);
        assert_eq!(meet(&x, &x).unwrap(), x);
        assert_eq!(
            meet(&x, &FuzzyPattern::bottom(3)).unwrap(),
            FuzzyPattern::bottom(3)
        );
        assert_eq!(meet(&x, &FuzzyPattern::top(3)).unwrap(), x);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            meet(&p(&[0.1]), &p(&[0.1, 0.2])),
            Err(LatticeError::LengthMismatch { .. })
        ));
        assert!(leq(&p(&[0.1]), &p(&[0.1, 0.2])).is_err());
    }

    #[test]
    fn degrees_must_be_in_unit_interval() {
        assert!(FuzzyPattern::new(vec![0.5, 1.5]).is_err());
        assert!(FuzzyPattern::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn order_examples() {
        let m = worked_example();
        assert!(leq(&p(&[0.4, 0.4, 0.0, 0.0, 0.0]), &FuzzyPattern::of_row(&m, 0)).unwrap());
        let r0 = FuzzyPattern::of_row(&m, 0);
        assert!(leq(&r0, &r0).unwrap());
        // Rows a1 and a2 are incomparable.
        assert!(!leq(&r0, &FuzzyPattern::of_row(&m, 1)).unwrap());
        assert!(!leq(&FuzzyPattern::of_row(&m, 1), &r0).unwrap());
    }

    #[test]
    fn extent_to_intent_examples() {
        let m = worked_example();
        let a12 = Extent::from_labels(&m, &["a1", "a2"]).unwrap();
        assert_eq!(
            extent_to_intent(&a12, &m).unwrap(),
            p(&[0.4, 0.4, 0.0, 0.0, 0.0])
        );
        let a3 = Extent::from_labels(&m, &["a3"]).unwrap();
        assert_eq!(
            extent_to_intent(&a3, &m).unwrap(),
            p(&[0.0, 0.0, 0.8, 0.15, 0.05])
        );
        let a124 = Extent::from_labels(&m, &["a1", "a2", "a4"]).unwrap();
        assert_eq!(
            extent_to_intent(&a124, &m).unwrap(),
            p(&[0.0, 0.05, 0.0, 0.0, 0.0])
        );
        assert!(Extent::from_labels(&m, &["a9"]).is_err());
        assert!(extent_to_intent(&Extent::from_indices([7]), &m).is_err());
        assert_eq!(
            extent_to_intent(&Extent::empty(), &m).unwrap(),
            FuzzyPattern::top(5)
        );
    }

    #[test]
    fn intent_to_extent_examples() {
        let m = worked_example();
        // Dominance check of <0.4,0.4,0,0,0> against all five rows.
        let d = p(&[0.4, 0.4, 0.0, 0.0, 0.0]);
        let expected: Vec<usize> = (0..5)
            .filter(|&i| (0..5).all(|j| d.degrees()[j] <= m.get(i, j)))
            .collect();
        assert_eq!(expected, vec![0, 1]);
        assert_eq!(intent_to_extent(&d, &m).unwrap().indices(), &[0, 1]);
        assert_eq!(
            intent_to_extent(&FuzzyPattern::bottom(5), &m)
                .unwrap()
                .len(),
            5
        );
        assert!(intent_to_extent(&FuzzyPattern::top(5), &m)
            .unwrap()
            .is_empty());
        assert!(intent_to_extent(&FuzzyPattern::top(4), &m).is_err());
    }

    #[test]
    fn closure_is_extensive_and_idempotent() {
        let m = worked_example();
        for mask in 0u32..32 {
            let a = Extent::from_indices((0..5).filter(|i| mask & (1 << i) != 0));
            let c = closure(&a, &m).unwrap();
            assert!(a.is_subset(&c));
            assert_eq!(closure(&c, &m).unwrap(), c);
        }
    }

    #[test]
    fn concept_json_export() {
        let m = worked_example();
        let concepts = enumerate_concepts(&m, 0.7).unwrap();
        let json = concepts_to_json(&concepts, &m);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let first_pair = v
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["extent"].as_array().unwrap().len() == 2)
            .unwrap();
        assert_eq!(first_pair["extent"], serde_json::json!(["a1", "a2"]));
        assert_eq!(first_pair["score"], serde_json::json!(0.8));
    }
}
