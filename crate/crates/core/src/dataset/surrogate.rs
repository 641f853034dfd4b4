use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{trace_counts, DatasetError, FeatureVector, Result, SurrogateSpec};

/// Ground truth produced by one split: `original` no longer exists, its
/// traces now belong to `first` and `second`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurrogatePair {
    pub original: String,
    pub first: String,
    pub second: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedAvatar {
    pub label: String,
    pub traces: usize,
    pub reason: String,
}

impl fmt::Display for SkippedAvatar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "avatar `{}` ({} traces) not split: {}",
            self.label, self.traces, self.reason
        )
    }
}

#[derive(Debug, Clone)]
pub struct SurrogateOutcome {
    pub dataset: Vec<FeatureVector>,
    pub pairs: Vec<SurrogatePair>,
    pub skipped: Vec<SkippedAvatar>,
}

impl SurrogateOutcome {
    pub fn manifest(&self) -> SurrogateManifest {
        SurrogateManifest {
            pairs: self.pairs.clone(),
            skipped: self.skipped.clone(),
        }
    }
}

/// The ground-truth half of a [`SurrogateOutcome`], as stored on disk.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurrogateManifest {
    pub pairs: Vec<SurrogatePair>,
    #[serde(default)]
    pub skipped: Vec<SkippedAvatar>,
}

impl SurrogateManifest {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

pub(crate) fn surrogate_labels(label: &str) -> (String, String) {
    (format!("{label}#1"), format!("{label}#2"))
}

/// Splits the `ceil(gamma * m)` most active avatars (m = avatars with at
/// least `theta` traces) into two fresh avatars each.
///
/// Each selected avatar's traces are shuffled with a generator seeded from
/// `spec.seed`; the first `round(beta * n)` go to `label#1`, the rest to
/// `label#2`. Trace order within the dataset is otherwise untouched.
pub fn inject_surrogates(
    mut dataset: Vec<FeatureVector>,
    spec: &SurrogateSpec,
    theta: usize,
) -> Result<SurrogateOutcome> {
    spec.validate()?;
    if theta < 1 {
        return Err(DatasetError::InvalidParameter("theta must be >= 1".into()));
    }

    let counts: BTreeMap<String, usize> = trace_counts(&dataset)
        .into_iter()
        .map(|(l, n)| (l.to_string(), n))
        .collect();
    let mut eligible: Vec<(&String, usize)> = counts
        .iter()
        .filter(|&(_, &n)| n >= theta)
        .map(|(l, &n)| (l, n))
        .collect();
    eligible.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    // gamma * m can land a hair above an integer in floating point.
    let wanted = ((spec.gamma * eligible.len() as f64) - 1e-9)
        .ceil()
        .max(0.0) as usize;
    let selected: Vec<String> = eligible
        .iter()
        .take(wanted)
        .map(|(l, _)| (*l).clone())
        .collect();

    let existing: HashSet<&str> = counts.keys().map(String::as_str).collect();
    for label in &selected {
        let (first, second) = surrogate_labels(label);
        for fresh in [first, second] {
            if existing.contains(fresh.as_str()) {
                return Err(DatasetError::LabelCollision(fresh));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for label in selected {
        let mut members: Vec<usize> = dataset
            .iter()
            .enumerate()
            .filter(|(_, fv)| fv.label() == label)
            .map(|(i, _)| i)
            .collect();
        let n = members.len();
        // Halves round up.
        let head = (spec.beta * n as f64 + 1e-9).round() as usize;
        if head >= n {
            skipped.push(SkippedAvatar {
                label,
                traces: n,
                reason: format!("beta {} leaves the second surrogate empty", spec.beta),
            });
            continue;
        }
        members.shuffle(&mut rng);
        let (first, second) = surrogate_labels(&label);
        for (pos, &i) in members.iter().enumerate() {
            let target = if pos < head { &first } else { &second };
            dataset[i].avatar = dataset[i].avatar.relabeled(target.clone());
        }
        pairs.push(SurrogatePair {
            original: label,
            first,
            second,
        });
    }

    Ok(SurrogateOutcome {
        dataset,
        pairs,
        skipped,
    })
}
